"""Sparse information-theoretic stealth attacks on Bayesian DC state estimation."""

from ._backend import BACKEND
from .attack import (
    AttackPlan,
    SingleSensorSolution,
    assemble_cov,
    greedy_k_sparse,
    optimal_variance,
    single_sensor_attack,
    stealth_objective,
    unconstrained_optimum,
)
from .detector import (
    DetectionEstimate,
    LrtModel,
    estimate_probabilities,
    log_likelihood_ratio,
    lrt_model,
)
from .errors import (
    ConfigError,
    DegenerateAttackError,
    DomainError,
    ModelError,
    NumericalError,
    ParseError,
    StealthGridError,
)
from .experiment import EvalReport, ExperimentConfig, emit_csv, run_sweep
from .gaussian import (
    StateModel,
    build_state_model,
    kl_divergence,
    mutual_information,
    sample_mvn,
    snr_db,
    snr_to_noise_variance,
    toeplitz_cov,
)
from .grid import GridCase, MeasurementModel, build_jacobian, bundled_case, load_case, parse_case
from .rng import SampleStream

__version__ = "0.1.0"
