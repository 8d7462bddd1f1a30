"""Sweeps over the number of compromised sensors and the weighting parameter."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

from .attack import greedy_k_sparse, stealth_objective
from .detector import DEFAULT_TRIALS, estimate_probabilities
from .errors import ConfigError, DegenerateAttackError
from .gaussian import (
    build_state_model,
    kl_divergence,
    mutual_information,
    snr_to_noise_variance,
    toeplitz_cov,
)
from .grid import GridCase, build_jacobian, bundled_case, load_case

__all__ = [
    "ExperimentConfig",
    "SweepRow",
    "EvalReport",
    "resolve_case",
    "run_sweep",
    "emit_csv",
    "csv_name",
    "CSV_HEADER",
]

CSV_HEADER = (
    "k",
    "sensor",
    "variance",
    "mi_nats",
    "mi_bits",
    "kl_nats",
    "objective",
    "p_detection",
    "p_false_alarm",
)


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    case_path: str = "case30"
    snr_db: float = 30.0
    rho: float = 0.1
    tau: float = 2.0
    lambdas: tuple[float, ...] = (2.0, 30.0)
    k_max: int | None = None
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    output_dir: str = "results"

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if not self.lambdas:
            raise ConfigError("at least one lambda is required")
        if any(not lam > 1 for lam in self.lambdas):
            raise ConfigError(f"every lambda must exceed 1, got {self.lambdas}")
        if len(set(self.lambdas)) != len(self.lambdas):
            raise ConfigError("lambdas must be distinct")
        if not 0 <= self.rho < 1:
            raise ConfigError(f"rho must lie in [0, 1), got {self.rho}")
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.k_max is not None and self.k_max < 1:
            raise ConfigError("k_max must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not math.isfinite(self.snr_db):
            raise ConfigError("snr_db must be finite")

    @classmethod
    def from_mapping(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_mapping(data)


@dataclasses.dataclass(frozen=True)
class SweepRow:
    lam: float
    k: int
    sensor: int
    variance: float
    w_min: float
    mi_nats: float
    kl_nats: float
    objective: float
    p_detection: float
    p_false_alarm: float


@dataclasses.dataclass
class EvalReport:
    config: ExperimentConfig
    m: int
    n: int
    noise_variance: float
    rows: list[SweepRow] = dataclasses.field(default_factory=list)
    truncated: dict[float, str] = dataclasses.field(default_factory=dict)

    def for_lambda(self, lam: float) -> list[SweepRow]:
        return [r for r in self.rows if r.lam == lam]

    def support(self, lam: float) -> list[int]:
        return [r.sensor for r in self.for_lambda(lam)]


def resolve_case(case_path: str) -> GridCase:
    """Load a case file, falling back to a bundled case name such as ``case30``."""
    path = Path(case_path)
    if path.is_file():
        return load_case(path)
    if path.suffix == "" and path.parent == Path("."):
        try:
            return bundled_case(str(path))
        except FileNotFoundError:
            pass
    raise FileNotFoundError(f"case file not found: {case_path}")


def run_sweep(
    config: ExperimentConfig,
    *,
    case: GridCase | None = None,
    n_threads: int = 1,
    backend: str | None = None,
) -> EvalReport:
    if case is None:
        case = resolve_case(config.case_path)
    meas = build_jacobian(case, 1.0)
    sigma_xx = toeplitz_cov(meas.n, config.rho)
    meas = meas.with_noise(snr_to_noise_variance(meas.jacobian, sigma_xx, config.snr_db))
    state = build_state_model(meas, config.rho)

    k_max = meas.m if config.k_max is None else config.k_max
    if k_max > meas.m:
        raise ConfigError(f"k_max={k_max} exceeds the number of sensors m={meas.m}")

    report = EvalReport(config=config, m=meas.m, n=meas.n, noise_variance=meas.noise_variance)
    for li, lam in enumerate(config.lambdas):
        # one substream per lambda: every k reuses the same draws, so the
        # detection curve over k is not blurred by independent sampling noise
        try:
            plan = greedy_k_sparse(meas, sigma_xx, lam, k_max)
        except DegenerateAttackError as exc:
            plan = exc.partial
            report.truncated[lam] = str(exc)
        for k in range(1, plan.k + 1):
            cov = plan.prefix(k).sigma_aa
            est = estimate_probabilities(
                state,
                cov,
                config.tau,
                config.trials,
                config.seed,
                path=(li,),
                n_threads=n_threads,
                backend=backend,
            )
            report.rows.append(
                SweepRow(
                    lam=lam,
                    k=k,
                    sensor=plan.support[k - 1],
                    variance=plan.variances[k - 1],
                    w_min=plan.w_mins[k - 1],
                    mi_nats=mutual_information(state, cov),
                    kl_nats=kl_divergence(state, cov),
                    objective=stealth_objective(state, cov, lam),
                    p_detection=est.p_detection,
                    p_false_alarm=est.p_false_alarm,
                )
            )
    return report


def csv_name(lam: float) -> str:
    return f"sweep_lambda{lam:g}.csv"


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def emit_csv(report: EvalReport, out_dir) -> list[Path]:
    """Write one ``sweep_lambda<lam>.csv`` per lambda; sensors are numbered from 1."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for lam in report.config.lambdas:
        path = out_dir / csv_name(lam)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in report.for_lambda(lam):
                writer.writerow(
                    [
                        r.k,
                        r.sensor + 1,
                        _fmt(r.variance),
                        _fmt(r.mi_nats),
                        _fmt(r.mi_nats / math.log(2)),
                        _fmt(r.kl_nats),
                        _fmt(r.objective),
                        _fmt(r.p_detection),
                        _fmt(r.p_false_alarm),
                    ]
                )
        written.append(path)
    return written
