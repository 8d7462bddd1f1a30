import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from stealth_grid_lab import experiment
from stealth_grid_lab.attack import greedy_k_sparse
from stealth_grid_lab.detector import estimate_probabilities
from stealth_grid_lab.errors import ConfigError, DegenerateAttackError
from stealth_grid_lab.experiment import (
    CSV_HEADER,
    ExperimentConfig,
    csv_name,
    emit_csv,
    run_sweep,
)
from stealth_grid_lab.gaussian import (
    build_state_model,
    kl_divergence,
    mutual_information,
    snr_to_noise_variance,
    toeplitz_cov,
)
from stealth_grid_lab.grid import build_jacobian, bundled_case
from stealth_grid_lab.plots import emit_plots, probability_floor

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def small_report():
    return run_sweep(ExperimentConfig(k_max=12, trials=2000, seed=7))


def test_two_bus_shape():
    report = run_sweep(ExperimentConfig(case_path="case2", k_max=3, trials=200))
    assert (report.m, report.n) == (3, 1)
    for lam in (2.0, 30.0):
        rows = report.for_lambda(lam)
        assert [r.k for r in rows] == [1, 2, 3]
        assert sorted(r.sensor for r in rows) == [0, 1, 2]


def test_support_prefix_and_lambda_invariance(small_report):
    assert small_report.support(2.0) == small_report.support(30.0)
    assert len(set(small_report.support(2.0))) == 12


def test_mi_non_increasing(small_report):
    for lam in (2.0, 30.0):
        mi = [r.mi_nats for r in small_report.for_lambda(lam)]
        assert np.all(np.diff(mi) <= 1e-9)


def test_rows_match_fresh_constructions(small_report):
    cfg = small_report.config
    meas = build_jacobian(bundled_case("case30"), 1.0)
    sxx = toeplitz_cov(meas.n, cfg.rho)
    meas = meas.with_noise(snr_to_noise_variance(meas.jacobian, sxx, cfg.snr_db))
    state = build_state_model(meas, cfg.rho)
    for li, lam in enumerate(cfg.lambdas):
        for row in small_report.for_lambda(lam)[::4]:
            plan = greedy_k_sparse(meas, sxx, lam, row.k)
            cov = plan.sigma_aa
            assert plan.support[-1] == row.sensor
            assert mutual_information(state, cov) == row.mi_nats
            assert kl_divergence(state, cov) == row.kl_nats
            est = estimate_probabilities(state, cov, cfg.tau, cfg.trials, cfg.seed, path=(li,))
            assert (est.p_detection, est.p_false_alarm) == (row.p_detection, row.p_false_alarm)


def test_objective_differences_recombine(small_report):
    for lam in (2.0, 30.0):
        rows = small_report.for_lambda(lam)
        for a, b in zip(rows, rows[1:]):
            lhs = b.objective - a.objective
            rhs = 2 * ((b.mi_nats - a.mi_nats) + lam * (b.kl_nats - a.kl_nats))
            assert abs(lhs - rhs) <= 1e-9 * (1 + abs(a.objective) + abs(b.objective))


def test_truncated_on_degenerate_round(monkeypatch):
    real = experiment.greedy_k_sparse

    def failing(meas, sxx, lam, k):
        plan = real(meas, sxx, lam, 2)
        raise DegenerateAttackError("round 3: synthetic", round=3, partial=plan)

    monkeypatch.setattr(experiment, "greedy_k_sparse", failing)
    report = run_sweep(ExperimentConfig(k_max=5, trials=100))
    assert len(report.for_lambda(2.0)) == 2
    assert "round 3" in report.truncated[2.0]


def test_k_max_exceeding_m():
    with pytest.raises(ConfigError):
        run_sweep(ExperimentConfig(case_path="case2", k_max=4, trials=10))


@pytest.mark.parametrize(
    "bad",
    [
        {"lambdas": [1.0]},
        {"lambdas": []},
        {"lambdas": [2, 2]},
        {"rho": 1.0},
        {"tau": 0},
        {"trials": 0},
        {"k_max": 0},
        {"seed": -1},
    ],
)
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad)


def test_config_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"snr_db": 20, "lambdas": [3, 5], "trials": 100}')
    cfg = ExperimentConfig.from_file(path)
    assert cfg.lambdas == (3.0, 5.0) and cfg.snr_db == 20 and cfg.trials == 100
    path.write_text('{"bogus": 1}')
    with pytest.raises(ConfigError, match="bogus"):
        ExperimentConfig.from_file(path)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "missing.json")


class TestCsv:
    def test_layout(self, small_report, tmp_path):
        paths = emit_csv(small_report, tmp_path)
        assert [p.name for p in paths] == ["sweep_lambda2.csv", "sweep_lambda30.csv"]
        lines = paths[0].read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 1 + 12
        for line, row in zip(lines[1:], small_report.for_lambda(2.0)):
            fields = line.split(",")
            assert int(fields[0]) == row.k
            assert int(fields[1]) == row.sensor + 1
            mi, bits = float(fields[3]), float(fields[4])
            assert bits == pytest.approx(mi / math.log(2), rel=1e-8)
            assert float(fields[2]) == pytest.approx(row.variance, rel=1e-8)

    def test_two_rows(self, tmp_path):
        report = run_sweep(ExperimentConfig(case_path="case2", k_max=2, trials=50, lambdas=[4]))
        (path,) = emit_csv(report, tmp_path)
        assert path.name == csv_name(4.0)
        assert len(path.read_text().splitlines()) == 3

    def test_byte_identical_rerun(self, tmp_path):
        cfg = ExperimentConfig(k_max=6, trials=1500, seed=99)
        a = emit_csv(run_sweep(cfg), tmp_path / "a")
        b = emit_csv(run_sweep(cfg, n_threads=3), tmp_path / "b")
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes()


class TestPlots:
    def test_well_formed(self, small_report, tmp_path):
        paths = emit_plots(small_report, tmp_path)
        assert {p.name for p in paths} == {
            "mi_detection.svg",
            "attack_profile_lambda2.svg",
            "attack_profile_lambda30.svg",
        }
        for p in paths:
            root = ET.parse(p).getroot()
            assert root.tag == f"{SVG}svg"

    def test_single_row_single_marker(self, tmp_path):
        report = run_sweep(ExperimentConfig(case_path="case2", k_max=1, trials=100, lambdas=[2]))
        paths = emit_plots(report, tmp_path)
        root = ET.parse(tmp_path / "mi_detection.svg").getroot()
        # two panels, one series each, one point per series
        assert len(root.findall(f".//{SVG}circle")) == 2
        assert not root.findall(f".//{SVG}polyline")
        assert len(paths) == 2

    def test_zero_probability_floor_annotated(self, tmp_path):
        report = run_sweep(ExperimentConfig(k_max=2, trials=400, lambdas=[30]))
        assert report.for_lambda(30.0)[0].p_detection == 0.0
        emit_plots(report, tmp_path)
        text = (tmp_path / "attack_profile_lambda30.svg").read_text()
        assert probability_floor(400) == 1 / 800
        assert "floor" in text

    def test_empty_report_rejected(self, small_report, tmp_path):
        from stealth_grid_lab.errors import DomainError

        empty = experiment.EvalReport(small_report.config, 71, 29, 1.0)
        with pytest.raises(DomainError):
            emit_plots(empty, tmp_path)
