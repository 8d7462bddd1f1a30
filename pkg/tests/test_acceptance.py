"""Acceptance gate: one test per criterion, each timed against its budget.

Run with ``pytest tests/test_acceptance.py``; the terminal summary lists one
PASS/FAIL line per criterion.
"""

import contextlib
import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_RESULTS
from oracles import exhaustive_single_sensor, minimize_1d, naive_greedy, random_model
from stealth_grid_lab.attack import (
    greedy_k_sparse,
    optimal_variance,
    single_sensor_attack,
    single_sensor_cost,
)
from stealth_grid_lab.detector import estimate_probabilities
from stealth_grid_lab.experiment import ExperimentConfig, emit_csv, run_sweep
from stealth_grid_lab.gaussian import (
    build_state_model,
    kl_divergence,
    mutual_information,
    snr_to_noise_variance,
    toeplitz_cov,
)
from stealth_grid_lab.grid import MeasurementModel, build_jacobian, bundled_case

LAMBDAS = (1.5, 2.0, 30.0)


@contextlib.contextmanager
def criterion(number, title, budget_s):
    """Time the body, enforce the budget and record one summary line."""
    detail = {"text": ""}
    start = time.perf_counter()
    try:
        yield detail
        elapsed = time.perf_counter() - start
        assert elapsed < budget_s, f"took {elapsed:.2f} s, budget {budget_s} s"
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        ACCEPTANCE_RESULTS.append((number, title, False, f"{exc} ({elapsed:.2f} s)"))
        raise
    ACCEPTANCE_RESULTS.append((number, title, True, f"{detail['text']} ({elapsed:.2f} s)".strip()))


def closed_form_variance(w, s2, lam):
    # positive root of r^2 + s2 r + (w s2 - 1) / (lam w^2) = 0
    return -s2 / 2 + 0.5 * math.sqrt(s2 * s2 - 4 * (w * s2 - 1) / (lam * w * w))


@pytest.fixture(scope="module")
def ieee30():
    meas = build_jacobian(bundled_case("case30"), 1.0)
    sxx = toeplitz_cov(meas.n, 0.1)
    meas = meas.with_noise(snr_to_noise_variance(meas.jacobian, sxx, 30.0))
    return meas, sxx


@pytest.fixture(scope="module")
def default_sweep(tmp_path_factory):
    start = time.perf_counter()
    report = run_sweep(ExperimentConfig(), n_threads=1)
    elapsed = time.perf_counter() - start
    out = tmp_path_factory.mktemp("sweep_a")
    paths = emit_csv(report, out)
    return report, paths, elapsed


def test_criterion_1_single_sensor_matches_exhaustive_search():
    with criterion(1, "single-sensor closed form vs exhaustive 1-D search", 10.0) as d:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(50):
            m = int(rng.integers(3, 11))
            H, sxx, s2 = random_model(rng, m)
            state = build_state_model(MeasurementModel(H, s2), sigma_xx=sxx)
            lam = float(rng.choice(LAMBDAS))
            sol = single_sensor_attack(state, lam)
            idx, var, _ = exhaustive_single_sensor(state.w, s2, lam)
            assert idx == sol.alpha, f"index {sol.alpha} != exhaustive {idx}"
            rel = abs(var - sol.variance) / var
            worst = max(worst, rel)
            assert rel < 1e-6, f"variance {sol.variance} vs {var}"
        d["text"] = f"50 models, worst relative variance error {worst:.1e}"


def test_criterion_2_greedy_matches_naive():
    with criterion(2, "greedy vs naive re-implementation", 10.0) as d:
        rng = np.random.default_rng(77)
        worst = 0.0
        for _ in range(20):
            m = int(rng.integers(2, 9))
            k = int(rng.integers(1, min(4, m) + 1))
            H, sxx, s2 = random_model(rng, m)
            lam = float(rng.choice(LAMBDAS))
            plan = greedy_k_sparse(MeasurementModel(H, s2), sxx, lam, k)
            support, variances = naive_greedy(H, sxx, s2, lam, k)
            assert list(plan.support) == support
            err = float(np.max(np.abs(np.asarray(plan.variances) - variances)))
            worst = max(worst, err)
            assert err <= 1e-9
        d["text"] = f"20 models, worst variance error {worst:.1e}"


def test_criterion_3_selection_independent_of_lambda(ieee30):
    meas, sxx = ieee30
    with criterion(3, "30-bus support identical for lambda 2 and 30", 60.0) as d:
        a = greedy_k_sparse(meas, sxx, 2.0, 71)
        b = greedy_k_sparse(meas, sxx, 30.0, 71)
        assert a.k == b.k == 71
        assert a.support == b.support
        d["text"] = "71 rounds"


def test_criterion_4_analytic_vs_simulation():
    with criterion(4, "scalar closed forms vs simulation", 30.0) as d:
        # y = x + e, var x = 0.5, var e = 0.5, attack variance 3
        state = build_state_model(MeasurementModel([[1.0]], 0.5), sigma_xx=[[0.5]])
        a = 3.0
        n = 100_000
        rng = np.random.default_rng(404)
        x = rng.normal(0, math.sqrt(0.5), n)
        y = x + rng.normal(0, math.sqrt(0.5 + a), n)
        mi_sim = np.mean(
            stats.norm.logpdf(y, loc=x, scale=math.sqrt(0.5 + a)) - stats.norm.logpdf(y, scale=math.sqrt(1 + a))
        )
        ya = rng.normal(0, math.sqrt(1 + a), n)
        kl_sim = np.mean(stats.norm.logpdf(ya, scale=math.sqrt(1 + a)) - stats.norm.logpdf(ya, scale=1.0))
        mi_err = abs(mutual_information(state, [[a]]) - mi_sim)
        kl_err = abs(kl_divergence(state, [[a]]) - kl_sim)
        assert mi_err < 2e-2 and kl_err < 2e-2

        # tau = 2: log L >= ln 2  <=>  |y| >= c with c^2 = 8 ln 4 / 3
        c = math.sqrt(8 * math.log(4) / 3)
        p_d = 2 * stats.norm.sf(c / 2)
        est = estimate_probabilities(state, [[a]], 2.0, n, seed=1)
        pd_err = abs(est.p_detection - p_d)
        assert pd_err <= 0.01
        d["text"] = f"MI err {mi_err:.1e}, KL err {kl_err:.1e}, P_D err {pd_err:.1e}"


def test_criterion_5_detection_curves(default_sweep):
    report, _, elapsed = default_sweep
    trials = report.config.trials
    with criterion(5, "default sweep qualitative properties", 600.0) as d:
        # the sweep itself ran in the fixture
        assert elapsed < 600.0
        for lam in (2.0, 30.0):
            rows = report.for_lambda(lam)
            assert len(rows) == report.m
            mi = np.array([r.mi_nats for r in rows])
            assert np.all(np.diff(mi) <= 1e-9), f"MI increases for lambda={lam}"
            pd = [r.p_detection for r in rows]
            for k, (p0, p1) in enumerate(zip(pd, pd[1:]), start=1):
                pooled = (p0 + p1) / 2
                allowed = 3 * math.sqrt(pooled * (1 - pooled) / trials)
                assert p1 >= p0 - allowed, f"lambda={lam}: P_D drops {p0}->{p1} at k={k}->{k + 1}"
        low, high = report.for_lambda(2.0), report.for_lambda(30.0)
        k_first = next(i for i in range(report.m) if low[i].p_detection > 0 and high[i].p_detection > 0)
        assert high[k_first].p_detection <= low[k_first].p_detection
        d["text"] = (
            f"first k with both P_D > 0 is {k_first + 1}: "
            f"{high[k_first].p_detection:g} (lambda 30) <= {low[k_first].p_detection:g} (lambda 2); "
            f"sweep {elapsed:.1f} s"
        )


def test_criterion_6_variance_structure(ieee30):
    meas, sxx = ieee30
    s2 = meas.noise_variance
    with criterion(6, "greedy variances follow the closed form and shrink with lambda", 1.0) as d:
        plans = {lam: greedy_k_sparse(meas, sxx, lam, 71) for lam in (2.0, 5.0, 30.0)}
        worst = 0.0
        for lam, plan in plans.items():
            for w, v in zip(plan.w_mins, plan.variances):
                err = abs(closed_form_variance(w, s2, lam) - v)
                worst = max(worst, err)
                assert err <= 1e-12
        for w in plans[2.0].w_mins:
            v2, v5, v30 = (closed_form_variance(w, s2, lam) for lam in (2.0, 5.0, 30.0))
            assert v2 > v5 > v30 > 0
        for a, b in ((2.0, 5.0), (5.0, 30.0)):
            assert np.all(np.asarray(plans[a].variances) > np.asarray(plans[b].variances))
        d["text"] = f"213 steps, worst error {worst:.1e}"


def test_criterion_7_convexity():
    with criterion(7, "convexity and unimodality of the single-sensor costs", 1.0) as d:
        checked = 0
        t = np.linspace(1.0, 20.0, 150)
        t1, t2 = np.meshgrid(t, t)
        for lam in LAMBDAS:
            f = lambda u: lam * u - lam + (1 - lam) * np.log(u)
            assert np.all(f((t1 + t2) / 2) <= (f(t1) + f(t2)) / 2 + 1e-12)
            for s2 in (1e-3, 1.0):
                for frac in (0.05, 0.5, 0.95):
                    w = frac / s2
                    g = lambda r: single_sensor_cost(r, w, s2, lam)
                    r = np.geomspace(1e-6, 1e3, 120) * max(s2, 1e-3)
                    r1, r2 = np.meshgrid(r, r)
                    scale = 1 + np.abs(g(r1)) + np.abs(g(r2))
                    assert np.all(g((r1 + r2) / 2) <= (g(r1) + g(r2)) / 2 + 1e-12 * scale)
                    r_star = optimal_variance(w, s2, lam)
                    lo, hi = r_star / 2, r_star * 2
                    assert g(lo) > g(r_star) < g(hi)
                    r_num, _ = minimize_1d(g)
                    assert lo < r_num < hi
                    checked += 1
        d["text"] = f"{checked} (lambda, noise, w) combinations"


def test_criterion_8_determinism(default_sweep, tmp_path):
    report, paths, first_run = default_sweep
    with criterion(8, "byte-identical CSV across runs and thread counts", math.inf) as d:
        start = time.perf_counter()
        again = run_sweep(ExperimentConfig(), n_threads=4)
        elapsed = time.perf_counter() - start
        budget = 2 * first_run
        assert elapsed < budget, f"rerun took {elapsed:.1f} s, budget {budget:.1f} s"
        for first, second in zip(paths, emit_csv(again, tmp_path)):
            assert first.name == second.name
            assert first.read_bytes() == second.read_bytes(), f"{first.name} differs"
        d["text"] = f"{len(paths)} files, 1 vs 4 threads"
