import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drivengate.stochastic import (EnsembleResult, OUParams, TrajectoryFailure, ou_step,
                                   run_ensemble, sample_path, step_values, trajectory_rng)

TAU = 5e-6
OMEGA_L = 2 * math.pi * 811e3
P = OUParams.from_zeta(1e-3, TAU, OMEGA_L)


@settings(max_examples=30, deadline=None)
@given(zeta=st.floats(1e-5, 0.1), tau=st.floats(1e-7, 1e-3))
def test_stationary_variance_matches_zeta(zeta, tau):
    p = OUParams.from_zeta(zeta, tau, OMEGA_L)
    assert p.c * p.tau / 2 == pytest.approx(zeta**2 * OMEGA_L**2, rel=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        OUParams(c=1.0, tau=0.0, zeta=0.1, omega_L_ref=1.0)
    with pytest.raises(ValueError):
        OUParams(c=-1.0, tau=1.0, zeta=0.1, omega_L_ref=1.0)


def test_ou_step_deterministic_part():
    assert ou_step(2.0, TAU, P, 0.0) == pytest.approx(2.0 / math.e, rel=1e-15)
    with pytest.raises(ValueError):
        ou_step(1.0, 0.0, P, 0.0)


def test_ou_step_long_time_variance():
    n = np.random.default_rng(0).standard_normal(100_000)
    x = ou_step(np.zeros_like(n), 1e3 * TAU, P, n)
    var = P.stationary_variance
    se = var * math.sqrt(2 / (len(x) - 1))
    assert abs(np.var(x, ddof=1) - var) < 3 * se


def test_two_half_steps_equal_one_step():
    rng = np.random.default_rng(1)
    m = 100_000
    x0 = 0.7 * math.sqrt(P.stationary_variance)
    one = ou_step(x0, TAU, P, rng.standard_normal(m))
    two = ou_step(ou_step(x0, TAU / 2, P, rng.standard_normal(m)), TAU / 2, P,
                  rng.standard_normal(m))
    mean = x0 / math.e
    var = P.stationary_variance * (1 - math.exp(-2))
    for x in (one, two):
        assert abs(x.mean() - mean) < 3 * math.sqrt(var / m)
        assert abs(x.var(ddof=1) - var) < 3 * var * math.sqrt(2 / (m - 1))


def test_sample_path_reproducible_and_grid():
    a = sample_path(P, 60e-6, 1e-8, seed=7)
    b = sample_path(P, 60e-6, 1e-8, seed=7)
    assert np.array_equal(a.values, b.values)
    assert a.times[-1] >= 60e-6 - 1e-15
    assert a.values[0] == 0.0
    c = sample_path(P, 60e-6, 1e-8, seed=8)
    assert not np.array_equal(a.values, c.values)
    with pytest.raises(ValueError):
        sample_path(P, 60e-6, TAU / 50, seed=1)
    assert len(step_values(a, 100)) == 100


def test_zero_amplitude_path_is_zero():
    p = OUParams.from_zeta(0.0, TAU, OMEGA_L)
    assert not np.any(sample_path(p, 10e-6, 1e-8, seed=3).values)


def test_stationary_start_option():
    vals = np.array([sample_path(P, 1e-8, 1e-8, seed=k, start="stationary").values[0]
                     for k in range(4000)])
    var = P.stationary_variance
    assert abs(vals.var() - var) < 3 * var * math.sqrt(2 / 3999)
    with pytest.raises(ValueError):
        sample_path(P, 1e-6, 1e-8, seed=1, start="late")


def test_long_path_mean_and_autocorrelation():
    dt = TAU / 100
    path = sample_path(P, 2000 * TAU, dt, seed=11, start="stationary").values
    assert len(path) > 1e5
    x = path - path.mean()
    # mean of a correlated series: effective sample count ~ N dt / (2 tau)
    n_eff = len(path) * dt / (2 * TAU)
    assert abs(path.mean()) < 3 * math.sqrt(P.stationary_variance / n_eff)
    var = np.dot(x, x) / len(x)
    for k in (10, 50, 100, 200):
        ac = np.dot(x[:-k], x[k:]) / (len(x) - k) / var
        assert ac == pytest.approx(math.exp(-k * dt / TAU), rel=0.05)


def test_zero_start_variance_growth():
    n_paths = 10_000
    dt = TAU / 100
    rng = np.random.default_rng(5)
    x = np.zeros(n_paths)
    checks = {50: 0.5, 100: 1.0, 500: 5.0}
    var0 = P.stationary_variance
    for k in range(1, 501):
        x = ou_step(x, dt, P, rng.standard_normal(n_paths))
        if k in checks:
            expected = var0 * -math.expm1(-2 * checks[k])
            se = expected * math.sqrt(2 / (n_paths - 1))
            assert abs(x.var(ddof=1) - expected) < 3 * se


def _runner(master):
    def run(k):
        rng = trajectory_rng(master, k)
        return 1.0 - abs(rng.standard_normal()) * 1e-3
    return run


def test_ensemble_single_and_order_independent():
    one = run_ensemble(_runner(9), 1, 9)
    assert one.fidelities[0] == _runner(9)(0)
    serial = run_ensemble(_runner(9), 40, 9)
    threaded = run_ensemble(_runner(9), 40, 9, workers=4)
    assert np.array_equal(serial.fidelities, threaded.fidelities)
    assert serial.mean_error == threaded.mean_error and serial.sem == threaded.sem

    def batch(idx):
        return [_runner(9)(k) for k in idx]
    batched = run_ensemble(None, 40, 9, batch_runner=batch, batch_size=7, workers=3)
    assert np.array_equal(batched.fidelities, serial.fidelities)


def test_ensemble_statistics_recomputable():
    res = run_ensemble(_runner(2), 50, 2)
    assert res.mean_error == pytest.approx(np.mean(1 - res.fidelities), rel=1e-15)
    assert res.sem == pytest.approx(np.std(1 - res.fidelities, ddof=1) / math.sqrt(50))


def test_sem_shrinks_with_more_trajectories():
    small = run_ensemble(_runner(3), 400, 3)
    large = run_ensemble(_runner(3), 800, 3)
    assert small.sem / large.sem == pytest.approx(math.sqrt(2), rel=0.2)


def test_ensemble_failure_reports_seed():
    def bad(k):
        if k == 3:
            raise RuntimeError("boom")
        return 1.0
    with pytest.raises(TrajectoryFailure) as info:
        run_ensemble(bad, 5, 77)
    assert info.value.index == 3 and info.value.seed_entropy == (77, 3)
    with pytest.raises(ValueError):
        run_ensemble(None, 5, 1)
    assert EnsembleResult(1, np.array([1.0]), 0).sem == 0.0


def test_path_csv_dump(tmp_path):
    p = sample_path(P, 1e-7, 1e-8, seed=1)
    out = tmp_path / "path.csv"
    p.to_csv(out)
    rows = out.read_text().splitlines()
    assert rows[0] == "t_s,delta_omega_L_rad_per_s"
    assert len(rows) == len(p.values) + 1
    assert float(rows[-1].split(",")[1]) == p.values[-1]
