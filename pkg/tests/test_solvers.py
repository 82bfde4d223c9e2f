import csv

import numpy as np
import pytest

from conftest import delta_psf, random_instance, striped_mask
from polarlens.forward import ForwardOperator
from polarlens.solvers import (
    SolverConfig,
    SolverError,
    admm_reconstruct,
    conjugate_gradient,
    fista_reconstruct,
    objective_value,
    reconstruct,
)


def selection_operator(H=6, W=6):
    """Delta PSF with width-1 stripes: every pixel is seen by exactly one angle."""
    return ForwardOperator(delta_psf(3), striped_mask(H, W, 3))


def test_presets():
    f = SolverConfig.fista_simulation()
    assert (f.kind, f.lam, f.lambda_w, f.step_factor, f.iterations) == ("fista", 5e-5, 5e-5, 45.0, 10000)
    r = SolverConfig.fista_real()
    assert (r.lam, r.lambda_w, r.step_factor, r.iterations) == (5e-3, 5e-3, 1000.0, 500)
    assert SolverConfig.fista_psf_mismatch().step_factor == 100.0
    a = SolverConfig.admm_simulation()
    assert (a.kind, a.rho, a.lam, a.lambda_w, a.iterations, a.cg_tol, a.cg_max_iter) == (
        "admm", 0.15, 3e-5, 6e-5, 200, 1e-3, 30,
    )
    assert SolverConfig.fista_simulation(iterations=7).iterations == 7


def test_noise_scale_enters_squared():
    cfg = SolverConfig(lam=2e-3, noise_scale=0.5)
    assert cfg.weights.lam == pytest.approx(5e-4)


@pytest.mark.parametrize("bad", [dict(kind="sgd"), dict(lam=-1.0), dict(rho=0.0), dict(iterations=0),
                                 dict(step_factor=float("nan")), dict(log_every=0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SolverConfig(**bad)


@pytest.mark.parametrize("cfg", [SolverConfig.fista_simulation(iterations=30, log_every=10),
                                 SolverConfig.admm_simulation(iterations=30, log_every=10)])
def test_zero_measurement_is_fixed_point(rng, cfg):
    op = random_instance(rng, 8, 8, 1, 3)
    rep = reconstruct(np.zeros(op.meas_shape), op, cfg)
    assert not rep.estimate.data.any()
    assert all(v == 0 for _, v in rep.objective)


@pytest.mark.parametrize("c", [1.0, 2.0, 45.0])
def test_fista_selection_operator_recovers_positive_part(rng, c):
    op = selection_operator()
    y = rng.normal(size=op.meas_shape)
    iters = 200 if c < 10 else 3000
    cfg = SolverConfig.fista_simulation(lam=0.0, lambda_w=0.0, step_factor=c, iterations=iters, log_every=50)
    est = fista_reconstruct(y, op, cfg).estimate.data
    expect = op._mask * np.maximum(y, 0)[None]
    assert np.abs(est - expect).max() <= 1e-6


def test_admm_selection_operator_recovers_positive_part(rng):
    op = selection_operator()
    y = rng.normal(size=op.meas_shape)
    cfg = SolverConfig.admm_simulation(lam=0.0, lambda_w=0.0, iterations=300, cg_tol=1e-12, cg_max_iter=50)
    est = admm_reconstruct(y, op, cfg).estimate.data
    expect = op._mask * np.maximum(y, 0)[None]
    assert np.abs(est - expect).max() <= 1e-6


def test_estimates_nonnegative_and_deterministic(rng):
    op = random_instance(rng, 10, 10, 1, 3)
    y = op.forward(rng.uniform(size=op.scene_shape)) - 0.1
    for cfg in (SolverConfig.fista_simulation(iterations=60, log_every=20),
                SolverConfig.admm_simulation(iterations=20, log_every=5)):
        a = reconstruct(y, op, cfg)
        b = reconstruct(y, op, cfg)
        assert a.estimate.data.min() >= 0
        assert a.estimate.data.tobytes() == b.estimate.data.tobytes()
        assert a.objective == b.objective


def test_fista_decreases_objective(rng):
    op = random_instance(rng, 12, 12, 1, 3)
    y = op.forward(rng.uniform(size=op.scene_shape))
    cfg = SolverConfig.fista_simulation(iterations=200, log_every=50)
    rep = fista_reconstruct(y, op, cfg)
    assert rep.final_objective() < rep.initial_objective
    assert rep.initial_objective == pytest.approx(0.5 * np.sum(y**2))


def test_trace_csv(tmp_path, rng):
    op = random_instance(rng, 8, 8, 1, 3)
    y = op.forward(rng.uniform(size=op.scene_shape))
    rep = fista_reconstruct(y, op, SolverConfig.fista_simulation(iterations=100, log_every=25))
    rep.write_trace_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["iteration", "objective", "residual"]
    assert [int(r[0]) for r in rows[1:]] == [25, 50, 75, 100]
    assert all(r[2] == "" for r in rows[1:])

    rep = admm_reconstruct(y, op, SolverConfig.admm_simulation(iterations=10, log_every=5))
    rep.write_trace_csv(tmp_path / "a.csv")
    rows = list(csv.reader(open(tmp_path / "a.csv")))
    assert len(rows) == 11
    assert rows[5][1] != "" and rows[4][1] == ""
    assert all(float(r[2]) >= 0 for r in rows[1:])


def test_divergence_raises(rng):
    op = random_instance(rng, 8, 8, 1, 3)
    y = np.full(op.meas_shape, 1e300)
    with pytest.raises(SolverError):
        fista_reconstruct(y, op, SolverConfig.fista_simulation(iterations=10, log_every=5))


def test_kind_mismatch(rng):
    op = random_instance(rng, 8, 8, 1, 3)
    with pytest.raises(ValueError):
        admm_reconstruct(np.zeros(op.meas_shape), op, SolverConfig())


def test_objective_value_matches_definition(rng):
    op = random_instance(rng, 8, 8, 1, 3)
    x = rng.uniform(size=op.scene_shape)
    y = rng.uniform(size=op.meas_shape)
    cfg = SolverConfig(lam=0.0)
    assert objective_value(op, x, y, cfg.weights) == pytest.approx(0.5 * np.sum((op.forward(x) - y) ** 2))


# conjugate gradient

def test_cg_identity():
    b = np.arange(1.0, 6.0)
    np.testing.assert_allclose(conjugate_gradient(lambda v: v, b, tol=1e-12), b)


def test_cg_diagonal():
    d = np.array([1.0, 2.0, 3.0])
    b = np.array([1.0, 1.0, 1.0])
    x = conjugate_gradient(lambda v: d * v, b, tol=1e-14, max_iter=3)
    np.testing.assert_allclose(x, 1 / d, atol=1e-12)


def test_cg_dense_spd_and_monotone(rng):
    for _ in range(20):
        n = int(rng.integers(5, 30))
        a = rng.normal(size=(n, n))
        m = a @ a.T + n * np.eye(n)
        b = rng.normal(size=n)
        hist = []
        x = conjugate_gradient(lambda v: m @ v, b, tol=1e-13, max_iter=5 * n, history=hist)
        np.testing.assert_allclose(x, np.linalg.solve(m, b), atol=1e-10)
        assert all(h1 <= h0 * (1 + 1e-9) for h0, h1 in zip(hist, hist[1:]))


def test_cg_zero_rhs():
    x = conjugate_gradient(lambda v: 2 * v, np.zeros(4), x0=np.ones(4))
    assert not x.any()


def test_cg_breakdown():
    m = np.diag([1.0, -1.0])
    with pytest.raises(SolverError, match="CG breakdown"):
        conjugate_gradient(lambda v: m @ v, np.array([0.0, 1.0]), tol=1e-12)


def test_cg_warm_start_exact():
    m = np.diag([2.0, 5.0])
    x0 = np.array([0.5, 0.2])
    hist = []
    x = conjugate_gradient(lambda v: m @ v, m @ x0, x0=x0, history=hist)
    np.testing.assert_array_equal(x, x0)
    assert hist == [0.0]
