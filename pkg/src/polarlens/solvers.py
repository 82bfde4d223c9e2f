"""
Iterative reconstruction of a polarization stack from one measurement.

Both solvers minimize ``0.5 * ||A x - y||^2 + lam * TV_w(x)`` with x >= 0.
The noise std of the data term is folded into ``lam``.
"""

import csv
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .prox import TvWeights, fista_prox, haar_tv_prox, tv_value
from .tensors import PolarizationStack

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """A solver produced non-finite values or hit a degenerate system."""


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters for FISTA and ADMM.

    ``step_factor`` is the tuning factor c of the FISTA step 1 / (L * c).
    ``noise_scale`` is the data-term noise std; it enters as lam * noise_scale**2.
    """

    kind: str = "fista"
    lam: float = 5e-5
    lambda_w: float = 5e-5
    step_factor: float = 45.0
    iterations: int = 10000
    rho: float = 0.15
    cg_tol: float = 1e-3
    cg_max_iter: int = 30
    noise_scale: float = 1.0
    log_every: int = 50
    lipschitz_iters: int = 50
    lipschitz_seed: int = 0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("fista", "admm"):
            raise ValueError(f"solver kind must be 'fista' or 'admm', got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        for name in ("lam", "lambda_w"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0")
        for name in ("step_factor", "rho", "cg_tol", "noise_scale"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0")
        for name in ("iterations", "cg_max_iter", "log_every", "lipschitz_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def weights(self):
        return TvWeights(self.lam * self.noise_scale**2, self.lambda_w)

    def with_(self, **changes):
        return replace(self, **changes)

    @classmethod
    def fista_simulation(cls, **kw):
        return cls(**{**dict(kind="fista", lam=5e-5, lambda_w=5e-5, step_factor=45.0, iterations=10000), **kw})

    @classmethod
    def fista_real(cls, **kw):
        return cls(**{**dict(kind="fista", lam=5e-3, lambda_w=5e-3, step_factor=1000.0, iterations=500), **kw})

    @classmethod
    def fista_psf_mismatch(cls, **kw):
        return cls.fista_simulation(**{"step_factor": 100.0, **kw})

    @classmethod
    def admm_simulation(cls, **kw):
        base = dict(kind="admm", lam=3e-5, lambda_w=6e-5, rho=0.15, iterations=200, cg_tol=1e-3, cg_max_iter=30)
        return cls(**{**base, **kw})


@dataclass
class SolveReport:
    """Result of a reconstruction run.

    ``objective`` holds (iteration, value) pairs at logged iterations;
    ``residual`` holds (iteration, ||v - z||) for every ADMM iteration.
    """

    estimate: PolarizationStack
    objective: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    iterations: int = 0
    wall_time: float = 0.0
    lipschitz: float = float("nan")
    initial_objective: float = float("nan")
    raw: np.ndarray = None

    def final_objective(self):
        return self.objective[-1][1] if self.objective else float("nan")

    def trace_rows(self):
        """Rows (iteration, objective, residual); missing entries are None."""
        obj = dict(self.objective)
        res = dict(self.residual)
        its = sorted(set(obj) | set(res))
        return [(k, obj.get(k), res.get(k)) for k in its]

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "objective", "residual"])
            for k, o, r in self.trace_rows():
                w.writerow([k, "" if o is None else repr(float(o)), "" if r is None else repr(float(r))])


def objective_value(op, x, y, weights):
    """0.5 * ||A x - y||^2 + lam * TV_w(x)."""
    r = op.forward(x) - y
    return 0.5 * float(np.vdot(r, r)) + weights.lam * tv_value(x, weights)


def _meas_array(y, op):
    return op._check_meas(y)


def fista_reconstruct(y, op, cfg):
    """FISTA from a zero start with fixed step 1 / (L * c).

    Parameters
    ----------
    y : Measurement or ndarray (C, H, W)
    op : ForwardOperator
    cfg : SolverConfig

    Returns
    -------
    SolveReport whose estimate is the last iterate clamped at zero.
    """
    if cfg.kind != "fista":
        raise ValueError("fista_reconstruct needs cfg.kind == 'fista'")
    y = _meas_array(y, op)
    weights = cfg.weights
    start = time.perf_counter()
    L = op.lipschitz(cfg.lipschitz_iters, cfg.lipschitz_seed)
    if not L > 0:
        raise SolverError(f"non-positive Lipschitz estimate {L}")
    step = 1.0 / (L * cfg.step_factor)
    tau = weights.lam * step

    x = np.zeros(op.scene_shape)
    v = x
    t = 1.0
    report = SolveReport(estimate=None, lipschitz=L)
    report.initial_objective = objective_value(op, x, y, weights)
    for k in range(1, cfg.iterations + 1):
        grad = op.adjoint(op.forward(v) - y)
        x_new = fista_prox(v - step * grad, tau, weights)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        v = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        if k % cfg.log_every == 0 or k == cfg.iterations:
            obj = objective_value(op, x, y, weights)
            if not np.isfinite(obj):
                raise SolverError(f"FISTA diverged at iteration {k}: objective {obj}")
            if k % cfg.log_every == 0:
                report.objective.append((k, obj))
                logger.debug("fista iter %d objective %.6e", k, obj)
    report.iterations = cfg.iterations
    report.raw = x
    report.estimate = PolarizationStack(x, op.angles, nonneg=True)
    report.wall_time = time.perf_counter() - start
    return report


def conjugate_gradient(apply_M, b, x0=None, tol=1e-3, max_iter=30, history=None):
    """Solve M x = b for symmetric positive definite ``apply_M``.

    Stops once ||M x - b|| / ||b|| <= tol or after ``max_iter`` steps and
    returns the last iterate.  If ``history`` is a list, the residual norm
    of every iterate (starting with x0) is appended to it.

    Raises
    ------
    SolverError
        On non-positive curvature, which means M is not SPD.
    """
    b = np.asarray(b, dtype=np.float64)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        if history is not None:
            history.append(0.0)
        return np.zeros_like(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - apply_M(x)
    p = r.copy()
    rr = float(np.vdot(r, r))
    if history is not None:
        history.append(np.sqrt(rr))
    for _ in range(max_iter):
        if np.sqrt(rr) <= tol * bnorm:
            break
        Mp = apply_M(p)
        curv = float(np.vdot(p, Mp))
        if not curv > 0:
            raise SolverError(f"CG breakdown: curvature {curv} along search direction")
        alpha = rr / curv
        x = x + alpha * p
        r = r - alpha * Mp
        rr_new = float(np.vdot(r, r))
        if history is not None:
            history.append(np.sqrt(rr_new))
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x


def admm_reconstruct(y, op, cfg):
    """Scaled ADMM with a CG-solved data step and a clamped TV step.

    The estimate is the final z iterate, which is non-negative.
    """
    if cfg.kind != "admm":
        raise ValueError("admm_reconstruct needs cfg.kind == 'admm'")
    y = _meas_array(y, op)
    weights = cfg.weights
    rho = cfg.rho
    start = time.perf_counter()
    aty = op.adjoint(y)

    def normal_rho(w):
        return op.normal(w) + rho * w

    v = np.zeros(op.scene_shape)
    z = np.zeros(op.scene_shape)
    u = np.zeros(op.scene_shape)
    report = SolveReport(estimate=None)
    report.initial_objective = objective_value(op, z, y, weights)
    for k in range(1, cfg.iterations + 1):
        v = conjugate_gradient(normal_rho, aty + rho * (z - u), v, cfg.cg_tol, cfg.cg_max_iter)
        z = np.maximum(haar_tv_prox(v + u, weights.lam / rho, weights), 0.0)
        u = u + v - z
        res = float(np.linalg.norm(v - z))
        if not np.isfinite(res):
            raise SolverError(f"ADMM diverged at iteration {k}")
        report.residual.append((k, res))
        if k % cfg.log_every == 0:
            obj = objective_value(op, z, y, weights)
            report.objective.append((k, obj))
            logger.debug("admm iter %d objective %.6e residual %.3e", k, obj, res)
    report.iterations = cfg.iterations
    report.raw = z
    report.estimate = PolarizationStack(z, op.angles, nonneg=True)
    report.wall_time = time.perf_counter() - start
    return report


def reconstruct(y, op, cfg):
    """Dispatch on ``cfg.kind``."""
    if cfg.kind == "fista":
        return fista_reconstruct(y, op, cfg)
    return admm_reconstruct(y, op, cfg)
