"""
Cycle-spun Haar approximation of the weighted anisotropic 3-D TV prox.

For every axis (row, column, angle) and circular shift in {0, 1}, adjacent
pairs are Haar transformed, the detail coefficient is soft-thresholded and
the pair is transformed back.  The six estimates are averaged.  Color
channels are never mixed.
"""

from dataclasses import dataclass

import numpy as np

from .tensors import PolarizationStack

ANGLE_AXIS = 0
ROW_AXIS = 2
COL_AXIS = 3
TV_AXES = (ROW_AXIS, COL_AXIS, ANGLE_AXIS)
N_SHIFTS = 2


@dataclass(frozen=True)
class TvWeights:
    """Regularization strength ``lam`` and polarization-axis weight ``lambda_w``."""

    lam: float = 5e-5
    lambda_w: float = 5e-5

    def __post_init__(self):
        for name in ("lam", "lambda_w"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    def axis_weight(self, axis):
        return self.lambda_w if axis == ANGLE_AXIS else 1.0


def _unwrap(x):
    if isinstance(x, PolarizationStack):
        return x.data, x.angles
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 4:
        raise ValueError(f"expected a (P, C, H, W) array, got shape {arr.shape}")
    return arr, None


def _wrap(arr, angles):
    return arr if angles is None else PolarizationStack(arr, angles)


def _pair_correction(x, axis, shift, thresh):
    """Change to ``x`` made by one shifted Haar soft-threshold along ``axis``.

    With pair (a, b), detail d = (a - b)/sqrt(2) and d' = soft(d, t), the
    inverse transform moves a by -(d - d')/sqrt(2) and b by the opposite
    amount; d - d' is d clipped to [-t, t].
    """
    corr = np.zeros_like(x)
    n = x.shape[axis]
    m = (n // 2) * 2
    if m == 0 or thresh == 0:
        return corr
    y = np.roll(x, -shift, axis=axis)
    first = np.take(y, np.arange(0, m, 2), axis=axis)
    second = np.take(y, np.arange(1, m, 2), axis=axis)
    move = np.clip((first - second) / np.sqrt(2.0), -thresh, thresh) / np.sqrt(2.0)
    c = np.zeros_like(y)
    idx = [slice(None)] * x.ndim
    idx[axis] = slice(0, m, 2)
    c[tuple(idx)] = -move
    idx[axis] = slice(1, m, 2)
    c[tuple(idx)] = move
    return np.roll(c, shift, axis=axis)


def haar_tv_prox(x, tau, weights):
    """Approximate prox of ``tau * TV_w`` at ``x``.

    Parameters
    ----------
    x : PolarizationStack or ndarray, shape (P, C, H, W)
    tau : float
        Base threshold; the angle axis uses ``tau * weights.lambda_w``.
    weights : TvWeights

    Returns
    -------
    Same type as ``x``.
    """
    if not (np.isfinite(tau) and tau >= 0):
        raise ValueError(f"tau must be finite and >= 0, got {tau}")
    arr, angles = _unwrap(x)
    total = np.zeros_like(arr)
    for axis in TV_AXES:
        t = tau * weights.axis_weight(axis)
        for shift in range(N_SHIFTS):
            total += _pair_correction(arr, axis, shift, t)
    out = arr + total / (len(TV_AXES) * N_SHIFTS)
    return _wrap(out, angles)


def fista_prox(x, tau, weights):
    """Half non-negativity projection, half Haar TV prox."""
    arr, angles = _unwrap(x)
    out = 0.5 * (np.maximum(arr, 0.0) + haar_tv_prox(arr, tau, weights))
    return _wrap(out, angles)


def tv_value(x, weights, circular=False):
    """Weighted anisotropic TV: sum over axes of w_a * sum |adjacent differences|."""
    arr, _ = _unwrap(x)
    total = 0.0
    for axis in TV_AXES:
        total += weights.axis_weight(axis) * axis_tv(arr, axis, circular)
    return total


def axis_tv(arr, axis, circular=False):
    """Sum of absolute adjacent differences of ``arr`` along one axis."""
    if circular:
        if arr.shape[axis] < 2:
            return 0.0
        return float(np.abs(np.roll(arr, -1, axis=axis) - arr).sum())
    return float(np.abs(np.diff(arr, axis=axis)).sum())
