"""
Masked diffuser forward model and its adjoint.

For each color channel ``c`` the sensor sees::

    y[c] = sum_p S_p * crop(x[p, c] (*) k_c)

where ``(*)`` is zero-padded linear convolution and ``crop`` keeps the
centered H x W window of the full (H + Hk - 1) x (W + Wk - 1) result.
"""

import os

import numpy as np
import scipy.fft as sfft

from .tensors import Measurement, PolarizationMask, PolarizationStack, Psf, normalize_psf

DENSE_LIMIT = 65536


def worker_count():
    """Worker threads for FFTs, capped by ``POLARLENS_THREADS``."""
    env = os.environ.get("POLARLENS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"POLARLENS_THREADS must be an integer, got {env!r}") from None
    return 1


class ForwardOperator:
    """Linear map from a (P, C, H, W) stack to a (C, H, W) measurement.

    Parameters
    ----------
    psf : Psf or array_like
        Diffuser PSF, one plane per color channel.
    mask : PolarizationMask
        Angle selector with the sensor (= scene) spatial size.
    normalize : bool
        L1-normalize each PSF channel before use.
    """

    def __init__(self, psf, mask, normalize=True):
        if not isinstance(psf, Psf):
            psf = Psf(psf)
        if normalize:
            psf = normalize_psf(psf)
        if not isinstance(mask, PolarizationMask):
            raise TypeError("mask must be a PolarizationMask")
        self.psf = psf
        self.mask = mask
        P, H, W = mask.shape
        C, Hk, Wk = psf.shape
        self.scene_shape = (P, C, H, W)
        self.meas_shape = (C, H, W)
        self.angles = mask.angles
        self.offset = ((Hk - 1) // 2, (Wk - 1) // 2)
        full = (H + Hk - 1, W + Wk - 1)
        self.pad_shape = tuple(sfft.next_fast_len(n, real=True) for n in full)
        self._kf = sfft.rfft2(psf.data, s=self.pad_shape, axes=(-2, -1))
        self._kf.setflags(write=False)
        self._mask = mask.data[:, None]  # (P, 1, H, W), broadcast over channels
        self._lipschitz = {}

    def __repr__(self):
        return (
            f"ForwardOperator(scene_shape={self.scene_shape}, psf_shape={self.psf.shape}, "
            f"pad_shape={self.pad_shape})"
        )

    def _check_scene(self, x):
        arr = np.asarray(getattr(x, "data", x), dtype=np.float64)
        if arr.shape != self.scene_shape:
            raise ValueError(f"dimension mismatch: scene {arr.shape} vs operator {self.scene_shape}")
        return arr

    def _check_meas(self, y):
        arr = np.asarray(getattr(y, "data", y), dtype=np.float64)
        if arr.ndim == 2 and self.meas_shape[0] == 1:
            arr = arr[None]
        if arr.shape != self.meas_shape:
            raise ValueError(f"dimension mismatch: measurement {arr.shape} vs operator {self.meas_shape}")
        return arr

    def forward(self, x):
        """Apply A to a (P, C, H, W) array, returning a (C, H, W) array."""
        x = self._check_scene(x)
        _, _, H, W = self.scene_shape
        r0, c0 = self.offset
        workers = worker_count()
        xf = sfft.rfft2(x, s=self.pad_shape, axes=(-2, -1), workers=workers)
        full = sfft.irfft2(xf * self._kf, s=self.pad_shape, axes=(-2, -1), workers=workers)
        crop = full[..., r0 : r0 + H, c0 : c0 + W]
        return np.sum(self._mask * crop, axis=0)

    def adjoint(self, y):
        """Apply A^T to a (C, H, W) array, returning a (P, C, H, W) array."""
        y = self._check_meas(y)
        _, _, H, W = self.scene_shape
        r0, c0 = self.offset
        workers = worker_count()
        g = np.zeros(self.scene_shape[:2] + self.pad_shape)
        g[..., r0 : r0 + H, c0 : c0 + W] = self._mask * y[None]
        gf = sfft.rfft2(g, axes=(-2, -1), workers=workers)
        corr = sfft.irfft2(gf * np.conj(self._kf), s=self.pad_shape, axes=(-2, -1), workers=workers)
        return np.ascontiguousarray(corr[..., :H, :W])

    def normal(self, x):
        """Apply A^T A."""
        return self.adjoint(self.forward(x))

    def lipschitz(self, iters=50, seed=0):
        """Cached :func:`estimate_lipschitz` for this operator."""
        key = (int(iters), int(seed))
        if key not in self._lipschitz:
            self._lipschitz[key] = estimate_lipschitz(self, iters, seed)
        return self._lipschitz[key]


def forward_apply(op, x):
    """Simulate the noiseless measurement of stack ``x``."""
    if isinstance(x, PolarizationStack) and x.angles != op.angles:
        raise ValueError(f"dimension mismatch: stack angles {x.angles} vs mask angles {op.angles}")
    return Measurement(op.forward(x))


def adjoint_apply(op, y):
    """Back-project a measurement through A^T."""
    return PolarizationStack(op.adjoint(y), op.angles)


def build_dense_operator(op):
    """Dense (H*W*C) x (H*W*C*P) matrix of ``op``.

    Rows index the measurement in (C, H, W) row-major order and columns
    the scene in (P, C, H, W) row-major order, matching ``ravel()`` of the
    in-memory arrays.
    """
    n_in = int(np.prod(op.scene_shape))
    if n_in > DENSE_LIMIT:
        raise ValueError(f"size guard exceeded: {n_in} unknowns > {DENSE_LIMIT}")
    n_out = int(np.prod(op.meas_shape))
    dense = np.empty((n_out, n_in))
    basis = np.zeros(n_in)
    for j in range(n_in):
        basis[j] = 1.0
        dense[:, j] = op.forward(basis.reshape(op.scene_shape)).ravel()
        basis[j] = 0.0
    return dense


def estimate_lipschitz(op, iters=50, seed=0):
    """Largest eigenvalue of A^T A by seeded power iteration."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if not np.any(op.psf.data):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=op.scene_shape)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        v = op.normal(x)
        nv = np.linalg.norm(v)
        while nv == 0.0:
            # start landed in the null space
            x = rng.uniform(size=op.scene_shape)
            x /= np.linalg.norm(x)
            v = op.normal(x)
            nv = np.linalg.norm(v)
        est = float(np.vdot(x, v))
        x = v / nv
    return est
