"""
Synthetic measurement generation and raw-sensor preprocessing.
"""

from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import ndimage

from .forward import ForwardOperator
from .tensors import (
    ANGLE_SETS,
    Measurement,
    PolarizationMask,
    PolarizationStack,
    Psf,
    load_psf,
)

BUNDLED_PSF = "speckle_psf_64.ptf"


@dataclass(frozen=True)
class MaskSpec:
    """Vertical stripe layout: ``repeats`` copies of the ordered angle list."""

    height: int
    width: int
    angles: tuple = (0, 45, 90, 135)
    repeats: int = 4

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(int(a) for a in self.angles))
        if self.angles not in ANGLE_SETS:
            raise ValueError(f"angles must be one of {ANGLE_SETS}, got {self.angles}")
        if self.height < 1 or self.width < 1:
            raise ValueError("mask dims must be positive")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if len(self.angles) * self.repeats > self.width:
            raise ValueError(
                f"{len(self.angles)} angles x {self.repeats} repeats = "
                f"{len(self.angles) * self.repeats} stripes exceed width {self.width}"
            )


@dataclass(frozen=True)
class SimConfig:
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValueError("noise_sigma must be finite and >= 0")


def stripe_columns(spec):
    """Angle index selected by each sensor column."""
    n_angles = len(spec.angles)
    n_stripes = n_angles * spec.repeats
    base = spec.width // n_stripes
    stripe = np.minimum(np.arange(spec.width) // base, n_stripes - 1)
    return stripe % n_angles


def generate_stripe_mask(spec):
    """Build the binary selector for a vertical stripe mask.

    Stripe ``i`` (left to right) selects angle ``i mod P``.  All stripes are
    ``W // (P * repeats)`` wide; leftover columns widen the rightmost one.
    """
    cols = stripe_columns(spec)
    n_angles = len(spec.angles)
    data = np.zeros((n_angles, spec.height, spec.width), dtype=np.uint8)
    for p in range(n_angles):
        data[p][:, cols == p] = 1
    return PolarizationMask(data, spec.angles)


def simulate_measurement(x, psf, mask, cfg=SimConfig()):
    """Forward-simulate ``x`` and add i.i.d. Gaussian noise of std ``cfg.noise_sigma``."""
    op = ForwardOperator(psf, mask)
    if x.angles != mask.angles:
        raise ValueError(f"dimension mismatch: stack angles {x.angles} vs mask angles {mask.angles}")
    y = op.forward(x)
    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(cfg.seed)
        y = y + rng.normal(0.0, cfg.noise_sigma, size=y.shape)
    return Measurement(y, cfg.noise_sigma)


def compute_rgb_guide(x):
    """Unpolarized-equivalent image 0.5 * (I0 + I45 + I90 + I135), shape (C, H, W)."""
    if x.n_angles != 4 or x.angles != (0, 45, 90, 135):
        raise ValueError(f"RGB guide needs angles (0, 45, 90, 135), got {x.angles}")
    d = x.data
    return 0.5 * (d[0] + d[1] + d[2] + d[3])


def preprocess_raw(raw, bit_depth=16, white_balance=True):
    """Normalize integer sensor codes to [0, 1] and optionally white balance.

    Parameters
    ----------
    raw : ndarray of int, shape (H, W) or (H, W, 3)
        Sensor codes, RGB order for color data.
    bit_depth : {8, 16}
    white_balance : bool
        Scale red and blue so that their means match the green mean.

    Returns
    -------
    Measurement with data shape (C, H, W).
    """
    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    raw = np.asarray(raw)
    if not np.issubdtype(raw.dtype, np.integer):
        raise ValueError(f"raw image must hold integer codes, got {raw.dtype}")
    top = 2**bit_depth - 1
    if raw.size and (raw.min() < 0 or raw.max() > top):
        raise ValueError(f"raw codes outside [0, {top}] for {bit_depth}-bit data")
    img = raw.astype(np.float32).astype(np.float64) / top
    if img.ndim == 2:
        img = img[None]
    elif img.ndim == 3 and img.shape[2] == 3:
        img = np.moveaxis(img, 2, 0)
    else:
        raise ValueError(f"raw image must be (H, W) or (H, W, 3), got shape {raw.shape}")
    if white_balance and img.shape[0] == 3:
        means = img.mean(axis=(1, 2))
        if means[0] == 0 or means[2] == 0:
            raise ValueError("degenerate channel: red or blue mean is zero")
        img = img.copy()
        img[0] *= means[1] / means[0]
        img[2] *= means[1] / means[2]
    return Measurement(img)


def to_gray3(x):
    """Three-angle grayscale version of a stack: drop 135 deg, average channels."""
    keep = [x.angles.index(a) for a in (0, 45, 90)]
    return PolarizationStack(x.data[keep].mean(axis=1, keepdims=True), (0, 45, 90))


# --------------------------------------------------------------------------
# synthetic inputs


def synthetic_speckle_psf(size=64, channels=3, n_points=60, blur=0.8, seed=7):
    """Caustic-like PSF: sparse bright foci inside a soft disc, blurred.

    Channels reuse the same foci scaled about the center by a few percent to
    mimic dispersion.  Each channel is L1-normalized.
    """
    rng = np.random.default_rng(seed)
    center = (size - 1) / 2.0
    radius = 0.42 * size
    r = radius * np.sqrt(rng.uniform(size=n_points))
    phi = rng.uniform(0.0, 2 * np.pi, size=n_points)
    amp = rng.uniform(0.3, 1.0, size=n_points)
    scales = np.linspace(0.97, 1.03, channels) if channels > 1 else np.ones(1)
    out = np.zeros((channels, size, size))
    for c, s in enumerate(scales):
        rows = np.clip(np.round(center + s * r * np.sin(phi)).astype(int), 0, size - 1)
        cols = np.clip(np.round(center + s * r * np.cos(phi)).astype(int), 0, size - 1)
        np.add.at(out[c], (rows, cols), amp)
        out[c] = ndimage.gaussian_filter(out[c], blur, mode="constant")
    out = np.maximum(out, 0.0)
    out /= out.sum(axis=(1, 2), keepdims=True)
    return Psf(out)


def bundled_psf(channels=3):
    """The packaged 64 x 64 speckle PSF (grayscale by channel mean if ``channels == 1``)."""
    ref = resources.files("polarlens.data").joinpath(BUNDLED_PSF)
    with resources.as_file(ref) as path:
        psf = load_psf(path)
    return psf.to_grayscale() if channels == 1 else psf


def synthetic_scene(height=64, width=64, channels=1, angles=(0, 45, 90), seed=0, n_blobs=6):
    """Smooth polarized test target with values in [0, 1].

    Intensity is a sum of broad Gaussian blobs; each pixel carries a
    smoothly varying degree and angle of linear polarization, and the
    per-angle planes follow Malus' law.
    """
    rng = np.random.default_rng(seed)
    rr, cc = np.mgrid[0:height, 0:width].astype(np.float64)
    s0 = np.full((channels, height, width), 0.15)
    for _ in range(n_blobs):
        r0, c0 = rng.uniform(0, height), rng.uniform(0, width)
        sig = rng.uniform(0.12, 0.25) * min(height, width)
        bump = np.exp(-((rr - r0) ** 2 + (cc - c0) ** 2) / (2 * sig**2))
        tint = rng.uniform(0.4, 1.0, size=(channels, 1, 1))
        s0 += 0.5 * tint * bump
    s0 /= s0.max()
    dolp = 0.2 + 0.6 * (0.5 + 0.5 * np.sin(2 * np.pi * rr / height + rng.uniform(0, 2 * np.pi)))
    aolp = np.pi * (cc / width) + rng.uniform(0, np.pi)
    planes = []
    for a in angles:
        theta = np.deg2rad(a)
        planes.append(0.5 * s0 * (1 + dolp * np.cos(2 * (theta - aolp))))
    data = np.stack(planes)
    return PolarizationStack(data / max(1.0, data.max()), angles)
