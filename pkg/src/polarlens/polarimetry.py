"""
Linear Stokes parameters, DoLP / AoLP, and the angle-to-RGB composite.
"""

from dataclasses import dataclass

import numpy as np

from .tensors import write_png

DEGENERATE_S0 = 1e-8


@dataclass(frozen=True)
class StokesMap:
    """Per-channel Stokes images, each of shape (C, H, W).

    ``aolp`` is in degrees within [-90, 90).  ``degenerate`` marks pixels
    with s0 <= 1e-8, where dolp and aolp are set to 0.
    """

    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    dolp: np.ndarray
    aolp: np.ndarray
    degenerate: np.ndarray

    def planes(self):
        return {"s0": self.s0, "s1": self.s1, "s2": self.s2, "dolp": self.dolp, "aolp": self.aolp}


def wrap_aolp(deg):
    """Wrap angles in degrees into [-90, 90)."""
    return np.mod(np.asarray(deg) + 90.0, 180.0) - 90.0


def stokes_from_intensities(x):
    """Stokes components from a four-angle stack.

    s0 is the half-sum of all four planes, s1 = I0 - I90, s2 = I45 - I135.
    """
    if x.angles != (0, 45, 90, 135):
        raise ValueError(f"Stokes estimation needs angles (0, 45, 90, 135), got {x.angles}")
    i0, i45, i90, i135 = x.data
    s0 = 0.5 * (i0 + i45 + i90 + i135)
    s1 = i0 - i90
    s2 = i45 - i135
    degenerate = s0 <= DEGENERATE_S0
    safe = np.where(degenerate, 1.0, s0)
    # noisy reconstructions can give |s12| slightly above s0
    dolp = np.clip(np.hypot(s1, s2) / safe, 0.0, 1.0)
    aolp = wrap_aolp(0.5 * np.degrees(np.arctan2(s2, s1)))
    dolp = np.where(degenerate, 0.0, dolp)
    aolp = np.where(degenerate, 0.0, aolp)
    return StokesMap(s0, s1, s2, dolp, aolp, degenerate)


def composite_rgb(x):
    """H x W x 3 image with I0 -> R, I45 -> G, I90 -> B, clamped to [0, 1]."""
    if x.channels != 1:
        raise ValueError("composite needs a grayscale stack (C = 1)")
    try:
        planes = [x.plane(a) for a in (0, 45, 90)]
    except ValueError:
        raise ValueError(f"missing required angles (0, 45, 90) in {x.angles}") from None
    return np.clip(np.stack(planes, axis=-1), 0.0, 1.0)


def composite_rgb_viz(x, out):
    """Write the 8-bit RGB composite of ``x`` to ``out``."""
    write_png(out, composite_rgb(x), bit_depth=8)
