"""
PSNR / SSIM and their per-plane aggregation over a polarization stack.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

PSNR_CAP = 100.0
SSIM_SIGMA = 1.5
SSIM_WIN = 11
SSIM_K1 = 0.01
SSIM_K2 = 0.03
CHANNEL_NAMES = {1: ("gray",), 3: ("R", "G", "B")}


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b, peak=1.0):
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    a, b = _pair(a, b)
    if not peak > 0:
        raise ValueError("peak must be > 0")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(peak**2 / mse))


def capped_psnr(a, b, peak=1.0):
    return min(psnr(a, b, peak), PSNR_CAP)


def _gauss(img):
    # truncate 3.5 sigma -> radius 5 -> 11 x 11 support; 'reflect' is symmetric padding
    return ndimage.gaussian_filter(img, SSIM_SIGMA, mode="reflect", truncate=3.5)


def ssim_map(a, b, peak=1.0):
    a, b = _pair(a, b)
    if a.ndim != 2:
        raise ValueError("SSIM works on 2-D planes")
    if min(a.shape) < SSIM_WIN:
        raise ValueError(f"image smaller than the {SSIM_WIN}x{SSIM_WIN} window")
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mu_a = _gauss(a)
    mu_b = _gauss(b)
    var_a = _gauss(a * a) - mu_a * mu_a
    var_b = _gauss(b * b) - mu_b * mu_b
    cov = _gauss(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, peak=1.0):
    """Mean SSIM with an 11 x 11 Gaussian window (sigma 1.5)."""
    return float(np.mean(ssim_map(a, b, peak)))


@dataclass
class MetricReport:
    """Per-plane and aggregate PSNR / SSIM.  Aggregates are plain means."""

    planes: list = field(default_factory=list)  # (label, psnr_db, ssim)
    peak: float = 1.0

    @property
    def psnr(self):
        return float(np.mean([p for _, p, _ in self.planes]))

    @property
    def ssim(self):
        return float(np.mean([s for _, _, s in self.planes]))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["plane", "psnr_db", "ssim"])
            for label, p, s in self.planes:
                w.writerow([label, repr(float(p)), repr(float(s))])
            w.writerow(["aggregate", repr(self.psnr), repr(self.ssim)])


def plane_label(angle, channel, n_channels):
    return f"{angle}deg_{CHANNEL_NAMES[n_channels][channel]}"


def evaluate_stack(pred, gt, peak=1.0):
    """Score every (angle, channel) plane and average.

    PSNR of identical planes enters the average as the 100 dB cap.
    """
    if pred.shape != gt.shape:
        raise ValueError(f"dimension mismatch: {pred.shape} vs {gt.shape}")
    if pred.angles != gt.angles:
        raise ValueError(f"angle mismatch: {pred.angles} vs {gt.angles}")
    report = MetricReport(peak=peak)
    P, C = pred.shape[:2]
    for p in range(P):
        for c in range(C):
            a, b = pred.data[p, c], gt.data[p, c]
            report.planes.append(
                (plane_label(pred.angles[p], c, C), capped_psnr(a, b, peak), ssim(a, b, peak))
            )
    return report
