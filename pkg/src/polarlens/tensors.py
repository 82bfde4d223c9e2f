"""
Core tensor types and on-disk formats.

Arrays are stored in (angle, channel, row, column) order so that every
(angle, channel) plane is a contiguous 2-D block.  PTF files carry a
4-byte magic, a little-endian uint32 rank, the dims, and a float32
payload.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PTF_MAGIC = b"PTF1"
ANGLE_SETS = ((0, 45, 90), (0, 45, 90, 135))


class FormatError(ValueError):
    """Raised for malformed tensor or image files."""


def _frozen(arr, dtype=np.float64):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass(frozen=True)
class PolarizationStack:
    """Multi-angle intensity tensor of shape (P, C, H, W).

    Parameters
    ----------
    data : array_like
        Intensities ordered (angle, channel, row, column).
    angles : tuple of int
        Polarizer angles in degrees, one per leading slice.
    nonneg : bool
        If True, negative values are clamped to zero at construction.
    """

    data: np.ndarray
    angles: tuple = (0, 45, 90, 135)
    nonneg: bool = False

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 4:
            raise ValueError(f"stack must be 4-D (P, C, H, W), got shape {data.shape}")
        angles = tuple(int(a) for a in self.angles)
        if angles not in ANGLE_SETS:
            raise ValueError(f"angles must be one of {ANGLE_SETS}, got {angles}")
        P, C, H, W = data.shape
        if P != len(angles):
            raise ValueError(f"{P} angle planes but {len(angles)} angle labels")
        if C not in (1, 3):
            raise ValueError(f"channel count must be 1 or 3, got {C}")
        if H == 0 or W == 0:
            raise ValueError("zero-sized spatial dims")
        _check_finite(data, "stack")
        if self.nonneg:
            data = np.maximum(data, 0.0)
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "angles", angles)

    @property
    def shape(self):
        return self.data.shape

    @property
    def n_angles(self):
        return self.data.shape[0]

    @property
    def channels(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[2]

    @property
    def width(self):
        return self.data.shape[3]

    def plane(self, angle, channel=0):
        """Return the H x W plane for a polarizer angle given in degrees."""
        return self.data[self.angles.index(int(angle)), channel]


@dataclass(frozen=True)
class Psf:
    """Per-channel point-spread function, shape (C, Hk, Wk)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[None]
        if data.ndim != 3 or 0 in data.shape:
            raise ValueError(f"PSF must be (C, Hk, Wk), got shape {data.shape}")
        _check_finite(data, "PSF")
        if np.any(data < 0):
            raise ValueError("PSF has negative values")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def channels(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    def to_grayscale(self):
        return Psf(self.data.mean(axis=0, keepdims=True))


@dataclass(frozen=True)
class PolarizationMask:
    """Binary angle selector, shape (P, H, W); every pixel picks one angle."""

    data: np.ndarray
    angles: tuple = (0, 45, 90, 135)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ValueError(f"mask must be (P, H, W), got shape {data.shape}")
        if not np.all((data == 0) | (data == 1)):
            raise ValueError("mask entries must be 0 or 1")
        if not np.all(data.sum(axis=0) == 1):
            raise ValueError("mask is not a partition: some pixel selects != 1 angle")
        angles = tuple(int(a) for a in self.angles)
        if len(angles) != data.shape[0]:
            raise ValueError(f"{data.shape[0]} mask planes but {len(angles)} angle labels")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ValueError("mask angles must be strictly increasing")
        object.__setattr__(self, "data", _frozen(data, np.float64))
        object.__setattr__(self, "angles", angles)

    @property
    def shape(self):
        return self.data.shape

    def angle_index(self):
        """Per-pixel index of the selected angle, shape (H, W)."""
        return np.argmax(self.data, axis=0)

    def checksum(self):
        """Order-sensitive integer digest of the angle assignment."""
        idx = self.angle_index().astype(np.int64).ravel()
        weights = np.arange(1, idx.size + 1, dtype=np.int64)
        return int(np.sum((idx + 1) * weights) % (2**31 - 1))


@dataclass(frozen=True)
class Measurement:
    """Sensor image, shape (C, H, W)."""

    data: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[None]
        if data.ndim != 3 or 0 in data.shape:
            raise ValueError(f"measurement must be (C, H, W), got shape {data.shape}")
        _check_finite(data, "measurement")
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValueError("noise_sigma must be finite and >= 0")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "noise_sigma", float(self.noise_sigma))

    @property
    def shape(self):
        return self.data.shape

    @property
    def channels(self):
        return self.data.shape[0]


def normalize_psf(psf):
    """Scale each channel of ``psf`` to unit sum.

    Raises
    ------
    ValueError
        If any channel sums to zero ("degenerate PSF").
    """
    data = psf.data if isinstance(psf, Psf) else Psf(psf).data
    sums = data.sum(axis=(1, 2), keepdims=True)
    if np.any(sums <= 0):
        raise ValueError("degenerate PSF: a channel has zero total mass")
    return Psf(data / sums)


# --------------------------------------------------------------------------
# PTF binary format


def save_tensor(t, path):
    """Write ``t`` (array or core tensor type) to ``path`` in PTF format.

    The payload is float32, so only float32 inputs round-trip bit-exactly.
    """
    arr = np.asarray(getattr(t, "data", t))
    if arr.ndim == 0:
        raise ValueError("zero-dimensional tensor")
    if any(d > 2**32 - 1 for d in arr.shape):
        raise ValueError("dimension overflow: dims must fit in uint32")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains non-finite values")
    header = PTF_MAGIC + struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape)
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def load_tensor(path):
    """Read a PTF file and return a float32 ndarray."""
    raw = Path(path).read_bytes()
    if raw[:4] != PTF_MAGIC:
        raise FormatError(f"{path}: bad magic")
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated header")
    (ndim,) = struct.unpack_from("<I", raw, 4)
    if ndim == 0:
        raise FormatError(f"{path}: zero-dimensional tensor")
    head = 8 + 4 * ndim
    if len(raw) < head:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{ndim}I", raw, 8)
    count = int(np.prod(dims, dtype=np.int64))
    body = raw[head:]
    if len(body) < 4 * count:
        raise FormatError(f"{path}: truncated payload")
    if len(body) > 4 * count:
        raise FormatError(f"{path}: trailing bytes after payload")
    arr = np.frombuffer(body, dtype="<f4").reshape(dims).astype(np.float32)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: non-finite values in payload")
    return arr


def load_stack(path, angles=None):
    """Load a (P, C, H, W) PTF file as a PolarizationStack."""
    arr = load_tensor(path)
    if arr.ndim != 4:
        raise FormatError(f"{path}: expected 4-D stack, got dims {arr.shape}")
    if angles is None:
        angles = ANGLE_SETS[0] if arr.shape[0] == 3 else ANGLE_SETS[1]
    return PolarizationStack(arr, angles)


def load_psf(path):
    arr = load_tensor(path)
    if arr.ndim not in (2, 3):
        raise FormatError(f"{path}: expected 2-D or 3-D PSF, got dims {arr.shape}")
    return Psf(arr)


def load_mask(path, angles=None):
    arr = load_tensor(path)
    if arr.ndim != 3:
        raise FormatError(f"{path}: expected (P, H, W) mask, got dims {arr.shape}")
    if angles is None:
        angles = ANGLE_SETS[0] if arr.shape[0] == 3 else ANGLE_SETS[1]
    return PolarizationMask(arr, angles)


def load_measurement(path, noise_sigma=0.0):
    arr = load_tensor(path)
    if arr.ndim not in (2, 3):
        raise FormatError(f"{path}: expected (C, H, W) measurement, got dims {arr.shape}")
    return Measurement(arr, noise_sigma)


# --------------------------------------------------------------------------
# PNG import / export


def read_png(path, raw=False):
    """Read an 8- or 16-bit PNG.

    Returns an (H, W) or (H, W, 3) array in RGB order.  With ``raw=True``
    the integer codes are returned together with the bit depth; otherwise
    values are divided by the maximum code value into [0, 1].
    """
    import cv2

    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise FormatError(f"{path}: unreadable image")
    if img.dtype == np.uint8:
        depth = 8
    elif img.dtype == np.uint16:
        depth = 16
    else:
        raise FormatError(f"{path}: unsupported sample type {img.dtype}")
    if img.ndim == 3:
        if img.shape[2] == 4:
            img = img[:, :, :3]
        img = img[:, :, ::-1]
    img = np.ascontiguousarray(img)
    if raw:
        return img, depth
    return img.astype(np.float64) / (2**depth - 1)


def to_codes(img, bit_depth=8):
    """Clamp to [0, 1] and quantize with round-half-up."""
    top = 2**bit_depth - 1
    vals = np.floor(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * top + 0.5)
    return vals.astype(np.uint8 if bit_depth == 8 else np.uint16)


def write_png(path, img, bit_depth=8):
    """Write an (H, W) or (H, W, 3) image with values in [0, 1]."""
    import cv2

    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    codes = to_codes(img, bit_depth)
    if codes.ndim == 3:
        codes = np.ascontiguousarray(codes[:, :, ::-1])
    if not cv2.imwrite(str(path), codes):
        raise OSError(f"failed to write {path}")
