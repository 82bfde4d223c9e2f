"""
Homography from point correspondences (normalized DLT) and inverse warping.
"""

import numpy as np


def hartley_normalization(pts):
    """Similarity T moving the centroid to 0 and the mean distance to sqrt(2)."""
    pts = np.asarray(pts, dtype=np.float64)
    centroid = pts.mean(axis=0)
    dist = np.linalg.norm(pts - centroid, axis=1).mean()
    if dist == 0:
        raise ValueError("degenerate configuration: all points coincide")
    s = np.sqrt(2.0) / dist
    return np.array([[s, 0, -s * centroid[0]], [0, s, -s * centroid[1]], [0, 0, 1.0]])


def _homogeneous(pts):
    pts = np.asarray(pts, dtype=np.float64)
    return np.column_stack([pts, np.ones(len(pts))])


def apply_homography(h, pts):
    """Map an (N, 2) array of (x, y) points through ``h``."""
    q = _homogeneous(pts) @ np.asarray(h).T
    return q[:, :2] / q[:, 2:3]


def estimate_homography(src, dst):
    """3 x 3 homography with dst ~ H @ src, bottom-right entry 1.

    Parameters
    ----------
    src, dst : array_like, shape (N, 2)
        Matching (x, y) points, N >= 4.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise ValueError("src and dst must both be (N, 2) arrays")
    n = len(src)
    if n < 4:
        raise ValueError(f"need at least 4 correspondences, got {n}")
    t_src = hartley_normalization(src)
    t_dst = hartley_normalization(dst)
    ps = _homogeneous(src) @ t_src.T
    pd = _homogeneous(dst) @ t_dst.T

    rows = np.zeros((2 * n, 9))
    for i, ((x, y, w), (u, v, s)) in enumerate(zip(ps, pd)):
        rows[2 * i] = [0, 0, 0, -s * x, -s * y, -s * w, v * x, v * y, v * w]
        rows[2 * i + 1] = [s * x, s * y, s * w, 0, 0, 0, -u * x, -u * y, -u * w]
    _, sv, vt = np.linalg.svd(rows)
    if sv[7] <= 1e-10 * sv[0]:
        raise ValueError("degenerate configuration: constraint matrix is rank deficient")
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.solve(t_dst, hn @ t_src)
    if abs(h[2, 2]) < 1e-15:
        raise ValueError("degenerate homography: bottom-right entry vanishes")
    h = h / h[2, 2]
    if abs(np.linalg.det(h)) <= 1e-12:
        raise ValueError("degenerate homography: singular matrix")
    return h


def warp_image(img, h, out_dims):
    """Inverse-map ``img`` through ``h`` onto an ``out_dims`` = (H, W) grid.

    Output pixel (row r, col c) samples the source at h^-1 (c, r, 1) with
    bilinear interpolation.  Samples outside the source are 0.

    Returns
    -------
    warped : ndarray, shape out_dims (+ trailing channel axis if ``img`` has one)
    coverage : bool ndarray, shape out_dims
    """
    img = np.asarray(img, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if abs(np.linalg.det(h)) <= 1e-12:
        raise ValueError("singular homography")
    hinv = np.linalg.inv(h)
    H_out, W_out = out_dims
    H_in, W_in = img.shape[:2]
    rr, cc = np.mgrid[0:H_out, 0:W_out].astype(np.float64)
    pts = np.column_stack([cc.ravel(), rr.ravel()])
    src = apply_homography(hinv, pts)
    sx = src[:, 0].reshape(H_out, W_out)
    sy = src[:, 1].reshape(H_out, W_out)
    eps = 1e-9
    coverage = (sx >= -eps) & (sx <= W_in - 1 + eps) & (sy >= -eps) & (sy <= H_in - 1 + eps)
    sx = np.clip(sx, 0, W_in - 1)
    sy = np.clip(sy, 0, H_in - 1)
    x0 = np.floor(sx).astype(int)
    y0 = np.floor(sy).astype(int)
    fx = sx - x0
    fy = sy - y0
    x1 = np.minimum(x0 + 1, W_in - 1)
    y1 = np.minimum(y0 + 1, H_in - 1)
    if img.ndim == 3:
        fx, fy = fx[..., None], fy[..., None]
    out = (
        (1 - fy) * ((1 - fx) * img[y0, x0] + fx * img[y0, x1])
        + fy * ((1 - fx) * img[y1, x0] + fx * img[y1, x1])
    )
    cov = coverage[..., None] if img.ndim == 3 else coverage
    return np.where(cov, out, 0.0), coverage


def read_correspondences(path):
    """Parse ``sx sy dx dy`` lines; '#' starts a comment."""
    src, dst = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 'sx sy dx dy', got {line!r}")
            sx, sy, dx, dy = map(float, parts)
            src.append((sx, sy))
            dst.append((dx, dy))
    return np.array(src), np.array(dst)
