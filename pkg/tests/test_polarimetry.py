import numpy as np
import pytest

from conftest import COLOR4, GRAY3
from polarlens.polarimetry import composite_rgb, composite_rgb_viz, stokes_from_intensities, wrap_aolp
from polarlens.tensors import PolarizationStack, read_png


def malus_stack(intensity, dolp, aolp_deg, shape=(1, 3, 3)):
    """Intensities behind ideal linear polarizers at 0/45/90/135 degrees."""
    planes = []
    for a in COLOR4:
        v = 0.5 * intensity * (1 + dolp * np.cos(2 * np.radians(a - aolp_deg)))
        planes.append(np.full(shape, v))
    return PolarizationStack(np.stack(planes), COLOR4)


def test_horizontal_polarizer():
    st = stokes_from_intensities(malus_stack(1.0, 1.0, 0.0))
    np.testing.assert_allclose(st.s0, 1.0, atol=1e-12)
    np.testing.assert_allclose(st.dolp, 1.0, atol=1e-12)
    np.testing.assert_allclose(st.aolp, 0.0, atol=1e-12)


def test_unpolarized():
    st = stokes_from_intensities(malus_stack(0.8, 0.0, 0.0))
    np.testing.assert_allclose(st.dolp, 0.0, atol=1e-12)
    np.testing.assert_allclose(st.s1, 0.0, atol=1e-12)
    np.testing.assert_allclose(st.s2, 0.0, atol=1e-12)


def test_diagonal_polarizer():
    st = stokes_from_intensities(malus_stack(1.0, 1.0, 45.0))
    np.testing.assert_allclose(st.dolp, 1.0, atol=1e-12)
    np.testing.assert_allclose(st.aolp, 45.0, atol=1e-12)


def test_partial_polarization_sweep():
    for aolp in np.linspace(-89, 89, 37):
        for dolp in (0.1, 0.5, 0.9):
            st = stokes_from_intensities(malus_stack(0.7, dolp, aolp))
            np.testing.assert_allclose(st.dolp, dolp, atol=1e-12)
            np.testing.assert_allclose(st.aolp, aolp, atol=1e-9)


def test_degenerate_pixels():
    d = np.full((4, 1, 2, 2), 0.3)
    d[:, 0, 0, 0] = 0.0
    d[:, 0, 1, 1] = [1e-9, 0, 0, 0]
    st = stokes_from_intensities(PolarizationStack(d, COLOR4))
    assert st.degenerate[0].tolist() == [[True, False], [False, True]]
    assert st.dolp[0, 0, 0] == 0 and st.aolp[0, 1, 1] == 0
    assert np.isfinite(st.dolp).all() and np.isfinite(st.aolp).all()


def test_swapping_orthogonal_planes_rotates_aolp(rng):
    d = rng.uniform(0.1, 1.0, size=(4, 1, 6, 6))
    a = stokes_from_intensities(PolarizationStack(d, COLOR4))
    b = stokes_from_intensities(PolarizationStack(d[[2, 3, 0, 1]], COLOR4))
    np.testing.assert_allclose(b.dolp, a.dolp, atol=1e-12)
    np.testing.assert_allclose(wrap_aolp(b.aolp - a.aolp - 90.0), 0.0, atol=1e-9)


def test_stokes_linear(rng):
    d1 = rng.uniform(size=(4, 3, 4, 4))
    d2 = rng.uniform(size=(4, 3, 4, 4))
    f = lambda d: stokes_from_intensities(PolarizationStack(d, COLOR4))  # noqa: E731
    for name in ("s0", "s1", "s2"):
        lhs = getattr(f(2 * d1 + 3 * d2), name)
        rhs = 2 * getattr(f(d1), name) + 3 * getattr(f(d2), name)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_dolp_range_and_aolp_wrap(rng):
    st = stokes_from_intensities(PolarizationStack(rng.uniform(size=(4, 3, 8, 8)), COLOR4))
    assert st.dolp.min() >= 0 and st.dolp.max() <= 1
    assert st.aolp.min() >= -90 and st.aolp.max() < 90
    assert wrap_aolp(90.0) == -90.0 and wrap_aolp(-90.0) == -90.0


def test_stokes_needs_four_angles(rng):
    with pytest.raises(ValueError):
        stokes_from_intensities(PolarizationStack(rng.uniform(size=(3, 1, 4, 4)), GRAY3))


def test_composite_pure_red():
    d = np.zeros((3, 1, 2, 2))
    d[0] = 1.0
    img = composite_rgb(PolarizationStack(d, GRAY3))
    assert img.shape == (2, 2, 3)
    assert (img[..., 0] == 1).all() and not img[..., 1:].any()


def test_composite_equal_planes_gray(rng):
    v = rng.uniform(size=(1, 5, 5))
    img = composite_rgb(PolarizationStack(np.stack([v] * 4), COLOR4))
    np.testing.assert_array_equal(img[..., 0], img[..., 1])
    np.testing.assert_array_equal(img[..., 1], img[..., 2])


def test_composite_png_half_code(tmp_path):
    d = np.full((3, 1, 3, 4), 0.5)
    d[2] = 1.7  # clamped
    composite_rgb_viz(PolarizationStack(d, GRAY3), tmp_path / "c.png")
    codes, depth = read_png(tmp_path / "c.png", raw=True)
    assert depth == 8 and codes.shape == (3, 4, 3)
    assert (codes[..., 0] == 128).all() and (codes[..., 2] == 255).all()


def test_composite_rejects_color(rng):
    with pytest.raises(ValueError):
        composite_rgb(PolarizationStack(rng.uniform(size=(3, 3, 2, 2)), GRAY3))
