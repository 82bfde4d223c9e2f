import numpy as np
import pytest

from polarlens.forward import ForwardOperator
from polarlens.simulate import MaskSpec, generate_stripe_mask
from polarlens.tensors import PolarizationMask, Psf

GRAY3 = (0, 45, 90)
COLOR4 = (0, 45, 90, 135)


def angles_for(P):
    return GRAY3 if P == 3 else COLOR4


def random_instance(rng, H, W, C, P, k=5, repeats=None):
    """Random non-negative PSF with a stripe mask of the given size."""
    if repeats is None:
        repeats = int(rng.integers(1, W // P + 1))
    mask = generate_stripe_mask(MaskSpec(H, W, angles_for(P), repeats))
    psf = Psf(rng.uniform(size=(C, k, k)))
    return ForwardOperator(psf, mask)


def striped_mask(H, W, P):
    """Columns cycle through the P angles (width-1 stripes)."""
    data = np.zeros((P, H, W))
    for j in range(W):
        data[j % P, :, j] = 1
    return PolarizationMask(data, angles_for(P))


def delta_psf(k=3, C=1):
    d = np.zeros((C, k, k))
    d[:, (k - 1) // 2, (k - 1) // 2] = 1.0
    return Psf(d)


def ones_mask(H, W):
    # single-angle mask labelled 0 deg; stacks built on it use raw arrays
    return PolarizationMask(np.ones((1, H, W)), (0,))


def small_oracle_instance():
    """8 x 8 x 1 x 3 instance with a sparse 5 x 5 PSF and partly negative data.

    The negative entries give the non-negative least-squares problem a
    strictly positive residual floor.
    """
    rng = np.random.default_rng(0)
    k = np.zeros((5, 5))
    idx = rng.choice(25, 4, replace=False)
    k.flat[idx] = rng.uniform(0.5, 1.0, 4)
    mask = generate_stripe_mask(MaskSpec(8, 8, GRAY3, 1))
    op = ForwardOperator(Psf(k[None]), mask)
    xs = rng.uniform(size=op.scene_shape)
    ys = op.forward(xs)
    y = ys + rng.normal(0.0, 0.5 * ys.mean(), size=ys.shape)
    return op, y


def dense_nnls_oracle(dense, y, iters=100_000):
    """Projected gradient on the dense matrix, step 1 / ||A||^2."""
    L = np.linalg.eigvalsh(dense.T @ dense)[-1]
    x = np.zeros(dense.shape[1])
    for _ in range(iters):
        x = np.maximum(x - dense.T @ (dense @ x - y) / L, 0.0)
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results, printed once at the end of the session
ACCEPTANCE = []


def record_acceptance(number, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2} {name}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
