import numpy as np
import pytest

from dwkpilot.clifford import BElement
from dwkpilot.psigrid import GridTooCoarseError, PsiGrid


def _field(nt=11, nq=21):
    t = np.linspace(0, 1, nt)
    q = np.linspace(-1, 1, nq)
    return PsiGrid.from_function((t, [0.0], [0.0], [0.0]), q,
                                 lambda X, Q: BElement(X[0] ** 2 * Q ** 3 + 0j, np.zeros((4,) + Q.shape)))


def test_derivatives_exact_for_quadratics():
    f = _field()
    T, Q = np.meshgrid(f.axes[0], f.q, indexing="ij")
    assert np.allclose(f.dx(f.psi, 0)[:, 0, 0, 0], 2 * T * Q**3)
    assert np.allclose(f.dx(f.psi, 1), 0)
    lap = f.lap_q(f.psi)[:, 0, 0, 0]
    assert np.allclose(lap[:, 1:-1], (6 * T**2 * Q)[:, 1:-1])


def test_resolution_guard():
    with pytest.raises(GridTooCoarseError):
        _field(nt=3).check_resolution()


def test_rejects_nonuniform_and_nonfinite():
    q = np.array([0.0, 0.1, 0.3, 0.4, 0.5])
    with pytest.raises(ValueError):
        PsiGrid(([0.0], [0.0], [0.0], [0.0]), q, np.zeros((1, 1, 1, 1, 5)), np.zeros((4, 1, 1, 1, 1, 5)))
    q = np.linspace(0, 1, 5)
    bad = np.zeros((1, 1, 1, 1, 5))
    bad[0, 0, 0, 0, 2] = np.nan
    with pytest.raises(ValueError):
        PsiGrid(([0.0], [0.0], [0.0], [0.0]), q, bad, np.zeros((4, 1, 1, 1, 1, 5)))


def test_interior_mask_and_slices():
    f = _field()
    m = f.interior_mask()
    assert not m[0].any() and not m[..., 0].any() and m[5, 0, 0, 0, 10]
    sl = f.time_slice(3)
    assert sl.shape == (1, 1, 1, 1, 21)
    assert np.allclose((f + f.scaled(-1)).psi, 0)
