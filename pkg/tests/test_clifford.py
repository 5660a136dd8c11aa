import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwkpilot.clifford import (
    METRIC, BElement, PolarData, anticommutator, b_from_polar, b_to_matrix, build_gamma_basis,
    dirac_adjoint, lower, matrix_to_b, minkowski_dot, pairing_density, scalar_part,
)

finite = st.floats(-3, 3, allow_nan=False)


def test_anticommutators_are_exact():
    g = build_gamma_basis()
    for m in range(4):
        for n in range(4):
            assert np.array_equal(anticommutator(g.gamma[m], g.gamma[n]), 2 * METRIC[m, n] * g.identity)


def test_gammas_self_adjoint_and_traceless():
    g = build_gamma_basis()
    for m in range(4):
        assert np.array_equal(dirac_adjoint(g.gamma[m]), g.gamma[m])
        assert scalar_part(g.gamma[m]) == 0


def test_gamma5_squares_to_identity():
    g = build_gamma_basis()
    assert np.allclose(g.gamma5 @ g.gamma5, g.identity)
    for m in range(4):
        assert np.allclose(anticommutator(g.gamma5, g.gamma[m]), 0)


def test_basis_is_read_only():
    g = build_gamma_basis()
    with pytest.raises(ValueError):
        g.gamma[0, 0, 0] = 2


@given(st.lists(finite, min_size=10, max_size=10))
def test_matrix_roundtrip(vals):
    b = BElement(complex(vals[0], vals[1]), np.array(vals[2:6]) + 1j * np.array(vals[6:10]))
    back, resid = matrix_to_b(b_to_matrix(b))
    assert resid < 1e-12
    assert np.allclose(back.psi, b.psi) and np.allclose(back.psi_mu, b.psi_mu)


def test_matrix_to_b_reports_bivector_residual():
    g = build_gamma_basis()
    _, resid = matrix_to_b(g.gamma[1] @ g.gamma[2])
    assert resid > 1


@settings(max_examples=50)
@given(st.floats(0.01, 4), st.floats(0, 10), st.floats(-2, 2), st.floats(0.05, 1))
def test_polar_form_components(rho, zeta, beta, lam):
    u = np.array([np.cosh(beta), np.sinh(beta), 0, 0])
    b = b_from_polar(PolarData(rho, zeta, u), lam)
    assert np.isclose(b.psi, np.sqrt(rho) * np.cos(zeta / lam))
    assert np.allclose(b.psi_mu, 1j * np.sqrt(rho) * np.sin(zeta / lam) * lower(u))
    # |psi|^2 + psi_mu psi^mu* = rho for every polar point
    norm = abs(b.psi) ** 2 + np.real(np.sum(b.psi_mu * np.conj(lower(b.psi_mu))))
    assert np.isclose(norm, rho)


def test_polar_rejects_bad_u():
    with pytest.raises(ValueError):
        PolarData(1.0, 0.1, np.array([1.0, 0.5, 0, 0]))
    with pytest.raises(ValueError):
        PolarData(1.0, 0.1, np.array([-1.0, 0, 0, 0]))
    with pytest.raises(ValueError):
        PolarData(-1.0, 0.1, np.array([1.0, 0, 0, 0]))


def test_minkowski_dot_signature():
    assert minkowski_dot(np.array([2.0, 1, 0, 0]), np.array([2.0, 1, 0, 0])) == 3


def test_pairing_density_is_scalar_part_of_product(rng):
    a = BElement(complex(*rng.normal(size=2)), rng.normal(size=4) + 1j * rng.normal(size=4))
    b = BElement(complex(*rng.normal(size=2)), rng.normal(size=4) + 1j * rng.normal(size=4))
    direct = scalar_part(dirac_adjoint(b_to_matrix(b)) @ b_to_matrix(a))
    assert np.isclose(pairing_density(a, b), direct)
