import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwkpilot import quantum as qm
from dwkpilot import riesz as rz
from dwkpilot.clifford import METRIC, PolarData, b_from_polar

LAM = 0.1


def _polar(rho, zeta, beta, axis=1):
    u = np.zeros(4)
    u[0], u[axis] = np.cosh(beta), np.sinh(beta)
    return PolarData(rho, zeta, u)


@settings(max_examples=60)
@given(st.floats(0.01, 3), st.floats(0, 2), st.floats(-2, 2), st.integers(1, 3))
def test_trace_form_matches_polar_closed_form(rho, zeta, beta, axis):
    p = _polar(rho, zeta, beta, axis)
    t_b = rz.riesz_from_b(b_from_polar(p, LAM)).t
    t_p = rz.riesz_from_polar(p, LAM).t
    assert np.max(np.abs(t_b - t_p)) <= 1e-10 * max(1.0, np.max(np.abs(t_p)))


def test_riesz_tensor_is_symmetric(rng):
    p = rz.random_polar_data(rng, 50, LAM)
    t = rz.riesz_from_polar(p, LAM).t
    assert np.allclose(t, np.swapaxes(t, 0, 1))


def test_eigen_relations(rng):
    p = rz.random_polar_data(rng, 200, LAM)
    t = rz.riesz_from_polar(p, LAM)
    assert np.max(np.abs(t.apply(p.u) - p.rho * p.u)) < 1e-12
    # spacelike e orthogonal to u along x^3 in u's rest frame
    u0 = _polar(1.3, 0.37, 0.8)
    e = np.array([0.0, 0.0, 0.0, 1.0])
    t1 = rz.riesz_from_polar(u0, LAM)
    assert np.allclose(t1.apply(e), 1.3 * np.cos(2 * 0.37 / LAM) * e, atol=1e-13)


def test_inverse(rng):
    p = _polar(0.7, 0.2, 0.5)
    inv = rz.riesz_inverse(p, LAM)
    assert np.allclose(rz.riesz_from_polar(p, LAM).mixed @ inv, np.eye(4), atol=1e-12)


def test_inverse_singular_slice():
    with pytest.raises(rz.SingularTensorError):
        rz.riesz_inverse(_polar(1.0, np.pi * LAM / 4, 0.0), LAM)


def test_dec_holds_for_polar_tensors(rng):
    p = rz.random_polar_data(rng, 5, LAM)
    for i in range(5):
        t = rz.riesz_from_polar(PolarData(p.rho[i], p.zeta[i], p.u[:, i]), LAM)
        rep = rz.dec_check(t, trials=20_000, seed=i)
        assert rep.passed, rep.worst_violation


def test_dec_detects_negative_energy():
    bad = rz.RieszTensor(-np.diag([1.0, 0.5, 0.5, 0.5]) @ np.eye(4))
    assert not rz.dec_check(bad, trials=1000).passed
    assert rz.violates_dec_with(bad, np.array([1.0, 0, 0, 0]))
    # spacelike flux: T y outside the light cone
    t = rz.RieszTensor(np.array([[1, 2, 0, 0], [2, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], float))
    assert rz.violates_dec_with(t, np.array([1.0, 0, 0, 0]))


def _pw(t_axis, q, lam=LAM, n=(1, 0, 0, 0), s_axis=(0.0,)):
    return qm.gaussian_planewave_grid((t_axis, s_axis, [0.0], [0.0]), q, n, 1.0, 1.0, lam)


def test_k_current_matrix_form_matches_components():
    f = _pw(np.linspace(0, 0.2, 5), np.linspace(-2, 3, 101))
    kf = rz.k_current_field(f, LAM).k
    for at in [(2, 0, 0, 0, 50), (1, 0, 0, 0, 30)]:
        km = rz.k_current(f, LAM, at).k
        assert np.allclose(km[0], kf[(0, slice(None)) + at], atol=1e-12)


def test_k_current_rejects_boundary():
    f = _pw(np.linspace(0, 0.2, 5), np.linspace(-2, 3, 101))
    with pytest.raises(IndexError):
        rz.k_current(f, LAM, (0, 0, 0, 0, 0))


def test_conservation_second_order():
    res = []
    for h in (0.04, 0.02):
        f = _pw(np.arange(0, 1 + h / 2, h), np.arange(-4, 4 + h / 2, h), lam=0.4)
        r = rz.conservation_residual(f, 0.4)
        res.append(np.max(np.abs(r[:, f.interior_mask()])))
    assert abs(np.log2(res[0] / res[1]) - 2) < 0.2


def test_current_divergence_small_for_constant_x():
    h = 0.01
    f = _pw(np.arange(0, 0.5 + h / 2, h), np.arange(-4, 4 + h / 2, h), lam=0.4)
    x = rz.normalize_x(np.array([2.0, 0.3, 0, 0]))
    div = rz.current_divergence(f, 0.4, x)
    assert np.max(np.abs(div[f.interior_mask()])) < 1e-3


def test_normalize_x():
    x = rz.normalize_x(np.array([2.0, 1.0, 0, 0]))
    assert np.isclose(x.x_hat @ METRIC @ x.x_hat, 1)
    assert np.isclose(x.norm, 1 / np.sqrt(3))
    with pytest.raises(rz.NonTimelikeError):
        rz.normalize_x(np.array([1.0, 1.0, 0, 0]))
    with pytest.raises(rz.NonTimelikeError):
        rz.normalize_x(np.array([-2.0, 0, 0, 0]))


def test_uncut_plane_wave_not_integrable():
    f = _pw([0.0], np.arange(-3, 3.001, 0.01), s_axis=np.linspace(-1, 1, 9))
    with pytest.raises(rz.NotSquareIntegrableError):
        rz.xtilde_from_slice(f)
    with pytest.raises(rz.NotSquareIntegrableError):
        rz.xtilde_from_slice(_pw([0.0], np.arange(-3, 3.001, 0.01)))


def test_cutoff_slice_gives_wave_rest_frame():
    q = np.arange(-4.0, 4.0 + 0.0125, 0.025)
    psi0 = qm.analytic_gaussian_psi(0.0, q, 1.0, 1.0, LAM)
    f = qm.cutoff_planewave(psi0, qm.Potential.harmonic(1.0), LAM, q, 3.0, [0.0, 1.0])
    x0, x1 = (rz.xtilde_from_slice(f.time_slice(i)) for i in range(2))
    assert np.allclose(x0.x_hat, [1, 0, 0, 0], atol=1e-8)
    assert np.allclose(x0.x_tilde, x1.x_tilde, rtol=1e-10, atol=1e-12)
    sl = f.time_slice(0)
    t = rz.riesz_field(sl).t
    assert np.isclose(rz.slice_integral(t[0, 0], sl), 1 / x0.norm, rtol=1e-12)


@settings(max_examples=80)
@given(st.floats(0.01, 3), st.floats(0, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_varrho_at_least_rho(rho, zeta, beta, gamma):
    p = _polar(rho, zeta, beta)
    xh = np.array([np.cosh(gamma), 0, np.sinh(gamma), 0])
    assert rz.varrho_gap(p, LAM, xh) >= -1e-12 * max(1.0, rho * np.cosh(beta) ** 2 * np.cosh(gamma) ** 2)


def test_varrho_equality_cases(rng):
    p = rz.random_polar_data(rng, 100, LAM)
    assert np.allclose(rz.varrho(p, LAM, p.u), p.rho, rtol=0, atol=1e-12)
    p0 = PolarData(p.rho, np.zeros(100), p.u)
    assert np.allclose(rz.varrho(p0, LAM, np.array([1.0, 0, 0, 0])), p.rho, atol=1e-12)


def test_varrho_rejects_spacelike():
    with pytest.raises(rz.NonTimelikeError):
        rz.varrho(_polar(1.0, 0.1, 0.0), LAM, np.array([0.0, 1, 0, 0]))


def test_currents_from_x():
    f = _pw(np.linspace(0, 0.2, 5), np.linspace(-2, 3, 101))
    x = rz.normalize_x(np.array([1.0, 0, 0, 0]))
    cur = rz.currents_and_y(rz.riesz_field(f), rz.k_current_field(f, LAM), x)
    assert cur.y.shape[0] == 5
    assert np.allclose(cur.j[0], rz.riesz_field(f).t[0, 0] * x.x[0])
