import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dwkpilot import guiding as gd
from dwkpilot import quantum as qm
from dwkpilot import riesz as rz
from dwkpilot.classical import OutOfGridError
from dwkpilot.clifford import METRIC

W, LAM, Q0 = 1.0, 0.1, 1.0
V = qm.Potential.harmonic(W)


def dfq(s, q):
    return -W * Q0 * np.sin(W * s) + 0.0 * q


@settings(max_examples=30)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_boost_to_rest(a, b, c):
    v = np.array([a, b, c])
    x_hat = np.concatenate([[np.sqrt(1 + v @ v)], v])
    L = gd.boost_to_rest(x_hat)
    assert np.allclose(L @ x_hat, [1, 0, 0, 0], atol=1e-9)
    assert np.allclose(L.T @ METRIC @ L, METRIC, atol=1e-9)


def test_boost_rejects_spacelike():
    with pytest.raises(rz.NonTimelikeError):
        gd.boost_to_rest([0.0, 1.0, 0, 0])


def _pw_grid(d=0.01, n=(1, 0, 0, 0), s_axis=(0.0,), t_max=1.0):
    ax = (np.arange(0, t_max + d / 2, d), s_axis, [0.0], [0.0])
    return qm.gaussian_planewave_grid(ax, np.arange(-3, 3 + d / 2, d), n, W, Q0, LAM)


def test_plane_wave_coefficients_reduce_to_density_and_velocity():
    f = _pw_grid()
    c = gd.guiding_coefficients(f, LAM, rz.normalize_x(np.array([1.0, 0, 0, 0])))
    S, Q = np.meshgrid(f.axes[0], f.q, indexing="ij")
    g = qm.analytic_gaussian_profile(S, Q, W, Q0, LAM)[1]
    assert np.allclose(c.a[:, 0, 0, 0], g, atol=1e-12)
    assert np.max(np.abs(c.b)) < 1e-14
    # C = -g d_q f up to the q-differencing of K
    inner = slice(1, -1)
    assert np.max(np.abs(c.c[0][:, 0, 0, 0][:, inner] + (g * dfq(S, Q))[:, inner])) < 5e-3


def test_boosted_plane_wave_in_own_frame_has_no_drift():
    n = (np.cosh(0.3), np.sinh(0.3), 0, 0)
    f = _pw_grid(n=n, s_axis=np.arange(0, 0.1 + 0.005, 0.01), t_max=0.1)
    c = gd.guiding_coefficients(f, LAM, rz.normalize_x(np.array(n)))
    assert np.max(np.abs(c.b)) < 1e-12


def test_characteristic_matches_planewave_guiding():
    sig, tr = gd.planewave_guiding(dfq, np.array([1.0, 0.5]), np.pi, 3142)
    assert np.max(np.abs(tr[:, 0] - np.cos(sig))) < 1e-10
    assert np.max(np.abs(tr[:, 1] - (0.5 + np.cos(sig) - 1))) < 1e-10
    start = gd.CharacteristicState(0.0, np.zeros(3), np.array([1.0]))
    path = gd.integrate_characteristic(start, gd.planewave_velocity_field(dfq), sig[1] - sig[0], 3142, param="t")
    assert np.max(np.abs(path.q[:, 0] - tr[:, 0])) < 1e-10
    assert np.allclose(path.t, path.tau)


def test_characteristic_rejects_nonpositive_a():
    coeffs = lambda t, s, q: (np.zeros_like(t), np.zeros((t.size, 3)), np.zeros_like(q))  # noqa: E731
    with pytest.raises(ValueError):
        gd.integrate_characteristic(gd.CharacteristicState(0.0, np.zeros(3), np.array([0.0])), coeffs, 0.1, 2)
    with pytest.raises(ValueError):
        gd.integrate_characteristic(gd.CharacteristicState(0.0, np.zeros(3), np.array([0.0])), coeffs, 0.1, 2,
                                    param="sigma")


def test_grid_coefficients_out_of_grid():
    f = _pw_grid(d=0.05)
    ev = gd.GridCoefficients(f, gd.guiding_coefficients(f, LAM, rz.normalize_x(np.array([1.0, 0, 0, 0]))))
    a, b, c = ev(np.array([0.5]), np.zeros((1, 3)), np.array([[1.0]]))
    assert a.shape == (1,) and b.shape == (1, 3) and c.shape == (1, 1)
    with pytest.raises(OutOfGridError):
        ev(np.array([0.5]), np.zeros((1, 3)), np.array([[9.0]]))


def _burgers(t, s, q):
    return np.ones_like(t), np.column_stack([q[:, 0], np.zeros((t.size, 2))]), np.zeros_like(q)


def test_fold_time_matches_pairwise_oracle():
    phi0 = lambda s: -0.5 * np.tanh(s)  # noqa: E731
    xi = np.linspace(-5, 5, 401)
    fb = gd.evolve_field_beable(phi0, _burgers, xi, 3.0, 300)
    oracle = gd.pairwise_fold_time(phi0, xi, lambda p: p)
    assert abs(fb.fold_time - oracle) < 1e-3 * oracle
    inner = np.abs(xi) < 3
    assert fb.valid_mask[150, inner].all()
    assert not fb.valid_mask[-1, np.abs(xi) < 0.1].any()


def test_no_fold_for_spreading_data():
    phi0 = lambda s: 0.5 * np.tanh(s)  # noqa: E731
    xi = np.linspace(-5, 5, 201)
    fb = gd.evolve_field_beable(phi0, _burgers, xi, 2.0, 100)
    assert fb.fold_time is None
    assert np.isinf(gd.pairwise_fold_time(phi0, xi, lambda p: p))


def test_immediate_fold_is_an_error():
    with pytest.raises(ValueError):
        gd.evolve_field_beable(lambda s: -50 * s, _burgers, np.linspace(-1, 1, 11), 1.0, 2)


@settings(max_examples=25)
@given(st.integers(0, 2**32), st.integers(0, 50), st.integers(1, 60))
def test_keyed_uniforms_are_chunk_invariant(seed, block, count):
    start = 4 * block
    full = gd.keyed_uniforms(seed, 0, start + count)
    part = gd.keyed_uniforms(seed, start, count)
    assert np.array_equal(full[start:], part)
    assert np.all((part >= 0) & (part < 1))


def test_keyed_uniforms_reject_misaligned_start():
    with pytest.raises(ValueError):
        gd.keyed_uniforms(1, 3, 10)


def test_inverse_cdf_sampling_reproduces_gaussian():
    q = np.linspace(-6, 6, 1201)
    g = stats.norm.pdf(q)
    u = gd.keyed_uniforms(7, 0, 20000)
    x = gd.inverse_cdf_sample(q, g, u)
    assert stats.kstest(x, "norm").statistic < 0.015


@pytest.fixture(scope="module")
def short_profile():
    q = np.arange(-4, 4 + 0.005, 0.01)
    sig = np.linspace(0, np.pi / 2, 1572)
    psi0 = qm.analytic_gaussian_psi(0, q, W, Q0, LAM)
    return qm.crank_nicolson_evolve(psi0, V, LAM, sig, q, store_every=10, substeps=2)


def test_profile_velocity_matches_closed_form(short_profile):
    vel = gd.ProfileVelocity(short_profile)
    q = np.array([0.6, 0.8, 1.0])
    assert np.allclose(vel(0.7, q), dfq(0.7, q), atol=1e-3)
    with pytest.raises(OutOfGridError):
        vel(0.7, np.array([10.0]))


def test_monte_carlo_equivariance_and_determinism(short_profile):
    checks = [np.pi / 4, np.pi / 2]
    a = gd.monte_carlo_equivariance(short_profile, 20000, 42, checks)
    b = gd.monte_carlo_equivariance(short_profile, 20000, 42, checks, workers=3, chunk=4096)
    assert np.array_equal(a.ensemble.trajectory, b.ensemble.trajectory)
    assert np.all(a.ks < 0.02)
    assert a.rows()[0][2] == 20000
    with pytest.raises(ValueError):
        gd.monte_carlo_equivariance(short_profile, 10, 1, [5.0])


def test_mass_flow_invariance(short_profile):
    assert gd.mass_flow_invariance(short_profile, (-np.inf, np.inf)) < 1e-10
    assert gd.mass_flow_invariance(short_profile, (0.8, 1.2)) < 1e-3


def test_plane_wave_k_current_carries_g_not_sqrt_g():
    # K^{a0} on a plane wave: g d_q f, not sqrt(g) d_q f
    f = _pw_grid(d=0.005, t_max=0.5)
    k = rz.k_current_field(f, LAM).k[0, 0][:, 0, 0, 0]
    S, Q = np.meshgrid(f.axes[0], f.q, indexing="ij")
    g = qm.analytic_gaussian_profile(S, Q, W, Q0, LAM)[1]
    inner = (slice(None), slice(1, -1))
    err_g = np.max(np.abs(k - g * dfq(S, Q))[inner])
    err_sqrt = np.max(np.abs(k - np.sqrt(g) * dfq(S, Q))[inner])
    assert err_g < 1e-3
    assert err_sqrt > 100 * err_g


def test_field_beable_for_plane_wave_is_s_independent():
    from dwkpilot import scenario as sc

    cfg = sc.ScenarioConfig(kind="beable")
    t_axis = np.linspace(0, 1, 21)
    s_axis = np.linspace(-1, 1, 21)
    f = sc.planewave_grid(cfg, t_axis, s_axis, np.linspace(-2.5, 3.0, 551))
    ev = gd.GridCoefficients(f, gd.guiding_coefficients(f, LAM, rz.normalize_x(np.array([1.0, 0, 0, 0]))))
    fb = gd.evolve_field_beable(lambda s: np.full(s.shape, Q0), ev, s_axis, 1.0, 40)
    assert np.all(fb.valid_mask)
    assert np.max(np.abs(fb.phi[..., 0] - Q0 * np.cos(W * fb.times)[:, None])) < 5e-3
    assert np.max(np.ptp(fb.phi[..., 0], axis=1)) == 0.0
