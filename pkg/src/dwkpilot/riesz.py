"""Riesz tensor, configuration-space current and the equivariant measure.

Tensors carry their spacetime indices first, so a field of Riesz tensors has
shape ``(4, 4, ...)`` and a K-current for an ``n``-component field has shape
``(n, 4, ...)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import (
    METRIC,
    BElement,
    PolarData,
    b_to_matrix,
    build_gamma_basis,
    dirac_adjoint,
    lower,
    minkowski_dot,
    scalar_part,
)
from .psigrid import PsiGrid


class SingularTensorError(ValueError):
    pass


class NotSquareIntegrableError(ValueError):
    pass


class NonTimelikeError(ValueError):
    pass


@dataclass(frozen=True)
class RieszTensor:
    t: np.ndarray  # T^{mu nu}

    @property
    def mixed(self) -> np.ndarray:
        """T^mu_nu."""
        return np.einsum("ma...,an->mn...", self.t, METRIC)

    def apply(self, y: np.ndarray) -> np.ndarray:
        """T^mu_nu y^nu."""
        return np.einsum("mn...,n...->m...", self.mixed, y)

    def quadratic(self, y: np.ndarray) -> np.ndarray:
        """T_{mu nu} y^mu y^nu."""
        yl = lower(y)
        return np.einsum("mn...,m...,n...->...", self.t, yl, yl)


@dataclass(frozen=True)
class KCurrent:
    k: np.ndarray  # K^{a nu}, shape (n, 4, ...)

    @property
    def lowered(self) -> np.ndarray:
        """K^a_nu."""
        return np.einsum("am...,mn->an...", self.k, METRIC)


@dataclass(frozen=True)
class XData:
    x_tilde: np.ndarray
    x: np.ndarray
    x_hat: np.ndarray

    @property
    def norm(self) -> float:
        """||X|| = sqrt(eta(X, X))."""
        return float(np.sqrt(minkowski_dot(self.x, self.x)))


@dataclass(frozen=True)
class ConfigCurrent:
    j: np.ndarray  # J^mu
    k: np.ndarray  # K^a

    @property
    def y(self) -> np.ndarray:
        """The configuration-space vectorfield (J^mu, K^a) stacked."""
        return np.concatenate([self.j, self.k])


@dataclass(frozen=True)
class DECReport:
    passed: bool
    worst_violation: float
    trials: int
    tolerance: float


# -- Riesz tensor -----------------------------------------------------------


def riesz_from_b(b: BElement, imag_tol: float = 1e-10) -> RieszTensor:
    """T^{mu nu} = tr(bar(Psi) gamma^mu Psi gamma^nu) / 4 by matrix products."""
    g = build_gamma_basis().gamma
    m = b_to_matrix(b)
    mbar = dirac_adjoint(m)
    left = np.einsum("...ab,mbc->m...ac", mbar, g)  # bar(Psi) gamma^mu
    right = np.einsum("...ab,nbc->n...ac", m, g)  # Psi gamma^nu
    t = scalar_part(np.einsum("m...ab,n...bc->mn...ac", left, right))
    scale = np.maximum(1.0, np.max(np.abs(t)))
    if np.max(np.abs(t.imag)) > imag_tol * scale:
        raise ValueError("Riesz tensor has an imaginary part; input is not in B")
    return RieszTensor(np.ascontiguousarray(t.real))


def riesz_components(b: BElement) -> RieszTensor:
    """Component form (|psi|^2 - psi*_a psi^a) eta + psi*^mu psi^nu + psi^mu psi*^nu.

    Vectorised over sample axes; used for whole grids.
    """
    up = lower(b.psi_mu)
    scal = np.abs(b.psi) ** 2 - np.sum(np.conj(b.psi_mu) * up, axis=0).real
    outer = np.einsum("m...,n...->mn...", np.conj(up), up)
    eta = METRIC.reshape((4, 4) + (1,) * np.ndim(scal))
    return RieszTensor(scal * eta + 2 * outer.real)


def riesz_from_polar(p: PolarData, lam: float) -> RieszTensor:
    """rho (cos^2 - sin^2) eta + 2 rho sin^2 u u."""
    theta = p.zeta / lam
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    eta = METRIC.reshape((4, 4) + (1,) * np.ndim(p.rho))
    uu = np.einsum("m...,n...->mn...", p.u, p.u)
    return RieszTensor(p.rho * (c2 - s2) * eta + 2 * p.rho * s2 * uu)


def riesz_inverse(p: PolarData, lam: float, tol: float = 1e-10) -> np.ndarray:
    """Mixed-index inverse (1/rho) sec(2 zeta/lam) (delta - 2 sin^2(zeta/lam) u u_flat)."""
    rho = float(p.rho)
    c = np.cos(2 * float(p.zeta) / lam)
    if rho <= 0 or abs(c) <= tol:
        raise SingularTensorError("Riesz tensor is singular at this point")
    s2 = np.sin(float(p.zeta) / lam) ** 2
    return (np.eye(4) - 2 * s2 * np.outer(p.u, lower(p.u))) / (rho * c)


# -- dominant energy condition ---------------------------------------------


def random_causal_vectors(rng: np.random.Generator, n: int, null_fraction: float = 0.25):
    """Future causal vectors with y^0 = 1; a fraction of them exactly null."""
    d = rng.normal(size=(3, n))
    d /= np.linalg.norm(d, axis=0)
    r = rng.uniform(0.0, 1.0, size=n)
    r[: int(null_fraction * n)] = 1.0
    return np.vstack([np.ones(n), r * d]), r < 1.0


def dec_check(t: RieszTensor, trials: int = 100_000, seed: int = 0, tol: float = 1e-12) -> DECReport:
    """Randomised dominant-energy-condition test for a single tensor.

    Violations are measured relative to the largest entry of T; the sampled
    vectors have unit time component so every test is scale free.
    """
    rng = np.random.default_rng(seed)
    y, timelike = random_causal_vectors(rng, trials)
    ty = t.apply(y)
    scale = max(1.0, float(np.max(np.abs(t.t))))
    # future causal: (Ty)^0 >= 0 and eta(Ty, Ty) >= 0
    v_future = np.maximum(0.0, -ty[0]) / scale
    v_causal = np.maximum(0.0, -minkowski_dot(ty, ty)) / scale**2
    v_energy = np.maximum(0.0, -t.quadratic(y[:, timelike])) / scale
    worst = max(v_future.max(initial=0.0), v_causal.max(initial=0.0), v_energy.max(initial=0.0))
    return DECReport(bool(worst <= tol), float(worst), trials, tol)


def violates_dec_with(t: RieszTensor, y: np.ndarray) -> bool:
    """Direct check of a single causal vector ``y``."""
    ty = t.apply(np.asarray(y, dtype=float))
    return bool(ty[0] < 0 or minkowski_dot(ty, ty) < 0)


# -- configuration-space current -------------------------------------------


def _at_index(arr: np.ndarray, at) -> np.ndarray:
    return arr[(Ellipsis,) + tuple(at)]


def k_current(field: PsiGrid, lam: float, at) -> KCurrent:
    """K^{a nu} at a grid node from the Clifford-product definition."""
    at = tuple(at)
    if not field.is_interior(at):
        raise IndexError("k_current needs an interior node along q")
    g = build_gamma_basis().gamma
    # b_to_matrix puts the grid axes first and the 4x4 block last
    m = b_to_matrix(field.element())[at]
    dm = b_to_matrix(BElement(field.dq_of(field.psi), field.dq_of(field.psi_mu)))[at]
    mbar = dirac_adjoint(m)
    dmbar = dirac_adjoint(dm)
    bracket = mbar @ dm - dmbar @ m
    k = scalar_part(np.einsum("ab,nbc->nac", bracket, g)) * lam / 2j
    if np.max(np.abs(k.imag)) > 1e-10 * max(1.0, np.max(np.abs(k))):
        raise ValueError("K-current has an imaginary part")
    return KCurrent(k.real[None, :])


def k_current_field(field: PsiGrid, lam: float) -> KCurrent:
    """K^{a nu} = lam Im(psi* d_a psi^nu + psi^nu* d_a psi) on the whole grid."""
    up = field.psi_upper()
    dpsi = field.dq_of(field.psi)
    dup = field.dq_of(up)
    k = lam * np.imag(np.conj(field.psi) * dup + np.conj(up) * dpsi)
    return KCurrent(k[None])


def riesz_field(field: PsiGrid) -> RieszTensor:
    return riesz_components(field.element())


def conservation_residual(field: PsiGrid, lam: float, at=None) -> np.ndarray:
    """d_mu T^{mu nu} + d_a K^{a nu}; shape (4, ...) or (4,) at a node."""
    field.check_resolution()
    t = riesz_field(field).t
    k = k_current_field(field, lam).k[0]
    res = field.dq_of(k)
    for mu in field.active_axes():
        res = res + field.dx(t[mu], mu)
    if at is None:
        return res
    at = tuple(at)
    if not field.is_interior(at):
        raise IndexError("conservation residual requested on the grid boundary")
    return _at_index(res, at)


# -- distinguished vectorfield ---------------------------------------------


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    if x.size == 1:
        return np.ones(1)
    h = x[1] - x[0]
    w = np.full(x.size, h)
    w[0] = w[-1] = h / 2
    return w


def edge_fraction(field: PsiGrid) -> float:
    """Largest |Psi|^2 on any spatial or q edge relative to the maximum."""
    dens = np.abs(field.psi) ** 2 + np.sum(np.abs(field.psi_mu) ** 2, axis=0)
    peak = dens.max()
    if peak == 0:
        return 0.0
    worst = 0.0
    for ax in [m for m in field.active_axes() if m > 0] + [4]:
        edges = np.take(dens, [0, dens.shape[ax] - 1], axis=ax)
        worst = max(worst, float(edges.max() / peak))
    return worst


def normalize_x(x_tilde: np.ndarray, tol: float = 1e-12) -> XData:
    x_tilde = np.asarray(x_tilde, dtype=float)
    nn = minkowski_dot(x_tilde, x_tilde)
    if x_tilde[0] <= 0 or nn <= tol * x_tilde[0] ** 2:
        raise NonTimelikeError("X-tilde is not strictly timelike and future directed")
    x = x_tilde / nn
    return XData(x_tilde, x, x_tilde / np.sqrt(nn))


def xtilde_from_slice(psi_slice: PsiGrid, normal=(1.0, 0.0, 0.0, 0.0), decay_tol: float = 1e-10) -> XData:
    """X-tilde^mu = int int T^{mu nu} n_nu d^3s d^nq on one time slice, then normalise."""
    if psi_slice.axes[0].size != 1:
        raise ValueError("expected a single time slice")
    spatial = [m for m in (1, 2, 3) if psi_slice.axes[m].size > 1]
    if not spatial:
        raise NotSquareIntegrableError("slice data is constant in space and not integrable")
    if edge_fraction(psi_slice) > decay_tol:
        raise NotSquareIntegrableError("slice data does not decay at the box edges")
    t = riesz_field(psi_slice).t
    tn = np.einsum("mn...,n->m...", t, lower(np.asarray(normal, dtype=float)))
    w = np.ones(1)
    for m in (1, 2, 3):
        w = np.multiply.outer(w, _trapezoid_weights(psi_slice.axes[m]))
    w = np.multiply.outer(w, _trapezoid_weights(psi_slice.q))
    x_tilde = (tn * w.reshape(tn.shape[1:])).reshape(4, -1).sum(axis=1)
    return normalize_x(x_tilde)


def slice_integral(values: np.ndarray, psi_slice: PsiGrid) -> float:
    """Trapezoid integral of a slice-shaped scalar field over space and q."""
    w = np.ones(1)
    for m in (1, 2, 3):
        w = np.multiply.outer(w, _trapezoid_weights(psi_slice.axes[m]))
    w = np.multiply.outer(w, _trapezoid_weights(psi_slice.q))
    return float(np.sum(values * w.reshape(values.shape)))


def currents_and_y(t: RieszTensor, k: KCurrent, x: XData) -> ConfigCurrent:
    """J^mu = T^mu_nu X^nu and K^a = K^a_nu X^nu."""
    j = t.apply(x.x.reshape((4,) + (1,) * (t.t.ndim - 2)))
    ka = np.einsum("an...,n->a...", k.lowered, x.x)
    return ConfigCurrent(j, ka)


def current_divergence(field: PsiGrid, lam: float, x: XData) -> np.ndarray:
    """d_mu J^mu + d_a K^a for constant X on the whole grid."""
    field.check_resolution()
    cur = currents_and_y(riesz_field(field), k_current_field(field, lam), x)
    res = field.dq_of(cur.k[0])
    for mu in field.active_axes():
        res = res + field.dx(cur.j[mu], mu)
    return res


# -- equivariant measure ---------------------------------------------------


def _check_unit_timelike(x_hat):
    x_hat = np.asarray(x_hat, dtype=float)
    bad = np.abs(minkowski_dot(x_hat, x_hat) - 1.0) > 1e-10 * np.maximum(1.0, x_hat[0] ** 2)
    if np.any(x_hat[0] <= 0) or np.any(bad):
        raise NonTimelikeError("x_hat must be a future unit timelike vector")
    return x_hat


def varrho(p: PolarData, lam: float, x_hat) -> float | np.ndarray:
    """T(X-hat, X-hat) for the tensor built from ``p``; ``x_hat`` is one vector or one per sample."""
    x_hat = _check_unit_timelike(x_hat)
    t = riesz_from_polar(p, lam)
    if x_hat.ndim == 1:
        x_hat = x_hat.reshape((4,) + (1,) * np.ndim(p.rho))
    return t.quadratic(np.broadcast_to(x_hat, (4,) + np.shape(p.rho)))


def varrho_gap(p: PolarData, lam: float, x_hat) -> float | np.ndarray:
    return varrho(p, lam, x_hat) - p.rho


def random_polar_data(rng: np.random.Generator, n: int, lam: float, max_rapidity: float = 2.0,
                      zeta_periods: float = 3.0) -> PolarData:
    """Random samples: rho in (0, 2], zeta up to a few periods, boosted u."""
    rho = rng.uniform(0.05, 2.0, size=n)
    zeta = rng.uniform(0.0, zeta_periods * np.pi * lam, size=n)
    return PolarData(rho, zeta, random_unit_timelike(rng, n, max_rapidity))


def random_unit_timelike(rng: np.random.Generator, n: int, max_rapidity: float = 2.0) -> np.ndarray:
    d = rng.normal(size=(3, n))
    d /= np.linalg.norm(d, axis=0)
    beta = rng.uniform(0.0, max_rapidity, size=n)
    return np.vstack([np.cosh(beta), np.sinh(beta) * d])
