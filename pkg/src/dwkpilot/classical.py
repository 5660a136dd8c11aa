"""Classical covariant Hamilton-Jacobi dynamics of a scalar field.

Vectorfields ``S^mu(x, q)`` and densities ``rho(x, q)`` are callables of a
spacetime point ``x`` (4,) and a field value ``q`` (n,).  Target indices use the
Euclidean metric, so ``d^a = d_a``.  Residuals are evaluated with centered
second-order finite differences of step ``h``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from . import _fd
from ._ode import rk4
from .clifford import METRIC, lower, minkowski_dot

_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


class CausticError(ValueError):
    pass


class OutOfGridError(ValueError):
    pass


def _unit_timelike(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (4,) or n[0] <= 0 or abs(minkowski_dot(n, n) - 1.0) > 1e-12:
        raise ValueError("n must be a future unit timelike 4-vector")
    return n


@dataclass(frozen=True)
class HarmonicParams:
    omega: float
    q0: float = 1.0
    B0: float = 0.0
    sigma0: float = 0.0
    n: tuple = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        _unit_timelike(self.n)

    def potential(self, q):
        return 0.5 * self.omega**2 * np.sum(np.atleast_1d(q) ** 2, axis=0)


def _trig(sigma, p: HarmonicParams, tol: float):
    arg = p.omega * (np.asarray(sigma, dtype=float) - p.sigma0)
    c = np.cos(arg)
    if np.any(np.abs(c) < tol):
        raise CausticError(f"caustic at omega (sigma - sigma0) = {arg}")
    return np.tan(arg), 1.0 / c


def oscillator_f(sigma, q, p: HarmonicParams, tol: float = 1e-8):
    """Quadratic-Ansatz solution of the reduced HJ equation for V = omega^2 q^2 / 2."""
    tan, sec = _trig(sigma, p, tol)
    w = p.omega
    return -0.5 * w * (p.B0**2 / w**2 + np.asarray(q) ** 2) * tan + p.B0 * np.asarray(q) * sec


def oscillator_df_dq(sigma, q, p: HarmonicParams, tol: float = 1e-8):
    tan, sec = _trig(sigma, p, tol)
    return -p.omega * np.asarray(q) * tan + p.B0 * sec


def oscillator_g(sigma, q, p: HarmonicParams, g0: Callable, tol: float = 1e-8):
    """Density transported by the oscillator flow from ``g0`` at sigma0."""
    tan, sec = _trig(sigma, p, tol)
    return g0(np.asarray(q) * sec - p.B0 / p.omega * tan) * np.abs(sec)


def classical_beable(sigma, p: HarmonicParams):
    arg = p.omega * (np.asarray(sigma, dtype=float) - p.sigma0)
    return p.q0 * np.cos(arg) + p.B0 / p.omega * np.sin(arg)


# -- fields on configuration space -------------------------------------------


def _real(value, what: str) -> np.ndarray:
    """Complex-valued solutions would give growing modes; refuse them."""
    v = np.asarray(value)
    if np.iscomplexobj(v):
        if np.any(v.imag != 0):
            raise ValueError(f"{what} must be real valued")
        v = v.real
    return v


@dataclass(frozen=True)
class SVectorField:
    """``S^mu(x, q)``; ``grad_q`` optionally gives d_a S^mu with shape (n, 4)."""

    func: Callable
    n_fields: int = 1
    grad_q: Callable | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x, q):
        return _real(self.func(np.asarray(x, float), np.atleast_1d(np.asarray(q, float))), "S")

    def zfunc(self, z):
        return self(z[:4], z[4:])

    def dq(self, x, q, h: float = 1e-6) -> np.ndarray:
        """d_a S^mu, shape (n, 4)."""
        q = np.atleast_1d(np.asarray(q, float))
        if self.grad_q is not None:
            return np.asarray(self.grad_q(np.asarray(x, float), q)).reshape(self.n_fields, 4)
        z = np.concatenate([np.asarray(x, float), q])
        return _fd.gradient(self.zfunc, z, range(4, 4 + self.n_fields), h)

    @classmethod
    def planewave(cls, f: Callable, n, df_dq: Callable | None = None, name="planewave", params=None):
        """S^mu = f(n.x, q) n^mu for a single field component."""
        n = _unit_timelike(n)
        nl = lower(n)

        def func(x, q):
            return f(nl @ x, q[0]) * n

        grad = None
        if df_dq is not None:
            def grad(x, q):
                return (df_dq(nl @ x, q[0]) * n)[None, :]

        return cls(func, 1, grad, name, params or {})

    @classmethod
    def from_grid(cls, axes, values, method: str = "cubic"):
        """Gridded S on a rectangular uniform mesh over (x^0..x^3, q^1..q^n).

        ``values`` has shape ``(len(axes[0]), ..., 4)``.
        """
        axes = [np.asarray(a, float) for a in axes]
        for a in axes:
            d = np.diff(a)
            if d.size == 0 or np.any(d <= 0) or np.ptp(d) > 1e-9 * d.mean():
                raise ValueError("grid axes must be uniform with positive spacing")
        interp = RegularGridInterpolator(axes, np.asarray(values, float), method=method)

        def func(x, q):
            z = np.concatenate([x, q])
            try:
                return interp(z[None, :])[0]
            except ValueError as exc:
                raise OutOfGridError(str(exc)) from exc

        return cls(func, len(axes) - 4, None, "grid", {"axes": axes})

    @classmethod
    def named(cls, name: str, **params) -> "SVectorField":
        try:
            factory = CLOSED_FORMS[name]
        except KeyError:
            raise KeyError(f"unknown closed form {name!r}; known: {sorted(CLOSED_FORMS)}") from None
        return factory(**params)


def _oscillator_field(**kw) -> SVectorField:
    p = HarmonicParams(**kw)
    return SVectorField.planewave(
        lambda s, q: oscillator_f(s, q, p), p.n, lambda s, q: oscillator_df_dq(s, q, p),
        name="oscillator", params=kw,
    )


def _linear_field(c: float = 1.0) -> SVectorField:
    return SVectorField(lambda x, q: c * x, 1, lambda x, q: np.zeros((1, 4)), "linear", {"c": c})


def _zero_field(n_fields: int = 1) -> SVectorField:
    return SVectorField(lambda x, q: np.zeros(4), n_fields,
                        lambda x, q: np.zeros((n_fields, 4)), "zero", {"n_fields": n_fields})


CLOSED_FORMS = {
    "oscillator": _oscillator_field,
    "linear": _linear_field,
    "zero": _zero_field,
}


@dataclass(frozen=True)
class DensityField:
    func: Callable

    def __call__(self, x, q):
        return float(_real(self.func(np.asarray(x, float), np.atleast_1d(np.asarray(q, float))), "rho"))

    def zfunc(self, z):
        return self.func(z[:4], z[4:])

    @classmethod
    def planewave(cls, g: Callable, n) -> "DensityField":
        nl = lower(_unit_timelike(n))
        return cls(lambda x, q: g(nl @ x, q[0]))


# -- residual evaluators -----------------------------------------------------


def _z(x, q):
    return np.concatenate([np.asarray(x, float), np.atleast_1d(np.asarray(q, float))])


def dwhj_residual(S: SVectorField, V: Callable, x, q, h: float = 1e-4) -> float:
    """d_mu S^mu + (1/2) d_a S^mu d^a S_mu + V(q)."""
    z = _z(x, q)
    n = z.size - 4
    div = sum(_fd.partial(S.zfunc, z, mu, h)[mu] for mu in range(4))
    grad = _fd.gradient(S.zfunc, z, range(4, 4 + n), h)  # (n, 4)
    kinetic = 0.5 * np.sum(np.einsum("am,mn,an->a", grad, METRIC, grad))
    return float(div + kinetic + V(z[4:]))


def _velocity_lower(S: SVectorField, h: float):
    """z -> v_mu^a = d_a S_mu, shape (n, 4)."""
    def v(z):
        n = z.size - 4
        grad = _fd.gradient(S.zfunc, z, range(4, 4 + n), h)
        return grad @ METRIC
    return v


def integrability_residual(S: SVectorField, x, q, h: float = 1e-3) -> np.ndarray:
    """Components of d_mu v_nu^a - d_nu v_mu^a + d_b v_nu^a v_mu^b - d_b v_mu^a v_nu^b.

    Shape (n, 6) with spacetime pairs ordered (01, 02, 03, 12, 13, 23).
    """
    z = _z(x, q)
    n = z.size - 4
    v = _velocity_lower(S, h)
    v0 = v(z)
    dv = np.stack([_fd.partial(v, z, k, h) for k in range(4 + n)])  # (4+n, n, 4)
    out = np.empty((n, 6))
    for a in range(n):
        for i, (mu, nu) in enumerate(_PAIRS):
            val = dv[mu, a, nu] - dv[nu, a, mu]
            for b in range(n):
                val += dv[4 + b, a, nu] * v0[b, mu] - dv[4 + b, a, mu] * v0[b, nu]
            out[a, i] = val
    return out


def continuity_components_classical(rho: DensityField, S: SVectorField, x, q, h: float = 1e-4) -> np.ndarray:
    """d_mu rho + d_a (rho d^a S_mu) for mu = 0..3."""
    z = _z(x, q)
    n = z.size - 4
    v = _velocity_lower(S, h)
    drho = _fd.gradient(rho.zfunc, z, range(4), h)
    flux = lambda y: rho.zfunc(y) * v(y)  # noqa: E731  (n, 4)
    div = sum(_fd.partial(flux, z, 4 + a, h)[a] for a in range(n))
    return drho + div


def continuity_residual_classical(rho: DensityField, S: SVectorField, x, q, h: float = 1e-4) -> float:
    return float(np.max(np.abs(continuity_components_classical(rho, S, x, q, h))))


# -- classical beable and flow -----------------------------------------------


@dataclass(frozen=True)
class BeablePath:
    s: np.ndarray  # path parameter
    x: np.ndarray  # (N, 4) spacetime points
    phi: np.ndarray  # (N, n)


def classical_guiding_integrate(S: SVectorField, x0, q0, direction, length: float, steps: int) -> BeablePath:
    """RK4 for d phi/ds = d^mu d_a S_mu(x(s), phi) along x(s) = x0 + s direction."""
    x0 = np.asarray(x0, float)
    d = np.asarray(direction, float)
    if d[0] <= 0 or minkowski_dot(d, d) <= 0:
        raise ValueError("path direction must be future timelike")
    dl = lower(d)

    def rhs(s, phi):
        return S.dq(x0 + s * d, phi) @ dl

    s, phi = rk4(rhs, 0.0, np.atleast_1d(np.asarray(q0, float)), length / steps, steps)
    return BeablePath(s, x0 + np.outer(s, d), phi)


def mass_invariance_classical(rho: DensityField, S: SVectorField, omega0, sigma_grid, x0=(0, 0, 0, 0),
                              n=(1.0, 0.0, 0.0, 0.0), steps_per_interval: int = 10) -> float:
    """Max relative drift of int_{Omega_sigma} rho along the line x0 + sigma n.

    ``omega0`` is an interval (a, b) in a one-component target; infinite ends
    stay infinite under the flow.
    """
    a, b = map(float, omega0)
    if not a < b:
        raise ValueError("Omega0 is empty")
    n = _unit_timelike(n)
    x0 = np.asarray(x0, float)
    sigma_grid = np.asarray(sigma_grid, float)

    def flowed(end):
        if not np.isfinite(end):
            return np.full(sigma_grid.size, end)
        out = [end]
        for s0, s1 in zip(sigma_grid[:-1], sigma_grid[1:]):
            path = classical_guiding_integrate(S, x0 + s0 * n, out[-1], n, s1 - s0, steps_per_interval)
            out.append(path.phi[-1, 0])
        return np.array(out)

    lo, hi = flowed(a), flowed(b)
    mass = np.array([
        integrate.quad(lambda q: rho(x0 + s * n, q), l, h, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        for s, l, h in zip(sigma_grid, lo, hi)
    ])
    if mass[0] <= 0:
        raise ValueError("Omega0 carries zero mass")
    return float(np.max(np.abs(mass - mass[0])) / mass[0])


# -- gridded plane-wave profiles ----------------------------------------------


@dataclass(frozen=True)
class PlaneWaveProfile:
    sigma_grid: np.ndarray
    q_grid: np.ndarray
    f: np.ndarray  # (n_sigma, n_q)
    g: np.ndarray

    def __post_init__(self):
        if np.any(self.g < 0):
            raise ValueError("g must be nonnegative")

    def masses(self) -> np.ndarray:
        return integrate.trapezoid(self.g, self.q_grid, axis=1)

    def df_dq(self) -> np.ndarray:
        return np.gradient(self.f, self.q_grid, axis=1, edge_order=2)


def check_fg_conditions(profile: PlaneWaveProfile, tol: float = 1e-12) -> list[str]:
    """Flag violations of f >= 0, d_sigma f <= 0, g >= 0 without rejecting."""
    issues = []
    if np.any(profile.f < -tol):
        issues.append("f < 0 on part of the domain")
    if profile.sigma_grid.size > 2:
        dfs = np.gradient(profile.f, profile.sigma_grid, axis=0, edge_order=2)
        if np.any(dfs > tol):
            issues.append("d_sigma f > 0 on part of the domain")
    if np.any(profile.g < -tol):
        issues.append("g < 0 on part of the domain")
    for msg in issues:
        warnings.warn(msg, stacklevel=2)
    return issues


def solve_classical_planewave(dV: Callable, V: Callable, f0: Callable, df0: Callable, g0: Callable,
                              q_grid, sigma_grid, d2f0: Callable | None = None,
                              fan_factor: int = 4, pad: float = 1.5) -> PlaneWaveProfile:
    """Reduced HJ + continuity by characteristics, valid up to the first caustic.

    Along q' = p, p' = -V'(q): f' = p^2/2 - V and g = g0(q0) / (dq/dq0).
    The Jacobian dq/dq0 is carried by the variational equations, so it needs
    f0'' (finite differences of ``df0`` when not given).
    """
    q_grid = np.asarray(q_grid, float)
    sigma_grid = np.asarray(sigma_grid, float)
    span = q_grid[-1] - q_grid[0]
    starts = np.linspace(q_grid[0] - pad * span, q_grid[-1] + pad * span, fan_factor * q_grid.size)
    if d2f0 is None:
        d2f0 = lambda q: (df0(q + 1e-5) - df0(q - 1e-5)) / 2e-5  # noqa: E731
    h = 1e-5

    def rhs(_, y):
        q, p, _f, j, k = y
        d2V = (dV(q + h) - dV(q - h)) / (2 * h)
        return np.array([p, -dV(q), 0.5 * p**2 - V(q), k, -d2V * j])

    y = np.array([starts, df0(starts), f0(starts), np.ones_like(starts), d2f0(starts)])
    f_out = np.empty((sigma_grid.size, q_grid.size))
    g_out = np.empty_like(f_out)
    for i, s in enumerate(sigma_grid):
        if i > 0:
            ds = s - sigma_grid[i - 1]
            sub = max(1, int(np.ceil(abs(ds) / 1e-3)))
            _, ys = rk4(rhs, sigma_grid[i - 1], y, ds / sub, sub)
            y = ys[-1]
        q, _p, fv, j, _k = y
        if np.any(j <= 0) or np.any(np.diff(q) <= 0):
            raise CausticError(f"characteristics cross before sigma = {s}")
        if q[0] > q_grid[0] or q[-1] < q_grid[-1]:
            raise OutOfGridError("characteristic fan no longer covers the q grid")
        f_out[i] = CubicSpline(q, fv)(q_grid)
        g_out[i] = np.clip(CubicSpline(q, g0(starts) / j)(q_grid), 0.0, None)
    return PlaneWaveProfile(sigma_grid, q_grid, f_out, g_out)
