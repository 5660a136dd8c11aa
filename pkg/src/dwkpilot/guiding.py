"""Field guiding law: characteristics, field beables and equivariance checks.

In the frame where X-hat = e0 the guiding law is the quasilinear PDE
``A d_t phi + B^j d_j phi = -C`` with A = T^0_0, B^j = T^j_0 and
C^a = -K^a_0.  Its characteristics obey ``t' = A, s' = B, q' = -C``; for a
plane wave this is ``dq/dsigma = d_q f``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats
from scipy.interpolate import RegularGridInterpolator

from ._ode import rk4_step
from .classical import OutOfGridError
from .clifford import minkowski_dot
from .psigrid import PsiGrid
from .quantum import QuantumProfile
from .riesz import KCurrent, NonTimelikeError, RieszTensor, XData, k_current_field, riesz_field


# -- coefficients ------------------------------------------------------------------


def boost_to_rest(x_hat) -> np.ndarray:
    """Pure boost L (contravariant) with L x_hat = e0."""
    v = np.asarray(x_hat, float)
    if v[0] <= 0 or abs(minkowski_dot(v, v) - 1) > 1e-10:
        raise NonTimelikeError("x_hat must be unit future timelike")
    g, w = v[0], -v[1:]
    L = np.empty((4, 4))
    L[0, 0] = g
    L[0, 1:] = w
    L[1:, 0] = w
    L[1:, 1:] = np.eye(3) + np.outer(w, w) / (1 + g)
    return L


@dataclass(frozen=True)
class GuidingCoefficients:
    a: np.ndarray
    b: np.ndarray  # (3, ...)
    c: np.ndarray  # (n, ...)


def coefficients_from_tensors(t: RieszTensor, k: KCurrent, x_hat) -> GuidingCoefficients:
    L = boost_to_rest(x_hat)
    tt = np.einsum("am,bn,mn...->ab...", L, L, t.t)
    kk = np.einsum("bn,an...->ab...", L, k.k)
    # T^mu_0 = T^{mu 0} and K^a_0 = K^{a0} since eta_00 = 1
    return GuidingCoefficients(tt[0, 0], tt[1:, 0], -kk[:, 0])


def guiding_coefficients(field: PsiGrid, lam: float, x: XData) -> GuidingCoefficients:
    return coefficients_from_tensors(riesz_field(field), k_current_field(field, lam), x.x_hat)


# -- characteristics ---------------------------------------------------------------


@dataclass(frozen=True)
class CharacteristicState:
    t: float
    s: np.ndarray  # (3,)
    q: np.ndarray  # (n,)
    tau: float = 0.0

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.t], self.s, self.q])


@dataclass(frozen=True)
class CharacteristicPath:
    tau: np.ndarray
    t: np.ndarray
    s: np.ndarray  # (N, 3)
    q: np.ndarray  # (N, n)

    def state(self, i: int) -> CharacteristicState:
        return CharacteristicState(float(self.t[i]), self.s[i], self.q[i], float(self.tau[i]))


# evaluator protocol: coeffs(t (N,), s (N, 3), q (N, n)) -> (A (N,), B (N, 3), C (N, n))
Evaluator = Callable[[np.ndarray, np.ndarray, np.ndarray], tuple]


class GridCoefficients:
    """Linear interpolation of gridded coefficients over (t, x^1..x^3, q).

    Singleton spatial axes mean the coefficients are constant along them.
    """

    def __init__(self, field: PsiGrid, coeffs: GuidingCoefficients):
        axes = [field.axes[0]] + list(field.axes[1:]) + [field.q]
        self._keep = [i for i, a in enumerate(axes) if a.size > 1]
        grid = tuple(axes[i] for i in self._keep)
        sq = tuple(0 if axes[i].size == 1 else slice(None) for i in range(5))
        values = np.concatenate([coeffs.a[None], coeffs.b, coeffs.c], axis=0)
        values = np.moveaxis(values[(slice(None),) + sq], 0, -1)
        self._interp = RegularGridInterpolator(grid, values, method="linear")
        self._lo = np.array([g[0] for g in grid])
        self._hi = np.array([g[-1] for g in grid])
        self.n_fields = coeffs.c.shape[0]

    def __call__(self, t, s, q):
        pts = np.column_stack([np.atleast_1d(t), np.atleast_2d(s), np.atleast_2d(q)])[:, self._keep]
        # accumulated parameters may overshoot an end node by rounding
        slack = 1e-12 * np.maximum(1.0, self._hi - self._lo)
        pts = np.where(np.abs(pts - self._lo) <= slack, np.maximum(pts, self._lo), pts)
        pts = np.where(np.abs(pts - self._hi) <= slack, np.minimum(pts, self._hi), pts)
        try:
            v = self._interp(pts)
        except ValueError as exc:
            raise OutOfGridError(str(exc)) from exc
        return v[:, 0], v[:, 1:4], v[:, 4:]


def _rhs(coeffs: Evaluator, param: str, a_floor: float):
    def f(_, y):
        t, s, q = y[:, 0], y[:, 1:4], y[:, 4:]
        a, b, c = coeffs(t, s, q)
        if np.any(a <= a_floor):
            raise ValueError("A <= 0 met along a characteristic")
        out = np.column_stack([a, b, -c])
        return out / a[:, None] if param == "t" else out
    return f


def integrate_characteristic(start: CharacteristicState, coeffs: Evaluator, dtau: float, n_steps: int,
                             param: str = "tau", a_floor: float = 0.0) -> CharacteristicPath:
    """RK4 for (t, s, q)' = (A, B, -C); ``param='t'`` divides by A."""
    if param not in ("tau", "t"):
        raise ValueError("param must be 'tau' or 't'")
    y = start.vector()[None, :]
    rhs = _rhs(coeffs, param, a_floor)
    ys = [y[0]]
    for i in range(n_steps):
        y = rk4_step(rhs, start.tau + i * dtau, y, dtau)
        ys.append(y[0])
    ys = np.array(ys)
    return CharacteristicPath(start.tau + dtau * np.arange(n_steps + 1), ys[:, 0], ys[:, 1:4], ys[:, 4:])


@dataclass(frozen=True)
class FieldBeable:
    cauchy_grid: np.ndarray  # nodes xi along x^1
    times: np.ndarray
    phi: np.ndarray  # (n_times, n_nodes, n)
    valid_mask: np.ndarray  # (n_times, n_nodes)
    fold_time: float | None


def evolve_field_beable(phi0, coeffs: Evaluator, cauchy_grid, t_final: float, n_steps: int,
                        n_fields: int = 1) -> FieldBeable:
    """Field beable phi(t, s) along x^1 from Cauchy data on t = 0.

    One characteristic starts at each node xi with s = (xi, 0, 0) and
    q = phi0(xi); they are integrated with t as parameter and phi(t, .) is
    read back at the Cauchy nodes.  Nodes swept by characteristics that have
    folded (d s / d xi <= 0) are masked, as are nodes outside the fan.
    """
    xi = np.asarray(cauchy_grid, float)
    q0 = np.asarray(phi0(xi) if callable(phi0) else phi0, float).reshape(xi.size, n_fields)
    y = np.zeros((xi.size, 4 + n_fields))
    y[:, 1] = xi
    y[:, 4:] = q0
    dt = t_final / n_steps
    rhs = _rhs(coeffs, "t", 0.0)
    times = dt * np.arange(n_steps + 1)
    phi = np.empty((n_steps + 1, xi.size, n_fields))
    mask = np.ones((n_steps + 1, xi.size), bool)
    phi[0] = q0
    folded = np.zeros(xi.size - 1, bool)
    jac_prev = np.diff(xi)
    fold_time = None
    for k in range(1, n_steps + 1):
        y = rk4_step(rhs, times[k - 1], y, dt)
        s = y[:, 1]
        jac = np.diff(s)
        new = (jac <= 0) & ~folded
        if new.any():
            frac = jac_prev[new] / (jac_prev[new] - jac[new])
            tf = float(times[k - 1] + dt * np.min(frac))
            fold_time = tf if fold_time is None else min(fold_time, tf)
            if k == 1:
                raise ValueError("characteristics fold immediately: degenerate Cauchy data")
        folded |= jac <= 0
        jac_prev = jac
        ok = np.ones(xi.size, bool)
        for i in np.flatnonzero(folded):
            lo, hi = sorted((s[i], s[i + 1]))
            span = s[max(0, i - 1): i + 3]
            ok &= ~((xi >= min(lo, span.min())) & (xi <= max(hi, span.max())))
        ok &= (xi >= s.min()) & (xi <= s.max())
        mask[k] = ok
        if folded.any():
            # reading back needs a monotone fan; use the unfolded ordering
            order = np.argsort(s, kind="stable")
            for a in range(n_fields):
                phi[k, :, a] = np.interp(xi, s[order], y[order, 4 + a])
        else:
            for a in range(n_fields):
                phi[k, :, a] = np.interp(xi, s, y[:, 4 + a])
    return FieldBeable(xi, times, phi, mask, fold_time)


def pairwise_fold_time(phi0, cauchy_grid, speed: Callable) -> float:
    """Oracle for straight characteristics s = xi + t speed(phi0(xi)): first crossing."""
    xi = np.asarray(cauchy_grid, float)
    v = speed(np.asarray(phi0(xi), float))
    dx = xi[None, :] - xi[:, None]
    dv = v[:, None] - v[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        tc = dx / dv
    tc[~np.isfinite(tc) | (tc <= 0)] = np.inf
    return float(tc.min())


# -- plane waves -------------------------------------------------------------------


def planewave_velocity_field(df_dq: Callable) -> Evaluator:
    """Closed-form coefficients in the plane-wave rest frame: A = 1, B = 0, C = -d_q f."""
    def coeffs(t, s, q):
        t = np.atleast_1d(t)
        return np.ones_like(t), np.zeros((t.size, 3)), -np.asarray(df_dq(t, q[:, 0])).reshape(t.size, 1)
    return coeffs


class ProfileVelocity:
    """d_q f on a QuantumProfile from phase differences, bilinear in (sigma, q).

    lam * angle(psi[j+1] conj(psi[j-1])) / (2 dq) is exact for phases linear
    in q and never differentiates the oscillating real and imaginary parts.
    """

    def __init__(self, profile: QuantumProfile):
        psi = profile.psi_tilde
        dq = profile.dq
        v = np.empty(psi.shape)
        v[:, 1:-1] = np.angle(psi[:, 2:] * np.conj(psi[:, :-2])) / (2 * dq)
        v[:, 0] = np.angle(psi[:, 1] * np.conj(psi[:, 0])) / dq
        v[:, -1] = np.angle(psi[:, -1] * np.conj(psi[:, -2])) / dq
        self.v = profile.lam * v
        self.s0 = float(profile.sigma_grid[0])
        self.ds = float(profile.sigma_grid[1] - profile.sigma_grid[0])
        self.q0 = float(profile.q_grid[0])
        self.dq = profile.dq
        self.shape = self.v.shape

    def __call__(self, sigma, q):
        q = np.asarray(q, float)
        x = (sigma - self.s0) / self.ds
        y = (q - self.q0) / self.dq
        if x < -1e-9 or x > self.shape[0] - 1 + 1e-9 or np.any(y < 0) or np.any(y > self.shape[1] - 1):
            raise OutOfGridError("trajectory leaves the profile grid")
        i = min(int(np.floor(x)), self.shape[0] - 2)
        i = max(i, 0)
        wx = x - i
        j = np.minimum(np.floor(y).astype(int), self.shape[1] - 2)
        wy = y - j
        v0 = self.v[i, j] * (1 - wy) + self.v[i, j + 1] * wy
        v1 = self.v[i + 1, j] * (1 - wy) + self.v[i + 1, j + 1] * wy
        return v0 * (1 - wx) + v1 * wx


def planewave_guiding(df_dq: Callable, q0, sigma_end: float, n_steps: int, sigma0: float = 0.0):
    """RK4 for dq/dsigma = d_q f(sigma, q); vectorised over initial values.

    Returns sigma (n_steps+1,) and q (n_steps+1, *q0.shape).
    """
    q = np.asarray(q0, float)
    h = (sigma_end - sigma0) / n_steps
    rhs = lambda s, y: df_dq(s, y)  # noqa: E731
    out = np.empty((n_steps + 1,) + q.shape)
    out[0] = q
    for i in range(n_steps):
        q = rk4_step(rhs, sigma0 + i * h, q, h)
        out[i + 1] = q
    return sigma0 + h * np.arange(n_steps + 1), out


# -- Monte Carlo equivariance ------------------------------------------------------


def keyed_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms for sample indices [start, start + count) from a counter-based stream.

    Sample i uses output i of Philox keyed by ``seed``; ``start`` must be a
    multiple of 4 (one Philox block holds four 64-bit outputs).
    """
    if start % 4:
        raise ValueError("chunk start must be a multiple of 4")
    counter = np.array([start // 4, 0, 0, 0], dtype=np.uint64)
    bg = np.random.Philox(key=np.uint64(seed), counter=counter)
    raw = bg.random_raw(count)
    return (raw >> np.uint64(11)).astype(float) * 2.0**-53


def _slice_cdf(q_grid, g_slice):
    cdf = integrate.cumulative_trapezoid(g_slice, q_grid, initial=0.0)
    if cdf[-1] <= 0:
        raise ValueError("degenerate density: zero mass")
    return cdf / cdf[-1]


def inverse_cdf_sample(q_grid, g_slice, u) -> np.ndarray:
    cdf = _slice_cdf(q_grid, g_slice)
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return np.interp(u, cdf[keep], np.asarray(q_grid)[keep])


@dataclass(frozen=True)
class EnsembleSample:
    seed: int
    q0: np.ndarray
    trajectory: np.ndarray  # (n_checks, N) positions at the check times


@dataclass(frozen=True)
class EquivarianceResult:
    sigma_check: np.ndarray
    ks: np.ndarray
    ks_exact: np.ndarray | None
    n_samples: int
    ensemble: EnsembleSample

    def rows(self):
        return [(float(s), float(k), self.n_samples) for s, k in zip(self.sigma_check, self.ks)]


def _profile_g_at(profile: QuantumProfile, sigma: float) -> np.ndarray:
    sg = profile.sigma_grid
    x = (sigma - sg[0]) / (sg[1] - sg[0])
    i = int(np.clip(np.floor(x), 0, sg.size - 2))
    w = x - i
    if abs(w) < 1e-9:
        return profile.g[i]
    if abs(w - 1) < 1e-9:
        return profile.g[i + 1]
    return (1 - w) * profile.g[i] + w * profile.g[i + 1]


def monte_carlo_equivariance(profile: QuantumProfile, n_samples: int, seed: int, sigma_checks,
                             steps_per_unit: int = 200, workers: int = 1, chunk: int = 8192,
                             exact_cdf: Callable | None = None) -> EquivarianceResult:
    """Sample q0 ~ g(0,.), guide by d_q f, and compare with g(sigma,.) via KS.

    ``exact_cdf(sigma, q)``, if given, adds the KS distance to that law.
    Results do not depend on ``workers`` or ``chunk``.
    """
    if chunk % 4:
        raise ValueError("chunk must be a multiple of 4")
    checks = np.sort(np.atleast_1d(np.asarray(sigma_checks, float)))
    if np.any(checks < profile.sigma_grid[0]) or np.any(checks > profile.sigma_grid[-1] + 1e-12):
        raise ValueError("sigma_check outside the profile range")
    vel = ProfileVelocity(profile)

    def run(start):
        count = min(chunk, n_samples - start)
        u = keyed_uniforms(seed, start, count)
        q = inverse_cdf_sample(profile.q_grid, profile.g[0], u)
        q_init = q.copy()
        out = np.empty((checks.size, count))
        s = float(profile.sigma_grid[0])
        for k, target in enumerate(checks):
            span = target - s
            if span > 0:
                n = max(1, int(np.ceil(span * steps_per_unit)))
                h = span / n
                for i in range(n):
                    q = rk4_step(vel, s + i * h, q, h)
            s = target
            out[k] = q
        return q_init, out

    starts = list(range(0, n_samples, chunk))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, starts))
    else:
        parts = [run(st) for st in starts]
    q0 = np.concatenate([p[0] for p in parts])
    traj = np.concatenate([p[1] for p in parts], axis=1)

    ks, ks_exact = [], []
    for k, s in enumerate(checks):
        cdf = _slice_cdf(profile.q_grid, _profile_g_at(profile, s))
        ks.append(stats.kstest(traj[k], lambda x: np.interp(x, profile.q_grid, cdf)).statistic)
        if exact_cdf is not None:
            ks_exact.append(stats.kstest(traj[k], lambda x: exact_cdf(s, x)).statistic)
    return EquivarianceResult(checks, np.array(ks), np.array(ks_exact) if exact_cdf else None, n_samples,
                              EnsembleSample(seed, q0, traj))


def mass_flow_invariance(profile: QuantumProfile, omega0, steps_per_unit: int = 200) -> float:
    """Max relative drift of the g-mass of a flowed interval over the profile's sigma range."""
    a, b = map(float, omega0)
    if not a < b:
        raise ValueError("Omega0 is empty")
    vel = ProfileVelocity(profile)
    sg = profile.sigma_grid
    ends = np.array([a, b])
    finite = np.isfinite(ends)
    masses = []
    for k, s in enumerate(sg):
        if k > 0 and finite.any():
            n = max(1, int(np.ceil((s - sg[k - 1]) * steps_per_unit)))
            h = (s - sg[k - 1]) / n
            for i in range(n):
                ends[finite] = rk4_step(vel, sg[k - 1] + i * h, ends[finite], h)
        cdf = integrate.cumulative_trapezoid(profile.g[k], profile.q_grid, initial=0.0)
        lo, hi = (np.interp(e, profile.q_grid, cdf) for e in ends)
        masses.append(hi - lo)
    masses = np.array(masses)
    if masses[0] <= 0:
        raise ValueError("Omega0 carries zero mass")
    return float(np.max(np.abs(masses - masses[0])) / masses[0])
