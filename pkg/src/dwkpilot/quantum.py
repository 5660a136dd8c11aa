"""Quantum plane waves, Kanatchikov residuals and the classical limit.

The reduced plane-wave system for (f, g) is solved through the effective wave
function ``psi_tilde = sqrt(g) exp(i f / lam)``, which obeys
``i lam d_sigma psi_tilde = H psi_tilde`` with ``H = -(lam^2/2) d_q^2 + V``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse, special
from scipy.linalg import eigh_tridiagonal
from scipy.sparse import linalg as splinalg

from . import _fd
from .classical import CausticError, HarmonicParams, oscillator_f
from .clifford import METRIC, BElement, lower, minkowski_dot
from .psigrid import PsiGrid

_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

# interior stencils for d^2/dq^2 (offsets 0, 1, 2, ...), symmetric
_LAPLACE = {
    2: (-2.0, 1.0),
    4: (-5 / 2, 4 / 3, -1 / 12),
    6: (-49 / 18, 3 / 2, -3 / 20, 1 / 90),
}


class QuantumPotentialSingularity(ValueError):
    """g vanishes where the quantum potential is requested."""


class NodeCrossingError(ValueError):
    pass


class BoundaryLeakageError(ValueError):
    pass


class DispersionError(ValueError):
    pass


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Potential:
    kind: str
    omega: float | None = None
    q_grid: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "harmonic":
            if self.omega is None or not self.omega > 0:
                raise ValueError("harmonic potential needs omega > 0")
        elif self.kind == "tabulated":
            q = np.asarray(self.q_grid, float)
            v = np.asarray(self.values, float)
            if q.ndim != 1 or q.shape != v.shape or q.size < 2 or np.any(np.diff(q) <= 0):
                raise ValueError("tabulated potential needs increasing q_grid and matching values")
            if not np.all(np.isfinite(v)):
                raise ValueError("tabulated potential values must be finite")
            object.__setattr__(self, "q_grid", q)
            object.__setattr__(self, "values", v)
        else:
            raise ValueError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def harmonic(cls, omega: float) -> "Potential":
        return cls("harmonic", omega=omega)

    @classmethod
    def tabulated(cls, q_grid, values) -> "Potential":
        return cls("tabulated", q_grid=q_grid, values=values)

    @classmethod
    def zero(cls, extent: float = 1e6) -> "Potential":
        return cls.tabulated([-extent, extent], [0.0, 0.0])

    def __call__(self, q):
        q = np.asarray(q, float)
        if self.kind == "harmonic":
            return 0.5 * self.omega**2 * q**2
        if np.any(q < self.q_grid[0]) or np.any(q > self.q_grid[-1]):
            raise ValueError("q outside the tabulated potential range")
        return np.interp(q, self.q_grid, self.values)

    def scalar(self, q):
        """Adapter for callables taking a field vector of length 1."""
        return float(self(np.atleast_1d(q)[0]))


def _uniform(x, what: str) -> float:
    x = np.asarray(x, float)
    d = np.diff(x)
    if d.size == 0 or np.any(d <= 0) or np.ptp(d) > 1e-9 * d.mean():
        raise ValueError(f"{what} must be uniform and increasing")
    return float(d.mean())


# -- closed forms --------------------------------------------------------------


def analytic_gaussian_profile(sigma, q, omega: float, q0: float, lam: float):
    """(f, g) of the coherent Gaussian state for V = omega^2 q^2 / 2."""
    if not (omega > 0 and lam > 0):
        raise ValueError("omega and lambda must be positive")
    sigma = np.asarray(sigma, float)
    q = np.asarray(q, float)
    ws = omega * sigma
    f = -0.5 * lam * ws - 0.5 * omega * (2 * q * q0 * np.sin(ws) - 0.5 * q0**2 * np.sin(2 * ws))
    var = lam / (2 * omega)
    g = np.exp(-((q - q0 * np.cos(ws)) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)
    return f, g


def analytic_gaussian_psi(sigma, q, omega, q0, lam):
    f, g = analytic_gaussian_profile(sigma, q, omega, q0, lam)
    return np.sqrt(g) * np.exp(1j * f / lam)


def free_gaussian_psi(sigma, q, q0: float, alpha: float, lam: float):
    """Free spreading Gaussian; |psi|^2 has mean q0 and variance alpha at sigma = 0."""
    z = 1 + 1j * lam * np.asarray(sigma, float) / (2 * alpha)
    q = np.asarray(q, float)
    return (2 * np.pi * alpha) ** -0.25 / np.sqrt(z) * np.exp(-((q - q0) ** 2) / (4 * alpha * z))


# -- discrete Hamiltonian and evolution ----------------------------------------


def discrete_hamiltonian(V: Potential, lam: float, q_grid, order: int = 2) -> sparse.csc_matrix:
    """-(lam^2/2) D2 + diag(V) with zero Dirichlet data beyond the grid ends."""
    dq = _uniform(q_grid, "q_grid")
    coeffs = _LAPLACE[order]
    n = len(q_grid)
    offsets, diags = [], []
    for k, c in enumerate(coeffs):
        for off in ((0,) if k == 0 else (k, -k)):
            offsets.append(off)
            diags.append(np.full(n - abs(off), c))
    lap = sparse.diags(diags, offsets, shape=(n, n)) / dq**2
    return (-(lam**2) / 2 * lap + sparse.diags(V(np.asarray(q_grid, float)))).tocsc()


@dataclass(frozen=True)
class QuantumProfile:
    lam: float
    sigma_grid: np.ndarray
    q_grid: np.ndarray
    psi_tilde: np.ndarray  # (n_sigma, n_q)
    f: np.ndarray
    g: np.ndarray

    @property
    def dq(self) -> float:
        return _uniform(self.q_grid, "q_grid")

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.psi_tilde) ** 2, axis=1) * self.dq)

    def norm_drift(self) -> float:
        n = self.norms()
        return float(np.max(np.abs(n - n[0])))

    def moments(self):
        """Mean and variance of g per sigma slice (trapezoid rule)."""
        w = self.g * self.dq
        mass = w.sum(axis=1)
        mean = (w * self.q_grid).sum(axis=1) / mass
        var = (w * (self.q_grid[None, :] - mean[:, None]) ** 2).sum(axis=1) / mass
        return mean, var


def crank_nicolson_evolve(psi0, V: Potential, lam: float, sigma_grid, q_grid, order: int = 4,
                          store_every: int = 1, edge_tol: float | None = 1e-12,
                          node_threshold: float = 1e-8, substeps: int = 1) -> QuantumProfile:
    """Unitary Crank-Nicolson evolution of ``i lam d_sigma psi = H psi``.

    Each interval of ``sigma_grid`` is covered by ``substeps`` equal CN steps.
    Only every ``store_every``-th slice (plus the last) is kept.  With
    ``edge_tol`` set, the run is rejected when |psi| at a box edge exceeds
    ``edge_tol`` times the initial peak.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    sigma_grid = np.asarray(sigma_grid, float)
    q_grid = np.asarray(q_grid, float)
    if substeps < 1 or store_every < 1:
        raise ValueError("substeps and store_every must be positive")
    ds = _uniform(sigma_grid, "sigma_grid") / substeps
    psi = np.asarray(psi0, complex).copy()
    if psi.shape != q_grid.shape or not np.all(np.isfinite(psi)):
        raise ValueError("initial data must be finite and match q_grid")
    H = discrete_hamiltonian(V, lam, q_grid, order)
    eye = sparse.identity(q_grid.size, format="csc", dtype=complex)
    A = (eye + 0.5j * ds / lam * H).tocsc()
    B = (eye - 0.5j * ds / lam * H).tocsr()
    try:
        lu = splinalg.splu(A)
    except RuntimeError as exc:
        raise ValueError(f"singular Crank-Nicolson assembly: {exc}") from exc

    keep = list(range(0, sigma_grid.size, store_every))
    if keep[-1] != sigma_grid.size - 1:
        keep.append(sigma_grid.size - 1)
    out = np.empty((len(keep), q_grid.size), complex)
    out[0] = psi
    slot = 1
    peak = np.abs(psi).max()
    edge = max(abs(psi[0]), abs(psi[-1]))
    for i in range(1, sigma_grid.size):
        for _ in range(substeps):
            psi = lu.solve(B @ psi)
        edge = max(edge, abs(psi[0]), abs(psi[-1]))
        if slot < len(keep) and keep[slot] == i:
            out[slot] = psi
            slot += 1
    if edge_tol is not None and edge > edge_tol * peak:
        raise BoundaryLeakageError(f"|psi| reaches {edge:.3e} at the q-box edge")
    f, g = extract_f_g(out, lam, node_threshold)
    return QuantumProfile(lam, sigma_grid[keep], q_grid, out, f, g)


def _runs(mask: np.ndarray):
    """Start/stop indices of contiguous True runs."""
    m = np.concatenate([[False], mask, [False]]).astype(int)
    d = np.diff(m)
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def extract_f_g(psi_tilde, lam: float, threshold: float = 1e-8, allow_nodes: bool = False):
    """Recover (f, g) from psi_tilde with phase unwrapping.

    Each slice is unwrapped outward from its maximum of |psi|; successive
    slices are stitched at the anchor.  Nodes (|psi| < threshold * max) are
    excluded and carry NaN.  A slice whose support splits into several
    components raises NodeCrossingError unless ``allow_nodes``, in which case
    only the anchor's component gets a phase.
    """
    psi = np.atleast_2d(np.asarray(psi_tilde, complex))
    g = np.abs(psi) ** 2
    f = np.full(psi.shape, np.nan)
    amp = np.abs(psi)
    prev = None
    for k in range(psi.shape[0]):
        valid = amp[k] >= threshold * amp[k].max()
        if not valid.any():
            raise NodeCrossingError(f"slice {k} has no support above the node threshold")
        anchor = int(np.argmax(amp[k]))
        runs = _runs(valid)
        if len(runs) > 1 and not allow_nodes:
            raise NodeCrossingError(f"slice {k}: support split by a node of psi_tilde")
        lo, hi = next((a, b) for a, b in runs if a <= anchor < b)
        phase = np.angle(psi[k, lo:hi])
        right = np.unwrap(phase[anchor - lo:])
        left = np.unwrap(phase[: anchor - lo + 1][::-1])[::-1]
        seg = np.concatenate([left[:-1], right])
        if prev is not None:
            overlap = np.isfinite(prev[lo:hi])
            if not overlap.any():
                raise NodeCrossingError(f"slice {k} does not overlap the previous phase region")
            j = anchor - lo if overlap[anchor - lo] else int(np.argmax(np.where(overlap, amp[k, lo:hi], -1)))
            seg = seg + 2 * np.pi * np.round((prev[lo + j] / lam - seg[j]) / (2 * np.pi))
        f[k, lo:hi] = lam * seg
        prev = f[k]
    return f, g


# -- residuals of the reduced equations ------------------------------------------


def _check_g(g_func, s, q, g_floor):
    gv = float(g_func(s, q))
    if gv <= g_floor:
        raise QuantumPotentialSingularity(f"g = {gv:.3e} at (sigma={s}, q={q})")
    return gv


def quantum_potential(g_func, lam: float, sigma: float, q: float, h: float = 1e-3, g_floor: float = 1e-300):
    """(lam^2/2) Delta_q sqrt(g) / sqrt(g); the HJ residual subtracts it."""
    gv = _check_g(g_func, sigma, q, g_floor)
    sq = lambda z: np.sqrt(g_func(z[0], z[1]))  # noqa: E731
    return 0.5 * lam**2 * _fd.second(sq, np.array([sigma, q]), 1, h, order=4) / np.sqrt(gv)


def quantum_hj_residual(f_func, g_func, V, lam: float, sigma: float, q: float, h: float = 1e-4,
                        classical: bool = False) -> float:
    """d_sigma f + (1/2) f_q^2 + V - (lam^2/2) Delta sqrt(g)/sqrt(g).

    ``classical=True`` drops the quantum potential (and then g may vanish).
    """
    z = np.array([sigma, q], float)
    ff = lambda y: f_func(y[0], y[1])  # noqa: E731
    fs = _fd.partial(ff, z, 0, h, order=4)
    fq = _fd.partial(ff, z, 1, h, order=4)
    res = fs + 0.5 * fq**2 + V(q)
    if not classical:
        res = res - quantum_potential(g_func, lam, sigma, q)
    return float(res)


def continuity_residual_quantum(f_func, g_func, sigma: float, q: float, h: float = 1e-4) -> float:
    """d_sigma g + d_q (g d_q f)."""
    z = np.array([sigma, q], float)
    gg = lambda y: g_func(y[0], y[1])  # noqa: E731
    flux = lambda y: g_func(y[0], y[1]) * _fd.partial(lambda w: f_func(w[0], w[1]), y, 1, h, 4)  # noqa: E731
    return float(_fd.partial(gg, z, 0, h, 4) + _fd.partial(flux, z, 1, h, 4))


# -- plane-wave B-elements -------------------------------------------------------


def planewave_psi(x, q, n, f_func, g_func, lam: float) -> BElement:
    """Psi = sqrt(g) exp(i f gamma.n / lam) at points x (4, ...) and q (...)."""
    n = np.asarray(n, float)
    if n[0] <= 0 or abs(minkowski_dot(n, n) - 1) > 1e-12:
        raise ValueError("n must be unit future timelike")
    x = np.asarray(x, float)
    sigma = np.tensordot(lower(n), x, axes=(0, 0))
    f = np.asarray(f_func(sigma, q), float)
    g = np.asarray(g_func(sigma, q), float)
    if np.any(g < 0):
        raise ValueError("g must be nonnegative")
    amp = np.sqrt(g)
    psi = amp * np.cos(f / lam)
    nl = lower(n).reshape((4,) + (1,) * f.ndim)
    return BElement(psi.astype(complex), 1j * amp * np.sin(f / lam) * nl)


def gaussian_planewave_grid(axes, q, n, omega: float, q0: float, lam: float) -> PsiGrid:
    def func(X, Q):
        return planewave_psi(X, Q, n, lambda s, qq: analytic_gaussian_profile(s, qq, omega, q0, lam)[0],
                             lambda s, qq: analytic_gaussian_profile(s, qq, omega, q0, lam)[1], lam)
    return PsiGrid.from_function(axes, q, func)


def hamiltonian_on_grid(field: PsiGrid, arr: np.ndarray, V, lam: float) -> np.ndarray:
    return -(lam**2) / 2 * field.lap_q(arr) + V(field.q) * arr


def kanatchikov_residual(field: PsiGrid, V, lam: float):
    """Residuals (r1, r2, r3) of the Kanatchikov system on the grid.

    r1[mu] = i lam d_mu psi - H psi_mu; r2 = i lam d_mu psi^mu - H psi;
    r3[k] = d_mu psi_nu - d_nu psi_mu over the pairs (01, 02, 03, 12, 13, 23).
    Edge nodes use one-sided stencils; compare on the interior.
    """
    field.check_resolution()
    psi, psi_mu = field.psi, field.psi_mu
    up = field.psi_upper()
    r1 = np.stack([1j * lam * field.dx(psi, m) - hamiltonian_on_grid(field, psi_mu[m], V, lam) for m in range(4)])
    div = sum(field.dx(up[m], m) for m in range(4))
    r2 = 1j * lam * div - hamiltonian_on_grid(field, psi, V, lam)
    r3 = np.stack([field.dx(psi_mu[b], a) - field.dx(psi_mu[a], b) for a, b in _PAIRS])
    return r1, r2, r3


def max_interior(field: PsiGrid, *residuals, margin: int = 1) -> float:
    mask = field.interior_mask(margin)
    return float(max(np.max(np.abs(r[..., mask])) for r in residuals))


# -- eigenmodes and single-mode solutions ------------------------------------------


@dataclass(frozen=True)
class Eigenmode:
    index: int
    energy: float
    profile: np.ndarray
    q_grid: np.ndarray


def _fix_sign(v):
    i = int(np.argmax(np.abs(v) > 1e-3 * np.abs(v).max()))
    return v if v[i] > 0 else -v


def hamiltonian_eigenmodes(V: Potential, lam: float, q_grid, count: int, order: int = 2) -> list[Eigenmode]:
    """Lowest ``count`` eigenpairs of the discrete Dirichlet Hamiltonian."""
    q_grid = np.asarray(q_grid, float)
    if not 0 < count < q_grid.size - 1:
        raise ValueError("count must be positive and below the grid size")
    dq = _uniform(q_grid, "q_grid")
    H = discrete_hamiltonian(V, lam, q_grid, order)
    shift = float(np.min(V(q_grid))) - 1.0
    try:
        vals, vecs = splinalg.eigsh(H, k=count, sigma=shift, which="LM")
    except splinalg.ArpackNoConvergence as exc:
        raise EigenSolverError(str(exc)) from exc
    idx = np.argsort(vals)
    return [
        Eigenmode(i, float(vals[j]), _fix_sign(vecs[:, j] / np.sqrt(dq)), q_grid)
        for i, j in enumerate(idx)
    ]


def tridiagonal_energies(V: Potential, lam: float, q_grid, count: int) -> np.ndarray:
    """Dense tridiagonal oracle for the second-order spectrum."""
    dq = _uniform(q_grid, "q_grid")
    d = lam**2 / dq**2 + V(np.asarray(q_grid, float))
    e = np.full(len(q_grid) - 1, -(lam**2) / (2 * dq**2))
    return eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1), eigvals_only=True)


def mode_solution(mode: Eigenmode, k, lam: float, axes, V: Potential, dispersion_tol: float = 1e-10):
    """psi = exp(-i k.x) profile(q), psi_mu = (lam k_mu / E) psi.

    Returns the PsiGrid and its Kanatchikov residuals.
    """
    k = np.asarray(k, float)
    E = mode.energy
    if E == 0:
        raise DispersionError("zero-energy mode has no separated solution")
    if abs(lam**2 * minkowski_dot(k, k) - E**2) > dispersion_tol * max(1.0, E**2):
        raise DispersionError("lam^2 k.k != E^2")
    kl = lower(k)

    def func(X, Q):
        phase = np.exp(-1j * np.tensordot(kl, X, axes=(0, 0)))
        prof = np.interp(Q, mode.q_grid, mode.profile)
        psi = phase * prof
        return BElement(psi, (lam / E) * kl.reshape((4,) + (1,) * psi.ndim) * psi)

    field = PsiGrid.from_function(axes, mode.q_grid, func)
    return field, kanatchikov_residual(field, V, lam)


# -- variational form ------------------------------------------------------------


@dataclass(frozen=True)
class VariationalResiduals:
    zeta: float
    rho: float
    u: np.ndarray  # (4,), index down
    constraint: float

    def components(self) -> np.ndarray:
        return np.concatenate([[self.zeta, self.rho], self.u, [self.constraint]])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components())))


def _z(x, q):
    return np.concatenate([np.asarray(x, float), np.atleast_1d(np.asarray(q, float))])


def _check_u(u):
    if u[0] <= 0 or minkowski_dot(u, u) <= 0:
        raise ValueError("u must be future timelike")


def _dudu(u_func, z, n, h):
    """d_a u^mu d^a u_mu (Minkowski contraction, Euclidean over a)."""
    du = _fd.gradient(u_func, z, range(4, 4 + n), h, order=4)
    return float(np.einsum("am,mn,an->", du, METRIC, du))


def variational_residuals(rho, zeta, u, V, lam: float, x, q, h: float = 1e-3) -> VariationalResiduals:
    """Residuals of the Euler-Lagrange system in polar variables.

    ``rho``, ``zeta`` are callables (x, q) -> float and ``u`` returns the
    contravariant 4-vector; ``V`` takes the field vector.  The multiplier
    Lambda is substituted from its closed form.
    """
    z = _z(x, q)
    n = z.size - 4
    R = lambda y: rho(y[:4], y[4:])  # noqa: E731
    Z = lambda y: zeta(y[:4], y[4:])  # noqa: E731
    U = lambda y: np.asarray(u(y[:4], y[4:]), float)  # noqa: E731
    u0 = U(z)
    _check_u(u0)
    r0, z0 = R(z), Z(z)
    s, c = np.sin(z0 / lam), np.cos(z0 / lam)
    s2, c2 = np.sin(2 * z0 / lam), np.cos(2 * z0 / lam)

    dzeta_x = _fd.gradient(Z, z, range(4), h, 4)
    dzeta_q = _fd.gradient(Z, z, range(4, 4 + n), h, 4)
    div_u = sum(_fd.partial(U, z, m, h, 4)[m] for m in range(4))
    dudu = _dudu(U, z, n, h)
    sq = lambda y: np.sqrt(R(y))  # noqa: E731
    lap_sqrt = sum(_fd.second(sq, z, 4 + a, h, 4) for a in range(n))

    zeta_res = (u0 @ dzeta_x + 0.5 * dzeta_q @ dzeta_q + float(V(z[4:])) + 0.5 * lam * s2 * div_u
                + 0.5 * lam**2 * s**2 * dudu - 0.5 * lam**2 * lap_sqrt / np.sqrt(r0))

    flux_t = lambda y: R(y) * U(y)  # noqa: E731
    flux_q = lambda y, a: R(y) * _fd.partial(Z, y, 4 + a, h, 4)  # noqa: E731
    rho_res = (sum(_fd.partial(flux_t, z, m, h, 4)[m] for m in range(4))
               + sum(_fd.partial(lambda y: flux_q(y, a), z, 4 + a, h, 4) for a in range(n))
               - r0 * c2 * div_u - 0.5 * lam * r0 * s2 * dudu)

    rs2 = lambda y: R(y) * np.sin(2 * Z(y) / lam)  # noqa: E731
    d_rs2 = _fd.gradient(rs2, z, range(4), h, 4)
    lam_mult = r0 * (u0 @ dzeta_x) - 0.5 * lam * (u0 @ d_rs2) + lam**2 * r0 * s**2 * dudu

    def inner(y, a):
        return R(y) * np.sin(Z(y) / lam) ** 2 * (METRIC @ _fd.partial(U, y, 4 + a, h, 4))

    lap_term = sum(_fd.partial(lambda y: inner(y, a), z, 4 + a, h, 4) for a in range(n))
    u_res = -r0 * dzeta_x + lam_mult * lower(u0) + 0.5 * lam * d_rs2 + lam**2 * lap_term

    return VariationalResiduals(float(zeta_res), float(rho_res), u_res, float(minkowski_dot(u0, u0) - 1))


@dataclass(frozen=True)
class LagrangianTerms:
    l_q: float
    l_c: float
    gap1: float
    gap2: float

    def identity_defect(self) -> float:
        return self.l_c - self.l_q - self.gap1 - self.gap2


def lagrangian_gap(rho, zeta, u, lam: float, x, q, V=None, h: float = 1e-3) -> LagrangianTerms:
    """Quantum and classical Lagrangian densities and the two gap terms."""
    z = _z(x, q)
    n = z.size - 4
    R = lambda y: rho(y[:4], y[4:])  # noqa: E731
    Z = lambda y: zeta(y[:4], y[4:])  # noqa: E731
    U = lambda y: np.asarray(u(y[:4], y[4:]), float)  # noqa: E731
    u0 = U(z)
    _check_u(u0)
    r0, z0 = R(z), Z(z)
    vq = 0.0 if V is None else float(V(z[4:]))
    s, c = np.sin(z0 / lam), np.cos(z0 / lam)
    dzeta_x = _fd.gradient(Z, z, range(4), h, 4)
    dzeta_q = _fd.gradient(Z, z, range(4, 4 + n), h, 4)
    div_u = sum(_fd.partial(U, z, m, h, 4)[m] for m in range(4))
    dudu = _dudu(U, z, n, h)
    grad_sqrt = _fd.gradient(lambda y: np.sqrt(R(y)), z, range(4, 4 + n), h, 4)
    fisher = float(grad_sqrt @ grad_sqrt)

    base = r0 * (u0 @ dzeta_x + 0.5 * dzeta_q @ dzeta_q + vq)
    l_q = base + lam * r0 * s * c * div_u + 0.5 * lam**2 * r0 * dudu * s**2 + 0.5 * lam**2 * fisher
    l_c = base + r0 * (z0 * div_u + 0.5 * z0**2 * dudu)
    gap1 = 0.5 * lam * r0 * div_u * (2 * z0 / lam - np.sin(2 * z0 / lam))
    gap2 = -0.5 * lam**2 * (fisher - r0 * dudu * (z0**2 / lam**2 - s**2))
    return LagrangianTerms(float(l_q), float(l_c), float(gap1), float(gap2))


def lagrangian_trace_form(psi_func, lam: float, x, q, V=None, h: float = 1e-3) -> float:
    """Quantum Lagrangian from the Clifford trace expression.

    ``psi_func(x, q) -> BElement`` at a point.  The Hamiltonian term is used in
    its integrated-by-parts form (lam^2/2) d_a Psibar d^a Psi + V Psibar Psi.
    """
    from .clifford import b_to_matrix, build_gamma_basis, dirac_adjoint, scalar_part

    gb = build_gamma_basis()
    z = _z(x, q)
    n = z.size - 4
    M = lambda y: b_to_matrix(psi_func(y[:4], y[4:]))  # noqa: E731
    m0 = M(z)
    bar = dirac_adjoint(m0)
    dM = [_fd.partial(M, z, k, h, 4) for k in range(4 + n)]
    gl = gb.gamma  # contravariant gamma^mu; d_mu lower index
    dirac = sum(bar @ gl[m] @ dM[m] - dirac_adjoint(dM[m]) @ gl[m] @ m0 for m in range(4))
    kin = sum(dirac_adjoint(dM[4 + a]) @ dM[4 + a] for a in range(n))
    vq = 0.0 if V is None else float(V(z[4:]))
    total = lam / 2j * dirac + 0.5 * lam**2 * kin + vq * (bar @ m0)
    val = scalar_part(total)
    return float(np.real(val))


# -- classical limit ---------------------------------------------------------------


@dataclass(frozen=True)
class LimitRow:
    lam: float
    g_std: float
    g_std_exact: float
    std_rel_err: float
    qp_center: float
    classical_residual: float
    f_gap_sup: float
    g_w1_gap: float


def classical_limit_sweep(lambda_list, omega: float = 1.0, q0: float = 1.0, sigma_max: float = 1.0,
                          q_range=(-8.0, 8.0), dq: float = 0.01, dsigma: float = 1e-3,
                          window_std: float = 3.0, store_every: int = 10) -> list[LimitRow]:
    """Quantum (Crank-Nicolson) vs classical oscillator on sigma in [0, sigma_max]."""
    lams = [float(v) for v in lambda_list]
    if any(v <= 0 for v in lams) or any(b >= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda list must be positive and strictly decreasing")
    if omega * sigma_max >= np.pi / 2 - 1e-8:
        raise CausticError("window reaches the classical caustic at omega sigma = pi/2")
    params = HarmonicParams(omega=omega, q0=q0)
    V = Potential.harmonic(omega)
    q = np.arange(q_range[0], q_range[1] + dq / 2, dq)
    nsteps = int(round(sigma_max / dsigma))
    sig = np.linspace(0.0, nsteps * dsigma, nsteps + 1)
    rows = []
    for lam in lams:
        psi0 = analytic_gaussian_psi(0.0, q, omega, q0, lam)
        prof = crank_nicolson_evolve(psi0, V, lam, sig, q, store_every=store_every)
        mean, var = prof.moments()
        exact = np.sqrt(lam / (2 * omega))
        std = np.sqrt(var)
        # quantum potential at the packet centre, second-order differences on the grid
        k = int(np.argmax(prof.g[-1]))
        sq = np.sqrt(prof.g[-1])
        qp = 0.5 * lam**2 * abs((sq[k + 1] - 2 * sq[k] + sq[k - 1]) / prof.dq**2 / sq[k])

        fq = np.gradient(prof.f, prof.q_grid, axis=1)
        fs = np.gradient(prof.f, prof.sigma_grid, axis=0)
        cl = np.abs(fs + 0.5 * fq**2 + V(prof.q_grid)[None, :])
        w = prof.g * prof.dq
        ok = np.isfinite(cl)
        cres = float(np.sum(np.where(ok, cl * w, 0.0)) / np.sum(np.where(ok, w, 0.0)))

        gap = 0.0
        for j, s in enumerate(prof.sigma_grid):
            band = np.abs(prof.q_grid - mean[j]) <= window_std * std[j]
            fc = oscillator_f(s, prof.q_grid[band], params)
            d = prof.f[j, band] - fc
            d = d - 2 * np.pi * lam * np.round((d[np.argmax(prof.g[j, band])]) / (2 * np.pi * lam))
            gap = max(gap, float(np.max(np.abs(d))))
        phi = q0 * np.cos(omega * prof.sigma_grid)
        w1 = np.sum(prof.g * np.abs(prof.q_grid[None, :] - phi[:, None]), axis=1) * prof.dq
        rows.append(LimitRow(lam, float(std[-1]), float(exact), float(np.max(np.abs(std / exact - 1))),
                             float(qp), cres, gap, float(np.max(w1))))
    return rows


# -- cut-off plane waves ------------------------------------------------------------


def erf_window(s, radius: float, width: float):
    """Smooth box: about 1 for |s| < radius - 2 width, Gaussian tails beyond radius."""
    s = np.asarray(s, float)
    return 0.5 * (special.erf((s + radius) / width) - special.erf((s - radius) / width))


def cutoff_planewave(psi_tilde0, V: Potential, lam: float, q_grid, radius: float, t_values,
                     ds: float = 0.05, ramp: float = 0.1, margin: float = 3.0) -> PsiGrid:
    """Plane wave along e0 cut off to |s| <= radius along x^1, evolved exactly.

    At t = 0, psi = w(s) Re(psi_tilde0) and psi_0 = i w(s) Im(psi_tilde0), with
    w an erf window of edge width ``ramp * radius``; psi_1 is
    fixed by the Kanatchikov constraint.  The solution is a finite sum over
    eigenmodes of the discrete Hamiltonian and Fourier modes in s on a periodic
    box that contains the domain of influence plus ``margin``.
    """
    q_grid = np.asarray(q_grid, float)
    t_values = np.atleast_1d(np.asarray(t_values, float))
    half = radius + np.max(np.abs(t_values)) + margin
    ns = int(2 ** np.ceil(np.log2(2 * half / ds)))
    s = (np.arange(ns) - ns // 2) * (2 * half / ns)
    w = erf_window(s, radius, ramp * radius)

    dq = _uniform(q_grid, "q_grid")
    d = lam**2 / dq**2 + V(q_grid)
    e = np.full(q_grid.size - 1, -(lam**2) / (2 * dq**2))
    E, modes = eigh_tridiagonal(d, e)
    if np.any(E <= 0):
        raise ValueError("cut-off construction needs a positive Hamiltonian")

    p0 = np.asarray(psi_tilde0, complex)
    c_psi = modes.T @ p0.real.astype(complex)  # mode coefficients (n,)
    c_psi0 = modes.T @ (1j * p0.imag)
    w_hat = np.fft.fft(w)
    kappa = 2 * np.pi * np.fft.fftfreq(ns, d=s[1] - s[0])
    # a_hat[n, k] for psi and psi_0 at t = 0
    psi_hat = np.outer(c_psi, w_hat)
    psi0_hat = np.outer(c_psi0, w_hat)
    Ek = E[:, None]
    om = np.sqrt(Ek**2 / lam**2 + kappa[None, :] ** 2)
    a_plus = 0.5 * (psi_hat + Ek * psi0_hat / (lam * om))
    a_minus = 0.5 * (psi_hat - Ek * psi0_hat / (lam * om))

    shape = (t_values.size, ns, 1, 1, q_grid.size)
    psi = np.empty(shape, complex)
    psi_mu = np.zeros((4,) + shape, complex)
    for i, t in enumerate(t_values):
        ep, em = np.exp(-1j * om * t), np.exp(1j * om * t)
        ph = a_plus * ep + a_minus * em
        p0h = (lam * om / Ek) * (a_plus * ep - a_minus * em)
        p1h = -lam * kappa[None, :] * ph / Ek
        for target, hat in ((psi[i], ph), (psi_mu[0, i], p0h), (psi_mu[1, i], p1h)):
            target[:, 0, 0, :] = (modes @ np.fft.ifft(hat, axis=1)).T
    return PsiGrid((t_values, s, [0.0], [0.0]), q_grid, psi, psi_mu)
