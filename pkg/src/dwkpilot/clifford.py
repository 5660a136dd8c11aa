"""Complexified spacetime Clifford algebra in the Dirac representation.

Clifford numbers are plain ``(..., 4, 4)`` complex arrays.  Elements of the
five-dimensional subspace spanned by ``{I, gamma^0..gamma^3}`` are carried as
:class:`BElement`, with the vector part stored index-down.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class GammaBasis:
    gamma: np.ndarray  # (4, 4, 4): gamma[mu] = gamma^mu
    identity: np.ndarray
    gamma5: np.ndarray
    metric: np.ndarray

    @property
    def gamma_lower(self) -> np.ndarray:
        """gamma_mu = eta_{mu nu} gamma^nu."""
        return np.einsum("mn,nab->mab", self.metric, self.gamma)


@lru_cache(maxsize=1)
def build_gamma_basis() -> GammaBasis:
    """Dirac representation; every entry is one of 0, +-1, +-i."""
    zero = np.zeros((2, 2), dtype=complex)
    eye2 = np.eye(2, dtype=complex)
    g0 = np.block([[eye2, zero], [zero, -eye2]])
    gk = [np.block([[zero, s], [-s, zero]]) for s in _PAULI]
    gamma = np.stack([g0, *gk])
    gamma.setflags(write=False)
    g5 = 1j * gamma[0] @ gamma[1] @ gamma[2] @ gamma[3]
    ident = np.eye(4, dtype=complex)
    for arr in (g5, ident):
        arr.setflags(write=False)
    metric = METRIC.copy()
    metric.setflags(write=False)
    return GammaBasis(gamma=gamma, identity=ident, gamma5=g5, metric=metric)


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def clifford_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.matmul(a, b)


def dirac_adjoint(a: np.ndarray) -> np.ndarray:
    """Dirac adjoint gamma^0 a^dagger gamma^0 (broadcasts over leading axes)."""
    g0 = build_gamma_basis().gamma[0]
    return g0 @ np.conj(np.swapaxes(a, -1, -2)) @ g0


def scalar_part(a: np.ndarray) -> complex | np.ndarray:
    """Coefficient of I, i.e. tr(a)/4."""
    return np.trace(a, axis1=-2, axis2=-1) / 4.0


def lower(v: np.ndarray) -> np.ndarray:
    """Lower (or raise) the leading 4-index with eta."""
    v = np.asarray(v)
    return np.tensordot(METRIC, v, axes=(1, 0))


def minkowski_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """eta(a, b) contracting the leading axis of two contravariant vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]


@dataclass(frozen=True)
class BElement:
    """psi I + psi_mu gamma^mu; ``psi_mu`` has the 4-index first."""

    psi: complex | np.ndarray
    psi_mu: np.ndarray

    def __post_init__(self):
        psi_mu = np.asarray(self.psi_mu, dtype=complex)
        if psi_mu.shape[:1] != (4,):
            raise ValueError("psi_mu must have a leading axis of length 4")
        object.__setattr__(self, "psi_mu", psi_mu)
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=complex))

    @property
    def psi_upper(self) -> np.ndarray:
        return lower(self.psi_mu)

    def conj(self) -> "BElement":
        """Components of the Dirac adjoint, which stays inside B."""
        return BElement(np.conj(self.psi), np.conj(self.psi_mu))

    def __add__(self, other: "BElement") -> "BElement":
        return BElement(self.psi + other.psi, self.psi_mu + other.psi_mu)

    def __mul__(self, c) -> "BElement":
        return BElement(c * self.psi, c * self.psi_mu)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PolarData:
    """Amplitude-squared ``rho``, phase magnitude ``zeta`` and unit timelike ``u``."""

    rho: float | np.ndarray
    zeta: float | np.ndarray
    u: np.ndarray  # contravariant, leading axis 4

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        zeta = np.asarray(self.zeta, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if u.shape[:1] != (4,):
            raise ValueError("u must have a leading axis of length 4")
        if np.any(rho < 0):
            raise ValueError("rho must be nonnegative")
        if np.any(zeta < 0):
            raise ValueError("zeta must be nonnegative")
        norm = minkowski_dot(u, u)
        if np.any(np.abs(norm - 1.0) > 1e-12 * np.maximum(1.0, u[0] ** 2)):
            raise ValueError("u must satisfy eta(u, u) = 1")
        if np.any(u[0] <= 0):
            raise ValueError("u must be future directed")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "u", u)


def b_from_polar(p: PolarData, lam: float) -> BElement:
    """psi = sqrt(rho) cos(zeta/lam), psi_mu = i sqrt(rho) sin(zeta/lam) u_mu."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    amp = np.sqrt(p.rho)
    theta = p.zeta / lam
    # sin(0) = 0 already removes the 0/0 of the S_mu/|S| form at zeta = 0
    psi = amp * np.cos(theta)
    psi_mu = 1j * amp * np.sin(theta) * lower(p.u)
    return BElement(psi, psi_mu)


def b_to_matrix(b: BElement) -> np.ndarray:
    basis = build_gamma_basis()
    psi = np.asarray(b.psi)
    out = psi[..., None, None] * basis.identity
    out = out + np.einsum("m...,mab->...ab", b.psi_mu, basis.gamma)
    return out


def matrix_to_b(a: np.ndarray) -> tuple[BElement, float | np.ndarray]:
    """Project onto span{I, gamma^mu} using the trace inner product.

    The residual is the Frobenius norm of whatever lies outside the span.
    """
    basis = build_gamma_basis()
    a = np.asarray(a, dtype=complex)
    psi = scalar_part(a)
    # tr(gamma_mu gamma^nu) = 4 delta_mu^nu
    psi_mu = np.stack(
        [scalar_part(basis.gamma_lower[m] @ a) for m in range(4)]
    )
    rest = a - b_to_matrix(BElement(psi, psi_mu))
    residual = np.sqrt(np.sum(np.abs(rest) ** 2, axis=(-2, -1)))
    return BElement(psi, psi_mu), residual


def pairing_density(phi: BElement, psi: BElement) -> complex | np.ndarray:
    """Pointwise integrand (bar(Psi) Phi)_sc of the bilinear form, component form."""
    return np.conj(psi.psi) * phi.psi + np.sum(
        np.conj(psi.psi_mu) * lower(phi.psi_mu), axis=0
    )
