"""Wave functions sampled on a spacetime box times a field-value grid.

Spacetime axes with a single node denote directions along which the sampled
field is constant: their derivatives vanish and integrals along them are taken
per unit length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import BElement, lower

MIN_NODES = 5


class GridTooCoarseError(ValueError):
    pass


def _uniform_spacing(x: np.ndarray) -> float:
    d = np.diff(x)
    if d.size == 0:
        return 0.0
    h = d.mean()
    if h <= 0 or np.max(np.abs(d - h)) > 1e-9 * abs(h):
        raise ValueError("grid axes must be uniform with positive spacing")
    return float(h)


def d_axis(arr: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order first derivative; one-sided second order at the edges."""
    if arr.shape[axis] == 1:
        return np.zeros_like(arr)
    return np.gradient(arr, h, axis=axis, edge_order=2)


def laplacian_axis(arr: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order 3-point Laplacian, 4-point one-sided stencil at the edges."""
    a = np.moveaxis(arr, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = a[2:] - 2 * a[1:-1] + a[:-2]
    out[0] = 2 * a[0] - 5 * a[1] + 4 * a[2] - a[3]
    out[-1] = 2 * a[-1] - 5 * a[-2] + 4 * a[-3] - a[-4]
    return np.moveaxis(out / h**2, 0, axis)


@dataclass(frozen=True)
class PsiGrid:
    axes: tuple  # four 1-D coordinate arrays for x^0..x^3
    q: np.ndarray
    psi: np.ndarray  # (N0, N1, N2, N3, Nq)
    psi_mu: np.ndarray  # (4, N0, N1, N2, N3, Nq), index down

    def __post_init__(self):
        axes = tuple(np.atleast_1d(np.asarray(a, dtype=float)) for a in self.axes)
        if len(axes) != 4:
            raise ValueError("need four spacetime axes")
        q = np.asarray(self.q, dtype=float)
        shape = tuple(a.size for a in axes) + (q.size,)
        psi = np.asarray(self.psi, dtype=complex)
        psi_mu = np.asarray(self.psi_mu, dtype=complex)
        if psi.shape != shape or psi_mu.shape != (4,) + shape:
            raise ValueError(f"value shapes do not match grid {shape}")
        if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(psi_mu))):
            raise ValueError("PsiGrid values must be finite")
        for a in axes:
            _uniform_spacing(a)
        _uniform_spacing(q)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "psi_mu", psi_mu)

    @classmethod
    def from_function(cls, axes, q, func) -> "PsiGrid":
        """Sample ``func(X, Q) -> BElement`` with X of shape (4, N0..N3, Nq)."""
        axes = tuple(np.atleast_1d(np.asarray(a, dtype=float)) for a in axes)
        q = np.asarray(q, dtype=float)
        mesh = np.meshgrid(*axes, q, indexing="ij")
        b = func(np.stack(mesh[:4]), mesh[4])
        return cls(axes, q, np.broadcast_to(b.psi, mesh[4].shape), b.psi_mu)

    @property
    def shape(self) -> tuple:
        return self.psi.shape

    @property
    def dq(self) -> float:
        return _uniform_spacing(self.q)

    def spacing(self, mu: int) -> float:
        return _uniform_spacing(self.axes[mu])

    def active_axes(self) -> list[int]:
        return [m for m in range(4) if self.axes[m].size > 1]

    def check_resolution(self) -> None:
        for m in self.active_axes():
            if self.axes[m].size < MIN_NODES:
                raise GridTooCoarseError(f"axis x^{m} has fewer than {MIN_NODES} nodes")
        if self.q.size < MIN_NODES:
            raise GridTooCoarseError(f"q axis has fewer than {MIN_NODES} nodes")

    def element(self) -> BElement:
        return BElement(self.psi, self.psi_mu)

    def dx(self, arr: np.ndarray, mu: int) -> np.ndarray:
        """d/dx^mu of an array laid out like ``psi`` (extra leading axes allowed)."""
        axis = arr.ndim - 5 + mu
        return d_axis(arr, self.spacing(mu), axis)

    def dq_of(self, arr: np.ndarray) -> np.ndarray:
        return d_axis(arr, self.dq, arr.ndim - 1)

    def lap_q(self, arr: np.ndarray) -> np.ndarray:
        return laplacian_axis(arr, self.dq, arr.ndim - 1)

    def time_slice(self, i: int) -> "PsiGrid":
        return PsiGrid(
            (self.axes[0][i : i + 1],) + self.axes[1:],
            self.q,
            self.psi[i : i + 1],
            self.psi_mu[:, i : i + 1],
        )

    def interior_mask(self, margin: int = 1) -> np.ndarray:
        """True at nodes at least ``margin`` away from every active edge."""
        mask = np.ones(self.shape, dtype=bool)
        for ax in self.active_axes() + [4]:
            idx = [slice(None)] * 5
            idx[ax] = slice(0, margin)
            mask[tuple(idx)] = False
            idx[ax] = slice(self.shape[ax] - margin, None)
            mask[tuple(idx)] = False
        return mask

    def is_interior(self, at: tuple, margin: int = 1) -> bool:
        return bool(self.interior_mask(margin)[tuple(at)])

    def __add__(self, other: "PsiGrid") -> "PsiGrid":
        return PsiGrid(self.axes, self.q, self.psi + other.psi, self.psi_mu + other.psi_mu)

    def scaled(self, c: complex) -> "PsiGrid":
        return PsiGrid(self.axes, self.q, c * self.psi, c * self.psi_mu)

    def psi_upper(self) -> np.ndarray:
        return lower(self.psi_mu)
