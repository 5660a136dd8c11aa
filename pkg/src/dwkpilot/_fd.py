"""Centered finite differences of callables at a point."""

from __future__ import annotations

import numpy as np

_FIRST = {
    2: ((-1, -0.5), (1, 0.5)),
    4: ((-2, 1 / 12), (-1, -2 / 3), (1, 2 / 3), (2, -1 / 12)),
}
_SECOND = {
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    4: ((-2, -1 / 12), (-1, 4 / 3), (0, -5 / 2), (1, 4 / 3), (2, -1 / 12)),
}


def _shift(z, axis, d):
    z = np.array(z, dtype=float)
    z[axis] += d
    return z


def partial(func, z, axis: int, h: float, order: int = 2):
    """d func / d z[axis] at z."""
    acc = 0.0
    for k, w in _FIRST[order]:
        acc = acc + w * np.asarray(func(_shift(z, axis, k * h)))
    return acc / h


def second(func, z, axis: int, h: float, order: int = 2):
    acc = 0.0
    for k, w in _SECOND[order]:
        acc = acc + w * np.asarray(func(_shift(z, axis, k * h)))
    return acc / h**2


def mixed(func, z, a: int, b: int, h: float, order: int = 2):
    if a == b:
        return second(func, z, a, h, order)
    return partial(lambda y: partial(func, y, b, h, order), z, a, h, order)


def gradient(func, z, axes, h: float, order: int = 2):
    """Stack of partials along ``axes`` (new leading axis)."""
    return np.stack([np.asarray(partial(func, z, ax, h, order)) for ax in axes])
