"""Fixed-step classical Runge-Kutta (order 4)."""

from __future__ import annotations

import numpy as np


def rk4_step(fun, t, y, h):
    k1 = fun(t, y)
    k2 = fun(t + h / 2, y + h / 2 * k1)
    k3 = fun(t + h / 2, y + h / 2 * k2)
    k4 = fun(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4(fun, t0: float, y0, h: float, n_steps: int):
    """Integrate ``y' = fun(t, y)``; returns times (n+1,) and states (n+1, ...)."""
    y = np.asarray(y0, dtype=float)
    ts = t0 + h * np.arange(n_steps + 1)
    out = np.empty((n_steps + 1,) + y.shape)
    out[0] = y
    for i in range(n_steps):
        y = rk4_step(fun, ts[i], y, h)
        out[i + 1] = y
    return ts, out
