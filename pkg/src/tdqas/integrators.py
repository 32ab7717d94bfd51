"""Fixed-step explicit integrators shared by all engines."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

Derivative = Callable[[float, np.ndarray], np.ndarray]


def euler_step(f: Derivative, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    return y + dt * f(t, y)


def rk4_step(f: Derivative, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + (dt / 2) * k1)
    k3 = f(t + dt / 2, y + (dt / 2) * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


STEPPERS = {"euler": euler_step, "rk4": rk4_step}


def time_steps(t0: float, t1: float, dt: float) -> list[tuple[float, float]]:
    """``(t_start, h)`` pairs covering ``[t0, t1]``; the last step may be short."""
    span = t1 - t0
    n = int(round(span / dt))
    if n < 1 or abs(n * dt - span) > 1e-9 * max(1.0, abs(span)):
        n = max(1, math.ceil(span / dt - 1e-9))
    steps = []
    for k in range(n):
        ts = t0 + k * dt
        te = t1 if k == n - 1 else t0 + (k + 1) * dt
        steps.append((ts, te - ts))
    return steps
