"""Explicit one-step time integrators shared by the evolution drivers."""
from __future__ import annotations

from typing import Callable

__all__ = ["rk4_step", "euler_step", "STEPPERS"]


def rk4_step(rhs: Callable, x, dt: float):
    """Classical fourth-order Runge-Kutta step for ``x' = rhs(x)``."""
    k1 = rhs(x)
    k2 = rhs(x + (0.5 * dt) * k1)
    k3 = rhs(x + (0.5 * dt) * k2)
    k4 = rhs(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def euler_step(rhs: Callable, x, dt: float):
    return x + dt * rhs(x)


STEPPERS = {"rk4": rk4_step, "euler": euler_step}
