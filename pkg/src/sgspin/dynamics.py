"""Fixed-step RK4 and precession-frequency fitting shared by the classical models."""
import math

import numpy as np

from .errors import GateError

MAX_STEP_FRACTION = 0.05


def check_step(dt, omega):
    """Reject steps coarser than 5% of a precession period."""
    if dt <= 0:
        raise GateError(f"time step must be positive, got {dt}")
    if omega > 0:
        limit = MAX_STEP_FRACTION * 2 * math.pi / omega
        if dt > limit * (1 + 1e-12):
            raise GateError(f"dt = {dt:.4g} exceeds 0.05 of the precession period (limit {limit:.4g})")


def rk4(rhs, y0, t_end, dt, project=None):
    """Integrate ``y' = rhs(t, y)`` from 0 to ``t_end``.

    The last step is shortened to land on ``t_end``.  ``project`` is applied
    after every full step (used to enforce fixed spin magnitudes).
    """
    n_full = int(math.floor(t_end / dt + 1e-9))
    times = [0.0]
    y = np.array(y0, dtype=float)
    ys = [y.copy()]
    t = 0.0
    steps = [dt] * n_full
    rest = t_end - n_full * dt
    if rest > 1e-12 * max(dt, 1.0):
        steps.append(rest)
    for h in steps:
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if project is not None:
            y = project(y)
        t += h
        times.append(t)
        ys.append(y.copy())
    return np.array(times), np.array(ys)


def precession_frequency(times, axes):
    """Angular frequency of rotation about z from a time series of unit vectors.

    Least-squares slope of the unwrapped azimuth.
    """
    axes = np.asarray(axes)
    phase = np.unwrap(np.arctan2(axes[:, 1], axes[:, 0]))
    slope, _ = np.polyfit(np.asarray(times), phase, 1)
    return float(slope)
