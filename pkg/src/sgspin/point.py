"""Classical point electron with intrinsic moment and angular momentum.

The force law is q E + (q/c) v x B + k grad(m . B).  Agreement with the
rigid sphere needs k = 1, which ``consistency_c_fix=True`` (the default)
selects.  ``False`` keeps an extra 1/c on the dipole term, k = 1/c.
"""
from dataclasses import dataclass, field

import numpy as np

from .dynamics import check_step, precession_frequency, rk4
from .units import PhysParams, bohr_magneton


@dataclass(frozen=True)
class PointState:
    position: np.ndarray
    velocity: np.ndarray
    m_vec: np.ndarray
    params: PhysParams = field(default_factory=PhysParams)
    charge: float = None

    def __post_init__(self):
        for name in ("position", "velocity", "m_vec"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.charge is None:
            object.__setattr__(self, "charge", -self.params.charge_e)

    @classmethod
    def from_axis(cls, spin_axis, params=None, position=(0, 0, 0), velocity=(0, 0, 0)):
        """Electron with spin (angular momentum) along ``spin_axis``; the moment
        points the opposite way."""
        params = params or PhysParams()
        n = np.asarray(spin_axis, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(position, velocity, -bohr_magneton(params) * n, params)

    @property
    def mu(self):
        return bohr_magneton(self.params)

    @property
    def l_vec(self):
        """Intrinsic angular momentum, slaved antiparallel to m_vec with |L| = hbar/2."""
        norm = np.linalg.norm(self.m_vec)
        if norm == 0:
            return np.zeros(3)
        return -0.5 * self.params.hbar * self.m_vec / norm


def point_force(s, f, consistency_c_fix=True):
    x = s.position
    p = s.params
    lorentz = s.charge * f.e_at(x) + s.charge / p.c * np.cross(s.velocity, f.b_at(x))
    dipole = f.b_jacobian_at(x).T @ s.m_vec
    if not consistency_c_fix:
        dipole = dipole / p.c
    return lorentz + dipole


def point_torque(s, f):
    return np.cross(s.m_vec, f.b_at(s.position))


def point_potential(s, f):
    """U = -m . B at the particle."""
    return -float(np.dot(s.m_vec, f.b_at(s.position)))


@dataclass
class PointTrajectory:
    times: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    m_vec: np.ndarray
    params: PhysParams

    CSV_HEADER = ("t", "x", "y", "z", "vx", "vy", "vz", "mx", "my", "mz")

    @property
    def final(self):
        return PointState(self.position[-1], self.velocity[-1], self.m_vec[-1], self.params)

    @property
    def l_vec(self):
        norms = np.linalg.norm(self.m_vec, axis=1, keepdims=True)
        return -0.5 * self.params.hbar * self.m_vec / norms

    def momentum(self):
        return self.params.mass * self.velocity

    def precession_frequency(self):
        return precession_frequency(self.times, -self.m_vec)

    def rows(self):
        return np.column_stack([self.times, self.position, self.velocity, self.m_vec])


def integrate_point(s0, f, t_end, dt, consistency_c_fix=True):
    """RK4 on (position, velocity, m_vec); |m_vec| is reset to mu every step.

    dm/dt = (2 mu / hbar) B x m follows from dL/dt = m x B with L = -(hbar/2mu) m.
    """
    p = s0.params
    mu = s0.mu
    omega = 2.0 * mu * np.linalg.norm(f.b_at(s0.position)) / p.hbar
    check_step(dt, omega)
    gyro = 2.0 * mu / p.hbar

    def rhs(t, y):
        x, v, m = y[0:3], y[3:6], y[6:9]
        s = PointState(x, v, m, p, s0.charge)
        a = point_force(s, f, consistency_c_fix) / p.mass
        return np.concatenate([v, a, gyro * np.cross(f.b_at(x), m)])

    def project(y):
        norm = np.linalg.norm(y[6:9])
        if norm > 0:
            y[6:9] *= mu / norm
        return y

    y0 = np.concatenate([s0.position, s0.velocity, s0.m_vec])
    times, ys = rk4(rhs, y0, t_end, dt, project)
    return PointTrajectory(times, ys[:, 0:3], ys[:, 3:6], ys[:, 6:9], p)
