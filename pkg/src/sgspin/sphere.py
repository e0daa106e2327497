"""Classical rigid-sphere electron.

A ball of radius R with uniform mass m and charge -e.  Charge and mass flow
are independent: the current density gives magnetic moment -mu n and the
momentum density gives angular momentum (hbar/2) n, for a unit spin axis n.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .dynamics import check_step, precession_frequency, rk4
from .errors import GridError
from .units import PhysParams, bohr_magneton


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("spin axis must be non-zero")
    return v / n


@dataclass(frozen=True)
class SphereState:
    center: np.ndarray
    momentum: np.ndarray
    spin_axis: np.ndarray
    params: PhysParams = field(default_factory=PhysParams)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "momentum", np.asarray(self.momentum, dtype=float))
        axis = np.asarray(self.spin_axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("spin_axis must be a unit vector")
        object.__setattr__(self, "spin_axis", axis)

    @classmethod
    def at_rest(cls, spin_axis, params=None, center=(0.0, 0.0, 0.0)):
        return cls(np.asarray(center, float), np.zeros(3), _unit(spin_axis),
                   params or PhysParams())

    @property
    def mu(self):
        return bohr_magneton(self.params)

    @property
    def radius(self):
        return self.params.R

    @property
    def m_vec(self):
        return -self.mu * self.spin_axis

    @property
    def angular_momentum(self):
        return 0.5 * self.params.hbar * self.spin_axis

    @property
    def charge_density(self):
        return -3.0 * self.params.charge_e / (4.0 * math.pi * self.radius ** 3)


def _current_coeff(s):
    return 15.0 * s.mu * s.params.c / (4.0 * math.pi * s.radius ** 5)


def _momentum_coeff(s):
    return -15.0 * s.params.hbar / (16.0 * math.pi * s.radius ** 5)


def _rel_inside(s, x):
    r = np.asarray(x, dtype=float) - s.center
    inside = np.einsum("...i,...i->...", r, r) <= s.radius ** 2
    return r, inside


def sphere_current_density(s, x):
    """J = (15 mu c / 4 pi R^5) (r x n) inside the ball, zero outside."""
    r, inside = _rel_inside(s, x)
    return _current_coeff(s) * np.cross(r, s.spin_axis) * inside[..., None]


def sphere_momentum_density(s, x):
    """G = -(15 hbar / 16 pi R^5) (r x n) inside the ball."""
    r, inside = _rel_inside(s, x)
    return _momentum_coeff(s) * np.cross(r, s.spin_axis) * inside[..., None]


def sphere_force_density(s, f, x):
    """Lorentz force density rho E + J x B / c."""
    x = np.asarray(x, dtype=float)
    _, inside = _rel_inside(s, x)
    J = sphere_current_density(s, x)
    rho = s.charge_density * inside[..., None]
    return rho * f.e_at(x) + np.cross(J, f.b_at(x)) / s.params.c


def equator_speed(p):
    """Flow speed at the equator, |G| / rho_mass at distance R from the axis."""
    return 5.0 * p.hbar / (4.0 * p.mass * p.R)


@dataclass(frozen=True)
class SubluminalReport:
    equator_speed: float
    c: float
    ratio: float
    passed: bool
    at_boundary: bool

    def __str__(self):
        flag = " (at boundary)" if self.at_boundary else ""
        verdict = "pass" if self.passed else "FAIL"
        return f"equator speed = {self.ratio:.4g} c: {verdict}{flag}"


def validate_subluminal(p):
    v = equator_speed(p)
    ratio = v / p.c
    at_boundary = math.isclose(ratio, 1.0, rel_tol=1e-12)
    return SubluminalReport(v, p.c, ratio, ratio < 1.0 or at_boundary, at_boundary)


# ---------------------------------------------------------------------------
# Quadratures
# ---------------------------------------------------------------------------


def _check_contains(s, g):
    for a in range(3):
        if abs(s.center[a]) + s.radius > g.box_halfwidth[a]:
            raise GridError("grid box does not contain the sphere")


def _ball(s, g, f=None):
    _check_contains(s, g)
    kw = {}
    if f is not None:
        aff = f.affine
        kw = dict(b_ref=aff.b_ref, b_grad=aff.b_grad, e_ref=aff.e_ref, e_grad=aff.e_grad)
    return kernels.ball_quadrature(g.dims, g.box_halfwidth, s.center, s.radius,
                                   s.spin_axis, **kw)


def net_current_quadrature(s, g):
    return _current_coeff(s) * _ball(s, g)[0]


def magnetic_moment_quadrature(s, g):
    """m = (1/2c) int r x J dV by the midpoint rule."""
    return _current_coeff(s) / (2.0 * s.params.c) * _ball(s, g)[1]


def angular_momentum_quadrature(s, g):
    """L = int r x G dV by the midpoint rule."""
    return _momentum_coeff(s) * _ball(s, g)[1]


def _generic_force_torque(s, f, g):
    _check_contains(s, g)
    pos = g.positions()
    dens = sphere_force_density(s, f, pos)
    r = pos - s.center
    dv = g.cell_volume
    return dens.sum(axis=(0, 1, 2)) * dv, np.cross(r, dens).sum(axis=(0, 1, 2)) * dv


def sphere_total_force(s, f, g):
    if f.affine is None:
        return _generic_force_torque(s, f, g)[0]
    q = _ball(s, g, f)
    return s.charge_density * q[4] + _current_coeff(s) / s.params.c * q[2]


def sphere_torque(s, f, g):
    """Torque about the sphere centre, int r x f dV."""
    if f.affine is None:
        return _generic_force_torque(s, f, g)[1]
    q = _ball(s, g, f)
    return s.charge_density * q[5] + _current_coeff(s) / s.params.c * q[3]


# ---------------------------------------------------------------------------
# Dipole energy
# ---------------------------------------------------------------------------


def potential_energy(m_vec, f, x):
    """U = -m . B."""
    return -np.einsum("...i,...i->...", np.asarray(m_vec, float), f.b_at(x))


def potential_force(m_vec, f, x):
    """F = grad(m . B), from the analytic field Jacobian."""
    jac = f.b_jacobian_at(np.asarray(x, dtype=float))
    return np.einsum("...ij,...i->...j", jac, np.asarray(m_vec, dtype=float))


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------


@dataclass
class RigidTrajectory:
    times: np.ndarray
    center: np.ndarray
    momentum: np.ndarray
    spin_axis: np.ndarray
    params: PhysParams

    @property
    def states(self):
        return [SphereState(c, p, n, self.params)
                for c, p, n in zip(self.center, self.momentum, self.spin_axis)]

    @property
    def final(self):
        return SphereState(self.center[-1], self.momentum[-1], self.spin_axis[-1], self.params)

    def velocity(self):
        return self.momentum / self.params.mass

    def precession_frequency(self):
        return precession_frequency(self.times, self.spin_axis)

    def rows(self):
        """(t, center, momentum, spin_axis) rows for CSV export."""
        return np.column_stack([self.times, self.center, self.momentum, self.spin_axis])

    CSV_HEADER = ("t", "x", "y", "z", "px", "py", "pz", "nx", "ny", "nz")


def integrate_rigid(s0, f, t_end, dt, force="closed", grid=None):
    """RK4 for centre, momentum and spin axis in the field ``f``.

    ``force="closed"`` uses grad(m.B) + q(E + v x B / c) at the centre, which
    equals the ball quadrature exactly for affine fields.  ``force="quadrature"``
    re-evaluates the grid quadrature at every stage (slow; needs ``grid``).
    The spin axis is renormalised after every step.
    """
    p = s0.params
    mu = s0.mu
    q = -p.charge_e
    omega = 2.0 * mu * np.linalg.norm(f.b_at(s0.center)) / p.hbar
    check_step(dt, omega)
    if force == "quadrature" and grid is None:
        raise ValueError("quadrature force needs a grid")

    def rhs(t, y):
        c, mom, n = y[0:3], y[3:6], y[6:9]
        b = f.b_at(c)
        v = mom / p.mass
        if force == "closed":
            F = potential_force(-mu * n, f, c) + q * f.e_at(c)
        else:
            s = SphereState(c, mom, n / np.linalg.norm(n), p)
            F = sphere_total_force(s, f, grid)
        F = F + q / p.c * np.cross(v, b)
        dn = 2.0 * mu / p.hbar * np.cross(b, n)
        return np.concatenate([v, F, dn])

    def project(y):
        y[6:9] /= np.linalg.norm(y[6:9])
        return y

    y0 = np.concatenate([s0.center, s0.momentum, s0.spin_axis])
    times, ys = rk4(rhs, y0, t_end, dt, project)
    return RigidTrajectory(times, ys[:, 0:3], ys[:, 3:6], ys[:, 6:9], p)
