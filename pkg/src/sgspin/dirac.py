"""Four-component Dirac field treated classically.

Upper pair chi_u, lower pair chi_l.  In the non-relativistic limit chi_l is
slaved to chi_u, so free evolution moves chi_u with the two-component solver
and rebuilds chi_l afterwards.  The rest-energy phase exp(-i m c^2 t / hbar)
is never put on the grid; its accumulated time is kept in ``rest_phase_time``.
Lifted fields are not renormalised.
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import GridError
from .fields import ScalarGridField, VecGridField, sample_field, sample_scalar, zero_field
from .pauli import (PAULI, GaussianPacketSpec, SpinorField2, free_evolve_analytic,
                    free_evolve_spectral, spectral_gradient, spin_amplitudes)
from .units import PhysParams, bohr_magneton, require_nonrelativistic

_Z2 = np.zeros((2, 2), dtype=complex)
_I2 = np.eye(2, dtype=complex)


def _offdiag(s):
    return np.block([[_Z2, s], [s, _Z2]])


ALPHA = tuple(_offdiag(s) for s in PAULI)
BETA = np.block([[_I2, _Z2], [_Z2, -_I2]])


@dataclass(frozen=True)
class DiracMatrices:
    alpha_x: np.ndarray = ALPHA[0]
    alpha_y: np.ndarray = ALPHA[1]
    alpha_z: np.ndarray = ALPHA[2]
    beta: np.ndarray = BETA

    @property
    def alpha(self):
        return (self.alpha_x, self.alpha_y, self.alpha_z)


@dataclass
class SpinorField4:
    grid: object
    values: np.ndarray
    params: PhysParams = field(default_factory=PhysParams)
    rest_phase_time: float = 0.0
    packet: Optional[GaussianPacketSpec] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (4,) + self.grid.dims:
            raise GridError(f"4-spinor shape {self.values.shape} != (4,) + {self.grid.dims}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("4-spinor field has non-finite values")

    @property
    def upper(self):
        return self.values[:2]

    @property
    def lower(self):
        return self.values[2:]

    def norm2(self):
        return float(self.grid.integrate(np.sum(np.abs(self.values) ** 2, axis=0)))

    def rest_phase(self):
        p = self.params
        return complex(np.exp(-1j * p.mass * p.c ** 2 * self.rest_phase_time / p.hbar))

    def upper_field(self):
        return SpinorField2(self.grid, self.values[:2].copy(), self.params, self.packet,
                            dict(self.meta))


def _sigma_dot(vec, chi):
    """(sigma . v) chi for vector components v[0..2] and a two-spinor chi."""
    vx, vy, vz = vec
    u, l = chi
    return np.stack([vz * u + (vx - 1j * vy) * l, (vx + 1j * vy) * u - vz * l])


def lift_to_dirac(chi_u, f=None, p=None):
    """chi_l = (-i hbar c sigma.grad + e sigma.A - e phi) chi_u / (2 m c^2)."""
    p = p or chi_u.params
    require_nonrelativistic(p)
    f = f or zero_field()
    g = chi_u.grid
    u = chi_u.values
    grad = spectral_gradient(u, g)  # (3, 2, ...)
    gu, gl = grad[:, 0], grad[:, 1]
    kin = np.stack([gu[2] + gl[0] - 1j * gl[1], gu[0] + 1j * gu[1] - gl[2]])
    A = sample_field(f.a_at, g).values
    phi = sample_scalar(f.phi_at, g).values
    lower = (-1j * p.hbar * p.c * kin + p.charge_e * _sigma_dot(A, u)
             - p.charge_e * phi * u) / (2 * p.mass * p.c ** 2)
    return SpinorField4(g, np.concatenate([u, lower]), p,
                        chi_u.meta.get("t", 0.0), chi_u.packet, dict(chi_u.meta))


# ---------------------------------------------------------------------------
# Closed-form prepared states
# ---------------------------------------------------------------------------


def _branch4(pos, p, sign, kicked):
    """Lifted Gaussian with spin along +z (sign=+1) or -z (sign=-1), optionally
    after the field pass.  Rest phase excluded."""
    d, hbar, m, c = p.d, p.hbar, p.mass, p.c
    x, y, z = pos[..., 0], pos[..., 1], pos[..., 2]
    gauss = (1.0 / (np.pi * d * d)) ** 0.75 * np.exp(-(x * x + y * y + z * z) / (2 * d * d))
    eps = hbar / (2 * m * c * d * d)
    shift = 0.0
    if kicked:
        mu = bohr_magneton(p)
        gauss = gauss * np.exp(sign * 1j * mu * (p.eta * z - p.B0) * p.dt_field / hbar)
        shift = mu * p.eta * p.dt_field / (2 * m * c)
    zero = np.zeros_like(gauss)
    if sign > 0:
        comps = [gauss, zero, (eps * 1j * z + shift) * gauss, eps * (1j * x - y) * gauss]
    else:
        comps = [zero, gauss, eps * (1j * x + y) * gauss, (-eps * 1j * z + shift) * gauss]
    return np.stack(comps)


PREPARED = ("z_up_pre", "z_up_post", "x_up_pre", "x_up_post")


def prepared_state(which, p, g, theta=None, phi=0.0):
    """Closed-form lifted Gaussian before or after the field pass.

    ``which`` is one of ``PREPARED``; passing ``theta`` overrides the spin
    direction with polar angle theta and azimuth phi.
    """
    if which not in PREPARED:
        raise ValueError(f"unknown prepared state {which!r}; choose from {PREPARED}")
    if min(g.box_halfwidth) < 5 * p.d - 1e-12:
        raise GridError("prepared states need a box halfwidth of at least 5d")
    kicked = which.endswith("_post")
    if theta is None:
        theta = 0.0 if which.startswith("z") else np.pi / 2
    a, b = spin_amplitudes(theta, phi)
    pos = g.positions()
    vals = np.zeros((4,) + g.dims, dtype=complex)
    if a != 0:
        vals += a * _branch4(pos, p, +1, kicked)
    if b != 0:
        vals += b * _branch4(pos, p, -1, kicked)
    spec = GaussianPacketSpec.from_params(p, (a, b))
    if kicked:
        spec = spec.kicked(p)
    return SpinorField4(g, vals, p, p.dt_field if kicked else 0.0, spec,
                        {"prepared": which, "theta": float(theta), "phi": float(phi)})


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


def charge_density(psi, p=None):
    """rho = -e psi^dagger psi."""
    p = p or psi.params
    rho, _ = kernels.dirac_bilinears(psi.values)
    return ScalarGridField(psi.grid, -p.charge_e * rho)


def current_density(psi, p=None):
    """J = -e c psi^dagger alpha psi."""
    p = p or psi.params
    _, cur = kernels.dirac_bilinears(psi.values)
    return VecGridField(psi.grid, -p.charge_e * p.c * cur)


def dirac_force_density(psi, f, p=None):
    """rho E + J x B / c at every node."""
    p = p or psi.params
    g = psi.grid
    rho = charge_density(psi, p).values
    J = current_density(psi, p).values
    E = sample_field(f.e_at, g).values
    B = sample_field(f.b_at, g).values
    return VecGridField(g, rho * E + np.cross(J, B, axis=0) / p.c)


def dirac_total_force(psi, f, p=None):
    return dirac_force_density(psi, f, p).integral()


def post_field_current_xup(p, g):
    """Current of the x-up field state right after the field pass.

    The transverse rotation pattern turns with the local Larmor phase
    2 mu (B0 - eta z) dt / hbar; each arm also carries the drift term.
    """
    mu = bohr_magneton(p)
    pos = g.positions()
    x, y, z = pos[..., 0], pos[..., 1], pos[..., 2]
    d = p.d
    env = (1.0 / (np.pi * d * d)) ** 1.5 * np.exp(-(x * x + y * y + z * z) / (d * d))
    rot = 2 * mu * p.c / (d * d)
    drift = p.charge_e * mu * p.eta * p.dt_field / p.mass
    phase = 2 * mu * (p.B0 - p.eta * z) * p.dt_field / p.hbar
    cs, sn = np.cos(phase), np.sin(phase)
    # x cross xhat = (0, z, -y); x cross yhat = (-z, 0, x)
    jx = -drift * cs - rot * z * sn
    jy = rot * z * cs - drift * sn
    jz = -rot * y * cs + rot * x * sn
    return VecGridField(g, env * np.stack([jx, jy, jz]))


# ---------------------------------------------------------------------------
# Free evolution through the non-relativistic reduction
# ---------------------------------------------------------------------------


def evolve_nr(psi, t, p=None, method="spectral", **spectral_kw):
    """Move chi_u freely for time t and rebuild chi_l with A = phi = 0.

    ``method="analytic"`` uses the closed-form Gaussian (needs ``psi.packet``).
    """
    p = p or psi.params
    require_nonrelativistic(p)
    chi = psi.upper_field()
    if method == "analytic":
        if psi.packet is None:
            raise ValueError("analytic evolution needs a known Gaussian packet")
        t0 = psi.meta.get("t", 0.0)
        moved = free_evolve_analytic(psi.packet, t0 + t, psi.grid, p)
    elif method == "spectral":
        moved = free_evolve_spectral(chi, t, **spectral_kw) if t != 0 else chi
    else:
        raise ValueError(f"unknown evolution method {method!r}")
    out = lift_to_dirac(moved, zero_field(), p)
    out.rest_phase_time = psi.rest_phase_time + float(t)
    out.meta = dict(psi.meta)
    out.meta.update(moved.meta)
    out.meta["t"] = psi.meta.get("t", 0.0) + float(t)
    return out


def lump_fractions(theta, phi=0.0):
    """Squared z-basis amplitudes of a spin along (theta, phi)."""
    a, b = spin_amplitudes(theta, phi)
    up = abs(a) ** 2
    return up, 1.0 - up
