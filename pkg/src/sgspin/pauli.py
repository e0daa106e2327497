"""Two-component spinor packets: Stern-Gerlach phase kick, free evolution and
observables.

The in-field evolution keeps only the interaction term for a time dt_field
(the packet does not move or spread while in the field); afterwards the packet
evolves freely.  Free evolution is available both as the closed-form Gaussian
solution and as an exact-in-time FFT propagator on a periodic box.
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import GateError, GridError
from .fields import Grid3, ScalarGridField, sg_field
from .units import PhysParams, bohr_magneton

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)
IDENTITY2 = np.eye(2, dtype=complex)

MARGIN_WIDTHS = 3.0
MARGIN_TOL = 1e-4


def spin_amplitudes(theta, phi=0.0):
    """z-basis amplitudes of a spin pointing along polar angle theta, azimuth phi."""
    return complex(np.cos(theta / 2)), complex(np.exp(1j * phi) * np.sin(theta / 2))


@dataclass(frozen=True)
class KickPhase:
    """Record of an interaction-only pass through the field."""
    mu: float
    B0: float
    eta: float
    dt_field: float


@dataclass(frozen=True)
class GaussianPacketSpec:
    d: float
    spin: tuple = (1.0 + 0j, 0j)
    center: tuple = (0.0, 0.0, 0.0)
    hbar: float = 1.0
    mass: float = 1.0
    phase_params: Optional[KickPhase] = None

    def __post_init__(self):
        a, b = (complex(v) for v in self.spin)
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-12:
            raise ValueError("spin amplitudes must be normalised")
        object.__setattr__(self, "spin", (a, b))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    @classmethod
    def from_params(cls, p, spin=(1.0, 0.0), center=(0.0, 0.0, 0.0)):
        return cls(p.d, spin, center, p.hbar, p.mass)

    def kicked(self, p):
        return replace(self, phase_params=KickPhase(bohr_magneton(p), p.B0, p.eta, p.dt_field))

    @property
    def p_kick(self):
        k = self.phase_params
        return 0.0 if k is None else k.mu * k.eta * k.dt_field


@dataclass
class SpinorField2:
    """Two complex components per node, ``values.shape == (2, nx, ny, nz)``.

    ``packet`` is kept when the field is known to be a (kicked) Gaussian so
    the closed-form evolution can continue from it.
    """
    grid: Grid3
    values: np.ndarray
    params: PhysParams = field(default_factory=PhysParams)
    packet: Optional[GaussianPacketSpec] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (2,) + self.grid.dims:
            raise GridError(f"spinor shape {self.values.shape} != (2,) + {self.grid.dims}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spinor field has non-finite values")

    def norm2(self):
        return float(self.grid.integrate(np.sum(np.abs(self.values) ** 2, axis=0)))

    def component_norms(self):
        return self.grid.integrate(np.abs(self.values) ** 2)

    def with_values(self, values, **changes):
        return replace(self, values=values, meta=dict(self.meta), **changes)


# ---------------------------------------------------------------------------
# Gaussian packets
# ---------------------------------------------------------------------------


def _gaussian_branch(pos, spec, sign, t):
    """One spin branch of the closed-form packet at time t after the kick.

    ``sign`` is +1 for the z-up branch and -1 for z-down; with no kick record
    it is the free Gaussian.
    """
    d, hbar, m = spec.d, spec.hbar, spec.mass
    r = pos - np.asarray(spec.center)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    k = spec.phase_params
    p = sign * spec.p_kick
    v = p / m
    tau = hbar * t / (m * d * d)
    rr = x * x + y * y + z * z
    num = (-(x * x + y * y + (z - v * t) ** 2) / (2 * d * d)
           + 1j * p * z / hbar
           + (1j * hbar * rr / (2 * m * d ** 4) - 1j * p * p / (2 * hbar * m)) * t)
    expo = num / (1 + tau * tau)
    if k is not None:
        z0 = spec.center[2]
        expo = expo - 1j * sign * k.mu * (k.B0 - k.eta * z0) * k.dt_field / hbar
    pref = (1.0 / (1 + 1j * tau)) ** 1.5 * (1.0 / (np.pi * d * d)) ** 0.75
    return pref * np.exp(expo)


def _packet_values(spec, g, t):
    pos = g.positions()
    a, b = spec.spin
    up = a * _gaussian_branch(pos, spec, +1, t) if a != 0 else np.zeros(g.dims, complex)
    down = b * _gaussian_branch(pos, spec, -1, t) if b != 0 else np.zeros(g.dims, complex)
    return np.stack([up, down])


def make_gaussian(spec, g, params=None):
    """Normalised Gaussian (1/pi d^2)^(3/4) exp(-|x - x0|^2 / 2d^2) (a, b)."""
    params = params or PhysParams()
    chi = SpinorField2(g, _packet_values(spec, g, 0.0), params, spec)
    deficit = abs(1.0 - chi.norm2())
    if deficit > 1e-6:
        raise GridError(f"grid too small or coarse for the packet: norm deficit {deficit:.2e}")
    return chi


def free_evolve_analytic(spec, t, g, params=None):
    """Closed-form free evolution of a (kicked) Gaussian, each spin branch
    drifting with its own +/- kick."""
    return SpinorField2(g, _packet_values(spec, g, float(t)), params or PhysParams(), spec,
                        {"t": float(t)})


# ---------------------------------------------------------------------------
# Stern-Gerlach kick
# ---------------------------------------------------------------------------


def sg_phase_kick(chi, p, include_sigma_x=False):
    """Interaction-only evolution over dt_field in the Stern-Gerlach field.

    Default: the sigma_x term is dropped and each component picks up
    exp(-/+ i mu (B0 - eta z) dt / hbar).  With ``include_sigma_x`` the full
    2x2 interaction mu B . sigma is exponentiated exactly at every node.
    """
    mu = bohr_magneton(p)
    g = chi.grid
    factor = mu * p.dt_field / p.hbar
    if include_sigma_x:
        b = np.moveaxis(sg_field(p).b_at(g.positions()), -1, 0)
        values = kernels.spin_rotate(chi.values, b, factor)
        packet = None
    else:
        z = g.mesh()[2]
        phase = np.exp(-1j * factor * (p.B0 - p.eta * z))
        values = np.stack([chi.values[0] * phase, chi.values[1] * np.conj(phase)])
        packet = None
        if chi.packet is not None and chi.packet.phase_params is None:
            packet = chi.packet.kicked(p)
    out = chi.with_values(values, packet=packet)
    out.meta["kick"] = {"include_sigma_x": bool(include_sigma_x), "dt_field": p.dt_field}
    return out


# ---------------------------------------------------------------------------
# Spectral free evolution
# ---------------------------------------------------------------------------


def _k2(g):
    kx, ky, kz = g.wavenumbers()
    return kx[:, None, None] ** 2 + ky[None, :, None] ** 2 + kz[None, None, :] ** 2


def margin_norm(chi, widths=MARGIN_WIDTHS):
    """Norm carried within ``widths * d`` of any box face."""
    d = chi.params.d
    mask = np.zeros(chi.grid.dims, dtype=bool)
    for a, ax in enumerate(chi.grid.axes()):
        hw = chi.grid.box_halfwidth[a]
        near = np.abs(ax) > hw - widths * d
        shape = [1, 1, 1]
        shape[a] = -1
        mask |= near.reshape(shape)
    dens = np.sum(np.abs(chi.values) ** 2, axis=0)
    return float(chi.grid.integrate(np.where(mask, dens, 0.0)))


def free_evolve_spectral(chi, t, steps=1, strict=True, margin_tol=MARGIN_TOL):
    """Exact kinetic propagator exp(-i hbar k^2 t / 2m) applied in ``steps``
    equal sub-steps on the periodic box.

    Norm that reaches the outer band of width 3d (where the periodic wrap would
    matter) is reported in ``meta['margin_norm']``; with ``strict`` a value
    above ``margin_tol`` raises :class:`GateError`.
    """
    p = chi.params
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dt = float(t) / steps
    prop = np.exp(-1j * p.hbar * _k2(chi.grid) * dt / (2 * p.mass))
    vals = chi.values
    for _ in range(steps):
        vals = np.fft.ifftn(np.fft.fftn(vals, axes=(1, 2, 3)) * prop, axes=(1, 2, 3))
    out = chi.with_values(vals, packet=chi.packet)
    margin = max(margin_norm(chi), margin_norm(out))
    out.meta["margin_norm"] = margin
    out.meta["t"] = chi.meta.get("t", 0.0) + float(t)
    if strict and margin > margin_tol:
        raise GateError(f"packet within {MARGIN_WIDTHS:g}d of the box boundary "
                        f"(margin norm {margin:.2e} > {margin_tol:.0e})")
    return out


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------


def spectral_gradient(values, g):
    """d/dx_a of each component via FFT; the Nyquist mode is dropped."""
    out = []
    for a, k in enumerate(g.wavenumbers()):
        k = k.copy()
        n = g.dims[a]
        if n % 2 == 0:
            k[n // 2] = 0.0
        shape = [1, 1, 1]
        shape[a] = -1
        ik = 1j * k.reshape(shape)
        out.append(np.fft.ifftn(np.fft.fftn(values, axes=(-3, -2, -1)) * ik, axes=(-3, -2, -1)))
    return np.stack(out)


@dataclass(frozen=True)
class MomentumResult:
    value: np.ndarray
    imag_residual: float


def momentum_expectation(chi, component=None):
    """<p> = int chi^dagger (-i hbar grad) chi dV.

    ``component`` (0 or 1) restricts to one spin component and normalises by its
    norm.  Returns the real part; the imaginary residual is kept alongside.
    """
    vals = chi.values if component is None else chi.values[component:component + 1]
    grad = spectral_gradient(vals, chi.grid)  # (3, ncomp, ...)
    integrand = np.sum(np.conj(vals)[None] * (-1j * chi.params.hbar) * grad, axis=1)
    raw = chi.grid.integrate(integrand)
    if component is not None:
        raw = raw / chi.grid.integrate(np.abs(vals[0]) ** 2)
    return MomentumResult(raw.real.copy(), float(np.max(np.abs(raw.imag))))


def spin_expectation(chi):
    """(<sigma_x>, <sigma_y>, <sigma_z>)."""
    u, l = chi.values
    cross = chi.grid.integrate(np.conj(u) * l)
    nu = chi.grid.integrate(np.abs(u) ** 2)
    nl = chi.grid.integrate(np.abs(l) ** 2)
    return np.array([2 * cross.real, 2 * cross.imag, nu - nl])


def density(chi):
    return ScalarGridField(chi.grid, np.sum(np.abs(chi.values) ** 2, axis=0))


def component_density(chi, component):
    return ScalarGridField(chi.grid, np.abs(chi.values[component]) ** 2)


def centroid(dens):
    """Density-weighted mean position of a scalar grid field."""
    g = dens.grid
    w = dens.values
    total = g.integrate(w)
    return np.array([g.integrate(w * m) for m in g.mesh()]) / total


def z_width(dens):
    """sqrt(2 Var z), which equals d for the initial packet."""
    g = dens.grid
    z = g.mesh()[2]
    w = dens.values
    total = g.integrate(w)
    zc = g.integrate(w * z) / total
    var = g.integrate(w * (z - zc) ** 2) / total
    return float(np.sqrt(2 * var))


def evolved_width(d, t, hbar=1.0, mass=1.0):
    """d sqrt(1 + hbar^2 t^2 / m^2 d^4)."""
    return d * np.sqrt(1 + (hbar * t / (mass * d * d)) ** 2)


def larmor_envelope(p):
    """<sigma_x> of a kicked x-up Gaussian:
    cos(2 mu B0 dt / hbar) exp(-(mu eta dt d / hbar)^2)."""
    mu = bohr_magneton(p)
    return float(np.cos(2 * mu * p.B0 * p.dt_field / p.hbar)
                 * np.exp(-(mu * p.eta * p.dt_field * p.d / p.hbar) ** 2))


def probability_current(chi):
    """(hbar/m) Im(chi^dagger grad chi), shape (3, nx, ny, nz)."""
    grad = spectral_gradient(chi.values, chi.grid)
    p = chi.params
    return p.hbar / p.mass * np.sum(np.conj(chi.values)[None] * grad, axis=1).imag
