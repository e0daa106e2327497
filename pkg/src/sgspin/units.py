"""Physical parameters, unit systems and derived scales.

All formulas are written in Gaussian-cgs form (mu = e hbar / 2 m c, etc.).
The default unit system is Hartree atomic units, where hbar = m = e = 1 and
c is the inverse fine-structure constant; raw Gaussian-cgs input is accepted
and converted on request with :meth:`PhysParams.to_atomic`.
"""
from dataclasses import dataclass, replace, asdict
import math

from .errors import ParameterError, GateError

HARTREE_ATOMIC = "hartree-atomic"
GAUSSIAN_CGS = "gaussian-cgs-raw"
UNIT_SYSTEMS = (HARTREE_ATOMIC, GAUSSIAN_CGS)

# CODATA 2018
C_ATOMIC = 137.035999084
HBAR_CGS = 1.054571817e-27      # erg s
M_E_CGS = 9.1093837015e-28      # g
E_CGS = 4.803204712570263e-10   # statC
C_CGS = 2.99792458e10           # cm / s

NONREL_THRESHOLD = 0.1

# Default experiment: packet width and sphere radius 100 bohr, 16 Larmor
# periods in the field and a kick of about 4 hbar/d, so up/down packets
# separate cleanly.  The electron moves only ~0.01 d while in the field and
# eta d / B0 = 0.08, so the field seen by the packet keeps its direction.
DEFAULT_D = 100.0
DEFAULT_B0 = 250.0
DEFAULT_ETA = 0.2
DEFAULT_DT_FIELD = 32.0 * math.pi * C_ATOMIC / DEFAULT_B0


@dataclass(frozen=True)
class PhysParams:
    hbar: float = 1.0
    mass: float = 1.0
    charge_e: float = 1.0
    c: float = C_ATOMIC
    B0: float = DEFAULT_B0
    eta: float = DEFAULT_ETA
    dt_field: float = DEFAULT_DT_FIELD
    d: float = DEFAULT_D
    R: float = DEFAULT_D
    unit_system: str = HARTREE_ATOMIC

    def __post_init__(self):
        if self.unit_system not in UNIT_SYSTEMS:
            raise ParameterError(f"unknown unit system {self.unit_system!r}")
        for name in ("hbar", "mass", "charge_e", "c", "d", "R"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive, got {v!r}")
        for name in ("B0", "eta", "dt_field"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be non-negative, got {v!r}")
        if self.unit_system == HARTREE_ATOMIC:
            if (self.hbar, self.mass, self.charge_e) != (1.0, 1.0, 1.0):
                raise ParameterError("hartree-atomic requires hbar = mass = charge_e = 1")

    def with_(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return asdict(self)

    @classmethod
    def cgs(cls, **overrides):
        """Electron constants in raw Gaussian-cgs; experiment values must be
        supplied in cgs as well (gauss, gauss/cm, s, cm)."""
        base = dict(hbar=HBAR_CGS, mass=M_E_CGS, charge_e=E_CGS, c=C_CGS,
                    unit_system=GAUSSIAN_CGS)
        base.update(overrides)
        return cls(**base)

    def atomic_units(self):
        """Size of one atomic unit of each quantity, expressed in this system."""
        h, m, e = self.hbar, self.mass, self.charge_e
        length = h * h / (m * e * e)
        time = h ** 3 / (m * e ** 4)
        field = e / length ** 2
        return {
            "length": length,
            "time": time,
            "velocity": length / time,
            "field": field,
            "gradient": field / length,
            "momentum": h / length,
            "energy": e * e / length,
        }

    def to_atomic(self):
        if self.unit_system == HARTREE_ATOMIC:
            return self
        u = self.atomic_units()
        return PhysParams(
            c=self.c / u["velocity"],
            B0=self.B0 / u["field"],
            eta=self.eta / u["gradient"],
            dt_field=self.dt_field / u["time"],
            d=self.d / u["length"],
            R=self.R / u["length"],
        )


@dataclass(frozen=True)
class DerivedScales:
    mu: float
    omega_larmor: float
    epsilon_rel: float
    v_kick: float
    p_kick: float


def bohr_magneton(p):
    return p.charge_e * p.hbar / (2.0 * p.mass * p.c)


def derive_scales(p):
    if not (p.mass > 0 and p.c > 0 and p.hbar > 0 and p.d > 0):
        raise ParameterError("mass, c, hbar and d must be positive")
    mu = bohr_magneton(p)
    p_kick = mu * p.eta * p.dt_field
    return DerivedScales(
        mu=mu,
        omega_larmor=2.0 * mu * p.B0 / p.hbar,
        epsilon_rel=p.hbar / (p.mass * p.c * p.d),
        v_kick=p_kick / p.mass,
        p_kick=p_kick,
    )


@dataclass(frozen=True)
class NonRelReport:
    epsilon_rel: float
    threshold: float
    passed: bool

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return f"epsilon_rel = {self.epsilon_rel:.3e} (threshold {self.threshold}): {verdict}"


def validate_nonrelativistic(p, threshold=NONREL_THRESHOLD):
    eps = p.hbar / (p.mass * p.c * p.d)
    return NonRelReport(eps, threshold, eps < threshold)


def require_nonrelativistic(p):
    report = validate_nonrelativistic(p)
    if not report.passed:
        raise GateError(f"non-relativistic gate failed: {report}")
    return report


def kick_parameter(p):
    """Dimensionless kick mu*eta*dt*d/hbar: phase gained across one packet width."""
    return derive_scales(p).p_kick * p.d / p.hbar


def free_time_unit(p):
    """m d^2 / hbar, the spreading time of a width-d packet."""
    return p.mass * p.d ** 2 / p.hbar
