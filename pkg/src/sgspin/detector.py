"""Detector-plane arrivals, uniqueness/discreteness classification and the
model comparison table.

Every model is reduced to a list of (arrival z, weight) pairs on a screen a
flight time T after the field pass.  Classical models give one arrival at
v_z T.  Field models are split into lumps along z; each lump lands at its
centroid carried ballistically by its own mean velocity.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import GateError
from .units import PhysParams, bohr_magneton, free_time_unit, kick_parameter

MODELS = ("rigid_sphere", "point_particle", "pauli_qm", "dirac_field")
MODEL_TITLES = {
    "rigid_sphere": "Rigid body",
    "point_particle": "Point particle",
    "pauli_qm": "NRQM (Pauli)",
    "dirac_field": "Classical Dirac field",
}
QUANTUM_MODELS = ("pauli_qm",)
SEPARATION_SIGMAS = 4.0
DISCRETE_TOL = 0.02
DEFAULT_FLIGHT = 10.0
SWEEP_THETAS = tuple(k * math.pi / 6 for k in range(7))


class SeparationError(GateError):
    """Lumps of a field state overlap too much to be read separately."""


@dataclass
class DetectorRecord:
    model: str
    arrivals: list
    flight_time: float
    spin_prep: tuple = (0.0, 0.0)
    spread: float = 0.0  # std of each arrival lump on the screen

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        self.arrivals = [(float(z), float(w)) for z, w in self.arrivals]
        total = sum(w for _, w in self.arrivals)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"arrival weights sum to {total:.9f}, expected 1")
        if any(w < 0 or w > 1 + 1e-12 for _, w in self.arrivals):
            raise ValueError("arrival weights must lie in [0, 1]")

    def as_dict(self):
        return {"model": self.model, "theta": self.spin_prep[0], "phi": self.spin_prep[1],
                "flight_time": self.flight_time, "spread": self.spread,
                "arrivals": [{"z": z, "weight": w} for z, w in self.arrivals]}


@dataclass
class OutcomeClassification:
    model: str
    unique: bool
    discrete: bool
    cluster_centers: list
    caveats: dict = field(default_factory=dict)

    def as_dict(self):
        return {"model": self.model, "unique": self.unique, "discrete": self.discrete,
                "cluster_centers": [list(c) for c in self.cluster_centers],
                "caveats": dict(self.caveats)}


# ---------------------------------------------------------------------------
# 1-D weighted clustering
# ---------------------------------------------------------------------------


def _wstats(z, w):
    tot = w.sum()
    if tot <= 0:
        return 0.0, 0.0, 0.0
    c = float(np.dot(w, z) / tot)
    var = float(np.dot(w, (z - c) ** 2) / tot)
    return tot, c, math.sqrt(max(var, 0.0))


def best_split(z, w):
    """Optimal two-cluster split of sorted 1-D weighted points.

    In one dimension the weighted k-means optimum for k=2 is a contiguous
    split, so an exhaustive scan over split positions finds it exactly.
    Returns the index ``i`` with clusters ``[:i]`` and ``[i:]``.
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    cw = np.cumsum(w)
    cwz = np.cumsum(w * z)
    cwzz = np.cumsum(w * z * z)
    W, S, Q = cw[-1], cwz[-1], cwzz[-1]
    best, best_i = math.inf, None
    for i in range(1, len(z)):
        wl, sl, ql = cw[i - 1], cwz[i - 1], cwzz[i - 1]
        wr, sr, qr = W - wl, S - sl, Q - ql
        if wl <= 0 or wr <= 0:
            continue
        sse = (ql - sl * sl / wl) + (qr - sr * sr / wr)
        if sse < best:
            best, best_i = sse, i
    return best_i


@dataclass(frozen=True)
class Cluster:
    center: float
    weight: float
    std: float
    lo: int = 0
    hi: int = 0


def cluster_1d(z, w, spread=0.0, n_sigma=SEPARATION_SIGMAS):
    """Weighted k-means with k in {1, 2}.

    Two clusters are kept when their centres lie more than ``n_sigma`` times
    the larger cluster width apart; ``spread`` is added in quadrature to each
    width (the intrinsic size of a point arrival).  Returns a list of clusters
    sorted by centre.
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(z, kind="stable")
    z, w = z[order], w[order]
    keep = w > 0
    z, w = z[keep], w[keep]
    if len(z) == 0:
        return []
    tot, c, s = _wstats(z, w)
    single = [Cluster(c, float(tot), math.hypot(s, spread), 0, len(z))]
    if len(z) < 2:
        return single
    i = best_split(z, w)
    if i is None:
        return single
    wl, cl, sl = _wstats(z[:i], w[:i])
    wr, cr, sr = _wstats(z[i:], w[i:])
    width = max(math.hypot(sl, spread), math.hypot(sr, spread))
    gap = cr - cl
    if gap > 0 and gap > n_sigma * width:
        return [Cluster(cl, float(wl), math.hypot(sl, spread), 0, i),
                Cluster(cr, float(wr), math.hypot(sr, spread), i, len(z))]
    return single


# ---------------------------------------------------------------------------
# Field lumps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lump:
    weight: float
    center: np.ndarray
    velocity_z: float
    std_z: float
    z_range: tuple


def packet_std_z(p, t):
    """Std of |chi|^2 along z for a freely spreading Gaussian: d sqrt((1+tau^2)/2)."""
    tau = t / free_time_unit(p)
    return p.d * math.sqrt((1 + tau * tau) / 2)


def find_lumps(grid, dens, flux_z, expected_std=None, n_sigma=SEPARATION_SIGMAS):
    """Split a density into at most two lumps along z.

    ``flux_z`` is the z-current whose lump integral over the lump weight is
    the lump velocity.  When no clean two-way split exists the density must
    look like one packet (std within 10% of ``expected_std``), otherwise
    :class:`SeparationError` is raised.
    """
    zs = grid.axis(2)
    dens = np.asarray(dens)
    marg = dens.sum(axis=(0, 1))
    clusters = cluster_1d(zs, marg, 0.0, n_sigma)
    total = float(marg.sum())
    if len(clusters) == 1:
        std = clusters[0].std
        if expected_std is not None and std > 1.1 * expected_std:
            raise SeparationError(
                f"density spread {std:.3g} exceeds one packet ({expected_std:.3g}) "
                f"but the lumps are not {n_sigma:g} widths apart")
        bounds = [(0, len(zs))]
    else:
        # indices refer to the nonzero marginal entries in sorted order; the axis is
        # sorted already, so map back through the positive mask
        idx = np.flatnonzero(marg > 0)
        cut = idx[clusters[1].lo]
        bounds = [(0, cut), (cut, len(zs))]
    x, y, _ = grid.axes()
    lumps = []
    for lo, hi in bounds:
        sub = dens[:, :, lo:hi]
        wsum = float(sub.sum())
        if wsum <= 0:
            continue
        cz = float(np.dot(sub.sum(axis=(0, 1)), zs[lo:hi]) / wsum)
        cx = float(np.dot(sub.sum(axis=(1, 2)), x) / wsum)
        cy = float(np.dot(sub.sum(axis=(0, 2)), y) / wsum)
        vz = float(np.asarray(flux_z)[:, :, lo:hi].sum() / wsum)
        var = float(np.dot(sub.sum(axis=(0, 1)), (zs[lo:hi] - cz) ** 2) / wsum)
        lumps.append(Lump(wsum / total, np.array([cx, cy, cz]), vz, math.sqrt(var),
                          (float(zs[lo]), float(zs[hi - 1]))))
    return lumps


# ---------------------------------------------------------------------------
# Model runs -> detector records
# ---------------------------------------------------------------------------


def kick_velocity(p):
    return bohr_magneton(p) * p.eta * p.dt_field / p.mass


def default_flight_time(p, n_widths=8.0, base=DEFAULT_FLIGHT):
    """At least ``base`` m d^2/hbar and long enough that the two outcomes are
    ``n_widths`` packet widths (density std) apart on the screen."""
    unit = free_time_unit(p)
    kappa = kick_parameter(p)
    # 2 kappa tau >= n sqrt((1 + tau^2)/2)  <=>  tau^2 (8 kappa^2 - n^2) >= n^2
    a = 8 * kappa * kappa - n_widths * n_widths
    if a <= 0:
        raise GateError(f"kick too weak to separate outcomes by {n_widths:g} widths "
                        f"(kick parameter {kappa:.3g})")
    return max(base, n_widths / math.sqrt(a)) * unit


def separation_time(p, n_sigmas=10.0):
    """Earliest time at which the two branches sit ``n_sigmas`` density stds apart."""
    return default_flight_time(p, n_sigmas, base=0.0)


def _classical_record(model, theta, phi, p, T, dt):
    from .fields import sg_field
    f = sg_field(p)
    axis = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi),
                     math.cos(theta)])
    if p.dt_field == 0:
        vz = 0.0
    elif model == "rigid_sphere":
        from .sphere import SphereState, integrate_rigid
        tr = integrate_rigid(SphereState.at_rest(axis, p), f, p.dt_field, dt)
        vz = tr.velocity()[-1, 2]
    else:
        from .point import PointState, integrate_point
        tr = integrate_point(PointState.from_axis(axis, p), f, p.dt_field, dt)
        vz = tr.velocity[-1, 2]
    return DetectorRecord(model, [(vz * T, 1.0)], T, (theta, phi), 0.0)


def _classical_dt(p):
    omega = 2 * bohr_magneton(p) * p.B0 / p.hbar
    if omega == 0:
        return p.dt_field / 200 if p.dt_field > 0 else 1.0
    period = 2 * math.pi / omega
    n = max(1, math.ceil(p.dt_field / (0.02 * period)))
    return p.dt_field / n


def _field_record(model, theta, phi, p, T, grid, t_sep, method):
    from . import pauli
    spec = pauli.GaussianPacketSpec.from_params(p, pauli.spin_amplitudes(theta, phi))
    if model == "pauli_qm":
        if method == "analytic":
            chi = pauli.free_evolve_analytic(spec.kicked(p), t_sep, grid, p)
        else:
            chi0 = pauli.sg_phase_kick(pauli.make_gaussian(spec, grid, p), p)
            chi = pauli.free_evolve_spectral(chi0, t_sep)
        dens = np.sum(np.abs(chi.values) ** 2, axis=0)
        flux = pauli.probability_current(chi)[2]
    else:
        from . import dirac
        psi0 = dirac.prepared_state("x_up_post", p, grid, theta=theta, phi=phi)
        psi = dirac.evolve_nr(psi0, t_sep, p, method=method)
        # velocity = J / rho; the charge cancels in the ratio
        from .kernels import dirac_bilinears
        dens, cur = dirac_bilinears(psi.values)
        flux = p.c * cur[2]
    lumps = find_lumps(grid, dens, flux, packet_std_z(p, t_sep))
    arrivals = [(l.center[2] + l.velocity_z * (T - t_sep), l.weight) for l in lumps]
    s = sum(w for _, w in arrivals)
    arrivals = [(z, w / s) for z, w in arrivals]
    rec = DetectorRecord(model, arrivals, T, (theta, phi), packet_std_z(p, T))
    rec.lumps = lumps
    return rec


def field_grid(p, t_sep, spacing=0.35, margin=3.0):
    """Box that holds both branches at ``t_sep`` with the packet-margin band
    empty, sized in units of d."""
    from .fields import Grid3
    s = packet_std_z(p, t_sep)
    reach = 6.5 * s + margin * p.d
    hz = kick_velocity(p) * t_sep + reach
    hx = reach
    dims = tuple(2 * math.ceil(h / (spacing * p.d)) for h in (hx, hx, hz))
    return Grid3(dims, (hx, hx, hz))


def to_detector(model, theta, phi=0.0, p=None, flight_time=None, grid=None,
                t_sep=None, method="analytic", dt=None):
    """Run one model for one spin preparation and record the screen arrivals."""
    p = p or PhysParams()
    T = default_flight_time(p) if flight_time is None else float(flight_time)
    if model in ("rigid_sphere", "point_particle"):
        return _classical_record(model, theta, phi, p, T, dt or _classical_dt(p))
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    t_sep = separation_time(p) if t_sep is None else t_sep
    grid = grid or field_grid(p, t_sep)
    return _field_record(model, theta, phi, p, T, grid, t_sep, method)


# ---------------------------------------------------------------------------
# Classification and table
# ---------------------------------------------------------------------------


def record_clusters(rec):
    zs = [z for z, _ in rec.arrivals]
    ws = [w for _, w in rec.arrivals]
    return cluster_1d(zs, ws, rec.spread)


def classify_sweep(records, p=None, tol=DISCRETE_TOL):
    """Classify the records of one model over a spin sweep.

    unique: every record lands in exactly one cluster.  discrete: every
    cluster centre lies within ``tol * v_kick * T`` of +/- v_kick T.
    """
    if not records:
        raise ValueError("no records to classify")
    p = p or PhysParams()
    model = records[0].model
    if any(r.model != model for r in records):
        raise ValueError("records from several models; classify each model separately")
    v = kick_velocity(p)
    centers, unique, discrete = [], True, True
    for rec in records:
        cl = record_clusters(rec)
        unique &= len(cl) == 1
        target = v * rec.flight_time
        row = []
        for c in cl:
            row.append(c.center)
            if min(abs(c.center - target), abs(c.center + target)) > tol * target:
                discrete = False
        centers.append(row)
    caveats = {}
    if model in QUANTUM_MODELS:
        caveats["uniqueness_requires_interpretation"] = True
    return OutcomeClassification(model, bool(unique), bool(discrete), centers, caveats)


def sweep_records(model, p=None, thetas=SWEEP_THETAS, phi=0.0, **kw):
    return [to_detector(model, th, phi, p, **kw) for th in thetas]


OUT_OF_SCOPE = (
    ("NRQM after interpretation", "needs a solution to the measurement problem"),
    ("Relativistic QM", "not simulated"),
    ("Quantum field theory", "not simulated"),
)


def emit_table(classifications, annotate=True):
    """Plain-text table of uniqueness/discreteness per model."""
    if not classifications:
        return ""
    cols = [MODEL_TITLES.get(c.model, c.model) for c in classifications]
    notes = []

    def mark(c, key):
        val = "yes" if getattr(c, key) else "no"
        if key == "unique" and c.caveats.get("uniqueness_requires_interpretation"):
            val += "*"
        return val

    rows = [("Uniqueness", [mark(c, "unique") for c in classifications]),
            ("Discreteness", [mark(c, "discrete") for c in classifications])]
    if any(c.caveats.get("uniqueness_requires_interpretation") for c in classifications):
        notes.append("* one outcome per run only once an interpretation of quantum "
                     "mechanics selects it; the bare wave function keeps both branches")
    if annotate:
        for name, why in OUT_OF_SCOPE:
            notes.append(f"- {name}: {why}")
    width0 = max(len("Feature"), *(len(r[0]) for r in rows))
    widths = [max(len(h), 5) for h in cols]
    lines = ["  ".join(["Feature".ljust(width0)] + [h.ljust(w) for h, w in zip(cols, widths)])]
    lines.append("  ".join(["-" * width0] + ["-" * w for w in widths]))
    for name, vals in rows:
        lines.append("  ".join([name.ljust(width0)] + [v.ljust(w) for v, w in zip(vals, widths)]))
    out = "\n".join(l.rstrip() for l in lines)
    if notes:
        out += "\n\n" + "\n".join(notes)
    return out + "\n"


def records_csv_rows(records):
    """(model, theta, arrival_z, weight) rows."""
    rows = []
    for r in records:
        for z, w in r.arrivals:
            rows.append((r.model, r.spin_prep[0], z, w))
    return rows
