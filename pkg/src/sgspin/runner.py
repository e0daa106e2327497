"""Scenario execution: turns a ScenarioConfig into results, comparisons and
files on disk."""
from dataclasses import dataclass, field
import math
import os
import time
from pathlib import Path

import numpy as np

from . import detector, dirac, gridio, pauli
from ._accel import backend_name
from .errors import GateError
from .fields import Grid3, sg_field
from .point import PointState, integrate_point, point_force
from .sphere import (SphereState, angular_momentum_quadrature, integrate_rigid,
                     magnetic_moment_quadrature, sphere_torque, sphere_total_force,
                     validate_subluminal)
from .units import bohr_magneton, derive_scales, free_time_unit, validate_nonrelativistic


@dataclass
class Comparison:
    name: str
    value: object
    expected: object
    oracle: str
    tolerance: float
    kind: str = "rel"  # rel | abs
    passed: bool = False

    @classmethod
    def check(cls, name, value, expected, oracle, tolerance, kind="rel"):
        v = np.atleast_1d(np.asarray(value, dtype=float))
        e = np.atleast_1d(np.asarray(expected, dtype=float))
        err = float(np.max(np.abs(v - e)))
        if kind == "rel":
            scale = float(np.max(np.abs(e)))
            err = err / scale if scale > 0 else err
        c = cls(name, _plain(value), _plain(expected), oracle, tolerance, kind, err <= tolerance)
        c.error = err
        return c

    def as_dict(self):
        return {"name": self.name, "value": self.value, "expected": self.expected,
                "oracle": self.oracle, "tolerance": self.tolerance, "kind": self.kind,
                "error": getattr(self, "error", None), "passed": bool(self.passed)}

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"[{verdict}] {self.name}: {self.kind} error {getattr(self, 'error', float('nan')):.3e}"
                f" (tol {self.tolerance:g}; oracle: {self.oracle})")


def _plain(v):
    a = np.asarray(v)
    if a.ndim == 0:
        return float(a)
    return [float(x) for x in a.ravel()]


@dataclass
class RunSummary:
    scenario: dict
    results: dict = field(default_factory=dict)
    comparisons: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.errors and all(c.passed for c in self.comparisons)

    def as_dict(self, with_timings=False):
        out = {"scenario": self.scenario, "results": self.results,
               "comparisons": [c.as_dict() for c in self.comparisons],
               "errors": list(self.errors), "passed": self.passed}
        if with_timings:
            out["timings"] = self.timings
        return out

    def report_lines(self):
        lines = [c.line() for c in self.comparisons]
        lines += [f"[ERROR] {e}" for e in self.errors]
        return lines


def _times(cfg, p):
    unit = free_time_unit(p)
    T = detector.default_flight_time(p) if cfg.flight_time is None else cfg.flight_time * unit
    ts = detector.separation_time(p) if cfg.separation_time is None else cfg.separation_time * unit
    return T, ts


def _force_expected(p, n):
    mu = bohr_magneton(p)
    return np.array([-mu * p.eta * n[0], 0.0, mu * p.eta * n[2]])


def _classical_dt(p):
    return detector._classical_dt(p)


def run_rigid_sphere(cfg, p, summary, out):
    f = sg_field(p)
    n = np.array(cfg.spin_vector())
    s = SphereState.at_rest(n, p)
    mu = bohr_magneton(p)
    g = Grid3(cfg.quadrature_dims, 1.5 * p.R)
    res = {"subluminal": str(validate_subluminal(p))}
    m = magnetic_moment_quadrature(s, g)
    L = angular_momentum_quadrature(s, g)
    res.update(magnetic_moment=m, angular_momentum=L)
    summary.comparisons.append(Comparison.check(
        "rigid_sphere.magnetic_moment", m, -mu * n, "m = -mu n (Bohr magneton)", 0.02))
    summary.comparisons.append(Comparison.check(
        "rigid_sphere.angular_momentum", L, 0.5 * p.hbar * n, "L = (hbar/2) n", 0.02))
    if cfg.check_force:
        F = sphere_total_force(s, f, g)
        tau = sphere_torque(s, f, g)
        res.update(force=F, torque=tau)
        summary.comparisons.append(Comparison.check(
            "rigid_sphere.force", F, _force_expected(p, n), "F = grad(m.B) = mu eta n_z zhat", 1e-3))
        summary.comparisons.append(Comparison.check(
            "rigid_sphere.torque", tau, np.cross(-mu * n, f.b_at(np.zeros(3))),
            "tau = m x B(centre)", 1e-2))
    tr = integrate_rigid(s, f, p.dt_field, _classical_dt(p)) if p.dt_field > 0 else None
    _classical_tail(cfg, p, "rigid_sphere", tr, tr.velocity()[-1] if tr else np.zeros(3),
                    n, summary, res, out)
    summary.results["rigid_sphere"] = res


def run_point_particle(cfg, p, summary, out):
    f = sg_field(p)
    n = np.array(cfg.spin_vector())
    s = PointState.from_axis(n, p)
    res = {}
    F = point_force(s, f, cfg.consistency_c_fix)
    res["force"] = F
    if cfg.check_force:
        summary.comparisons.append(Comparison.check(
            "point_particle.force", F, _force_expected(p, n), "F = grad(m.B) = mu eta n_z zhat", 1e-12))
    tr = None
    if p.dt_field > 0:
        tr = integrate_point(s, f, p.dt_field, _classical_dt(p), cfg.consistency_c_fix)
    _classical_tail(cfg, p, "point_particle", tr, tr.velocity[-1] if tr else np.zeros(3),
                    n, summary, res, out)
    summary.results["point_particle"] = res


def _classical_tail(cfg, p, model, tr, v, n, summary, res, out):
    sc = derive_scales(p)
    res["final_velocity"] = v
    if sc.v_kick > 0:
        # impulse result v_z = mu eta dt n_z / m, compared in units of the full kick
        summary.comparisons.append(Comparison.check(
            f"{model}.kick_velocity_z", v[2] / sc.v_kick, n[2],
            "v_z = mu eta dt n_z / m", 5e-3, kind="abs"))
    if tr is not None and math.hypot(n[0], n[1]) > 0.1 and sc.omega_larmor > 0:
        w = tr.precession_frequency()
        res["precession_frequency"] = w
        # the moment precesses with angular velocity -omega zhat about B0 zhat
        summary.comparisons.append(Comparison.check(
            f"{model}.larmor_frequency", abs(w), sc.omega_larmor, "omega = 2 mu B0 / hbar", 1e-3))
    T, _ = _times(cfg, p)
    rec = detector.DetectorRecord(model, [(v[2] * T, 1.0)], T, cfg.spin_angles())
    res["detector"] = rec.as_dict()
    if tr is not None and out is not None:
        gridio.write_csv(out / f"{model}_trajectory.csv", tr.CSV_HEADER, tr.rows())


def _field_grid(cfg, p):
    return Grid3(cfg.dims, cfg.box_halfwidth())


def run_pauli(cfg, p, summary, out):
    th, ph = cfg.spin_angles()
    a, b = pauli.spin_amplitudes(th, ph)
    g = _field_grid(cfg, p)
    spec = pauli.GaussianPacketSpec.from_params(p, (a, b))
    chi0 = pauli.make_gaussian(spec, g, p)
    chi = pauli.sg_phase_kick(chi0, p, cfg.include_sigma_x)
    sc = derive_scales(p)
    res = {"norm_after_kick": chi.norm2()}
    for comp, sign, amp in ((0, 1, a), (1, -1, b)):
        if abs(amp) ** 2 < 1e-12:
            continue
        mom = pauli.momentum_expectation(chi, comp)
        res[f"momentum_component_{comp}"] = mom.value
        if not cfg.include_sigma_x:
            summary.comparisons.append(Comparison.check(
                f"pauli_qm.momentum_component_{comp}", mom.value[2], sign * sc.p_kick,
                "<p_z> = +/- mu eta dt per spin component", 1e-6))
    sx = pauli.spin_expectation(chi)
    res["spin_expectation"] = sx
    if not cfg.include_sigma_x:
        kappa = sc.p_kick * p.d / p.hbar
        expect = math.sin(th) * math.cos(ph + 2 * sc.mu * p.B0 * p.dt_field / p.hbar) * math.exp(-kappa ** 2)
        summary.comparisons.append(Comparison.check(
            "pauli_qm.sigma_x", sx[0], expect, "sin(theta) cos(phi + 2 mu B0 dt/hbar) exp(-kappa^2)",
            1e-4, kind="abs"))
    _lumps(cfg, p, "pauli_qm", summary, res, out)
    if cfg.dump_grids and out is not None:
        gridio.write_grid(out / "pauli_density.sgg", g, pauli.density(chi).values)
    summary.results["pauli_qm"] = res


def run_dirac(cfg, p, summary, out):
    th, ph = cfg.spin_angles()
    res = {"nonrelativistic": str(validate_nonrelativistic(p))}
    g = _field_grid(cfg, p)
    psi = dirac.prepared_state("x_up_pre", p, g, theta=th, phi=ph)
    res["norm"] = psi.norm2()
    res["total_charge"] = dirac.charge_density(psi).integral()
    if cfg.check_force:
        F = dirac.dirac_total_force(psi, sg_field(p))
        res["force"] = F
        n = np.array(cfg.spin_vector())
        summary.comparisons.append(Comparison.check(
            "dirac_field.force", F, _force_expected(p, n), "F = grad(m.B) = mu eta n_z zhat", 1e-4))
    if cfg.dump_grids and out is not None:
        gridio.write_grid(out / "dirac_charge.sgg", g, dirac.charge_density(psi).values)
        gridio.write_grid(out / "dirac_current.sgg", g, dirac.current_density(psi).values)
    _lumps(cfg, p, "dirac_field", summary, res, out)
    summary.results["dirac_field"] = res


def _lumps(cfg, p, model, summary, res, out):
    if p.dt_field == 0 or p.eta == 0:
        res["lumps"] = "no kick; packets do not separate"
        return
    th, ph = cfg.spin_angles()
    T, ts = _times(cfg, p)
    rec = detector.to_detector(model, th, ph, p, flight_time=T, t_sep=ts, method=cfg.method)
    lumps = sorted(rec.lumps, key=lambda l: -l.center[2])
    res["lumps"] = [{"weight": l.weight, "centroid": l.center, "velocity_z": l.velocity_z}
                    for l in lumps]
    res["detector"] = rec.as_dict()
    up, down = dirac.lump_fractions(th, ph)
    got_up = sum(l.weight for l in lumps if l.center[2] > 0)
    got_down = sum(l.weight for l in lumps if l.center[2] <= 0)
    summary.comparisons.append(Comparison.check(
        f"{model}.lump_fractions", [got_up, got_down], [up, down],
        "(cos^2(theta/2), sin^2(theta/2)) spinor decomposition", 1e-3, kind="abs"))


RUNNERS = {
    "rigid_sphere": run_rigid_sphere,
    "point_particle": run_point_particle,
    "pauli_qm": run_pauli,
    "dirac_field": run_dirac,
}


def _prepare_out(cfg):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def run(cfg, write=True):
    """Run every selected model once; write summary.json (deterministic) and
    timings.json next to any CSV and grid artifacts."""
    p = cfg.params()
    out = _prepare_out(cfg) if write else None
    summary = RunSummary(scenario=cfg.as_dict())
    summary.results["backend"] = backend_name()
    for model in cfg.model:
        t0 = time.perf_counter()
        try:
            RUNNERS[model](cfg, p, summary, out)
        except GateError as exc:
            summary.errors.append(f"{model}: {exc}")
        summary.timings[model] = time.perf_counter() - t0
    if write:
        gridio.write_json(out / "summary.json", summary.as_dict())
        gridio.write_json(out / "timings.json", summary.timings)
    return summary


def run_sweep(cfg, thetas=None, write=True):
    """Detector records over a spin sweep for every selected model."""
    p = cfg.params()
    thetas = cfg.sweep_thetas if thetas is None else thetas
    out = _prepare_out(cfg) if write else None
    T, ts = _times(cfg, p)
    records, classes, timings = [], [], {}
    ph = cfg.spin_angles()[1]
    if len(thetas):
        for model in cfg.model:
            t0 = time.perf_counter()
            recs = [detector.to_detector(model, th, ph, p, flight_time=T, t_sep=ts,
                                         method=cfg.method) for th in thetas]
            records += recs
            classes.append(detector.classify_sweep(recs, p))
            timings[model] = time.perf_counter() - t0
    report = {"scenario": cfg.as_dict(), "records": [r.as_dict() for r in records],
              "classifications": [c.as_dict() for c in classes]}
    if write:
        gridio.write_json(out / "sweep.json", report)
        gridio.write_csv(out / "arrivals.csv", ("model", "theta", "arrival_z", "weight"),
                         detector.records_csv_rows(records))
        gridio.write_json(out / "timings.json", timings)
    return records, classes


TABLE1_EXPECTED = {
    "rigid_sphere": (True, False),
    "point_particle": (True, False),
    "pauli_qm": (False, True),
    "dirac_field": (False, True),
}


def run_table1(cfg, write=True):
    """Full theta sweep for all four models, classified and tabulated."""
    from dataclasses import replace
    cfg = replace(cfg, model=detector.MODELS)
    _, classes = run_sweep(cfg, detector.SWEEP_THETAS, write=write)
    text = detector.emit_table(classes)
    checks = []
    for c in classes:
        want = TABLE1_EXPECTED[c.model]
        ok = (c.unique, c.discrete) == want
        if c.model in detector.QUANTUM_MODELS:
            ok = ok and c.caveats.get("uniqueness_requires_interpretation", False)
        checks.append({"model": c.model, "unique": c.unique, "discrete": c.discrete,
                       "expected_unique": want[0], "expected_discrete": want[1], "passed": ok})
    if write:
        out = Path(cfg.output_dir)
        (out / "table1.txt").write_text(text)
        gridio.write_json(out / "table1.json", {"table": text, "checks": checks,
                                                "classifications": [c.as_dict() for c in classes]})
    return text, checks
