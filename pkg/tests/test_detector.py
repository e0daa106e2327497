import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgspin import Grid3, PhysParams
from sgspin.detector import (MODELS, DetectorRecord, OutcomeClassification, SeparationError,
                             best_split, classify_sweep, cluster_1d, default_flight_time,
                             emit_table, find_lumps, kick_velocity, packet_std_z,
                             records_csv_rows, separation_time, sweep_records, to_detector)
from sgspin.errors import GateError
from sgspin.units import free_time_unit

THETAS = (0.0, math.pi / 3, math.pi / 2, 2 * math.pi / 3, math.pi)


@pytest.fixture(scope="module")
def sweeps():
    p = PhysParams()
    return {m: sweep_records(m, p, THETAS) for m in MODELS}


def test_flight_time_rules(p):
    T = default_flight_time(p)
    assert T >= 10 * free_time_unit(p)
    tau = T / free_time_unit(p)
    gap = 2 * kick_velocity(p) * T
    assert gap >= 8 * packet_std_z(p, T) * (1 - 1e-12)
    assert separation_time(p) < T
    with pytest.raises(GateError):
        default_flight_time(p.with_(eta=1e-4))
    assert tau > 0


def test_packet_std_at_zero(p):
    assert packet_std_z(p, 0.0) == pytest.approx(p.d / math.sqrt(2))


def test_rigid_sphere_z_up_single_arrival(p):
    rec = to_detector("rigid_sphere", 0.0, p=p)
    assert len(rec.arrivals) == 1
    z, w = rec.arrivals[0]
    assert w == 1.0
    assert z == pytest.approx(kick_velocity(p) * rec.flight_time, rel=1e-9)


def test_pauli_x_up_two_arrivals(p, sweeps):
    rec = sweeps["pauli_qm"][2]
    vT = kick_velocity(p) * rec.flight_time
    (z1, w1), (z2, w2) = rec.arrivals
    assert (w1, w2) == pytest.approx((0.5, 0.5), abs=1e-6)
    assert (z1, z2) == pytest.approx((-vT, vT), rel=1e-4)


def test_dirac_weights_follow_spin_amplitudes(sweeps):
    rec = sweeps["dirac_field"][1]  # theta = pi/3
    ws = sorted((w for _, w in rec.arrivals), reverse=True)
    assert ws == pytest.approx([0.75, 0.25], abs=1e-3)
    up = max(rec.arrivals)[1]
    assert up == pytest.approx(0.75, abs=1e-3)


def test_weights_sum_to_one(sweeps):
    for recs in sweeps.values():
        for r in recs:
            assert sum(w for _, w in r.arrivals) == pytest.approx(1.0, abs=1e-9)


def test_classical_arrivals_follow_cos_theta(p, sweeps):
    for model in ("rigid_sphere", "point_particle"):
        z = [r.arrivals[0][0] for r in sweeps[model]]
        assert all(a > b for a, b in zip(z, z[1:]))  # monotone in cos(theta)
        vT = kick_velocity(p) * sweeps[model][0].flight_time
        np.testing.assert_allclose(z, vT * np.cos(THETAS), atol=5e-3 * vT)


def test_field_centres_do_not_depend_on_theta(p, sweeps):
    for model in ("pauli_qm", "dirac_field"):
        centres = {round(z / (kick_velocity(p) * r.flight_time), 3)
                   for r in sweeps[model] for z, w in r.arrivals if w > 1e-6}
        assert centres <= {-1.0, 1.0}


def test_mirror_symmetry(sweeps):
    for model, recs in sweeps.items():
        a, b = recs[1], recs[3]  # pi/3 and 2pi/3
        if model in ("rigid_sphere", "point_particle"):
            assert a.arrivals[0][0] == pytest.approx(-b.arrivals[0][0], rel=1e-6)
        else:
            wa = dict((round(np.sign(z)), w) for z, w in a.arrivals)
            wb = dict((round(np.sign(z)), w) for z, w in b.arrivals)
            assert wa[1] == pytest.approx(wb[-1], abs=1e-3)
            assert wa[-1] == pytest.approx(wb[1], abs=1e-3)


def test_classification(p, sweeps):
    got = {m: classify_sweep(r, p) for m, r in sweeps.items()}
    assert (got["rigid_sphere"].unique, got["rigid_sphere"].discrete) == (True, False)
    assert (got["point_particle"].unique, got["point_particle"].discrete) == (True, False)
    assert (got["pauli_qm"].unique, got["pauli_qm"].discrete) == (False, True)
    assert got["pauli_qm"].caveats == {"uniqueness_requires_interpretation": True}
    assert (got["dirac_field"].unique, got["dirac_field"].discrete) == (False, True)
    assert got["dirac_field"].caveats == {}


def test_classify_rejects_mixed_or_empty(sweeps):
    with pytest.raises(ValueError):
        classify_sweep([])
    with pytest.raises(ValueError):
        classify_sweep([sweeps["rigid_sphere"][0], sweeps["pauli_qm"][0]])


def test_emit_table_edge_cases():
    assert emit_table([]) == ""
    one = emit_table([OutcomeClassification("rigid_sphere", True, False, [])], annotate=False)
    lines = one.splitlines()
    assert lines[0] == "Feature       Rigid body"
    assert len(lines) == 4
    assert lines[2].split() == ["Uniqueness", "yes"]
    assert lines[3].split() == ["Discreteness", "no"]


def test_emit_table_marks_caveat():
    c = OutcomeClassification("pauli_qm", False, True, [],
                              {"uniqueness_requires_interpretation": True})
    text = emit_table([c])
    assert "no*" in text and "interpretation" in text


def test_record_validation():
    with pytest.raises(ValueError):
        DetectorRecord("rigid_sphere", [(0.0, 0.7)], 1.0)
    with pytest.raises(ValueError):
        DetectorRecord("cannonball", [(0.0, 1.0)], 1.0)


def test_csv_rows(sweeps):
    rows = records_csv_rows(sweeps["pauli_qm"][:1])
    assert rows[0][0] == "pauli_qm" and rows[0][1] == 0.0


def _brute_split(z, w):
    best, arg = math.inf, None
    for i in range(1, len(z)):
        sse = 0.0
        for part_z, part_w in ((z[:i], w[:i]), (z[i:], w[i:])):
            if part_w.sum() <= 0:
                sse = math.inf
                break
            c = np.dot(part_w, part_z) / part_w.sum()
            sse += np.dot(part_w, (part_z - c) ** 2)
        if sse < best - 1e-12 * (1 + abs(best)):
            best, arg = sse, i
    return best


pts = st.lists(st.tuples(st.floats(-100, 100), st.floats(0.01, 1.0)), min_size=2, max_size=12)


@given(pts)
def test_best_split_is_optimal(data):
    z = np.array(sorted(d[0] for d in data))
    w = np.array([d[1] for d in sorted(data)])
    i = best_split(z, w)

    def sse(lo, hi):
        c = np.dot(w[lo:hi], z[lo:hi]) / w[lo:hi].sum()
        return np.dot(w[lo:hi], (z[lo:hi] - c) ** 2)

    got = sse(0, i) + sse(i, len(z))
    assert got <= _brute_split(z, w) + 1e-9 * (1 + np.dot(w, z * z))


@given(pts)
def test_cluster_weights_are_conserved(data):
    z, w = np.array([d[0] for d in data]), np.array([d[1] for d in data])
    cl = cluster_1d(z, w)
    assert 1 <= len(cl) <= 2
    assert sum(c.weight for c in cl) == pytest.approx(w.sum())
    assert all(a.center < b.center for a, b in zip(cl, cl[1:]))


def test_cluster_separation_rule():
    z = np.r_[np.linspace(-1, 1, 21) - 10, np.linspace(-1, 1, 21) + 10]
    assert len(cluster_1d(z, np.ones_like(z))) == 2
    assert len(cluster_1d(z, np.ones_like(z), spread=6.0)) == 1
    assert cluster_1d([], []) == []


def test_find_lumps_refuses_overlap(p):
    g = Grid3((4, 4, 200), (p.d, p.d, 20 * p.d))
    z = g.axis(2)
    s = p.d
    marg = np.exp(-(z - 1.5 * s) ** 2 / (2 * s * s)) + np.exp(-(z + 1.5 * s) ** 2 / (2 * s * s))
    dens = np.broadcast_to(marg, g.dims).copy()
    with pytest.raises(SeparationError):
        find_lumps(g, dens, np.zeros(g.dims), expected_std=s)
    one = find_lumps(g, dens, np.zeros(g.dims), expected_std=3 * s)
    assert len(one) == 1 and one[0].weight == pytest.approx(1.0)
