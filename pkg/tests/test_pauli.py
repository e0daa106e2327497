import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given, strategies as st

from sgspin import Grid3, PhysParams
from sgspin.errors import GateError, GridError
from sgspin.fields import sg_field
from sgspin.pauli import (PAULI, GaussianPacketSpec, SpinorField2, centroid, density,
                          evolved_width, free_evolve_analytic, free_evolve_spectral,
                          larmor_envelope, make_gaussian, momentum_expectation,
                          probability_current, sg_phase_kick, spin_amplitudes,
                          spin_expectation, z_width)
from sgspin.units import bohr_magneton, kick_parameter

UP, XUP = (1.0, 0.0), spin_amplitudes(math.pi / 2)


def with_kappa(p, kappa):
    return p.with_(dt_field=p.dt_field * kappa / kick_parameter(p))


@pytest.fixture(scope="module")
def g64():
    return Grid3(64, 6 * PhysParams().d)


def packet(p, g, spin=UP):
    return make_gaussian(GaussianPacketSpec.from_params(p, spin), g, p)


def test_z_up_has_empty_lower_component(p, g64):
    chi = packet(p, g64)
    assert not chi.values[1].any()


def test_x_up_is_equal_superposition(p, g64):
    x = packet(p, g64, XUP).values
    up = packet(p, g64).values[0]
    down = packet(p, g64, (0.0, 1.0)).values[1]
    np.testing.assert_array_equal(x[0], XUP[0] * up)
    np.testing.assert_allclose(x, np.stack([up, down]) / math.sqrt(2), rtol=1e-15, atol=1e-300)


def test_gaussian_norm(p, g64):
    assert packet(p, g64).norm2() == pytest.approx(1.0, abs=1e-8)
    assert density(packet(p, g64, XUP)).integral() == pytest.approx(1.0, abs=1e-8)


def test_small_box_rejected(p):
    with pytest.raises(GridError):
        packet(p, Grid3(16, p.d))


def test_unnormalised_spin_rejected(p):
    with pytest.raises(ValueError):
        GaussianPacketSpec.from_params(p, (1.0, 1.0))


def test_kick_momentum(p, g64):
    chi = sg_phase_kick(packet(p, g64), p)
    m = momentum_expectation(chi)
    kick = bohr_magneton(p) * p.eta * p.dt_field
    assert m.value[2] == pytest.approx(kick, rel=1e-6)
    assert np.max(np.abs(m.value[:2])) < 1e-10 * kick
    assert m.imag_residual < 1e-8


def test_uniform_field_kick_is_a_global_phase(p, g64):
    q = p.with_(eta=0.0, dt_field=3.7)
    chi = packet(q, g64)
    out = sg_phase_kick(chi, q).values[0]
    np.testing.assert_allclose(np.abs(out), np.abs(chi.values[0]), rtol=1e-14)
    ratio = out[chi.values[0] != 0] / chi.values[0][chi.values[0] != 0]
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)


def test_full_kick_matches_matrix_exponential(p, rng):
    g = Grid3(4, 2 * p.d)
    vals = rng.normal(size=(2, 4, 4, 4)) + 1j * rng.normal(size=(2, 4, 4, 4))
    chi = SpinorField2(g, vals, p)
    out = sg_phase_kick(chi, p, include_sigma_x=True).values
    mu = bohr_magneton(p)
    B = sg_field(p).b_at(g.positions())
    for idx in [(0, 0, 0), (1, 2, 3), (3, 3, 0)]:
        H = mu * sum(B[idx][k] * PAULI[k] for k in range(3))
        U = scipy.linalg.expm(-1j * H * p.dt_field / p.hbar)
        np.testing.assert_allclose(out[(slice(None),) + idx], U @ vals[(slice(None),) + idx],
                                   rtol=1e-9)


def test_analytic_at_zero_is_the_kicked_state(p, g64):
    spec = GaussianPacketSpec.from_params(p, XUP)
    kicked = sg_phase_kick(make_gaussian(spec, g64, p), p).values
    closed = free_evolve_analytic(spec.kicked(p), 0.0, g64, p).values
    np.testing.assert_allclose(closed, kicked, atol=1e-12 * np.max(np.abs(kicked)))


def test_centroid_moves_with_kick_velocity(p):
    g = Grid3((48, 48, 96), (6 * p.d, 6 * p.d, 10 * p.d))
    spec = GaussianPacketSpec.from_params(p).kicked(p)
    t = 0.5 * p.d ** 2
    c = centroid(density(free_evolve_analytic(spec, t, g, p)))
    v = bohr_magneton(p) * p.eta * p.dt_field
    np.testing.assert_allclose(c, [0, 0, v * t], atol=1e-6 * v * t)


def test_width_follows_spreading_law(p):
    g = Grid3(64, 8 * p.d)
    t = p.d ** 2
    chi = free_evolve_analytic(GaussianPacketSpec.from_params(p), t, g, p)
    assert z_width(density(chi)) == pytest.approx(evolved_width(p.d, t), rel=1e-6)


def test_spectral_matches_analytic(p):
    q = with_kappa(p, 0.5)
    g = Grid3(64, 8 * q.d)
    spec = GaussianPacketSpec.from_params(q)
    chi = sg_phase_kick(make_gaussian(spec, g, q), q)
    t = q.d ** 2
    num = free_evolve_spectral(chi, t, steps=4).values
    ref = free_evolve_analytic(spec.kicked(q), t, g, q).values
    assert np.linalg.norm(num - ref) / np.linalg.norm(ref) < 1e-6


def test_spectral_identity_and_norm_drift(p, g64):
    chi = packet(p, g64, XUP)
    np.testing.assert_allclose(free_evolve_spectral(chi, 0.0).values, chi.values,
                               atol=1e-15 * np.max(np.abs(chi.values)))
    n0 = chi.norm2()
    for _ in range(100):
        chi = free_evolve_spectral(chi, 0.002 * p.d ** 2, strict=False)
    assert abs(chi.norm2() - n0) < 1e-10


def test_margin_monitor_raises(p):
    g = Grid3(32, 5 * p.d)
    chi = sg_phase_kick(packet(p, g), p)
    with pytest.raises(GateError):
        free_evolve_spectral(chi, p.d ** 2)
    out = free_evolve_spectral(chi, p.d ** 2, strict=False)
    assert out.meta["margin_norm"] > 1e-4


def test_momentum_of_real_gaussian_is_zero(p, g64):
    assert np.max(np.abs(momentum_expectation(packet(p, g64)).value)) < 1e-12


def test_x_up_momentum_split(p, g64):
    chi = sg_phase_kick(packet(p, g64, XUP), p)
    kick = bohr_magneton(p) * p.eta * p.dt_field
    assert np.max(np.abs(momentum_expectation(chi).value)) < 1e-8 * kick
    assert momentum_expectation(chi, 0).value[2] == pytest.approx(kick, rel=1e-6)
    assert momentum_expectation(chi, 1).value[2] == pytest.approx(-kick, rel=1e-6)


def test_spin_expectation_z_up(p, g64):
    np.testing.assert_allclose(spin_expectation(packet(p, g64)), [0, 0, 1], atol=1e-12)


@pytest.mark.parametrize("kappa", [0.3, 1.0])
def test_larmor_envelope_three_ways(p, g64, kappa):
    q = with_kappa(p, kappa).with_(dt_field=with_kappa(p, kappa).dt_field * 1.03)
    mu = bohr_magneton(q)
    chi = sg_phase_kick(packet(q, g64, XUP), q)
    grid_val = spin_expectation(chi)
    integrand = lambda z: (np.exp(-z * z / q.d ** 2) / (math.sqrt(math.pi) * q.d)
                           * math.cos(2 * mu * (q.B0 - q.eta * z) * q.dt_field / q.hbar))
    quad, _ = scipy.integrate.quad(integrand, -12 * q.d, 12 * q.d, limit=400)
    assert larmor_envelope(q) == pytest.approx(quad, abs=1e-10)
    assert grid_val[0] == pytest.approx(quad, abs=1e-8)
    assert abs(grid_val[2]) < 1e-12


def test_uniform_field_rotates_spin_about_z(p, g64):
    q = p.with_(eta=0.0, dt_field=5.0)
    phi0 = 0.4
    chi = packet(q, g64, spin_amplitudes(1.1, phi0))
    s0 = spin_expectation(chi)
    s1 = spin_expectation(sg_phase_kick(chi, q))
    angle = 2 * bohr_magneton(q) * q.B0 * q.dt_field / q.hbar
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    np.testing.assert_allclose(s1, rot @ s0, atol=1e-12)


def test_density_independent_of_spin(p, g64):
    np.testing.assert_allclose(density(packet(p, g64)).values,
                               density(packet(p, g64, XUP)).values, rtol=1e-14)


def test_x_up_splits_into_two_maxima(p):
    g = Grid3((16, 16, 192), (5 * p.d, 5 * p.d, 18 * p.d))
    t = 2 * p.d ** 2
    spec = GaussianPacketSpec.from_params(p, XUP).kicked(p)
    marg = density(free_evolve_analytic(spec, t, g, p)).values.sum(axis=(0, 1))
    z = g.axis(2)
    peaks = [i for i in range(1, len(z) - 1) if marg[i] > marg[i - 1] and marg[i] > marg[i + 1]]
    vt = bohr_magneton(p) * p.eta * p.dt_field * t
    assert len(peaks) == 2
    np.testing.assert_allclose(z[peaks], [-vt, vt], atol=g.spacing[2])


def _random_spinor(g, seed):
    r = np.random.default_rng(seed)
    v = r.normal(size=(2,) + g.dims) + 1j * r.normal(size=(2,) + g.dims)
    return v / np.sqrt(g.integrate(np.sum(np.abs(v) ** 2, axis=0)))


cplx = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@given(cplx, cplx, st.sampled_from([False, True]))
def test_evolutions_are_linear(a, b, full):
    p = PhysParams()
    g = Grid3(8, 6 * p.d)
    c1, c2 = _random_spinor(g, 1), _random_spinor(g, 2)
    mix = SpinorField2(g, a * c1 + b * c2, p)
    ops = [lambda c: sg_phase_kick(c, p, include_sigma_x=full).values,
           lambda c: free_evolve_spectral(c, 0.3 * p.d ** 2, strict=False).values]
    for op in ops:
        lhs = op(mix)
        rhs = a * op(SpinorField2(g, c1, p)) + b * op(SpinorField2(g, c2, p))
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.max(np.abs(rhs)))


@given(st.integers(0, 10_000), st.floats(0.0, 2.0), st.sampled_from([False, True]))
def test_evolutions_are_unitary(seed, t, full):
    p = PhysParams()
    g = Grid3(8, 6 * p.d)
    chi = SpinorField2(g, _random_spinor(g, seed), p)
    assert abs(sg_phase_kick(chi, p, include_sigma_x=full).norm2() - 1) < 1e-10
    assert abs(free_evolve_spectral(chi, t * p.d ** 2, steps=3, strict=False).norm2() - 1) < 1e-10


@pytest.mark.parametrize("t", [0.0, 0.5, 1.5])
def test_analytic_evolution_keeps_norm(p, t):
    g = Grid3((48, 48, 96), (8 * p.d, 8 * p.d, 15 * p.d))
    spec = GaussianPacketSpec.from_params(p, XUP).kicked(p)
    assert free_evolve_analytic(spec, t * p.d ** 2, g, p).norm2() == pytest.approx(1, abs=1e-6)


def test_momentum_grows_at_mu_eta(p, g64):
    h = 0.01 * p.dt_field
    pz = [momentum_expectation(sg_phase_kick(packet(p, g64), p.with_(dt_field=p.dt_field + s)))
          .value[2] for s in (-h, h)]
    assert (pz[1] - pz[0]) / (2 * h) == pytest.approx(bohr_magneton(p) * p.eta, rel=1e-4)


def test_ehrenfest_centroid_velocity(p):
    g = Grid3((40, 40, 96), (6 * p.d, 6 * p.d, 10 * p.d))
    spec = GaussianPacketSpec.from_params(p).kicked(p)
    t, h = 0.4 * p.d ** 2, 0.01 * p.d ** 2
    z = [centroid(density(free_evolve_analytic(spec, t + s, g, p)))[2] for s in (-h, h)]
    chi = free_evolve_analytic(spec, t, g, p)
    v_expect = momentum_expectation(chi).value[2] / p.mass
    assert (z[1] - z[0]) / (2 * h) == pytest.approx(v_expect, rel=1e-6)
    # the probability current carries the same velocity
    flux = g.integrate(probability_current(chi)[2])
    assert flux == pytest.approx(v_expect, rel=1e-6)
