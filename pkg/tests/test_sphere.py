import math

import numpy as np
import pytest

from sgspin import Grid3, PhysParams, sg_field
from sgspin.errors import GridError
from sgspin.sphere import (SphereState, angular_momentum_quadrature, equator_speed,
                           integrate_rigid, magnetic_moment_quadrature, net_current_quadrature,
                           potential_energy, potential_force, sphere_current_density,
                           sphere_force_density, sphere_momentum_density, sphere_torque,
                           sphere_total_force, validate_subluminal)

Z, X = (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)


@pytest.fixture(scope="module")
def grid():
    p = PhysParams()
    return Grid3(96, 1.2 * p.R)


def test_current_vanishes_on_axis(p):
    s = SphereState.at_rest(Z, p)
    x = np.array([[0, 0, z] for z in np.linspace(-p.R, p.R, 7)])
    assert not sphere_current_density(s, x).any()


def test_current_at_half_radius(p):
    s = SphereState.at_rest(Z, p)
    J = sphere_current_density(s, np.array([p.R / 2, 0, 0]))
    np.testing.assert_allclose(J, [0, -15 * s.mu * p.c / (8 * math.pi * p.R ** 4), 0])


def test_no_net_current(p, grid):
    for axis in (Z, X, (0.3, -0.4, 0.5)):
        s = SphereState.at_rest(axis, p)
        scale = s.mu * p.c / p.R ** 4 * grid.cell_volume
        assert np.max(np.abs(net_current_quadrature(s, grid))) < 1e-9 * scale


def test_momentum_density_support(p):
    s = SphereState.at_rest(Z, p)
    assert not sphere_momentum_density(s, np.array([1.01 * p.R, 0, 0])).any()


def test_angular_momentum_quadrature(p, grid):
    s = SphereState.at_rest(Z, p)
    np.testing.assert_allclose(angular_momentum_quadrature(s, grid), [0, 0, 0.5], atol=5e-3)


def test_equator_speed_from_density(p):
    s = SphereState.at_rest(Z, p)
    G = sphere_momentum_density(s, np.array([p.R * (1 - 1e-12), 0, 0]))
    rho_mass = 3 * p.mass / (4 * math.pi * p.R ** 3)
    assert np.linalg.norm(G) / rho_mass == pytest.approx(5 / (4 * p.R), rel=1e-9)
    assert equator_speed(p) == pytest.approx(5 / (4 * p.R))


@pytest.mark.parametrize("axis", [Z, X])
def test_magnetic_moment(p, grid, axis):
    s = SphereState.at_rest(axis, p)
    np.testing.assert_allclose(magnetic_moment_quadrature(s, grid), -s.mu * np.array(axis),
                               atol=5e-3 * s.mu)


def test_moment_refinement(p):
    s = SphereState.at_rest(Z, p)
    err = [abs(magnetic_moment_quadrature(s, Grid3(n, 1.5 * p.R))[2] / s.mu + 1)
           for n in (32, 64)]
    assert err[0] / err[1] >= 2.0


def test_force_density_z_spin(p, rng):
    s = SphereState.at_rest(Z, p)
    f = sg_field(p)
    x = rng.uniform(-0.55, 0.55, (20, 3)) * p.R
    fd = sphere_force_density(s, f, x)
    k = 15 * s.mu / (4 * math.pi * p.R ** 5)
    np.testing.assert_allclose(fd[:, 2], k * p.eta * x[:, 0] ** 2, rtol=1e-12)
    np.testing.assert_allclose(fd[:, 0], -k * x[:, 0] * (p.B0 - p.eta * x[:, 2]), rtol=1e-12)


def test_force_density_x_spin(p, rng):
    s = SphereState.at_rest(X, p)
    f = sg_field(p)
    x, y, z = (rng.uniform(-0.55, 0.55, (3, 20)) * p.R)
    fd = sphere_force_density(s, f, np.stack([x, y, z], -1))
    k = 15 * s.mu / (4 * math.pi * p.R ** 5)
    want = k * np.stack([p.B0 * z - p.eta * z * z, -p.eta * x * y, -p.eta * x * z], -1)
    np.testing.assert_allclose(fd, want, rtol=1e-10, atol=1e-14 * k * p.B0 * p.R)


def test_uniform_field_exerts_no_force(p, grid):
    s = SphereState.at_rest(Z, p)
    F = sphere_total_force(s, sg_field(p.with_(eta=0.0)), grid)
    assert np.max(np.abs(F)) < 1e-12 * s.mu * p.B0 / p.R


def test_total_force_z_spin(p, grid):
    s = SphereState.at_rest(Z, p)
    F = sphere_total_force(s, sg_field(p), grid)
    np.testing.assert_allclose(F, [0, 0, s.mu * p.eta], rtol=1e-2, atol=1e-9 * s.mu * p.eta)


def test_total_force_x_spin_has_no_z_part(p, grid):
    s = SphereState.at_rest(X, p)
    F = sphere_total_force(s, sg_field(p), grid)
    assert abs(F[2]) < 1e-9 * s.mu * p.eta
    assert F[0] == pytest.approx(-s.mu * p.eta, rel=1e-2)


def test_force_matches_dipole_energy_gradient(p, grid):
    s = SphereState.at_rest(Z, p)
    f = sg_field(p)
    F_pot = potential_force(-s.mu * np.array(Z), f, np.zeros(3))
    np.testing.assert_allclose(F_pot, [0, 0, s.mu * p.eta])
    np.testing.assert_allclose(sphere_total_force(s, f, grid), F_pot, rtol=1e-2,
                               atol=1e-9 * s.mu * p.eta)


def test_dipole_energy(p):
    f = sg_field(p)
    mu = SphereState.at_rest(Z, p).mu
    z0 = 7.0
    assert potential_energy([0, 0, -mu], f, np.array([0, 0, z0])) == pytest.approx(
        mu * (p.B0 - p.eta * z0))
    g = sg_field(p.with_(eta=0.0))
    assert potential_energy([mu, 0, 0], g, np.zeros(3)) == 0.0
    assert not potential_force([mu, 0, 0], g, np.zeros(3)).any()


def test_torque_x_spin(p, grid):
    s = SphereState.at_rest(X, p)
    T = sphere_torque(s, sg_field(p), grid)
    np.testing.assert_allclose(T, [0, s.mu * p.B0, 0], rtol=1e-2, atol=1e-9 * s.mu * p.B0)


def test_torque_parallel_is_zero(p, grid):
    s = SphereState.at_rest(Z, p)
    assert np.max(np.abs(sphere_torque(s, sg_field(p.with_(eta=0.0)), grid))) < 1e-12 * s.mu * p.B0


def test_torque_tends_to_point_value():
    # for a field linear in position the ball torque about the centre is exactly
    # m x B(centre) at every radius, so what remains is staircase error that
    # shrinks with refinement
    p = PhysParams(eta=20.0)
    s = SphereState.at_rest(X, p, center=(0.0, 0.0, 0.3 * p.R))
    f = sg_field(p)
    point = np.cross(s.m_vec, f.b_at(s.center))
    errs = [np.linalg.norm(sphere_torque(s, f, Grid3(n, 1.7 * p.R)) - point) / np.linalg.norm(point)
            for n in (64, 96, 128)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 5e-3


@pytest.mark.parametrize("rot", [
    np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0.0]]),
    np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0.0]]),
    np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]]),
])
def test_rotation_covariance(p, rot):
    g = Grid3(40, 1.2 * p.R)
    axis = np.array([0.6, 0.0, 0.8])
    f = sg_field(p)
    s = SphereState.at_rest(axis, p)
    s_rot = SphereState.at_rest(rot @ axis, p)
    F, T = sphere_total_force(s, f, g), sphere_torque(s, f, g)
    F2, T2 = sphere_total_force(s_rot, f.rotated(rot), g), sphere_torque(s_rot, f.rotated(rot), g)
    np.testing.assert_allclose(F2, rot @ F, atol=1e-12 * s.mu * p.B0 / p.R)
    np.testing.assert_allclose(T2, rot @ T, atol=1e-12 * s.mu * p.B0)


def test_grid_must_contain_sphere(p):
    with pytest.raises(GridError):
        magnetic_moment_quadrature(SphereState.at_rest(Z, p), Grid3(16, 0.5 * p.R))


def test_subluminal_boundary():
    r = validate_subluminal(PhysParams(R=5 / (4 * 137.035999084), d=100.0))
    assert r.at_boundary and r.ratio == pytest.approx(1.0)
    r10 = validate_subluminal(PhysParams(R=50 / (4 * 137.035999084)))
    assert r10.passed and r10.ratio == pytest.approx(0.1)
    assert validate_subluminal(PhysParams(R=1e12)).ratio < 1e-12


def test_kick_z_spin(p):
    s = SphereState.at_rest(Z, p)
    tr = integrate_rigid(s, sg_field(p), p.dt_field, p.dt_field / 400)
    kick = s.mu * p.eta * p.dt_field
    assert tr.momentum[-1, 2] == pytest.approx(kick, rel=1e-9)
    assert tr.velocity()[-1, 2] == pytest.approx(kick / p.mass, rel=1e-9)


def test_precession_frequency_uniform_field(p):
    q = p.with_(eta=0.0)
    s = SphereState.at_rest(X, q)
    tr = integrate_rigid(s, sg_field(q), 4 * math.pi / (2 * s.mu * q.B0) * 2, q.dt_field / 800)
    assert tr.precession_frequency() == pytest.approx(2 * s.mu * q.B0, rel=1e-3)


def test_x_spin_not_deflected(p):
    s = SphereState.at_rest(X, p)
    tr = integrate_rigid(s, sg_field(p), p.dt_field, p.dt_field / 800)
    kick = s.mu * p.eta * p.dt_field
    assert abs(tr.momentum[-1, 2]) < 1e-2 * kick
    assert abs(tr.center[-1, 2]) < 1e-2 * kick * p.dt_field / p.mass


def test_spin_length_conserved_over_many_steps(p):
    s = SphereState.at_rest((0.3, 0.5, 0.8), p)
    tr = integrate_rigid(s, sg_field(p), 10_000 * p.dt_field / 2000, p.dt_field / 2000)
    assert len(tr.times) == 10_001
    assert np.max(np.abs(np.linalg.norm(tr.spin_axis, axis=1) - 1)) < 1e-9


def test_quadrature_force_mode_matches_closed(p):
    g = Grid3(24, 1.1 * p.R)
    s = SphereState.at_rest(Z, p)
    f = sg_field(p)
    a = integrate_rigid(s, f, p.dt_field / 10, p.dt_field / 400)
    b = integrate_rigid(s, f, p.dt_field / 10, p.dt_field / 400, force="quadrature", grid=g)
    assert b.momentum[-1, 2] == pytest.approx(a.momentum[-1, 2], rel=0.1)
