"""Analytic EM fields, uniform 3-D grids and grid differential operators."""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import GridError


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def _triple(v, kind):
    a = np.broadcast_to(np.asarray(v, dtype=kind), (3,))
    return tuple(a.tolist())


@dataclass(frozen=True)
class Grid3:
    """Cell-centred grid symmetric about the origin.

    Node ``i`` along an axis sits at ``-halfwidth + (i + 1/2) * spacing``.
    """
    dims: tuple
    box_halfwidth: tuple

    def __init__(self, dims, box_halfwidth):
        dims = _triple(dims, int)
        hw = _triple(box_halfwidth, float)
        if min(dims) < 1:
            raise GridError(f"grid dims must be positive, got {dims}")
        if min(hw) <= 0:
            raise GridError(f"box halfwidth must be positive, got {hw}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "box_halfwidth", hw)

    @property
    def spacing(self):
        return tuple(2.0 * h / n for h, n in zip(self.box_halfwidth, self.dims))

    @property
    def shape(self):
        return self.dims

    @property
    def n_nodes(self):
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def cell_volume(self):
        hx, hy, hz = self.spacing
        return hx * hy * hz

    @property
    def extents(self):
        """(xmin, xmax, ymin, ymax, zmin, zmax) of the box."""
        out = []
        for h in self.box_halfwidth:
            out += [-h, h]
        return tuple(out)

    def axis(self, a):
        n, h = self.dims[a], self.spacing[a]
        return -self.box_halfwidth[a] + (np.arange(n) + 0.5) * h

    def axes(self):
        return [self.axis(a) for a in range(3)]

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def positions(self):
        """Node coordinates with a trailing component axis, ``(nx, ny, nz, 3)``."""
        return np.stack(self.mesh(), axis=-1)

    def wavenumbers(self):
        """Angular wavenumbers of the FFT modes along each axis."""
        return [2 * np.pi * np.fft.fftfreq(n, d=h) for n, h in zip(self.dims, self.spacing)]

    def integrate(self, values):
        return np.sum(values, axis=(-3, -2, -1)) * self.cell_volume

    def refined(self, factor=2):
        return Grid3(tuple(n * factor for n in self.dims), self.box_halfwidth)


@dataclass
class ScalarGridField:
    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.dims:
            raise GridError(f"values shape {self.values.shape} != grid dims {self.grid.dims}")

    def integral(self):
        return float(self.grid.integrate(self.values))


@dataclass
class VecGridField:
    """3-vector per node, stored component-first as ``(3, nx, ny, nz)``."""
    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (3,) + self.grid.dims:
            raise GridError(f"values shape {self.values.shape} != (3,) + {self.grid.dims}")

    def integral(self):
        return self.grid.integrate(self.values)

    def magnitude(self):
        return np.sqrt(np.sum(self.values ** 2, axis=0))


# ---------------------------------------------------------------------------
# Analytic fields
# ---------------------------------------------------------------------------


def _zero_vec(x):
    x = np.asarray(x, dtype=float)
    return np.zeros(x.shape)


def _zero_scalar(x):
    x = np.asarray(x, dtype=float)
    return np.zeros(x.shape[:-1])


@dataclass(frozen=True)
class AffineData:
    """B(x) = b_ref + b_grad @ x and E(x) = e_ref + e_grad @ x;
    ``grad[i, j] = d F_i / d x_j``."""
    b_ref: np.ndarray
    b_grad: np.ndarray
    e_ref: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e_grad: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))


@dataclass(frozen=True)
class AnalyticEMField:
    """Position -> (E, B, A, phi).  All callables take ``(..., 3)`` arrays.

    ``affine`` is set when E and B are affine in position; the sphere
    quadrature kernels need it.  ``b_jacobian_at`` returns ``dB_i/dx_j``;
    when absent it is estimated by centred differences.
    """
    b_at: Callable
    a_at: Callable
    e_at: Callable = _zero_vec
    phi_at: Callable = _zero_scalar
    affine: Optional[AffineData] = None
    b_jac: Optional[Callable] = None
    name: str = "field"

    def b_jacobian_at(self, x, h=1e-5):
        x = np.asarray(x, dtype=float)
        if self.b_jac is not None:
            return self.b_jac(x)
        jac = np.zeros(x.shape[:-1] + (3, 3))
        for j in range(3):
            step = np.zeros(3)
            step[j] = h
            jac[..., :, j] = (self.b_at(x + step) - self.b_at(x - step)) / (2 * h)
        return jac

    def rotated(self, rot):
        """Field rigidly rotated by the proper rotation matrix ``rot``."""
        rot = np.asarray(rot, dtype=float)

        def wrap(f):
            return lambda x: np.asarray(f(np.asarray(x, dtype=float) @ rot)) @ rot.T

        aff = None
        if self.affine is not None:
            a = self.affine
            aff = AffineData(rot @ a.b_ref, rot @ a.b_grad @ rot.T,
                             rot @ a.e_ref, rot @ a.e_grad @ rot.T)
        jac = None
        if self.b_jac is not None:
            jac = lambda x: rot @ self.b_jac(np.asarray(x, dtype=float) @ rot) @ rot.T
        return AnalyticEMField(
            b_at=wrap(self.b_at), a_at=wrap(self.a_at), e_at=wrap(self.e_at),
            phi_at=lambda x: self.phi_at(np.asarray(x, dtype=float) @ rot),
            affine=aff, b_jac=jac, name=f"{self.name}-rotated",
        )


def sg_field(p):
    """Stern-Gerlach field B = eta x xhat + (B0 - eta z) zhat with vector
    potential A = (B0 x - eta x z) yhat; E and phi vanish."""
    B0, eta = float(p.B0), float(p.eta)

    def b_at(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        out[..., 0] = eta * x[..., 0]
        out[..., 2] = B0 - eta * x[..., 2]
        return out

    def a_at(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        out[..., 1] = B0 * x[..., 0] - eta * x[..., 0] * x[..., 2]
        return out

    grad = np.array([[eta, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -eta]])

    def b_jac(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(grad, x.shape[:-1] + (3, 3)).copy()

    return AnalyticEMField(
        b_at=b_at, a_at=a_at, affine=AffineData(np.array([0.0, 0.0, B0]), grad),
        b_jac=b_jac, name="stern-gerlach",
    )


def zero_field():
    """No electromagnetic field at all (free propagation)."""
    return AnalyticEMField(
        b_at=_zero_vec, a_at=_zero_vec,
        affine=AffineData(np.zeros(3), np.zeros((3, 3))),
        b_jac=lambda x: np.zeros(np.shape(x)[:-1] + (3, 3)), name="zero",
    )


def affine_field(b_ref, b_grad, e_ref=(0.0, 0.0, 0.0), e_grad=None):
    """Affine B (and E) with A in the Poincare gauge,
    A(x) = -x x b_ref / 2 - x x (b_grad x) / 3.  Requires div B = 0."""
    b_ref = np.asarray(b_ref, dtype=float)
    b_grad = np.asarray(b_grad, dtype=float)
    e_ref = np.asarray(e_ref, dtype=float)
    e_grad = np.zeros((3, 3)) if e_grad is None else np.asarray(e_grad, dtype=float)
    if abs(np.trace(b_grad)) > 1e-12 * max(1.0, np.abs(b_grad).max()):
        raise ValueError("affine magnetic field must be divergence-free")

    def b_at(x):
        return b_ref + np.asarray(x, dtype=float) @ b_grad.T

    def a_at(x):
        x = np.asarray(x, dtype=float)
        return -0.5 * np.cross(x, b_ref) - np.cross(x, x @ b_grad.T) / 3.0

    def e_at(x):
        return e_ref + np.asarray(x, dtype=float) @ e_grad.T

    def phi_at(x):
        # E = -grad phi only for curl-free (symmetric) e_grad
        x = np.asarray(x, dtype=float)
        return -(x @ e_ref) - 0.5 * np.einsum("...i,ij,...j->...", x, e_grad, x)

    return AnalyticEMField(
        b_at=b_at, a_at=a_at, e_at=e_at, phi_at=phi_at,
        affine=AffineData(b_ref, b_grad, e_ref, e_grad),
        b_jac=lambda x: np.broadcast_to(b_grad, np.shape(x)[:-1] + (3, 3)).copy(),
        name="affine",
    )


# ---------------------------------------------------------------------------
# Sampling and differential operators
# ---------------------------------------------------------------------------


def sample_field(f, g):
    """Evaluate a position -> 3-vector function at every node."""
    pos = g.positions()
    try:
        vals = np.asarray(f(pos), dtype=float)
        if vals.shape != pos.shape:
            raise ValueError
    except (ValueError, TypeError, IndexError):
        flat = pos.reshape(-1, 3)
        vals = np.array([np.asarray(f(x), dtype=float) for x in flat]).reshape(pos.shape)
    return VecGridField(g, np.moveaxis(vals, -1, 0).copy())


def sample_scalar(f, g):
    return ScalarGridField(g, np.asarray(f(g.positions()), dtype=float))


def _require_thick(g):
    if min(g.dims) < 3:
        raise GridError(f"finite differences need at least 3 nodes per axis, got {g.dims}")


def grid_divergence(v):
    _require_thick(v.grid)
    return ScalarGridField(v.grid, kernels.divergence(v.values, v.grid.spacing))


def grid_curl(v):
    _require_thick(v.grid)
    return VecGridField(v.grid, kernels.curl(v.values, v.grid.spacing))


def interior(a, width=1):
    """Strip ``width`` boundary planes from the trailing three axes."""
    s = slice(width, -width)
    return a[..., s, s, s]


@dataclass(frozen=True)
class PotentialReport:
    curl_residual: float
    div_residual: float
    h: float
    n_samples: int


def check_potential_consistency(f, samples, h):
    """Max |curl A - B| and |div B| over sample points, centred differences."""
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    eye = np.eye(3) * h
    dA = np.empty((len(x), 3, 3))  # dA[:, i, j] = d A_i / d x_j
    dB = np.empty((len(x), 3, 3))
    for j in range(3):
        dA[:, :, j] = (f.a_at(x + eye[j]) - f.a_at(x - eye[j])) / (2 * h)
        dB[:, :, j] = (f.b_at(x + eye[j]) - f.b_at(x - eye[j])) / (2 * h)
    curl_a = np.stack([
        dA[:, 2, 1] - dA[:, 1, 2],
        dA[:, 0, 2] - dA[:, 2, 0],
        dA[:, 1, 0] - dA[:, 0, 1],
    ], axis=-1)
    curl_res = np.max(np.linalg.norm(curl_a - f.b_at(x), axis=-1))
    div_res = np.max(np.abs(np.trace(dB, axis1=1, axis2=2)))
    return PotentialReport(float(curl_res), float(div_res), float(h), len(x))
