"""Hot loops, each in a numba and a pure-numpy variant.

The public names at the bottom dispatch on ``_accel.USE_NUMBA``.  Both variants
are importable as ``<name>_numba`` / ``<name>_numpy`` for cross-checks and the
benchmark.  Grid arrays are component-first: vector fields are ``(3, nx, ny, nz)``
and spinors ``(ncomp, nx, ny, nz)``.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# Ball quadrature
#
# Midpoint rule over the cell-centred grid, sharp inside/outside indicator.
# Accumulates (all multiplied by the cell volume, r = x - center):
#   row 0: sum r x n                  net-current shape
#   row 1: sum r x (r x n)            moment / angular-momentum shape
#   row 2: sum (r x n) x B(x)         magnetic force shape
#   row 3: sum r x ((r x n) x B(x))   magnetic torque shape
#   row 4: sum E(x)                   electric force shape
#   row 5: sum r x E(x)               electric torque shape
#   row 6: (volume, sum |r x n|^2, 0)
# with B(x) = b_ref + b_grad @ x and E(x) = e_ref + e_grad @ x.
# ---------------------------------------------------------------------------


def _index_window(n, hw, c, radius):
    h = 2.0 * hw / n
    lo = int(math.floor((c - radius + hw) / h - 0.5))
    hi = int(math.ceil((c + radius + hw) / h - 0.5))
    return max(lo, 0), min(hi + 1, n), h


@njit
def _ball_quadrature_numba(dims, halfwidth, center, radius, nhat,
                           b_ref, b_grad, e_ref, e_grad):
    out = np.zeros((7, 3))
    hx = 2.0 * halfwidth[0] / dims[0]
    hy = 2.0 * halfwidth[1] / dims[1]
    hz = 2.0 * halfwidth[2] / dims[2]
    dv = hx * hy * hz
    r2max = radius * radius
    i0 = max(int(math.floor((center[0] - radius + halfwidth[0]) / hx - 0.5)), 0)
    i1 = min(int(math.ceil((center[0] + radius + halfwidth[0]) / hx - 0.5)) + 1, dims[0])
    j0 = max(int(math.floor((center[1] - radius + halfwidth[1]) / hy - 0.5)), 0)
    j1 = min(int(math.ceil((center[1] + radius + halfwidth[1]) / hy - 0.5)) + 1, dims[1])
    k0 = max(int(math.floor((center[2] - radius + halfwidth[2]) / hz - 0.5)), 0)
    k1 = min(int(math.ceil((center[2] + radius + halfwidth[2]) / hz - 0.5)) + 1, dims[2])
    nx, ny, nz = nhat[0], nhat[1], nhat[2]
    for i in range(i0, i1):
        x = -halfwidth[0] + (i + 0.5) * hx
        rx = x - center[0]
        for j in range(j0, j1):
            y = -halfwidth[1] + (j + 0.5) * hy
            ry = y - center[1]
            for k in range(k0, k1):
                z = -halfwidth[2] + (k + 0.5) * hz
                rz = z - center[2]
                if rx * rx + ry * ry + rz * rz > r2max:
                    continue
                # w = r x n
                wx = ry * nz - rz * ny
                wy = rz * nx - rx * nz
                wz = rx * ny - ry * nx
                bx = b_ref[0] + b_grad[0, 0] * x + b_grad[0, 1] * y + b_grad[0, 2] * z
                by = b_ref[1] + b_grad[1, 0] * x + b_grad[1, 1] * y + b_grad[1, 2] * z
                bz = b_ref[2] + b_grad[2, 0] * x + b_grad[2, 1] * y + b_grad[2, 2] * z
                ex = e_ref[0] + e_grad[0, 0] * x + e_grad[0, 1] * y + e_grad[0, 2] * z
                ey = e_ref[1] + e_grad[1, 0] * x + e_grad[1, 1] * y + e_grad[1, 2] * z
                ez = e_ref[2] + e_grad[2, 0] * x + e_grad[2, 1] * y + e_grad[2, 2] * z
                # f = w x B
                fx = wy * bz - wz * by
                fy = wz * bx - wx * bz
                fz = wx * by - wy * bx
                out[0, 0] += wx
                out[0, 1] += wy
                out[0, 2] += wz
                out[1, 0] += ry * wz - rz * wy
                out[1, 1] += rz * wx - rx * wz
                out[1, 2] += rx * wy - ry * wx
                out[2, 0] += fx
                out[2, 1] += fy
                out[2, 2] += fz
                out[3, 0] += ry * fz - rz * fy
                out[3, 1] += rz * fx - rx * fz
                out[3, 2] += rx * fy - ry * fx
                out[4, 0] += ex
                out[4, 1] += ey
                out[4, 2] += ez
                out[5, 0] += ry * ez - rz * ey
                out[5, 1] += rz * ex - rx * ez
                out[5, 2] += rx * ey - ry * ex
                out[6, 0] += 1.0
                out[6, 1] += wx * wx + wy * wy + wz * wz
    return out * dv


def _ball_quadrature_numpy(dims, halfwidth, center, radius, nhat,
                           b_ref, b_grad, e_ref, e_grad):
    out = np.zeros((7, 3))
    windows = [_index_window(int(dims[a]), halfwidth[a], center[a], radius) for a in range(3)]
    (i0, i1, hx), (j0, j1, hy), (k0, k1, hz) = windows
    xs = -halfwidth[0] + (np.arange(i0, i1) + 0.5) * hx
    ys = -halfwidth[1] + (np.arange(j0, j1) + 0.5) * hy
    zs = -halfwidth[2] + (np.arange(k0, k1) + 0.5) * hz
    Y, Z = np.meshgrid(ys, zs, indexing="ij")
    n = np.asarray(nhat, dtype=float)
    for x in xs:
        pos = np.stack([np.full_like(Y, x), Y, Z], axis=-1)
        r = pos - center
        inside = np.einsum("...i,...i->...", r, r) <= radius * radius
        if not inside.any():
            continue
        pos, r = pos[inside], r[inside]
        w = np.cross(r, n)
        b = b_ref + pos @ b_grad.T
        e = e_ref + pos @ e_grad.T
        f = np.cross(w, b)
        out[0] += w.sum(axis=0)
        out[1] += np.cross(r, w).sum(axis=0)
        out[2] += f.sum(axis=0)
        out[3] += np.cross(r, f).sum(axis=0)
        out[4] += e.sum(axis=0)
        out[5] += np.cross(r, e).sum(axis=0)
        out[6, 0] += len(r)
        out[6, 1] += np.einsum("ij,ij->", w, w)
    return out * (hx * hy * hz)


# ---------------------------------------------------------------------------
# Finite-difference divergence / curl
# Centred differences inside, first-order one-sided on the boundary planes.
# ---------------------------------------------------------------------------


@njit
def _ddx_numba(f, h, axis, out):
    nx, ny, nz = f.shape
    n = f.shape[axis]
    inv2h = 0.5 / h
    invh = 1.0 / h
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if axis == 0:
                    m = i
                elif axis == 1:
                    m = j
                else:
                    m = k
                if m == 0:
                    lo, hi, s = 0, 1, invh
                elif m == n - 1:
                    lo, hi, s = n - 2, n - 1, invh
                else:
                    lo, hi, s = m - 1, m + 1, inv2h
                if axis == 0:
                    out[i, j, k] += (f[hi, j, k] - f[lo, j, k]) * s
                elif axis == 1:
                    out[i, j, k] += (f[i, hi, k] - f[i, lo, k]) * s
                else:
                    out[i, j, k] += (f[i, j, hi] - f[i, j, lo]) * s


@njit
def _divergence_numba(v, spacing):
    out = np.zeros(v.shape[1:])
    for a in range(3):
        _ddx_numba(v[a], spacing[a], a, out)
    return out


@njit
def _curl_numba(v, spacing):
    out = np.zeros(v.shape)
    # (curl v)_x = d_y v_z - d_z v_y, etc.
    _ddx_numba(v[2], spacing[1], 1, out[0])
    tmp = np.zeros(v.shape[1:])
    _ddx_numba(v[1], spacing[2], 2, tmp)
    out[0] -= tmp
    _ddx_numba(v[0], spacing[2], 2, out[1])
    tmp[:] = 0.0
    _ddx_numba(v[2], spacing[0], 0, tmp)
    out[1] -= tmp
    _ddx_numba(v[1], spacing[0], 0, out[2])
    tmp[:] = 0.0
    _ddx_numba(v[0], spacing[1], 1, tmp)
    out[2] -= tmp
    return out


def _d(f, h, axis):
    return np.gradient(f, h, axis=axis, edge_order=1)


def _divergence_numpy(v, spacing):
    return sum(_d(v[a], spacing[a], a) for a in range(3))


def _curl_numpy(v, spacing):
    hx, hy, hz = spacing
    return np.stack([
        _d(v[2], hy, 1) - _d(v[1], hz, 2),
        _d(v[0], hz, 2) - _d(v[2], hx, 0),
        _d(v[1], hx, 0) - _d(v[0], hy, 1),
    ])


# ---------------------------------------------------------------------------
# Dirac bilinears: psi^dagger psi and psi^dagger alpha psi
# ---------------------------------------------------------------------------


@njit
def _dirac_bilinears_numba(psi):
    shape = psi.shape[1:]
    rho = np.zeros(shape)
    cur = np.zeros((3,) + shape)
    p0 = psi[0].ravel()
    p1 = psi[1].ravel()
    p2 = psi[2].ravel()
    p3 = psi[3].ravel()
    r = rho.ravel()
    jx = cur[0].ravel()
    jy = cur[1].ravel()
    jz = cur[2].ravel()
    for n in range(p0.size):
        u0, u1, l0, l1 = p0[n], p1[n], p2[n], p3[n]
        r[n] = (u0.real * u0.real + u0.imag * u0.imag + u1.real * u1.real + u1.imag * u1.imag
                + l0.real * l0.real + l0.imag * l0.imag + l1.real * l1.real + l1.imag * l1.imag)
        a = u0.conjugate() * l1
        b = u1.conjugate() * l0
        jx[n] = 2.0 * (a + b).real
        jy[n] = 2.0 * (-1j * a + 1j * b).real
        jz[n] = 2.0 * (u0.conjugate() * l0 - u1.conjugate() * l1).real
    return rho, cur


def _dirac_bilinears_numpy(psi):
    u0, u1, l0, l1 = psi
    rho = (np.abs(psi) ** 2).sum(axis=0)
    a = np.conj(u0) * l1
    b = np.conj(u1) * l0
    cur = np.stack([
        2.0 * (a + b).real,
        2.0 * (-1j * a + 1j * b).real,
        2.0 * (np.conj(u0) * l0 - np.conj(u1) * l1).real,
    ])
    return rho, cur


# ---------------------------------------------------------------------------
# Per-node spin rotation exp(-i phi (b . sigma)), phi = factor * |b|
# ---------------------------------------------------------------------------


@njit
def _spin_rotate_numba(chi, bfield, factor):
    out = np.empty_like(chi)
    c0 = chi[0].ravel()
    c1 = chi[1].ravel()
    bx = bfield[0].ravel()
    by = bfield[1].ravel()
    bz = bfield[2].ravel()
    o0 = out[0].ravel()
    o1 = out[1].ravel()
    for n in range(c0.size):
        bn = math.sqrt(bx[n] * bx[n] + by[n] * by[n] + bz[n] * bz[n])
        th = factor * bn
        cs = math.cos(th)
        if bn > 0.0:
            sn = math.sin(th) / bn
        else:
            sn = 0.0
        # U = cos I - i sin (n . sigma)
        u00 = cs - 1j * sn * bz[n]
        u11 = cs + 1j * sn * bz[n]
        u01 = -1j * sn * (bx[n] - 1j * by[n])
        u10 = -1j * sn * (bx[n] + 1j * by[n])
        a, b = c0[n], c1[n]
        o0[n] = u00 * a + u01 * b
        o1[n] = u10 * a + u11 * b
    return out


def _spin_rotate_numpy(chi, bfield, factor):
    bx, by, bz = bfield
    bn = np.sqrt(bx * bx + by * by + bz * bz)
    th = factor * bn
    cs = np.cos(th)
    with np.errstate(invalid="ignore", divide="ignore"):
        sn = np.where(bn > 0, np.sin(th) / np.where(bn > 0, bn, 1.0), 0.0)
    a, b = chi
    return np.stack([
        (cs - 1j * sn * bz) * a - 1j * sn * (bx - 1j * by) * b,
        -1j * sn * (bx + 1j * by) * a + (cs + 1j * sn * bz) * b,
    ])


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def _prep_ball_args(dims, halfwidth, center, radius, nhat, b_ref, b_grad, e_ref, e_grad):
    f = lambda a, shape: np.ascontiguousarray(np.broadcast_to(np.asarray(a, dtype=float), shape))
    return (np.asarray(dims, dtype=np.int64), f(halfwidth, (3,)), f(center, (3,)), float(radius),
            f(nhat, (3,)), f(b_ref, (3,)), f(b_grad, (3, 3)), f(e_ref, (3,)), f(e_grad, (3, 3)))


def ball_quadrature(dims, halfwidth, center, radius, nhat,
                    b_ref=0.0, b_grad=0.0, e_ref=0.0, e_grad=0.0, use_numba=None):
    args = _prep_ball_args(dims, halfwidth, center, radius, nhat, b_ref, b_grad, e_ref, e_grad)
    if _pick(use_numba):
        return _ball_quadrature_numba(*args)
    return _ball_quadrature_numpy(*args)


def divergence(v, spacing, use_numba=None):
    v = np.ascontiguousarray(v, dtype=float)
    spacing = np.asarray(spacing, dtype=float)
    if _pick(use_numba):
        return _divergence_numba(v, spacing)
    return _divergence_numpy(v, spacing)


def curl(v, spacing, use_numba=None):
    v = np.ascontiguousarray(v, dtype=float)
    spacing = np.asarray(spacing, dtype=float)
    if _pick(use_numba):
        return _curl_numba(v, spacing)
    return _curl_numpy(v, spacing)


def dirac_bilinears(psi, use_numba=None):
    psi = np.ascontiguousarray(psi, dtype=complex)
    if _pick(use_numba):
        return _dirac_bilinears_numba(psi)
    return _dirac_bilinears_numpy(psi)


def spin_rotate(chi, bfield, factor, use_numba=None):
    chi = np.ascontiguousarray(chi, dtype=complex)
    bfield = np.ascontiguousarray(bfield, dtype=float)
    if _pick(use_numba):
        return _spin_rotate_numba(chi, bfield, float(factor))
    return _spin_rotate_numpy(chi, bfield, float(factor))


def _pick(use_numba):
    if use_numba is None:
        return _accel.USE_NUMBA
    return bool(use_numba) and _accel.HAVE_NUMBA
