"""Grid dumps, CSV series, slice matrices, graymaps and JSON records.

Binary grid layout (little-endian):
  8 bytes    magic b"SGSGRID1"
  3 x int64  nx, ny, nz
  6 x f64    xmin, xmax, ymin, ymax, zmin, zmax
  int64      number of float components per node
  f64 data   node order x-fastest, then y, then z; components interleaved
             per node.  Complex fields are written as (re, im) pairs.
"""
import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .errors import GridError
from .fields import Grid3

MAGIC = b"SGSGRID1"
_HEADER = struct.Struct("<8s3q6dq")


def _as_components(values, dims):
    v = np.asarray(values)
    if v.shape == tuple(dims):
        v = v[None]
    if v.shape[1:] != tuple(dims):
        raise GridError(f"values shape {v.shape} does not match grid {dims}")
    if np.iscomplexobj(v):
        v = np.stack([v.real, v.imag], axis=1).reshape((-1,) + tuple(dims))
    return v.astype("<f8")


def write_grid(path, grid, values):
    """Write ``values`` (components first, or a bare scalar field) on ``grid``."""
    comps = _as_components(values, grid.dims)
    ncomp = comps.shape[0]
    # (ncomp, nx, ny, nz) -> (nz, ny, nx, ncomp) so that x runs fastest
    data = np.ascontiguousarray(np.transpose(comps, (3, 2, 1, 0)))
    header = _HEADER.pack(MAGIC, *grid.dims, *grid.extents, ncomp)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())
    return Path(path)


def read_grid(path, complex_pairs=False):
    """Inverse of :func:`write_grid`; returns ``(grid, values)`` with values
    shaped ``(ncomp, nx, ny, nz)``."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise GridError("file too short for a grid header")
    magic, nx, ny, nz, x0, x1, y0, y1, z0, z1, ncomp = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise GridError(f"bad magic {magic!r}")
    for lo, hi in ((x0, x1), (y0, y1), (z0, z1)):
        if not math.isclose(lo, -hi):
            raise GridError("only origin-centred boxes are supported")
    grid = Grid3((nx, ny, nz), (x1, y1, z1))
    count = nx * ny * nz * ncomp
    if len(raw) < _HEADER.size + 8 * count:
        raise GridError("grid file is truncated")
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=_HEADER.size)
    values = np.transpose(data.reshape(nz, ny, nx, ncomp), (3, 2, 1, 0)).copy()
    if complex_pairs:
        if ncomp % 2:
            raise GridError("odd component count cannot hold complex pairs")
        values = values[0::2] + 1j * values[1::2]
    return grid, values


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return Path(path)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def slice_plane(values, axis=1, index=None):
    """2-D slice through the middle (by default) of a 3-D scalar array."""
    values = np.asarray(values)
    if index is None:
        index = values.shape[axis] // 2
    return np.take(values, index, axis=axis)


def write_slice_text(path, plane, fmt="%.8e"):
    np.savetxt(path, np.asarray(plane), fmt=fmt)
    return Path(path)


def write_pgm(path, plane):
    """8-bit binary graymap of a 2-D array, scaled to its min..max range."""
    a = np.asarray(plane, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    scaled = np.zeros(a.shape) if hi == lo else (a - lo) / (hi - lo)
    img = np.round(scaled * 255).astype(np.uint8)
    rows, cols = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return Path(path)


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_json(obj):
    """Deterministic JSON text: sorted keys, fixed indentation."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps_json(obj))
    return Path(path)
