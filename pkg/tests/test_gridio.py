import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sgspin import Grid3
from sgspin.errors import GridError
from sgspin.gridio import (MAGIC, dumps_json, read_grid, slice_plane, write_csv, write_grid,
                           write_json, write_pgm, write_slice_text)


def test_scalar_round_trip(tmp_path, rng):
    g = Grid3((3, 4, 5), (1.0, 2.0, 2.5))
    v = rng.normal(size=g.dims)
    write_grid(tmp_path / "s.sgg", g, v)
    g2, v2 = read_grid(tmp_path / "s.sgg")
    assert g2 == g
    np.testing.assert_array_equal(v2[0], v)


def test_complex_vector_round_trip(tmp_path, rng):
    g = Grid3(4, 3.0)
    v = rng.normal(size=(4,) + g.dims) + 1j * rng.normal(size=(4,) + g.dims)
    write_grid(tmp_path / "c.sgg", g, v)
    _, pairs = read_grid(tmp_path / "c.sgg")
    assert pairs.shape == (8,) + g.dims
    _, back = read_grid(tmp_path / "c.sgg", complex_pairs=True)
    np.testing.assert_array_equal(back, v)


def test_x_runs_fastest(tmp_path):
    g = Grid3((2, 3, 4), 1.0)
    v = np.arange(24, dtype=float).reshape(g.dims)
    raw = write_grid(tmp_path / "o.sgg", g, v).read_bytes()
    body = np.frombuffer(raw[8 + 3 * 8 + 6 * 8 + 8:], "<f8")
    assert raw[:8] == MAGIC
    np.testing.assert_array_equal(body[:3], [v[0, 0, 0], v[1, 0, 0], v[0, 1, 0]])


@given(arrays(np.float64, (2, 3, 2, 2), elements=st.floats(-1e300, 1e300)))
def test_round_trip_property(tmp_path_factory, v):
    path = tmp_path_factory.mktemp("rt") / "v.sgg"
    g = Grid3((3, 2, 2), 1.0)
    write_grid(path, g, v)
    np.testing.assert_array_equal(read_grid(path)[1], v)


def test_bad_inputs(tmp_path):
    g = Grid3(2, 1.0)
    with pytest.raises(GridError):
        write_grid(tmp_path / "x.sgg", g, np.zeros((3, 3, 3)))
    (tmp_path / "bad.sgg").write_bytes(b"NOTAGRID" + bytes(80))
    with pytest.raises(GridError):
        read_grid(tmp_path / "bad.sgg")
    raw = write_grid(tmp_path / "ok.sgg", g, np.zeros(g.dims)).read_bytes()
    (tmp_path / "short.sgg").write_bytes(raw[:-8])
    with pytest.raises(GridError):
        read_grid(tmp_path / "short.sgg")
    with pytest.raises(GridError):
        read_grid(tmp_path / "ok.sgg", complex_pairs=True)


def test_slice_and_graymap(tmp_path):
    v = np.arange(60, dtype=float).reshape(3, 4, 5)
    plane = slice_plane(v, axis=1)
    np.testing.assert_array_equal(plane, v[:, 2, :])
    write_slice_text(tmp_path / "p.txt", plane)
    np.testing.assert_allclose(np.loadtxt(tmp_path / "p.txt"), plane)
    raw = write_pgm(tmp_path / "p.pgm", plane).read_bytes()
    head = b"P5\n5 3\n255\n"
    assert raw.startswith(head)
    img = np.frombuffer(raw[len(head):], np.uint8)
    assert img.min() == 0 and img.max() == 255 and img.size == 15
    write_pgm(tmp_path / "flat.pgm", np.ones((2, 2)))


def test_csv_keeps_full_precision(tmp_path):
    write_csv(tmp_path / "a.csv", ("t", "x"), [(0.1, 1 / 3), (np.float64(2.0), np.int64(4))])
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines == ["t,x", "0.1,0.3333333333333333", "2.0,4"]


def test_json_is_deterministic(tmp_path):
    obj = {"b": np.arange(3), "a": {"z": np.float64(1.5), "y": True, "nan": float("nan")},
           "c": (1 + 2j)}
    text = dumps_json(obj)
    assert text == dumps_json(dict(reversed(list(obj.items()))))
    back = json.loads(text)
    assert back["b"] == [0, 1, 2] and back["a"]["nan"] == "nan" and back["c"] == [1.0, 2.0]
    write_json(tmp_path / "o.json", obj)
    assert (tmp_path / "o.json").read_text() == text
