import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdlearn.complex import InputError
from pdlearn.pimage import (DualDiagram, PIParams, PersistenceImageVector, read_vector, reconstruct,
                            vectorize, weight)
from pdlearn.reduce import PersistenceDiagram, PersistencePair

IMAGE_GRID = PIParams(2.0, 0.5, 1.0, -40.5, 10.5, -30.5, 20.5, 51, 51)
pair_lists = st.lists(
    st.tuples(st.floats(-5, 5), st.floats(0.01, 6)).map(lambda t: (t[0], t[0] + t[1])),
    max_size=6)


def brute_force_image(pairs, params):
    """Direct double loop over cells and pairs."""
    out = np.zeros((params.nb, params.nd))
    for i, x in enumerate(params.birth_centers):
        for j, y in enumerate(params.death_centers):
            for b, d in pairs:
                w = math.atan(params.C * (d - b) ** params.p)
                out[i, j] += w * math.exp(-((b - x) ** 2 + (d - y) ** 2) / (2 * params.sigma ** 2))
    return out


def test_weight_examples():
    assert weight(1.0, 1.0, 3.0, 2.0) == 0.0
    assert weight(0.0, 2.0, 0.5, 1.0) == pytest.approx(math.pi / 4, abs=1e-12)
    assert weight(0.1, 0.15, 80.0, 1.0) == pytest.approx(1.32581766, abs=1e-8)
    with pytest.raises(InputError):
        weight(1.0, 0.0, 1.0, 1.0)


def test_empty_diagram_is_zero():
    v = vectorize(PersistenceDiagram([]), 0, IMAGE_GRID)
    assert v.values.shape == (2601,) and not v.values.any()


def test_single_pair_at_cell_centre():
    params = PIParams(1.0, 0.5, 1.0, -0.5, 2.5, -0.5, 2.5, 3, 3)
    v = vectorize(np.array([[0.0, 1.0]]), 0, params)
    grid = reconstruct(v, params).grid
    assert grid[0, 1] == pytest.approx(0.4636476090, abs=1e-10)
    assert grid[0, 1] == grid.max()


def test_image_grid_geometry():
    assert IMAGE_GRID.cell_width == (1.0, 1.0)
    assert IMAGE_GRID.size == 2601
    assert IMAGE_GRID.birth_centers[0] == -40.0 and IMAGE_GRID.death_centers[-1] == 20.0


def test_infinite_pairs_rejected():
    dg = PersistenceDiagram([PersistencePair(0, 0.0, math.inf)], reduced=False)
    with pytest.raises(InputError, match="reduced"):
        vectorize(dg, 0, IMAGE_GRID)


def test_only_chosen_degree_counts():
    dg = PersistenceDiagram([PersistencePair(0, -3.0, 2.0), PersistencePair(1, 0.0, math.inf)])
    a = vectorize(dg, 0, IMAGE_GRID).values
    b = vectorize(np.array([[-3.0, 2.0]]), 0, IMAGE_GRID).values
    assert np.array_equal(a, b)


def test_params_validation():
    with pytest.raises(InputError):
        PIParams(0.0, 1, 1, 0, 1, 0, 1, 2, 2)
    with pytest.raises(InputError):
        PIParams(1.0, 1, 1, 1, 0, 0, 1, 2, 2)
    with pytest.raises(InputError):
        PIParams(1.0, 1, 1, 0, 1, 0, 1, 0, 2)


def test_reconstruct_examples():
    params = PIParams(1.0, 1.0, 1.0, 0, 3, 0, 2, 3, 2)
    assert not reconstruct(np.zeros(6), params).grid.any()
    for k in range(6):
        e = np.zeros(6)
        e[k] = 1.0
        g = reconstruct(e, params).grid
        assert np.argwhere(g).tolist() == [[k % 3, k // 3]]
    with pytest.raises(InputError):
        reconstruct(np.zeros(5), params)


def test_vector_files_roundtrip(tmp_path):
    v = vectorize(np.array([[-3.0, 1.0], [-1.0, 4.0]]), 0, IMAGE_GRID)
    sidecar = v.to_files(tmp_path / "v.csv")
    assert json.loads(sidecar.read_text())["params"]["nb"] == 51
    back = PersistenceImageVector.from_files(tmp_path / "v.csv")
    assert np.array_equal(back.values, v.values) and back.params == v.params
    assert np.array_equal(read_vector(tmp_path / "v.csv"), v.values)


def test_dual_diagram_json_roundtrip(tmp_path):
    dd = reconstruct(np.random.default_rng(0).normal(size=2601), IMAGE_GRID, "test")
    dd.to_json(tmp_path / "dd.json")
    back = DualDiagram.from_json(tmp_path / "dd.json")
    assert np.array_equal(back.grid, dd.grid) and back.provenance == "test"


def test_garbage_vector_file(tmp_path):
    (tmp_path / "bad.csv").write_text("1.0\nabc\n")
    with pytest.raises(InputError):
        read_vector(tmp_path / "bad.csv")


@settings(max_examples=40, deadline=None)
@given(pair_lists)
def test_matches_brute_force(pairs):
    params = PIParams(0.7, 0.5, 1.3, -6, 6, -6, 12, 9, 11)
    v = vectorize(np.array(pairs).reshape(-1, 2), 0, params)
    assert np.allclose(reconstruct(v, params).grid, brute_force_image(pairs, params), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(pair_lists, pair_lists)
def test_linearity(p1, p2):
    f = lambda p: vectorize(np.array(p).reshape(-1, 2), 0, IMAGE_GRID).values
    assert np.allclose(f(p1 + p2), f(p1) + f(p2), rtol=0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(-30, 5), st.integers(1, 10), st.integers(1, 10))
def test_monotone_in_lifetime(b, l1, l2):
    if l1 == l2:
        return
    short, long_ = sorted((l1, l2))

    def own_cell(d):
        v = vectorize(np.array([[float(b), float(b + d)]]), 0, IMAGE_GRID).values
        i, j = IMAGE_GRID.locate(b, b + d)
        return v[i + IMAGE_GRID.nb * j]

    assert own_cell(long_) > own_cell(short)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-25, -5), st.floats(0.5, 15)), min_size=1, max_size=5))
def test_nonnegative_and_mass(raw):
    pairs = np.array([(b, b + l) for b, l in raw])
    params = PIParams(1.5, 0.5, 1.0, -40.5, 10.5, -30.5, 20.5, 51, 51)
    v = vectorize(pairs, 0, params).values
    assert (v >= 0).all()
    # grid holds every 5 sigma neighbourhood
    expected = sum(weight(b, d, params.C, params.p) for b, d in pairs) * 2 * math.pi * params.sigma ** 2
    assert v.sum() == pytest.approx(expected, rel=0.01)


@settings(max_examples=40, deadline=None)
@given(arrays(float, 12, elements=st.floats(-1e6, 1e6)))
def test_flatten_reconstruct_identity(vec):
    params = PIParams(1.0, 1.0, 1.0, 0, 4, 0, 3, 4, 3)
    assert np.array_equal(reconstruct(vec, params).flatten(), vec)
