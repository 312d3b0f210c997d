import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdlearn.complex import InputError
from pdlearn.inverse import (dual_diagram, pairs_to_json, prediction_decomposition, region_birth_centroids,
                             select_pairs, threshold_region, weighted_diagram)
from pdlearn.mlmodel import Dataset, Penalty, TrainedLinearModel, fit_linear, fit_logistic, predict
from pdlearn.pimage import DualDiagram, PIParams, vectorize
from pdlearn.reduce import PersistenceDiagram, PersistencePair

GRID = PIParams(1.0, 0.5, 1.0, 0.0, 4.0, 0.0, 3.0, 4, 3)


def linear_model(w, b=0.0, extras=()):
    w = np.asarray(w, float)
    return TrainedLinearModel("regression", w, b, Penalty("l1", 0.1), w.size - len(extras), tuple(extras),
                              pi_params=GRID.to_dict())


def grid_of(values):
    return DualDiagram(np.asarray(values, float), GRID)


def test_dual_diagram_examples():
    assert not dual_diagram(linear_model(np.zeros(12))).grid.any()
    w = np.zeros(12)
    w[5] = 3.0
    g = dual_diagram(linear_model(w)).grid
    assert np.argwhere(g).tolist() == [[1, 1]] and g[1, 1] == 3.0


def test_dual_diagram_dimension_mismatch():
    m = linear_model(np.zeros(10))
    with pytest.raises(InputError):
        dual_diagram(m)
    bare = TrainedLinearModel("regression", np.zeros(12), 0.0, Penalty(), 12)
    with pytest.raises(InputError):
        dual_diagram(bare)
    assert dual_diagram(bare, GRID).grid.shape == (4, 3)


def test_l1_dual_diagram_nonzero_count():
    rng = np.random.default_rng(0)
    X = rng.random((30, 12))
    y = X[:, 2] - 2 * X[:, 7] + 0.05 * rng.normal(size=30)
    m = fit_linear(Dataset(X, y), Penalty("l1", 0.01))
    m.pi_params = GRID.to_dict()
    dd = dual_diagram(m)
    assert np.count_nonzero(dd.grid) == np.count_nonzero(m.w) < 12
    assert np.array_equal(dd.flatten(), m.w_pi)


def test_threshold_examples():
    v = np.zeros((4, 3))
    v[0, 0], v[2, 1], v[3, 2] = -2.0, 1.0, 0.5
    r = threshold_region(grid_of(v), 0.5)
    assert r.negative_cells == {(0, 0)} and r.positive_cells == {(2, 1)} and r.threshold == 1.0
    assert threshold_region(grid_of(v), 1.0).negative_cells == {(0, 0)}
    assert not threshold_region(grid_of(v), 1.0).positive_cells
    tiny = threshold_region(grid_of(v), 1e-12)
    assert len(tiny.positive_cells | tiny.negative_cells) == 3


def test_threshold_errors():
    with pytest.raises(InputError):
        threshold_region(grid_of(np.zeros((4, 3))))
    with pytest.raises(InputError):
        threshold_region(grid_of(np.ones((4, 3))), 0.0)


def test_select_pairs_rules():
    v = np.zeros((4, 3))
    v[1, 1], v[2, 2] = 1.0, -1.0
    region = threshold_region(grid_of(v), 0.5)
    dg = PersistenceDiagram([
        PersistencePair(0, 1.5, 1.5 + 1e-9),   # interior of cell (1, 1)
        PersistencePair(0, 2.0, 2.0),          # on the corner: belongs to (2, 2)
        PersistencePair(0, 0.5, 2.5),          # unselected cell
        PersistencePair(0, 9.0, 9.5),          # off the grid
        PersistencePair(1, 1.5, 1.5),          # other degree
    ])
    pos, neg = select_pairs(dg, region, 0)
    assert [(p.birth, p.death) for p in pos] == [(1.5, 1.5 + 1e-9)]
    assert [(p.birth, p.death) for p in neg] == [(2.0, 2.0)]
    empty = threshold_region(grid_of(v), 1.0)
    assert select_pairs(PersistenceDiagram([]), empty, 0) == ([], [])


def test_pairs_json(tmp_path):
    p = PersistencePair(1, 0.1, 0.2, birth_pos=((0.0, 0.0), (1.0, 0.0)), death_pos=((0, 0), (1, 0), (0, 1)))
    pairs_to_json({"s": ([p], [])}, tmp_path / "p.json", {"frac": 0.5})
    d = json.loads((tmp_path / "p.json").read_text())
    assert d["meta"]["frac"] == 0.5
    assert d["samples"]["s"]["positive"][0]["death_pos"] == [[0, 0], [1, 0], [0, 1]]


def test_weighted_diagram_examples():
    w = np.zeros(12)
    w[4] = 2.0
    x = np.zeros(12)
    x[4] = 3.0
    m = linear_model(w)
    assert not weighted_diagram(m, np.zeros(12)).grid.any()
    g = weighted_diagram(m, x).grid
    assert g[0, 1] == 6.0 and np.count_nonzero(g) == 1
    with pytest.raises(InputError):
        weighted_diagram(m, np.zeros(7))


def test_decomposition_examples():
    m = linear_model(np.arange(13.0), b=1.5, extras=("n_white",))
    d = prediction_decomposition(m, np.zeros(13))
    assert d == {"pi_term": 0.0, "extra_terms": {"n_white": 0.0}, "intercept": 1.5, "total": 1.5}
    pi_only = prediction_decomposition(linear_model(np.ones(12)), np.ones(12))
    assert pi_only["extra_terms"] == {} and pi_only["total"] == 12.0
    with pytest.raises(InputError):
        prediction_decomposition(m, np.zeros(5))
    with pytest.raises(InputError):
        prediction_decomposition(m, np.zeros(12), extras=[1.0, 2.0])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_decomposition_identity_on_fitted_mixed_model(seed):
    rng = np.random.default_rng(seed)
    diagrams = [rng.uniform(0, 3, size=(4, 2)) for _ in range(40)]
    X = np.vstack([vectorize(np.sort(d, axis=1), 0, GRID).values for d in diagrams])
    count = rng.integers(100, 400, size=(40, 1)).astype(float)
    y = 0.01 * count[:, 0] + X[:, 3] + 0.1 * rng.normal(size=40)
    ds = Dataset(np.hstack([X, count]), y, pi_dim=12, extra_names=("n_white",))
    m = fit_linear(ds, Penalty("l1", 0.001))
    m.pi_params = GRID.to_dict()
    for row in ds.X:
        d = prediction_decomposition(m, row)
        parts = d["pi_term"] + sum(d["extra_terms"].values()) + d["intercept"]
        assert parts == pytest.approx(d["total"], abs=1e-10)
        assert d["total"] == pytest.approx(float(predict(m, row)), abs=1e-10)
        wd = weighted_diagram(m, row).grid.sum()
        assert wd + m.v @ row[12:] + m.b == pytest.approx(float(predict(m, row)), abs=1e-10)
        assert d == prediction_decomposition(m, row[:12], extras=row[12:])


def test_positive_cells_push_toward_class_one():
    rng = np.random.default_rng(1)
    X = rng.random((60, 12))
    y = (X[:, 5] > 0.5).astype(float)
    m = fit_logistic(Dataset(X, y), Penalty("l2", 0.01))
    m.pi_params = GRID.to_dict()
    region = threshold_region(dual_diagram(m), 0.9)
    assert (1, 1) in region.positive_cells


def test_region_birth_centroids():
    v = np.zeros((4, 3))
    v[3, 0], v[0, 0] = 2.0, -1.0
    v[1, 0] = 2.0
    mp, mn = region_birth_centroids(grid_of(v))
    assert mp == pytest.approx(2.5) and mn == pytest.approx(0.5)
    assert np.isnan(region_birth_centroids(grid_of(np.abs(v)))[1])
