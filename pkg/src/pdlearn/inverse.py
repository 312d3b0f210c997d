"""From learned weights back to persistence pairs and their locations.

Positive grid cells push a logistic model toward class 1 (and a linear
model toward larger responses); negative cells toward class 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .complex import InputError
from .mlmodel import TrainedLinearModel
from .pimage import DualDiagram, PIParams, PersistenceImageVector, reconstruct
from .reduce import PersistenceDiagram, PersistencePair

__all__ = [
    "DualDiagram", "SignificantRegion", "dual_diagram", "threshold_region", "select_pairs",
    "weighted_diagram", "prediction_decomposition", "region_birth_centroids",
]


@dataclass(frozen=True)
class SignificantRegion:
    positive_cells: frozenset[tuple[int, int]]
    negative_cells: frozenset[tuple[int, int]]
    threshold: float
    frac: float
    params: PIParams

    def __post_init__(self):
        if self.positive_cells & self.negative_cells:
            raise InputError("a cell cannot be both positive and negative")

    def to_json(self, path, dd: Optional[DualDiagram] = None) -> None:
        def cells(cs):
            out = []
            for i, j in sorted(cs):
                b0, b1, d0, d1 = self.params.cell_bounds(i, j)
                entry = {"cell": [i, j], "birth": [b0, b1], "death": [d0, d1]}
                if dd is not None:
                    entry["value"] = float(dd.grid[i, j])
                out.append(entry)
            return out

        Path(path).write_text(json.dumps({
            "threshold": self.threshold, "frac": self.frac, "params": self.params.to_dict(),
            "positive": cells(self.positive_cells), "negative": cells(self.negative_cells),
        }, indent=1))


def _pi_params(model: TrainedLinearModel, params: Optional[PIParams]) -> PIParams:
    if params is None:
        if model.pi_params is None:
            raise InputError("model carries no PI params; pass them explicitly")
        params = PIParams.from_dict(model.pi_params)
    if params.size != model.pi_dim:
        raise InputError(f"model has {model.pi_dim} PI weights, grid has {params.size} cells")
    return params


def dual_diagram(model: TrainedLinearModel, params: Optional[PIParams] = None) -> DualDiagram:
    """The PI slice of ``w`` laid out on the grid; extra coefficients are in ``model.v``."""
    params = _pi_params(model, params)
    return reconstruct(model.w_pi, params, provenance=f"{model.task}/{model.penalty.kind}/{model.penalty.lam:g}")


def threshold_region(dd: DualDiagram, frac: float = 0.5) -> SignificantRegion:
    """Cells with ``|value| >= frac * max|value|``, split by sign."""
    if not 0 < frac <= 1:
        raise InputError("frac must lie in (0, 1]")
    vmax = float(np.abs(dd.grid).max())
    if vmax == 0:
        raise InputError("dual diagram is identically zero")
    thr = frac * vmax
    sel = (np.abs(dd.grid) >= thr) & (dd.grid != 0)
    pos = frozenset(map(tuple, np.argwhere(sel & (dd.grid > 0)).tolist()))
    neg = frozenset(map(tuple, np.argwhere(sel & (dd.grid < 0)).tolist()))
    return SignificantRegion(pos, neg, thr, frac, dd.params)


def select_pairs(dg: PersistenceDiagram, region: SignificantRegion, degree: int):
    """Pairs of ``dg`` falling in positive / negative cells (half-open cells)."""
    pos: list[PersistencePair] = []
    neg: list[PersistencePair] = []
    for p in dg.degree(degree):
        cell = region.params.locate(p.birth, p.death)
        if cell is None:
            continue
        if cell in region.positive_cells:
            pos.append(p)
        elif cell in region.negative_cells:
            neg.append(p)
    return pos, neg


def pairs_to_json(pairs_by_sample: dict[str, tuple[list, list]], path, meta: Optional[dict] = None) -> None:
    def enc(p: PersistencePair):
        return {"degree": p.degree, "birth": p.birth, "death": p.death,
                "birth_pos": [list(v) for v in p.birth_pos] if p.birth_pos else None,
                "death_pos": [list(v) for v in p.death_pos] if p.death_pos else None}

    Path(path).write_text(json.dumps({
        "meta": meta or {},
        "samples": {k: {"positive": [enc(p) for p in pos], "negative": [enc(p) for p in neg]}
                    for k, (pos, neg) in pairs_by_sample.items()},
    }, indent=1))


def _pi_slice(model: TrainedLinearModel, x) -> np.ndarray:
    x = np.asarray(getattr(x, "values", x), dtype=float)
    if x.shape == (model.w.size,):
        return x[:model.pi_dim]
    if x.shape == (model.pi_dim,):
        return x
    raise InputError(f"vector of length {x.size} matches neither the PI slice nor the full layout")


def weighted_diagram(model: TrainedLinearModel, x, params: Optional[PIParams] = None) -> DualDiagram:
    """Elementwise ``w_i x_i`` over the PI grid."""
    params = _pi_params(model, params if params is not None else getattr(x, "params", None))
    return reconstruct(model.w_pi * _pi_slice(model, x), params, provenance="weighted")


def prediction_decomposition(model: TrainedLinearModel, x, extras: Optional[Sequence[float]] = None) -> dict:
    """Split ``w . x + b`` into the PI term, one term per extra feature, and ``b``.

    ``x`` is either the full feature row or just its PI part, in which case
    ``extras`` supplies the remaining features.
    """
    x = np.asarray(getattr(x, "values", x), dtype=float)
    n_extra = model.w.size - model.pi_dim
    if x.shape == (model.w.size,) and extras is None:
        pi, ex = x[:model.pi_dim], x[model.pi_dim:]
    elif x.shape == (model.pi_dim,):
        ex = np.zeros(0) if extras is None else np.asarray(extras, dtype=float)
        pi = x
    else:
        raise InputError("input does not match the model layout")
    if ex.shape != (n_extra,):
        raise InputError(f"expected {n_extra} extra features, got {ex.size}")
    pi_term = float(model.w_pi @ pi)
    names = model.extra_names or tuple(f"extra{i}" for i in range(n_extra))
    extra_terms = {name: float(c * v) for name, c, v in zip(names, model.v, ex)}
    total = float(np.concatenate([pi, ex]) @ model.w + model.b)
    return {"pi_term": pi_term, "extra_terms": extra_terms, "intercept": float(model.b), "total": total}


def region_birth_centroids(dd: DualDiagram) -> tuple[float, float]:
    """Mass-weighted mean birth coordinate of the positive and of the negative part."""
    bc = dd.params.birth_centers[:, None]
    pos = np.clip(dd.grid, 0, None)
    neg = np.clip(-dd.grid, 0, None)
    mp = float((pos * bc).sum() / pos.sum()) if pos.sum() > 0 else float("nan")
    mn = float((neg * bc).sum() / neg.sum()) if neg.sum() > 0 else float("nan")
    return mp, mn
