"""Persistent homology over GF(2) by boundary-matrix column reduction.

Columns are stored as Python integers used as bit sets, so adding two
columns is a single XOR and the pivot ("low") is ``bit_length() - 1``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Optional, Sequence

import numba
import numpy as np

from .complex import CellFunction, FilteredComplex, InputError

Point = tuple[float, ...]


@dataclass(frozen=True)
class PersistencePair:
    degree: int
    birth: float
    death: float
    birth_cell: Optional[Hashable] = None
    death_cell: Optional[Hashable] = None
    birth_pos: Optional[tuple[Point, ...]] = None
    death_pos: Optional[tuple[Point, ...]] = None

    @property
    def lifetime(self) -> float:
        return self.death - self.birth

    @property
    def essential(self) -> bool:
        return math.isinf(self.death)

    @property
    def birth_point(self) -> Optional[Point]:
        return _barycenter(self.birth_pos)

    @property
    def death_point(self) -> Optional[Point]:
        return _barycenter(self.death_pos)


def _barycenter(pos):
    if not pos:
        return None
    return tuple(float(np.mean([p[i] for p in pos])) for i in range(len(pos[0])))


@dataclass
class PersistenceDiagram:
    pairs: list[PersistencePair]
    reduced: bool = True
    source: str = ""
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.pairs)

    def degree(self, q: int) -> list[PersistencePair]:
        return [p for p in self.pairs if p.degree == q]

    def array(self, q: int) -> np.ndarray:
        """``(n, 2)`` array of (birth, death) in degree ``q``."""
        sel = self.degree(q)
        if not sel:
            return np.zeros((0, 2))
        return np.array([(p.birth, p.death) for p in sel], dtype=float)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["degree", "birth", "death", "birth_x", "birth_y", "death_vertices"])
            for p in self.pairs:
                bp = p.birth_point
                wr.writerow([
                    p.degree, repr(float(p.birth)), repr(float(p.death)),
                    "" if bp is None else repr(bp[0]),
                    "" if bp is None or len(bp) < 2 else repr(bp[1]),
                    "" if not p.death_pos else ";".join(" ".join(repr(float(c)) for c in v) for v in p.death_pos),
                ])

    @classmethod
    def from_csv(cls, path, reduced: bool = True) -> "PersistenceDiagram":
        pairs = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                bx, by = row.get("birth_x", ""), row.get("birth_y", "")
                birth_pos = None
                if bx:
                    birth_pos = ((float(bx), float(by)),) if by else ((float(bx),),)
                dv = row.get("death_vertices", "")
                death_pos = None
                if dv:
                    death_pos = tuple(tuple(float(c) for c in v.split()) for v in dv.split(";"))
                pairs.append(PersistencePair(
                    degree=int(row["degree"]), birth=float(row["birth"]), death=float(row["death"]),
                    birth_pos=birth_pos, death_pos=death_pos,
                ))
        return cls(pairs, reduced=reduced, source=str(path))


# ---------------------------------------------------------------------------
# Column reduction

def _reduce_columns(fc: FilteredComplex, top: int, clearing: bool):
    """Return (pairs as (birth_idx, death_idx), set of positive indices)."""
    by_dim: dict[int, list[int]] = {}
    for i, d in enumerate(fc.dims):
        if d <= top:
            by_dim.setdefault(int(d), []).append(i)
    owner: dict[int, int] = {}        # low row -> column index
    reduced: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    positive = set(by_dim.get(0, []))
    cleared: set[int] = set()
    dims = range(top, 0, -1) if clearing else range(1, top + 1)
    for d in dims:
        for j in by_dim.get(d, []):
            if j in cleared:
                positive.add(j)
                continue
            col = 0
            for f in fc.boundaries[j]:
                col ^= 1 << f
            while col:
                k = owner.get(col.bit_length() - 1)
                if k is None:
                    break
                col ^= reduced[k]
            if col:
                low = col.bit_length() - 1
                owner[low] = j
                reduced[j] = col
                pairs.append((low, j))
                if clearing:
                    cleared.add(low)
            else:
                positive.add(j)
    return pairs, positive


def compute_persistence(fc: FilteredComplex, max_degree: int = 1, reduced: bool = True,
                        clearing: bool = True) -> PersistenceDiagram:
    """Interval decomposition of the filtration in degrees ``0 .. max_degree``.

    Zero-length intervals are dropped.  With ``reduced`` the essential
    degree-0 class born first is removed.
    """
    if max_degree < 0:
        raise InputError("max_degree must be >= 0")
    fc.validate()
    if len(fc) == 0:
        return PersistenceDiagram([], reduced=reduced, meta={"max_degree": max_degree})
    top = min(max_degree + 1, fc.max_dim)
    pairs, positive = _reduce_columns(fc, top, clearing)

    vals, geom = fc.values, fc.geometry
    out: list[PersistencePair] = []
    paired_births = set()
    for b, d in pairs:
        paired_births.add(b)
        q = int(fc.dims[b])
        if q > max_degree or vals[b] == vals[d]:
            continue
        out.append(PersistencePair(q, float(vals[b]), float(vals[d]), fc.ids[b], fc.ids[d],
                                   geom[b], geom[d]))
    essential = sorted(i for i in positive if i not in paired_births and fc.dims[i] <= max_degree)
    dropped = False
    for i in essential:
        q = int(fc.dims[i])
        if reduced and q == 0 and not dropped:
            dropped = True  # first vertex in filtration order: the eldest component
            continue
        out.append(PersistencePair(q, float(vals[i]), math.inf, fc.ids[i], None, geom[i], None))
    out.sort(key=lambda p: (p.degree, p.birth, p.death))
    return PersistenceDiagram(out, reduced=reduced, meta={"max_degree": max_degree, "kind": fc.kind})


# ---------------------------------------------------------------------------
# Independent Betti number oracle

def _gf2_rank(columns: Sequence[int]) -> int:
    basis: dict[int, int] = {}
    rank = 0
    for col in columns:
        while col:
            lead = col.bit_length() - 1
            if lead not in basis:
                basis[lead] = col
                rank += 1
                break
            col ^= basis[lead]
    return rank


def betti_oracle(fc: FilteredComplex, t: float, q: int, max_cells: int = 200) -> int:
    """Rank of ``H_q`` of the sublevel complex at ``t`` by dense elimination."""
    if len(fc) > max_cells:
        raise InputError(f"complex has {len(fc)} cells; oracle limit is {max_cells}")
    alive = [i for i in range(len(fc)) if fc.values[i] <= t]
    cells_q = [i for i in alive if fc.dims[i] == q]
    if not cells_q:
        return 0
    # row indices local to each chain group so the oracle never sees the filtration order
    def boundary_cols(dim):
        rows = {i: r for r, i in enumerate(i for i in alive if fc.dims[i] == dim - 1)}
        cols = []
        for i in alive:
            if fc.dims[i] == dim:
                c = 0
                for f in fc.boundaries[i]:
                    c ^= 1 << rows[f]
                cols.append(c)
        return cols

    rank_q = _gf2_rank(boundary_cols(q)) if q > 0 else 0
    rank_q1 = _gf2_rank(boundary_cols(q + 1))
    return len(cells_q) - rank_q - rank_q1


# ---------------------------------------------------------------------------
# Degree-0 fast path for images

@numba.njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@numba.njit(cache=True)
def _pixel_sweep(vals, h, w, order):
    n = h * w
    rank = np.empty(n, np.int64)
    for r in range(n):
        rank[order[r]] = r
    parent = np.full(n, -1, np.int64)
    birth = np.empty(n, np.int64)  # birth pixel of each root
    births = np.empty(n, np.int64)
    deaths = np.empty(n, np.int64)
    m = 0
    for r in range(n):
        p = order[r]
        parent[p] = p
        birth[p] = p
        i, j = p // w, p % w
        for di in range(-1, 2):
            for dj in range(-1, 2):
                if di == 0 and dj == 0:
                    continue
                a, b = i + di, j + dj
                if a < 0 or a >= h or b < 0 or b >= w:
                    continue
                nb = a * w + b
                if parent[nb] < 0:
                    continue
                ra = _find(parent, p)
                rb = _find(parent, nb)
                if ra == rb:
                    continue
                # elder rule: the component born later dies here
                if rank[birth[ra]] < rank[birth[rb]]:
                    old, young = ra, rb
                else:
                    old, young = rb, ra
                births[m] = birth[young]
                deaths[m] = p
                m += 1
                parent[young] = old
    return births[:m], deaths[:m]


def image_persistence(cf: CellFunction, reduced: bool = True) -> PersistenceDiagram:
    """Degree-0 diagram of a cubical sublevel filtration by a union-find sweep.

    Equivalent to ``compute_persistence(cubical_filtration(cf), 0, reduced)``
    on birth/death values; pixels are joined through shared corners because
    the sublevel sets are unions of closed squares.  Positions are pixel
    centers; ``birth_cell`` is the top-left vertex of the birth pixel and
    ``death_cell`` is left unset.
    """
    pix = np.ascontiguousarray(cf.pixel_values, dtype=float)
    h, w = pix.shape
    flat = pix.ravel()
    order = np.lexsort((np.arange(flat.size), flat)).astype(np.int64)
    b_idx, d_idx = _pixel_sweep(flat, h, w, order)
    pairs = []
    for b, d in zip(b_idx.tolist(), d_idx.tolist()):
        if flat[b] == flat[d]:
            continue
        bi, bj = divmod(b, w)
        di, dj = divmod(d, w)
        pairs.append(PersistencePair(0, float(flat[b]), float(flat[d]), (2 * bi, 2 * bj), None,
                                     ((bj + 0.5, bi + 0.5),), ((dj + 0.5, di + 0.5),)))
    if not reduced:
        e = int(order[0])
        ei, ej = divmod(e, w)
        pairs.append(PersistencePair(0, float(flat[e]), math.inf, (2 * ei, 2 * ej), None,
                                     ((ej + 0.5, ei + 0.5),), None))
    pairs.sort(key=lambda p: (p.degree, p.birth, p.death))
    return PersistenceDiagram(pairs, reduced=reduced, meta={"max_degree": 0, "kind": "cubical"})
