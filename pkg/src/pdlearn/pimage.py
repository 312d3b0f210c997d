"""Persistence images on a fixed (birth, death) grid.

A flat vector is ordered birth-fastest: the value of grid cell
``(i_birth, j_death)`` sits at index ``i_birth + nb * j_death``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .complex import InputError
from .reduce import PersistenceDiagram

ORDERING = "birth-fastest: index = i_birth + nb * j_death"


@dataclass(frozen=True)
class PIParams:
    sigma: float
    C: float
    p: float
    b_min: float
    b_max: float
    d_min: float
    d_max: float
    nb: int
    nd: int

    def __post_init__(self):
        if not (self.sigma > 0 and self.C > 0 and self.p > 0):
            raise InputError("sigma, C and p must be positive")
        if not (self.b_min < self.b_max and self.d_min < self.d_max):
            raise InputError("grid ranges must be increasing")
        if self.nb < 1 or self.nd < 1:
            raise InputError("grid sizes must be positive")

    @property
    def size(self) -> int:
        return self.nb * self.nd

    @property
    def cell_width(self) -> tuple[float, float]:
        return ((self.b_max - self.b_min) / self.nb, (self.d_max - self.d_min) / self.nd)

    @property
    def birth_centers(self) -> np.ndarray:
        db = self.cell_width[0]
        return self.b_min + (np.arange(self.nb) + 0.5) * db

    @property
    def death_centers(self) -> np.ndarray:
        dd = self.cell_width[1]
        return self.d_min + (np.arange(self.nd) + 0.5) * dd

    def cell_bounds(self, i: int, j: int) -> tuple[float, float, float, float]:
        db, dd = self.cell_width
        return (self.b_min + i * db, self.b_min + (i + 1) * db,
                self.d_min + j * dd, self.d_min + (j + 1) * dd)

    def locate(self, b: float, d: float) -> tuple[int, int] | None:
        """Grid cell holding ``(b, d)`` under half-open ``[lo, hi)`` cells."""
        db, dd = self.cell_width
        i = math.floor((b - self.b_min) / db)
        j = math.floor((d - self.d_min) / dd)
        if 0 <= i < self.nb and 0 <= j < self.nd:
            return i, j
        return None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PIParams":
        return cls(**{k: d[k] for k in ("sigma", "C", "p", "b_min", "b_max", "d_min", "d_max", "nb", "nd")})

    @classmethod
    def auto_fit(cls, diagrams: Iterable[PersistenceDiagram], degree: int, sigma: float,
                 C: float = 1.0, p: float = 1.0, n: int = 50, pad: float = 3.0) -> "PIParams":
        """Square-cell grid covering all finite pairs plus ``pad * sigma``.

        Convenience only; published experiments fix their grids explicitly.
        """
        pts = [dg.array(degree) for dg in diagrams]
        pts = np.concatenate([a[np.isfinite(a[:, 1])] for a in pts]) if pts else np.zeros((0, 2))
        if len(pts) == 0:
            raise InputError("no finite pairs to fit a grid to")
        lo = float(pts.min()) - pad * sigma
        hi = float(pts.max()) + pad * sigma
        return cls(sigma, C, p, lo, hi, lo, hi, n, n)


@dataclass
class PersistenceImageVector:
    values: np.ndarray
    params: PIParams

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.params.size,):
            raise InputError(f"vector has length {self.values.size}, grid needs {self.params.size}")

    def to_files(self, csv_path) -> Path:
        csv_path = Path(csv_path)
        csv_path.write_text("".join(f"{v!r}\n" for v in self.values.tolist()))
        sidecar = csv_path.with_suffix(".json")
        sidecar.write_text(json.dumps({"params": self.params.to_dict(), "ordering": ORDERING}, indent=2))
        return sidecar

    @classmethod
    def from_files(cls, csv_path) -> "PersistenceImageVector":
        csv_path = Path(csv_path)
        values = read_vector(csv_path)
        meta = json.loads(csv_path.with_suffix(".json").read_text())
        return cls(values, PIParams.from_dict(meta["params"]))


@dataclass
class DualDiagram:
    """Values on the PI grid, ``grid[i_birth, j_death]``; may be negative."""

    grid: np.ndarray
    params: PIParams
    provenance: str = ""

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.shape != (self.params.nb, self.params.nd):
            raise InputError("grid shape does not match PI params")

    def flatten(self) -> np.ndarray:
        return self.grid.ravel(order="F")

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps({
            "params": self.params.to_dict(), "ordering": ORDERING, "provenance": self.provenance,
            "grid": self.grid.tolist(),
        }))

    @classmethod
    def from_json(cls, path) -> "DualDiagram":
        d = json.loads(Path(path).read_text())
        return cls(np.array(d["grid"], dtype=float), PIParams.from_dict(d["params"]), d.get("provenance", ""))


def read_vector(path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().split() if ln]
    try:
        return np.array([float(x) for x in lines])
    except ValueError:
        raise InputError(f"{path}: not a one-value-per-line vector") from None


def weight(b: float, d: float, C: float, p: float) -> float:
    """Arctangent lifetime weight ``arctan(C (d - b)^p)``."""
    if d < b:
        raise InputError("death precedes birth")
    return math.atan(C * (d - b) ** p)


def vectorize(dg: PersistenceDiagram | np.ndarray, degree: int, params: PIParams) -> PersistenceImageVector:
    """Sample the persistence image at grid-cell centers.

    ``dg`` may also be an ``(n, 2)`` array of (birth, death) pairs.  Pairs
    outside the grid still contribute their Gaussian tails.
    """
    pairs = dg if isinstance(dg, np.ndarray) else dg.array(degree)
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if np.any(~np.isfinite(pairs)):
        raise InputError("diagram has infinite pairs in this degree; use reduced homology")
    if len(pairs) == 0:
        return PersistenceImageVector(np.zeros(params.size), params)
    b, d = pairs[:, 0], pairs[:, 1]
    if np.any(d < b):
        raise InputError("death precedes birth")
    wts = np.arctan(params.C * (d - b) ** params.p)
    s2 = 2.0 * params.sigma ** 2
    # the Gaussian factorizes, so the grid is a weighted outer-product sum
    gb = np.exp(-(b[:, None] - params.birth_centers[None, :]) ** 2 / s2)
    gd = np.exp(-(d[:, None] - params.death_centers[None, :]) ** 2 / s2)
    grid = (gb * wts[:, None]).T @ gd
    return PersistenceImageVector(grid.ravel(order="F"), params)


def reconstruct(vec, params: PIParams, provenance: str = "") -> DualDiagram:
    """Reshape a flat vector onto the (birth, death) grid."""
    vec = np.asarray(getattr(vec, "values", vec), dtype=float)
    if vec.shape != (params.size,):
        raise InputError(f"vector has length {vec.size}, grid needs {params.size}")
    return DualDiagram(vec.reshape((params.nb, params.nd), order="F"), params, provenance)
