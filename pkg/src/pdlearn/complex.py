"""Filtered complexes from point clouds (Čech, Rips) and binary images.

Simplicial filtration values follow the ball-radius convention: a vertex
enters at 0, an edge ``{x, y}`` at ``|x - y| / 2``.

Cubical complexes use doubled ("Khalimsky") coordinates: the cube at
``(a, b)`` has dimension ``(a odd) + (b odd)`` and pixel ``(i, j)`` (row,
column) is the 2-cube ``(2i + 1, 2j + 1)``.  Points are reported as
``(x, y) = (column + 0.5, row + 0.5)`` for pixel centers.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Sequence

import numpy as np
from scipy import ndimage


class InputError(ValueError):
    """Raised for inputs that violate a documented precondition."""


# ---------------------------------------------------------------------------
# Data types

@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InputError("points must be an (m, N) array with N >= 1")
        if not np.all(np.isfinite(pts)):
            raise InputError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class BinaryImage:
    """``pixels[row, col]`` is True for white (foreground)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels).astype(bool)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise InputError("image must be a non-empty 2-D grid")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def n_white(self) -> int:
        return int(self.pixels.sum())


@dataclass(frozen=True)
class CellFunction:
    """Filtration values on every elementary cube of an ``h x w`` pixel window.

    ``values`` has shape ``(2h + 1, 2w + 1)`` in doubled coordinates.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] % 2 == 0 or v.shape[1] % 2 == 0 or min(v.shape) < 3:
            raise InputError("cell values must have odd shape (2h+1, 2w+1)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_pixels(cls, pixel_values) -> "CellFunction":
        """Extend pixel values to faces by the minimum over incident pixels.

        With this choice the sublevel set at ``t`` is exactly the union of
        the closed pixel squares whose value is ``<= t``.
        """
        p = np.asarray(pixel_values, dtype=float)
        if p.ndim != 2 or p.size == 0:
            raise InputError("pixel values must be a non-empty 2-D array")
        h, w = p.shape
        big = np.full((2 * h + 3, 2 * w + 3), np.inf)
        big[2:-1:2, 2:-1:2] = p
        # every cube takes the min over the (up to 4) pixels around it
        out = np.full((2 * h + 1, 2 * w + 1), np.inf)
        for da in (0, 1, 2):
            for db in (0, 1, 2):
                out = np.minimum(out, big[da:da + 2 * h + 1, db:db + 2 * w + 1])
        out[1::2, 1::2] = p
        return cls(out)

    @property
    def pixel_values(self) -> np.ndarray:
        return self.values[1::2, 1::2]

    @property
    def shape(self) -> tuple[int, int]:
        """Pixel window size ``(h, w)``."""
        return (self.values.shape[0] // 2, self.values.shape[1] // 2)

    def check(self) -> None:
        v = self.values
        if not np.all(np.isfinite(v)):
            raise InputError("cell values must be finite")
        # a cube at an even coordinate is a face of its odd neighbours
        if (np.any(v[0:-1:2, :] > v[1::2, :]) or np.any(v[2::2, :] > v[1::2, :])
                or np.any(v[:, 0:-1:2] > v[:, 1::2]) or np.any(v[:, 2::2] > v[:, 1::2])):
            raise InputError("face value exceeds coface value")


@dataclass
class FilteredComplex:
    """Cells in filtration order.

    ``boundaries[i]`` lists indices (positions in this order) of the faces of
    cell ``i``; ``geometry[i]`` is a tuple of points locating the cell.
    """

    ids: list[Hashable]
    dims: np.ndarray
    values: np.ndarray
    boundaries: list[tuple[int, ...]]
    geometry: list[tuple[tuple[float, ...], ...]]
    kind: str = "simplicial"
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.ids)

    @property
    def max_dim(self) -> int:
        return int(self.dims.max()) if len(self.dims) else -1

    def validate(self) -> None:
        if len(self.values) > 1 and np.any(np.diff(self.values) < 0):
            raise InputError("filtration values must be nondecreasing")
        for i, bd in enumerate(self.boundaries):
            d = self.dims[i]
            expected = 0 if d == 0 else (d + 1 if self.kind == "simplicial" else 2 * d)
            if len(bd) != expected:
                raise InputError(f"cell {self.ids[i]!r} has {len(bd)} faces, expected {expected}")
            for j in bd:
                if j >= i:
                    raise InputError(f"face {self.ids[j]!r} does not precede coface {self.ids[i]!r}")
                if self.dims[j] != d - 1:
                    raise InputError(f"face {self.ids[j]!r} has the wrong dimension")
                if self.values[j] > self.values[i]:
                    raise InputError(f"face {self.ids[j]!r} enters after coface {self.ids[i]!r}")

    def sublevel(self, t: float) -> np.ndarray:
        return self.values <= t

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["id", "dim", "value", "boundary_ids"])
            for i in range(len(self)):
                wr.writerow([i, int(self.dims[i]), repr(float(self.values[i])),
                             " ".join(str(j) for j in self.boundaries[i])])


def _assemble(cells, kind, meta=None) -> FilteredComplex:
    """``cells`` are ``(value, dim, key, face_keys, geometry)`` tuples."""
    cells = sorted(cells, key=lambda c: (c[0], c[1], c[2]))
    index = {c[2]: i for i, c in enumerate(cells)}
    return FilteredComplex(
        ids=[c[2] for c in cells],
        dims=np.array([c[1] for c in cells], dtype=int),
        values=np.array([c[0] for c in cells], dtype=float),
        boundaries=[tuple(sorted(index[f] for f in c[3])) for c in cells],
        geometry=[c[4] for c in cells],
        kind=kind,
        meta=meta or {},
    )


# ---------------------------------------------------------------------------
# Point clouds

def _check_distinct(pts: np.ndarray) -> None:
    if len(pts) > 1:
        _, counts = np.unique(pts, axis=0, return_counts=True)
        if np.any(counts > 1):
            raise InputError("duplicate points are not allowed")


def _circumball(pts: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Center and radius of the smallest sphere through 1-3 affinely independent points."""
    k = len(pts)
    if k == 1:
        return pts[0], 0.0
    if k == 2:
        return (pts[0] + pts[1]) / 2, float(np.linalg.norm(pts[0] - pts[1]) / 2)
    a, b, c = pts
    u, v = b - a, c - a
    uu, vv, uv = u @ u, v @ v, u @ v
    det = uu * vv - uv * uv
    if det <= 1e-14 * uu * vv:
        return None  # collinear
    s = vv * (uu - uv) / (2 * det)
    t = uu * (vv - uv) / (2 * det)
    center = a + s * u + t * v
    return center, float(np.linalg.norm(center - a))


def min_enclosing_radius(pts) -> float:
    """Radius of the minimum enclosing ball by exhaustive support enumeration.

    Supports of size <= 3 are tried; this is exact for any simplex of
    dimension <= 2 and for any point set in the plane.
    """
    pts = np.asarray(pts, dtype=float)
    best = math.inf
    for k in (1, 2, 3):
        for sup in itertools.combinations(range(len(pts)), k):
            ball = _circumball(pts[list(sup)])
            if ball is None:
                continue
            center, r = ball
            if r >= best:
                continue
            if np.all(np.linalg.norm(pts - center, axis=1) <= r * (1 + 1e-12) + 1e-15):
                best = r
    return best


def _triangle_meb(pts: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Minimum enclosing radius of many triangles at once.

    Non-acute triangles are enclosed by the ball on their longest side,
    acute ones by their circumcircle.
    """
    a, b, c = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    sq = np.stack([((b - c) ** 2).sum(1), ((a - c) ** 2).sum(1), ((a - b) ** 2).sum(1)], axis=1)
    sq.sort(axis=1)
    longest = np.sqrt(sq[:, 2]) / 2
    u, v = b - a, c - a
    uu, vv, uv = (u * u).sum(1), (v * v).sum(1), (u * v).sum(1)
    area2 = np.maximum(uu * vv - uv * uv, 0.0)  # (2 * area)^2
    acute = sq[:, 0] + sq[:, 1] > sq[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        circ = np.sqrt(sq[:, 0] * sq[:, 1] * sq[:, 2] / (4 * area2))
    return np.where(acute & (area2 > 0), np.maximum(circ, longest), longest)


def _simplicial(pc: PointCloud, max_dim: int, name: str) -> FilteredComplex:
    if max_dim < 1:
        raise InputError("max_dim must be >= 1")
    pts = pc.points
    _check_distinct(pts)
    m = len(pts)
    top = min(max_dim + 1, m - 1)
    half = 0.5 * np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    cells = []
    coords = [tuple(float(c) for c in p) for p in pts]
    for k in range(0, top + 1):
        simplices = list(itertools.combinations(range(m), k + 1))
        if not simplices:
            break
        idx = np.array(simplices, dtype=np.int64)
        if k == 0:
            vals = np.zeros(len(idx))
        elif k == 1:
            vals = half[idx[:, 0], idx[:, 1]]
        else:
            edges = np.array(list(itertools.combinations(range(k + 1), 2)))
            rips = half[idx[:, edges[:, 0]], idx[:, edges[:, 1]]].max(axis=1)
            if name == "rips":
                vals = rips
            elif k == 2:
                vals = _triangle_meb(pts, idx)
            else:
                vals = np.array([min_enclosing_radius(pts[list(s)]) for s in simplices])
            if name == "cech" and k >= 2:
                # rounding must not break face monotonicity
                vals = np.maximum(vals, rips)
        for sigma, v in zip(simplices, vals.tolist()):
            faces = [sigma[:i] + sigma[i + 1:] for i in range(k + 1)] if k else []
            cells.append((v, k, sigma, faces, tuple(coords[i] for i in sigma)))
    return _assemble(cells, "simplicial", {"filtration": name, "max_dim": max_dim})


def cech_filtration(pc: PointCloud, max_dim: int = 1) -> FilteredComplex:
    """Čech filtration on simplices of dimension ``0 .. max_dim + 1``.

    A simplex enters at the radius of the minimum enclosing ball of its
    vertices.
    """
    if pc.dim > 2 and max_dim > 1:
        raise InputError("Čech values above dimension 2 are only implemented in the plane")
    return _simplicial(pc, max_dim, "cech")


def rips_filtration(pc: PointCloud, max_dim: int = 1) -> FilteredComplex:
    """Vietoris-Rips filtration; a simplex enters at half its longest edge."""
    return _simplicial(pc, max_dim, "rips")


# ---------------------------------------------------------------------------
# Images

def signed_manhattan(img: BinaryImage) -> CellFunction:
    """White pixels get ``-d``, black ``+d``; ``d`` is the L1 distance to the other color."""
    px = img.pixels
    if px.all() or not px.any():
        raise InputError("image needs at least one white and one black pixel")
    d_white = ndimage.distance_transform_cdt(px, metric="taxicab")
    d_black = ndimage.distance_transform_cdt(~px, metric="taxicab")
    f = np.where(px, -d_white, d_black).astype(float)
    return CellFunction.from_pixels(f)


def cube_owner_pixel(cf: CellFunction) -> np.ndarray:
    """For every cube, the flat index of the incident pixel realizing its value.

    Ties go to the lexicographically smallest ``(row, col)``.
    """
    h, w = cf.shape
    v = cf.values
    pix = cf.pixel_values
    owner = np.full(v.shape, -1, dtype=np.int64)
    best = np.full(v.shape, np.inf)
    flat = np.arange(h * w, dtype=np.int64).reshape(h, w)
    big = np.iinfo(np.int64).max
    # pixel (i, j) touches cubes (2i + a, 2j + b) for a, b in 0..2
    for a in (0, 1, 2):
        for b in (0, 1, 2):
            sl = (slice(a, a + 2 * h, 2), slice(b, b + 2 * w, 2))
            cur_best = best[sl]
            cur_owner = owner[sl]
            tie = (pix == cur_best) & (flat < np.where(cur_owner < 0, big, cur_owner))
            better = (pix < cur_best) | tie
            cur_best[better] = pix[better]
            cur_owner[better] = flat[better]
    return owner


def cubical_filtration(cf: CellFunction) -> FilteredComplex:
    """Sublevel cubical filtration, ordered by (value, dimension, anchor).

    The geometry payload of every cube is the center of the pixel that
    realizes its value, so degree-0 births land on pixel centers.
    """
    cf.check()
    v = cf.values
    H, W = v.shape
    h, w = cf.shape
    owner = cube_owner_pixel(cf)
    cells = []
    for a in range(H):
        for b in range(W):
            dim = (a & 1) + (b & 1)
            faces = []
            if a & 1:
                faces += [(a - 1, b), (a + 1, b)]
            if b & 1:
                faces += [(a, b - 1), (a, b + 1)]
            o = int(owner[a, b])
            geom = ((o % w + 0.5, o // w + 0.5),)
            cells.append((float(v[a, b]), dim, (a, b), faces, geom))
    return _assemble(cells, "cubical", {"shape": (h, w)})


# ---------------------------------------------------------------------------
# I/O

def read_point_cloud(path) -> PointCloud:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                if rows:
                    raise InputError(f"{path}: non-numeric row {row!r}") from None
                continue  # header
    if not rows:
        return PointCloud(np.zeros((0, 2)))
    return PointCloud(np.array(rows))


def write_point_cloud(pc: PointCloud, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([f"x{i}" for i in range(pc.dim)])
        for p in pc.points:
            wr.writerow([repr(float(c)) for c in p])


def read_image(path) -> BinaryImage:
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image

        arr = np.asarray(Image.open(path))
        if arr.ndim == 3:
            arr = arr.any(axis=2)
        return BinaryImage(arr != 0)
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if set(line) - {"0", "1"}:
            raise InputError(f"{path}: text images hold rows of 0/1 only")
        rows.append([c == "1" for c in line])
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: ragged rows")
    return BinaryImage(np.array(rows))


def write_image(img: BinaryImage, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image

        Image.fromarray(img.pixels.astype(np.uint8) * 255).save(path)
    else:
        path.write_text("\n".join("".join("1" if c else "0" for c in row) for row in img.pixels) + "\n")
