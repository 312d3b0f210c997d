"""Seeded generators for random binary images and planar point clouds.

Every sample is drawn from its own PCG64 stream keyed by
``(seed, index)`` through ``numpy.random.SeedSequence`` spawn keys, so a
dataset can be regenerated sample by sample in any order.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .complex import BinaryImage, InputError, PointCloud


def sample_rng(seed: int, index: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent generator for sample ``index`` of the stream ``stream``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class GenImageParams:
    W: int = 300
    N: int = 100
    S: int = 30
    sigma1: float = 4.0
    sigma2: float = 2.0
    t: float = 0.01

    def __post_init__(self):
        if self.W < 1 or self.N < 1 or self.S < 0:
            raise InputError("W and N must be positive, S non-negative")
        if not (self.sigma1 > 0 and self.sigma2 > 0 and self.t > 0):
            raise InputError("sigma1, sigma2 and t must be positive")

    def to_dict(self):
        return asdict(self)


def walk_histogram(p: GenImageParams, rng: np.random.Generator) -> np.ndarray:
    """Counts of all ``N (S + 1)`` random-walk positions on the ``W x W`` torus."""
    W = p.W
    start = rng.uniform(0.0, W, size=(p.N, 1, 2))
    steps = rng.normal(0.0, p.sigma1, size=(p.N, p.S, 2))
    pos = np.concatenate([start, start + np.cumsum(steps, axis=1)], axis=1) % W
    pos = pos.reshape(-1, 2)
    # rows follow the second coordinate so the image is indexed [y, x]
    H, _, _ = np.histogram2d(pos[:, 1], pos[:, 0], bins=W, range=[[0, W], [0, W]])
    return H


def gen_image(p: GenImageParams, seed: int = 0, index: int = 0, stream: int = 0) -> BinaryImage:
    """Random binary image from Brownian orbits of ``N`` particles.

    The raw count histogram is smoothed by a periodic Gaussian filter
    (kernel truncated at 4 sigma) and thresholded: white where the filtered
    count exceeds ``t``.
    """
    rng = sample_rng(seed, index, stream)
    H = walk_histogram(p, rng)
    smooth = ndimage.gaussian_filter(H, p.sigma2, mode="wrap", truncate=4.0)
    return BinaryImage(smooth > p.t)


def gen_ppp_disk(mean_points: float, seed: int = 0, index: int = 0, stream: int = 0) -> PointCloud:
    """Poisson point process on the unit disk with the given mean count."""
    if not mean_points > 0:
        raise InputError("mean_points must be positive")
    rng = sample_rng(seed, index, stream)
    n = rng.poisson(mean_points)
    r = np.sqrt(rng.uniform(0.0, 1.0, n))
    th = rng.uniform(0.0, 2 * np.pi, n)
    return PointCloud(np.column_stack([r * np.cos(th), r * np.sin(th)]).reshape(-1, 2))


def gen_gpp_disk(n: int = 30, seed: int = 0, index: int = 0, stream: int = 0) -> PointCloud:
    """Eigenvalues of an ``n x n`` complex Ginibre matrix scaled by ``1/sqrt(n)``.

    Eigenvalues outside the unit disk are discarded.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    rng = sample_rng(seed, index, stream)
    g = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2.0)
    z = np.linalg.eigvals(g) / np.sqrt(n)
    z = z[np.abs(z) <= 1.0]
    z = z[np.lexsort((z.imag, z.real))]
    return PointCloud(np.column_stack([z.real, z.imag]).reshape(-1, 2))


_S3 = np.sqrt(3.0)


def _honeycomb20() -> np.ndarray:
    # five hexagons (two over three) of side 1: exactly 20 vertices
    centers = [(0.0, 0.0), (_S3, 0.0), (_S3 / 2, 1.5), (3 * _S3 / 2, 1.5), (5 * _S3 / 2, 1.5)]
    verts = set()
    for cx, cy in centers:
        for k in range(6):
            a = np.pi / 2 + k * np.pi / 3
            verts.add((round(cx + np.cos(a), 12), round(cy + np.sin(a), 12)))
    return np.array(sorted(verts))


def lattice_points(kind: str, n_points: int = 20) -> np.ndarray:
    """Noise-free layouts with nearest-neighbour distance 1.

    ``square``: 5 x 4 grid.  ``hexagonal``: honeycomb patch of five regular
    hexagons.  ``triangular``: 5 x 4 rows offset by 1/2, row step sqrt(3)/2.
    """
    if n_points != 20:
        raise InputError("only 20-point lattices are supported")
    if kind == "square":
        return np.array([(x, y) for y in range(4) for x in range(5)], dtype=float)
    if kind == "hexagonal":
        return _honeycomb20()
    if kind == "triangular":
        return np.array([(x + 0.5 * (y % 2), y * _S3 / 2) for y in range(4) for x in range(5)])
    raise InputError(f"unknown lattice kind {kind!r}")


def gen_noisy_lattice(kind: str, n_points: int = 20, noise_sigma: float = 0.1,
                      seed: int = 0, index: int = 0, stream: int = 0) -> PointCloud:
    pts = lattice_points(kind, n_points)
    if noise_sigma < 0:
        raise InputError("noise_sigma must be >= 0")
    rng = sample_rng(seed, index, stream)
    return PointCloud(pts + rng.normal(0.0, noise_sigma, size=pts.shape))


# ---------------------------------------------------------------------------
# Scalar image descriptors used as baselines

def count_components(mask: np.ndarray, connectivity: int) -> int:
    """Number of connected components of ``mask`` (4- or 8-connected flood fill)."""
    structure = np.ones((3, 3), bool) if connectivity == 8 else ndimage.generate_binary_structure(2, 1)
    return int(ndimage.label(mask, structure=structure)[1])


def image_descriptors(img: BinaryImage) -> dict[str, int]:
    """White-pixel count and component counts.

    White regions are joined through corners (they are unions of closed
    squares); black regions are their complement and use 4-connectivity.
    """
    px = img.pixels
    return {
        "n_white": int(px.sum()),
        "n_white_components": count_components(px, 8),
        "n_black_components": count_components(~px, 4),
    }
