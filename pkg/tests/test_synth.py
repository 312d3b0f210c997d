import numpy as np
import pytest
from scipy import stats
from scipy.spatial.distance import cdist

from pdlearn.complex import BinaryImage, InputError
from pdlearn.synth import (GenImageParams, count_components, gen_gpp_disk, gen_image, gen_noisy_lattice,
                           gen_ppp_disk, image_descriptors, lattice_points, sample_rng, walk_histogram)

from oracles import count_components_uf, spearman


def nearest_neighbour(pts):
    d = cdist(pts, pts)
    np.fill_diagonal(d, np.inf)
    return d.min(axis=1)


def test_streams_are_reproducible_and_distinct():
    a = sample_rng(7, 3, 1).random(4)
    assert np.array_equal(a, sample_rng(7, 3, 1).random(4))
    assert not np.array_equal(a, sample_rng(7, 4, 1).random(4))
    assert not np.array_equal(a, sample_rng(7, 3, 2).random(4))
    assert not np.array_equal(a, sample_rng(8, 3, 1).random(4))


def test_gen_image_is_deterministic():
    p = GenImageParams(N=100, S=30)
    a, b = gen_image(p, seed=5, index=2), gen_image(p, seed=5, index=2)
    assert a.pixels.shape == (300, 300)
    assert np.array_equal(a.pixels, b.pixels)
    assert not np.array_equal(a.pixels, gen_image(p, seed=5, index=3).pixels)


def test_single_particle_without_walk():
    p = GenImageParams(W=40, N=1, S=0)
    H = walk_histogram(p, sample_rng(0))
    assert H.sum() == 1 and np.count_nonzero(H) == 1
    img = gen_image(p, seed=0)
    assert 0 < img.pixels.sum() < 60
    # the blob sits on the occupied bin; the filter wraps, so measure on the torus
    r, c = np.argwhere(H)[0]
    assert img.pixels[r, c]
    wr, wc = np.nonzero(img.pixels)
    dr = np.minimum(np.abs(wr - r), 40 - np.abs(wr - r))
    dc = np.minimum(np.abs(wc - c), 40 - np.abs(wc - c))
    assert np.hypot(dr, dc).max() < 4


def test_walk_histogram_counts_every_position():
    p = GenImageParams(W=50, N=7, S=11)
    assert walk_histogram(p, sample_rng(1)).sum() == 7 * 12


def test_image_param_validation():
    with pytest.raises(InputError):
        GenImageParams(W=0)
    with pytest.raises(InputError):
        GenImageParams(t=0.0)


def test_white_fraction_increases_with_n_and_s():
    Ns, Ss, fracs = [], [], []
    for N in (20, 60, 100, 180, 250):
        for S in (5, 10, 20, 30, 40):
            for seed in range(20):
                img = gen_image(GenImageParams(N=N, S=S), seed=seed, index=N * 100 + S)
                Ns.append(N)
                Ss.append(S)
                fracs.append(img.pixels.mean())
    assert spearman(Ns, fracs) > 0
    assert spearman(Ss, fracs) > 0


def test_ppp_counts_are_poisson():
    counts = np.array([len(gen_ppp_disk(30.0, seed=0, index=i)) for i in range(10_000)])
    assert abs(counts.mean() - 30) < 3 * np.sqrt(30 / len(counts))
    # chi-square over pooled count bins with expected >= 5
    lo, hi = 17, 44
    observed = np.array([(counts <= lo).sum()] + [(counts == k).sum() for k in range(lo + 1, hi)]
                        + [(counts >= hi).sum()])
    pmf = stats.poisson(30)
    expected = len(counts) * np.array([pmf.cdf(lo)] + [pmf.pmf(k) for k in range(lo + 1, hi)] + [pmf.sf(hi - 1)])
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_ppp_points_in_disk_and_degenerate_mean():
    pts = gen_ppp_disk(30.0, seed=1).points
    assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= 1)
    assert len(gen_ppp_disk(1e-9, seed=1)) == 0
    with pytest.raises(InputError):
        gen_ppp_disk(0.0)


def test_gpp_single_point():
    for seed in range(20):
        rng = sample_rng(seed)
        z = complex(*rng.normal(size=2)) / np.sqrt(2)
        cloud = gen_gpp_disk(1, seed=seed)
        assert len(cloud) == (1 if abs(z) <= 1 else 0)
        if len(cloud):
            assert cloud.points[0] == pytest.approx([z.real, z.imag])


def test_gpp_repulsion_and_discard_rate():
    gpp_nn, ppp_nn, kept = [], [], []
    for i in range(500):
        g = gen_gpp_disk(30, seed=2, index=i).points
        p = gen_ppp_disk(30.0, seed=3, index=i).points
        kept.append(len(g))
        gpp_nn.append(nearest_neighbour(g).mean())
        if len(p) >= 2:
            ppp_nn.append(nearest_neighbour(p).mean())
    assert np.mean(gpp_nn) > np.mean(ppp_nn)
    assert 1 - np.mean(kept) / 30 < 0.10


def test_noiseless_lattices():
    sq = lattice_points("square")
    assert len(sq) == 20 and np.allclose(nearest_neighbour(sq), 1.0)
    hexa = lattice_points("hexagonal")
    d = cdist(hexa, hexa)
    assert len(hexa) == 20 and np.allclose(nearest_neighbour(hexa), 1.0)
    assert set(np.isclose(d, 1.0).sum(axis=1).tolist()) <= {2, 3}
    tri = lattice_points("triangular")
    d = cdist(tri, tri)
    assert np.allclose(nearest_neighbour(tri), 1.0)
    assert np.isclose(d, 1.0).sum(axis=1).max() == 6
    with pytest.raises(InputError):
        lattice_points("square", 12)
    with pytest.raises(InputError):
        lattice_points("kagome")


def test_lattice_noise_std():
    base = lattice_points("square")
    dev = np.concatenate([gen_noisy_lattice("square", seed=4, index=i).points - base for i in range(500)])
    assert abs(dev.std() - 0.1) < 0.01
    assert np.array_equal(gen_noisy_lattice("hexagonal", noise_sigma=0.0).points, lattice_points("hexagonal"))


def test_image_descriptors():
    px = np.array([[1, 0, 0, 1],
                   [0, 1, 0, 0],
                   [0, 0, 0, 1],
                   [1, 0, 1, 0]], bool)
    d = image_descriptors(BinaryImage(px))
    assert d["n_white"] == 6
    assert d["n_white_components"] == count_components_uf(px) == 4
    # the corner pixel at the bottom right is cut off from the rest of the black
    assert d["n_black_components"] == 2
