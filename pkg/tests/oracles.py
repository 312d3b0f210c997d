"""Slow, independent reference implementations used only by the tests."""
import itertools
import math

import numpy as np


def manhattan_bruteforce(pixels):
    """Signed L1 distance to the nearest opposite-colour pixel, O(P^2)."""
    h, w = pixels.shape
    coords = np.argwhere(np.ones_like(pixels, dtype=bool))
    white = coords[pixels.ravel()]
    black = coords[~pixels.ravel()]
    out = np.zeros((h, w), dtype=int)
    for r, c in coords:
        if pixels[r, c]:
            out[r, c] = -np.abs(black - (r, c)).sum(axis=1).min()
        else:
            out[r, c] = np.abs(white - (r, c)).sum(axis=1).min()
    return out


class UnionFind:
    def __init__(self):
        self.parent = {}
        self.birth = {}

    def add(self, x, birth):
        self.parent[x] = x
        self.birth[x] = birth

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root


def sublevel_sweep_d0(values, reduced=True):
    """Degree-0 persistence of the union of closed pixel squares with value <= t.

    Pixels are added in order of value (ties by raster index); touching
    squares, including corner contact, are connected.  Elder rule.
    """
    h, w = values.shape
    order = sorted(((values[r, c], r * w + c) for r in range(h) for c in range(w)))
    uf = UnionFind()
    pairs = []
    for val, k in order:
        r, c = divmod(k, w)
        uf.add(k, (val, k))
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                rr, cc = r + dr, c + dc
                if (dr or dc) and 0 <= rr < h and 0 <= cc < w and (rr * w + cc) in uf.parent:
                    a, b = uf.find(k), uf.find(rr * w + cc)
                    if a == b:
                        continue
                    # younger root dies
                    young, old = (a, b) if uf.birth[a] > uf.birth[b] else (b, a)
                    if uf.birth[young][0] < val:
                        pairs.append((float(uf.birth[young][0]), float(val)))
                    uf.parent[young] = old
    roots = {uf.find(k) for k in uf.parent}
    essentials = sorted(uf.birth[r] for r in roots)
    if not reduced:
        pairs += [(float(b[0]), math.inf) for b in essentials]
    else:
        pairs += [(float(b[0]), math.inf) for b in essentials[1:]]
    return sorted(pairs)


def count_components_uf(mask):
    """Components of a boolean mask with 8-connectivity."""
    h, w = mask.shape
    uf = UnionFind()
    for r in range(h):
        for c in range(w):
            if mask[r, c]:
                uf.add((r, c), 0)
    for (r, c) in list(uf.parent):
        for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
            q = (r + dr, c + dc)
            if q in uf.parent:
                a, b = uf.find((r, c)), uf.find(q)
                if a != b:
                    uf.parent[a] = b
    return len({uf.find(x) for x in uf.parent})


def meb_radius(pts):
    """Smallest enclosing circle by brute force over 1-, 2- and 3-point supports."""
    pts = np.asarray(pts, dtype=float)
    best = math.inf
    cands = []
    for i in range(len(pts)):
        cands.append((pts[i], 0.0))
    for i, j in itertools.combinations(range(len(pts)), 2):
        c = (pts[i] + pts[j]) / 2
        cands.append((c, np.linalg.norm(pts[i] - c)))
    for i, j, k in itertools.combinations(range(len(pts)), 3):
        a, b, c = pts[i], pts[j], pts[k]
        d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        if abs(d) < 1e-14:
            continue
        ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
        uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
        u = np.array([ux, uy])
        cands.append((u, np.linalg.norm(a - u)))
    for c, r in cands:
        if np.all(np.linalg.norm(pts - c, axis=1) <= r + 1e-12) and r < best:
            best = r
    return best


def golden_section(f, a, b, tol=1e-12):
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    while abs(b - a) > tol:
        if f(c) < f(d):
            b = d
        else:
            a = c
        c, d = b - g * (b - a), a + g * (b - a)
    return (a + b) / 2


def ridge_normal_equations(X, y, lam):
    """w = (Xc^T Xc / M + lam I)^-1 Xc^T yc / M on centred data; b from the means."""
    M, n = X.shape
    xm, ym = X.mean(axis=0), y.mean()
    Xc, yc = X - xm, y - ym
    w = np.linalg.solve(Xc.T @ Xc / M + lam * np.eye(n), Xc.T @ yc / M)
    return w, ym - xm @ w


def spearman(x, y):
    from scipy.stats import rankdata

    rx, ry = rankdata(x), rankdata(y)
    return float(np.corrcoef(rx, ry)[0, 1])
