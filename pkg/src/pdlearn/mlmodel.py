"""Regularized linear and logistic regression.

Objectives are written exactly as means over the ``M`` samples plus an
unscaled penalty ``lam * R(w)`` with ``R = ||w||_2^2 / 2`` (ridge) or
``R = ||w||_1`` (lasso).  The intercept is never penalized.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numba
import numpy as np
import scipy.linalg
import scipy.linalg.lapack

from .complex import InputError

DEFAULT_LAMBDA_GRID = tuple(np.logspace(-4, 0, 10).tolist())


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    pi_dim: int = -1
    extra_names: tuple[str, ...] = ()

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.pi_dim < 0:
            self.pi_dim = self.X.shape[1] - len(self.extra_names)
        self.extra_names = tuple(self.extra_names)
        M, n = self.X.shape
        if M != len(self.y):
            raise InputError(f"{M} input rows but {len(self.y)} targets")
        if n != self.pi_dim + len(self.extra_names):
            raise InputError("row length does not match feature layout")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise InputError("inputs and targets must be finite")

    def __len__(self):
        return len(self.y)

    @property
    def layout(self) -> dict:
        return {"pi_dim": self.pi_dim, "extras": list(self.extra_names)}

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.pi_dim, self.extra_names)


@dataclass(frozen=True)
class Penalty:
    kind: str = "l2"
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("l1", "l2"):
            raise InputError(f"unknown penalty {self.kind!r}")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise InputError("lambda must be a finite number >= 0")

    def value(self, w: np.ndarray) -> float:
        if self.kind == "l1":
            return self.lam * float(np.abs(w).sum())
        return 0.5 * self.lam * float(w @ w)


@dataclass
class TrainedLinearModel:
    task: str
    w: np.ndarray
    b: float
    penalty: Penalty
    pi_dim: int
    extra_names: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)
    pi_params: Optional[dict] = None

    @property
    def w_pi(self) -> np.ndarray:
        return self.w[:self.pi_dim]

    @property
    def v(self) -> np.ndarray:
        """Coefficients of the extra (non-PI) features."""
        return self.w[self.pi_dim:]

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps({
            "task": self.task,
            "penalty": {"kind": self.penalty.kind, "lambda": self.penalty.lam},
            "b": self.b,
            "feature_layout": {"pi_dim": self.pi_dim, "extras": list(self.extra_names),
                               "pi_params": self.pi_params},
            "w": self.w.tolist(),
            "diagnostics": self.diagnostics,
        }, indent=1))

    @classmethod
    def from_json(cls, path) -> "TrainedLinearModel":
        d = json.loads(Path(path).read_text())
        lay = d["feature_layout"]
        return cls(d["task"], np.array(d["w"], dtype=float), float(d["b"]),
                   Penalty(d["penalty"]["kind"], float(d["penalty"]["lambda"])),
                   int(lay["pi_dim"]), tuple(lay.get("extras", ())), d.get("diagnostics", {}),
                   lay.get("pi_params"))


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def squared_loss(w, b, X, y) -> float:
    r = X @ w + b - y
    return float(r @ r) / (2 * len(y))


def squared_loss_grad(w, b, X, y):
    r = X @ w + b - y
    return X.T @ r / len(y), float(r.mean())


def cross_entropy(w, b, X, y) -> float:
    z = X @ w + b
    # log(1 + e^z) - y z, evaluated without overflow
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def cross_entropy_grad(w, b, X, y):
    r = sigmoid(X @ w + b) - y
    return X.T @ r / len(y), float(r.mean())


# ---------------------------------------------------------------------------
# Feature standardization (opt-in)

def _standardize(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return (X - mean) / scale, mean, scale


def _unstandardize(w, b, mean, scale):
    w0 = w / scale
    return w0, b - float(w0 @ mean)


# ---------------------------------------------------------------------------
# Linear regression

@numba.njit(cache=True)
def _cd_linear(X, y, lam, l1, w, tol, max_iter, colsq):
    M, n = X.shape
    r = y - X @ w
    p0 = (y @ y) / (2 * M)
    it = 0
    crit = np.inf
    while it < max_iter:
        it += 1
        for j in range(n):
            if colsq[j] == 0.0:
                continue
            xj = X[:, j]
            a = colsq[j] / M
            rho = (xj @ r) / M + a * w[j]
            if l1:
                if rho > lam:
                    new = (rho - lam) / a
                elif rho < -lam:
                    new = (rho + lam) / a
                else:
                    new = 0.0
            else:
                new = rho / (a + lam)
            delta = new - w[j]
            if delta != 0.0:
                r -= delta * xj
                w[j] = new
        g = X.T @ r / M
        if l1:
            # duality gap with a feasibly rescaled residual
            gmax = np.max(np.abs(g)) if n > 0 else 0.0
            s = 1.0 if gmax <= lam else lam / gmax
            primal = (r @ r) / (2 * M) + lam * np.sum(np.abs(w))
            nu = s * r
            dual = ((y @ y) - ((y - nu) @ (y - nu))) / (2 * M)
            crit = (primal - dual) / max(p0, 1e-300)
        else:
            crit = np.max(np.abs(g - lam * w)) if n > 0 else 0.0
        if crit <= tol:
            break
    return w, it, crit


_GRAM_LIMIT = 4000  # above this many features the full Gram costs too much memory


def _support_lstsq(Xc, yc, w, lam, gram=None, xty=None):
    # On the orthant of sign(w) the lasso objective is a smooth quadratic;
    # move toward its minimizer, stopping at each sign change.
    M = len(yc)
    w = w.copy()
    for _ in range(w.size):
        S = np.flatnonzero(w)
        if S.size == 0:
            break
        if gram is not None:
            G = gram[np.ix_(S, S)]
            rhs = xty[S] - lam * np.sign(w[S])
        else:
            A = Xc[:, S]
            G = A.T @ A / M
            rhs = A.T @ yc / M - lam * np.sign(w[S])
        # unit-diagonal scaling so the jitter is relative per column even when
        # feature scales differ by many orders of magnitude
        dsc = np.sqrt(np.maximum(G.diagonal(), 1e-300))
        G = G / dsc[:, None] / dsc[None, :]
        G[np.diag_indices_from(G)] += 1e-12
        # Cholesky solve; ill-conditioning is tolerated since the KKT check decides
        _, target, info = scipy.linalg.lapack.dposv(G, rhs / dsc)
        if info != 0:
            target = np.linalg.lstsq(G, rhs / dsc, rcond=None)[0]
        target = target / dsc
        cur = w[S]
        cross = np.flatnonzero(cur * target < 0)
        if cross.size == 0:
            w[S] = target
            break
        ratios = cur[cross] / (cur[cross] - target[cross])
        k = int(np.argmin(ratios))
        w[S] = cur + ratios[k] * (target - cur)
        w[S[cross[k]]] = 0.0
    return w


def fit_linear(ds: Dataset, pen: Penalty, solver: str = "auto", standardize: bool = False,
               tol: float = 1e-6, max_iter: int = 100_000, w0=None) -> TrainedLinearModel:
    """Minimize ``E(w, b) + lam R(w)`` with ``E`` the halved mean squared error.

    Ridge is solved from the normal equations (``solver="auto"``) or by
    cyclic coordinate descent (``solver="cd"``); lasso always uses
    coordinate descent with soft-thresholding, stopped on the KKT residual.
    ``w0`` warm-starts the lasso (original feature scale).
    """
    X, y = ds.X, ds.y
    if len(y) < 2:
        raise InputError("need at least 2 samples to fit")
    if standardize:
        X, mean, scale = _standardize(X)
    xm, ym = X.mean(axis=0), y.mean()
    Xc, yc = X - xm, y - ym
    M, n = Xc.shape
    lam = pen.lam
    diag = {}
    if pen.kind == "l2" and solver in ("auto", "closed"):
        if lam == 0:
            w = np.linalg.lstsq(Xc, yc, rcond=None)[0]
        elif n <= M:
            w = np.linalg.solve(Xc.T @ Xc / M + lam * np.eye(n), Xc.T @ yc / M)
        else:
            # push-through identity: w = Xc^T (Xc Xc^T / M + lam I)^{-1} yc / M
            alpha = np.linalg.solve(Xc @ Xc.T / M + lam * np.eye(M), yc / M)
            w = Xc.T @ alpha
        diag.update(solver="closed", iterations=0, converged=True)
    elif solver in ("auto", "cd") and pen.kind == "l2":
        Xf = np.asfortranarray(Xc)
        colsq = (Xf ** 2).sum(axis=0)
        w, it, crit = _cd_linear(Xf, yc, float(lam), False, np.zeros(n), tol, max_iter, colsq)
        diag.update(solver="cd", iterations=int(it), converged=bool(crit <= tol), criterion=float(crit))
    elif solver in ("auto", "cd"):
        Xf = np.asfortranarray(Xc)
        colsq = (Xf ** 2).sum(axis=0)
        w = np.zeros(n) if w0 is None else np.array(w0, dtype=float)
        if w.shape != (n,):
            raise InputError(f"warm start has shape {w.shape}, expected ({n},)")
        if standardize:
            w = w * scale
        gram = xty = None
        if n <= _GRAM_LIMIT:
            gram, xty = Xc.T @ Xc / M, Xc.T @ yc / M
        total = 0
        crit = np.inf
        # short descent bursts to find the support, exact solves on it
        while total < max_iter:
            w, it, _ = _cd_linear(Xf, yc, float(lam), True, w, tol, min(200, max_iter - total), colsq)
            total += int(it)
            w = _support_lstsq(Xc, yc, w, lam, gram, xty)
            crit = _kkt_residual(Xc.T @ (Xc @ w - yc) / M, 0.0, w, lam, True)
            if crit <= tol:
                break
        diag.update(solver="cd", iterations=total, converged=bool(crit <= tol), criterion=float(crit))
    else:
        raise InputError(f"unknown solver {solver!r}")
    b = float(ym - xm @ w)
    if standardize:
        w, b = _unstandardize(w, b, mean, scale)
    diag["final_objective"] = squared_loss(w, b, ds.X, ds.y) + pen.value(w)
    diag["standardized"] = standardize
    return TrainedLinearModel("regression", np.asarray(w, dtype=float), b, pen, ds.pi_dim,
                              ds.extra_names, diag)


# ---------------------------------------------------------------------------
# Logistic regression

def _kkt_residual(gw, gb, w, lam, l1):
    if l1:
        nz = w != 0
        res = np.where(nz, np.abs(gw + lam * np.sign(w)), np.maximum(np.abs(gw) - lam, 0.0))
    else:
        res = np.abs(gw + lam * w)
    return max(float(res.max()) if res.size else 0.0, abs(gb))


def _logistic_newton(A, y, lam, tol, max_iter):
    """Damped Newton on the ridge-penalized cross entropy over ``(w, b)``."""
    M, n = A.shape
    Ab = np.hstack([A, np.ones((M, 1))])
    reg = np.full(n + 1, lam)
    reg[n] = 0.0
    # tiny floor keeps the system solvable when lam = 0 on separable data
    floor = 1e-12 * max(1.0, float(np.abs(Ab).max()) ** 2)

    def obj(v):
        z = Ab @ v
        return float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * float(reg @ (v * v))

    v = np.zeros(n + 1)
    f = obj(v)
    crit = np.inf
    it = 0
    while it < max_iter:
        p = sigmoid(Ab @ v)
        g = Ab.T @ (p - y) / M + reg * v
        crit = float(np.linalg.norm(g))
        if crit <= tol:
            break
        it += 1
        H = (Ab.T * (p * (1 - p))) @ Ab / M + np.diag(reg + floor)
        d = -np.linalg.solve(H, g)
        slope = float(g @ d)
        t = 1.0
        while True:
            vn = v + t * d
            fn = obj(vn)
            if fn <= f + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if fn > f:
            break
        v, f = vn, fn
    return v[:n], float(v[n]), it, crit


@numba.njit(cache=True)
def _weighted_lasso_cd(X, wt, q, w, b, lam, tol, max_sweeps):
    # Minimizes the local quadratic model in place.  q holds the weighted
    # working residual; wt are the per-sample curvatures (already / M).
    M, n = X.shape
    H = np.empty(n)
    for j in range(n):
        s = 0.0
        for i in range(M):
            s += wt[i] * X[i, j] * X[i, j]
        H[j] = s
    wsum = wt.sum()
    active = np.zeros(n, dtype=np.bool_)
    full = True
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        change = 0.0
        for j in range(n):
            if not full and not active[j]:
                continue
            if H[j] <= 0.0:
                continue
            g = H[j] * w[j]
            for i in range(M):
                g += X[i, j] * q[i]
            if g > lam:
                new = (g - lam) / H[j]
            elif g < -lam:
                new = (g + lam) / H[j]
            else:
                new = 0.0
            delta = new - w[j]
            if delta != 0.0:
                for i in range(M):
                    q[i] -= wt[i] * delta * X[i, j]
                w[j] = new
                c = H[j] * delta * delta
                if c > change:
                    change = c
            if new != 0.0:
                active[j] = True
        db = q.sum() / wsum
        b += db
        for i in range(M):
            q[i] -= wt[i] * db
        c = wsum * db * db
        if c > change:
            change = c
        if change <= tol:
            if full:
                break
            full = True
        else:
            full = False
    return w, b, sweeps


def _support_newton(X, y, w, b, lam, tol, max_iter=100):
    # Newton on the fixed support and signs of w, where the l1 term is
    # linear; steps stop at the first sign change and drop that coordinate.
    M = len(y)
    S = np.flatnonzero(w)
    if S.size == 0 or S.size >= M:
        return w, b
    w = w.copy()
    for _ in range(max_iter):
        S = S[w[S] != 0]
        if S.size == 0:
            break
        s = np.sign(w[S])
        A = np.hstack([X[:, S], np.ones((M, 1))])
        v = np.concatenate([w[S], [b]])
        lin = np.concatenate([lam * s, [0.0]])

        def obj(v):
            z = A @ v
            return float(np.mean(np.logaddexp(0.0, z) - y * z)) + float(lin @ v)

        p = sigmoid(A @ v)
        g = A.T @ (p - y) / M + lin
        if np.abs(g).max() <= tol:
            break
        H = (A.T * (p * (1 - p))) @ A / M
        H[np.diag_indices_from(H)] += 1e-12 * max(1.0, float(H.diagonal().max()))
        try:
            d = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if g @ d >= 0:
            break
        k = S.size
        cross = np.flatnonzero(v[:k] * (v[:k] + d[:k]) < 0)
        t_max, hit = 1.0, -1
        if cross.size:
            ratios = -v[cross] / d[cross]
            hit = int(cross[np.argmin(ratios)])
            t_max = float(ratios.min())
        f = obj(v)
        t = t_max
        while obj(v + t * d) > f + 1e-4 * t * float(g @ d) and t > 1e-12:
            t *= 0.5
            hit = -1
        if obj(v + t * d) > f:
            break
        v = v + t * d
        if hit >= 0:
            v[hit] = 0.0
        w[S] = v[:k]
        b = float(v[k])
    return w, b


def _logistic_prox_newton(X, y, lam, tol, max_iter):
    """Proximal Newton for the lasso-penalized cross entropy.

    Each outer step minimizes the quadratic model of the loss plus the
    exact l1 term by coordinate descent and backtracks on the true
    objective; a Newton solve on the resulting support and signs then
    finishes the job that cyclic descent does slowly on correlated
    columns.  Stops on the KKT residual.
    """
    M, n = X.shape
    Xf = np.asfortranarray(X)
    w = np.zeros(n)
    ybar = float(y.mean())
    b = math.log(ybar / (1 - ybar))

    def obj(w, b):
        z = Xf @ w + b
        return float(np.mean(np.logaddexp(0.0, z) - y * z)) + lam * float(np.abs(w).sum())

    f = obj(w, b)
    crit = np.inf
    it = 0
    inner_tol = 1e-8
    while it < max_iter:
        p = sigmoid(Xf @ w + b)
        gw = Xf.T @ (p - y) / M
        gb = float(np.mean(p - y))
        crit = _kkt_residual(gw, gb, w, lam, True)
        if crit <= tol:
            break
        it += 1
        wt = np.maximum(p * (1 - p), 1e-10) / M
        q = (y - p) / M
        wn, bn, _ = _weighted_lasso_cd(Xf, wt, q, w.copy(), b, lam, min(inner_tol, crit ** 2), 100_000)
        dw, db = wn - w, bn - b
        delta = float(gw @ dw) + gb * db + lam * (float(np.abs(wn).sum()) - float(np.abs(w).sum()))
        t = 1.0
        while True:
            fn = obj(w + t * dw, b + t * db)
            if fn <= f + 1e-4 * t * delta or t < 1e-10:
                break
            t *= 0.5
        if fn <= f:
            w = wn if t == 1.0 else w + t * dw
            b = bn if t == 1.0 else b + t * db
            f = fn
        else:
            inner_tol *= 1e-2
        w2, b2 = _support_newton(Xf, y, w, b, lam, 0.1 * tol)
        f2 = obj(w2, b2)
        if f2 <= f:
            w, b, f = w2, b2, f2
        elif fn > f and inner_tol < 1e-30:
            break
    return w, b, it, crit


def row_space(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(A, V)`` with ``X = A V`` and orthonormal rows in ``V``."""
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    keep = s > s[0] * 1e-12 if s.size else s > 0
    return U[:, keep] * s[keep], Vt[keep]


def fit_logistic(ds: Dataset, pen: Penalty, standardize: bool = False, tol: float = 1e-6,
                 max_iter: int = 1000, rowspace=None) -> TrainedLinearModel:
    """Minimize the mean cross entropy plus ``lam R(w)``.

    Ridge uses damped Newton; with more features than samples it runs in
    the row space of ``X`` (exact, since the optimal ``w`` lies there).
    Lasso uses proximal Newton with a coordinate-descent inner solver.
    ``max_iter`` caps the outer Newton steps.  ``rowspace`` may carry a
    precomputed ``row_space(X)`` to share across penalties.
    """
    y = ds.y
    if len(y) < 2:
        raise InputError("need at least 2 samples to fit")
    if not np.all((y == 0) | (y == 1)):
        raise InputError("classification targets must be 0/1")
    if y.min() == y.max():
        raise InputError("both classes must be present")
    X = ds.X
    if standardize:
        X, mean, scale = _standardize(X)
    lam = pen.lam
    M, n = X.shape
    if pen.kind == "l1":
        w, b, it, crit = _logistic_prox_newton(X, y, lam, tol, max_iter)
        solver = "prox-newton"
    else:
        basis = None
        A = X
        if rowspace is not None and not standardize:
            A, basis = rowspace
        elif n > M:
            A, basis = row_space(X)
        w, b, it, crit = _logistic_newton(A, y, lam, tol, max_iter)
        if basis is not None:
            w = basis.T @ w
        solver = "newton"
    diag = {"solver": solver, "iterations": int(it), "converged": bool(crit <= tol), "criterion": float(crit)}
    if standardize:
        w, b = _unstandardize(w, b, mean, scale)
    if lam == 0:
        z = ds.X @ w + b
        # with separable classes the unpenalized optimum lies at infinity
        if crit > tol or z[y == 1].min() > z[y == 0].max():
            warnings.warn("unregularized logistic fit on separable data; weights diverge")
            diag["flag"] = "lambda=0 on separable data; weights grow without bound"
    diag["final_objective"] = cross_entropy(w, b, ds.X, ds.y) + pen.value(w)
    diag["standardized"] = standardize
    return TrainedLinearModel("classification", np.asarray(w, dtype=float), float(b), pen,
                              ds.pi_dim, ds.extra_names, diag)


def fit(ds: Dataset, task: str, pen: Penalty, **kw) -> TrainedLinearModel:
    if task == "regression":
        return fit_linear(ds, pen, **kw)
    if task == "classification":
        return fit_logistic(ds, pen, **kw)
    raise InputError(f"unknown task {task!r}")


def kkt_violation(model: TrainedLinearModel, ds: Dataset) -> float:
    """Largest optimality-condition violation of ``model`` on ``ds``."""
    grad = cross_entropy_grad if model.task == "classification" else squared_loss_grad
    gw, gb = grad(model.w, model.b, ds.X, ds.y)
    return _kkt_residual(gw, gb, model.w, model.penalty.lam, model.penalty.kind == "l1")


# ---------------------------------------------------------------------------
# Prediction and scores

def decision_function(model: TrainedLinearModel, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.w.size:
        raise InputError(f"input has {x.shape[-1]} features, model expects {model.w.size}")
    return x @ model.w + model.b


def predict(model: TrainedLinearModel, x):
    """``w . x + b`` for regression, ``P(y = 1)`` for classification."""
    z = decision_function(model, x)
    return sigmoid(z) if model.task == "classification" else z


def classify(model: TrainedLinearModel, x):
    return (np.asarray(predict(model, x)) >= 0.5).astype(int)


def score_accuracy(model: TrainedLinearModel, ds: Dataset) -> float:
    if model.task != "classification":
        raise InputError("accuracy needs a classification model")
    if len(ds) == 0:
        raise InputError("empty dataset")
    return float(np.mean(classify(model, ds.X) == ds.y))


def r2(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float(((y - yhat) ** 2).sum())
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)


def score_r2(model: TrainedLinearModel, ds: Dataset) -> float:
    if model.task != "regression":
        raise InputError("R^2 needs a regression model")
    if len(ds) == 0:
        raise InputError("empty dataset")
    return r2(ds.y, predict(model, ds.X))


def score(model: TrainedLinearModel, ds: Dataset) -> float:
    return score_accuracy(model, ds) if model.task == "classification" else score_r2(model, ds)


# ---------------------------------------------------------------------------
# Cross-validation

def kfold_indices(y, k: int, stratified: bool, seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays for ``k`` folds; stratified folds deal each class round-robin."""
    if k < 2:
        raise InputError("k must be >= 2")
    rng = np.random.default_rng(seed)
    y = np.asarray(y)
    folds: list[list[int]] = [[] for _ in range(k)]
    if stratified:
        start = 0
        for c in np.unique(y):
            idx = np.flatnonzero(y == c)
            if len(idx) < k:
                raise InputError(f"class {c} has {len(idx)} samples, fewer than {k} folds")
            idx = rng.permutation(idx)
            for pos, i in enumerate(idx):
                folds[(start + pos) % k].append(int(i))
            start = (start + len(idx)) % k
    else:
        if len(y) < k:
            raise InputError(f"{len(y)} samples cannot fill {k} folds")
        for pos, i in enumerate(rng.permutation(len(y))):
            folds[pos % k].append(int(i))
    return [np.array(sorted(f), dtype=int) for f in folds]


def cross_validate(ds: Dataset, task: str, kind: str, lambda_grid: Optional[Sequence[float]] = None,
                   k: int = 5, seed: int = 0, threads: int = 1, **fit_kw):
    """k-fold CV over ``lambda_grid``.

    Returns ``(best_lambda, scores)`` where ``scores[i]`` is the mean fold
    score (accuracy or R^2) of ``lambda_grid[i]``.  Ties go to the larger
    lambda.
    """
    grid = list(DEFAULT_LAMBDA_GRID if lambda_grid is None else lambda_grid)
    if not grid:
        raise InputError("lambda grid is empty")
    folds = kfold_indices(ds.y, k, stratified=(task == "classification"), seed=seed)
    everything = np.arange(len(ds))
    splits = []
    for test in folds:
        train = ds.subset(np.setdiff1d(everything, test))
        extra = {}
        # one factorization per fold serves the whole ridge-logistic grid
        if (task == "classification" and kind == "l2" and not fit_kw.get("standardize")
                and train.X.shape[1] > len(train)):
            extra["rowspace"] = row_space(train.X)
        splits.append((train, ds.subset(test), extra))

    warm = task == "regression" and kind == "l1"
    order = sorted(range(len(grid)), key=lambda i: -grid[i]) if warm else range(len(grid))

    def run(split):
        # one fold across the grid; the lasso walks down in lambda from warm starts
        train, test, extra = split
        out, w0 = [0.0] * len(grid), None
        for i in order:
            kw = dict(fit_kw, **extra)
            if warm:
                kw["w0"] = w0
            model = fit(train, task, Penalty(kind, grid[i]), **kw)
            w0 = model.w
            out[i] = score(model, test)
        return out

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(run, splits))
    else:
        results = [run(sp) for sp in splits]
    scores = np.array(results).T.mean(axis=1)
    top = scores.max()
    best = max(lam for lam, s in zip(grid, scores) if s >= top - 1e-12)
    return float(best), scores
