"""Experiment configurations and the stage functions shared by the CLI.

Every subcommand is a thin wrapper around one stage here, and
``run_experiment`` calls the same stages in sequence, so chaining the
subcommands by hand reproduces an experiment run exactly.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import __version__
from . import plotting
from .complex import (BinaryImage, InputError, PointCloud, cech_filtration, read_image,
                      read_point_cloud, rips_filtration, signed_manhattan, write_image,
                      write_point_cloud)
from .inverse import (dual_diagram, pairs_to_json, prediction_decomposition, region_birth_centroids,
                      select_pairs, threshold_region, weighted_diagram)
from .mlmodel import (DEFAULT_LAMBDA_GRID, Dataset, Penalty, TrainedLinearModel, cross_validate, fit,
                      kkt_violation, score)
from .pimage import PIParams, PersistenceImageVector, vectorize
from .reduce import PersistenceDiagram, compute_persistence, image_persistence
from .synth import (GenImageParams, gen_gpp_disk, gen_image, gen_noisy_lattice, gen_ppp_disk,
                    image_descriptors, sample_rng)

EXPERIMENTS = ("easy-images", "hard-images", "ppp-gpp", "lattices", "linreg-images")
SCALES = ("full", "desk", "tiny")

IMAGE_PI = dict(sigma=2.0, C=0.5, p=1.0, b_min=-40.5, b_max=10.5, d_min=-30.5, d_max=20.5, nb=51, nd=51)
CLOUD_PI = dict(sigma=0.003, C=80.0, p=1.0, b_min=0.0, b_max=0.15, d_min=0.0, d_max=0.15, nb=150, nd=150)
# not given for the lattice task; chosen to cover the noisy ring pairs
LATTICE_PI = dict(sigma=0.02, C=10.0, p=1.0, b_min=0.0, b_max=1.2, d_min=0.0, d_max=1.2, nb=60, nd=60)

# per-class (train, test) counts for classification, totals for regression
_COUNTS = {
    "classification": {"full": (200, 100), "desk": (50, 25), "tiny": (6, 4)},
    "regression": {"full": (500, 100), "desk": (150, 50), "tiny": (20, 10)},
}

_PRESETS: dict[str, dict[str, Any]] = {
    "easy-images": dict(
        classes=[dict(kind="image", N=100, S=30), dict(kind="image", N=250, S=10)],
        filtration="cubical", degree=0, pi=IMAGE_PI, task="classification", penalty="l2",
        variants=["l1_path", "l2_path"],
    ),
    "hard-images": dict(
        classes=[dict(kind="image", N=160, S=34), dict(kind="image", N=270, S=18)],
        filtration="cubical", degree=0, pi=IMAGE_PI, task="classification", penalty="l2",
        variants=["fixed_lambda", "baselines"],
    ),
    "ppp-gpp": dict(
        classes=[dict(kind="ppp", mean=30.0), dict(kind="gpp", n=30)],
        filtration="cech", degree=1, pi=CLOUD_PI, task="classification", penalty="l2",
        values="squared", variants=["birth_centroids"],
    ),
    "lattices": dict(
        classes=[dict(kind="lattice", lattice="square", n_points=20, noise=0.1),
                 dict(kind="lattice", lattice="hexagonal", n_points=20, noise=0.1)],
        filtration="cech", degree=1, pi=LATTICE_PI, task="classification", penalty="l2",
        variants=[],
    ),
    "linreg-images": dict(
        classes=[dict(kind="image", N=150, S=[20, 29])],
        filtration="cubical", degree=0, pi=IMAGE_PI, task="regression", penalty="l2",
        variants=["ablation"],
    ),
}


@dataclass
class ExperimentConfig:
    experiment: str
    n_train: int
    n_test: int
    classes: list[dict]
    filtration: str
    degree: int
    pi: dict
    task: str
    penalty: str = "l2"
    values: str = "radius"
    lam: Optional[float] = None
    lambda_grid: list[float] = field(default_factory=lambda: list(DEFAULT_LAMBDA_GRID))
    folds: int = 5
    frac: float = 0.5
    seed: int = 0
    variants: list[str] = field(default_factory=list)
    n_inverse: int = 2
    scale: str = "custom"

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise InputError("sample counts must be >= 1")
        if self.task not in ("classification", "regression"):
            raise InputError(f"unknown task {self.task!r}")
        if self.task == "classification" and len(self.classes) != 2:
            raise InputError("classification needs exactly two classes")
        if self.filtration not in ("cubical", "cech", "rips"):
            raise InputError(f"unknown filtration {self.filtration!r}")
        if self.values not in ("radius", "squared"):
            raise InputError(f"unknown value scale {self.values!r}")
        if not 0 < self.frac <= 1:
            raise InputError("frac must lie in (0, 1]")
        self.pi_params  # validates

    @property
    def pi_params(self) -> PIParams:
        return PIParams.from_dict(self.pi)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown config keys: {sorted(extra)}")
        return cls(**copy.deepcopy(d))

    @classmethod
    def preset(cls, name: str, scale: str = "full", seed: int = 0, **overrides) -> "ExperimentConfig":
        if name not in _PRESETS:
            raise InputError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
        if scale not in SCALES:
            raise InputError(f"unknown scale {scale!r}; choose from {SCALES}")
        base = copy.deepcopy(_PRESETS[name])
        n_train, n_test = _COUNTS[base["task"]][scale]
        d = dict(experiment=name, n_train=n_train, n_test=n_test, seed=seed, scale=scale, **base)
        d.update(overrides)
        return cls.from_dict(d)

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        """YAML file; may name a ``preset`` (and ``scale``) and override any key."""
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise InputError(f"{path}: invalid YAML ({exc})") from None
        if not isinstance(raw, dict):
            raise InputError(f"{path}: config must be a mapping")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        name = raw.pop("preset", None)
        if name is not None:
            scale = raw.pop("scale", "full")
            seed = raw.pop("seed", 0)
            return cls.preset(name, scale, seed, **raw)
        return cls.from_dict(raw)


# ---------------------------------------------------------------------------
# Samples

@dataclass
class Sample:
    name: str
    label: int
    target: float
    split: str
    data: Any  # BinaryImage | PointCloud
    descriptors: dict = field(default_factory=dict)


def _image_params(spec: dict, S: Optional[int] = None) -> GenImageParams:
    keys = ("W", "N", "S", "sigma1", "sigma2", "t")
    kw = {k: spec[k] for k in keys if k in spec and k != "S"}
    return GenImageParams(S=int(S if S is not None else spec["S"]), **kw)


def generate_sample(spec: dict, seed: int, index: int, stream: int):
    """One sample from a generator spec; returns ``(data, target or None)``."""
    kind = spec.get("kind")
    if kind == "image":
        S = spec["S"]
        target = None
        if isinstance(S, (list, tuple)):
            # the response gets its own stream so images stay independent of it
            lo, hi = int(S[0]), int(S[1])
            S = int(sample_rng(seed, index, stream=1000 + stream).integers(lo, hi + 1))
            target = float(S)
        return gen_image(_image_params(spec, S), seed, index, stream), target
    if kind == "ppp":
        return gen_ppp_disk(float(spec["mean"]), seed, index, stream), None
    if kind == "gpp":
        return gen_gpp_disk(int(spec["n"]), seed, index, stream), None
    if kind == "lattice":
        return gen_noisy_lattice(spec["lattice"], int(spec.get("n_points", 20)),
                                 float(spec.get("noise", 0.1)), seed, index, stream), None
    raise InputError(f"unknown generator kind {kind!r}")


def stage_generate(cfg: ExperimentConfig, threads: int = 1) -> list[Sample]:
    """Class ``c`` draws from stream ``c``; the first ``n_train`` per class are training."""
    jobs = []
    if cfg.task == "classification":
        per = cfg.n_train + cfg.n_test
        for c, spec in enumerate(cfg.classes):
            for i in range(per):
                jobs.append((f"c{c}_{i:04d}", c, spec, i, "train" if i < cfg.n_train else "test"))
    else:
        spec = cfg.classes[0]
        for i in range(cfg.n_train + cfg.n_test):
            jobs.append((f"s_{i:04d}", 0, spec, i, "train" if i < cfg.n_train else "test"))

    def make(job):
        name, c, spec, i, split = job
        data, target = generate_sample(spec, cfg.seed, i, c)
        desc = image_descriptors(data) if isinstance(data, BinaryImage) else {"n_points": len(data)}
        return Sample(name, c, float(c) if target is None else target, split, data, desc)

    return _map(make, jobs, threads)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def sample_path(root: Path, s_name: str, kind: str) -> Path:
    return root / f"{s_name}.{'png' if kind == 'image' else 'csv'}"


def write_samples(samples: list[Sample], root) -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    desc_keys = sorted({k for s in samples for k in s.descriptors})
    with open(root / "labels.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["name", "file", "split", "label", "target", *desc_keys])
        for s in samples:
            kind = "image" if isinstance(s.data, BinaryImage) else "cloud"
            path = sample_path(root, s.name, kind)
            if kind == "image":
                write_image(s.data, path)
            else:
                write_point_cloud(s.data, path)
            wr.writerow([s.name, path.name, s.split, s.label, repr(s.target),
                         *[s.descriptors.get(k, "") for k in desc_keys]])


def read_labels(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: labels file not found")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        if "name" not in r or "target" not in r:
            raise InputError(f"{path}: needs 'name' and 'target' columns")
    return rows


def read_samples(root) -> list[Sample]:
    root = Path(root)
    out = []
    for r in read_labels(root / "labels.csv"):
        f = root / r["file"]
        data = read_image(f) if f.suffix.lower() in (".png", ".txt") else read_point_cloud(f)
        desc = {k: float(v) for k, v in r.items()
                if k not in ("name", "file", "split", "label", "target") and v != ""}
        out.append(Sample(r["name"], int(r["label"]), float(r["target"]), r["split"], data, desc))
    return out


# ---------------------------------------------------------------------------
# Diagrams and vectors

def squared_values(dg: PersistenceDiagram) -> PersistenceDiagram:
    """Same pairs and positions with birth and death squared (radius -> squared radius)."""
    pairs = [replace(p, birth=p.birth ** 2, death=p.death ** 2) for p in dg.pairs]
    return PersistenceDiagram(pairs, dg.reduced, dg.source, {**dg.meta, "values": "squared"})


def compute_diagram(data, filtration: str, max_degree: int = 1, values: str = "radius") -> PersistenceDiagram:
    """Reduced persistence of an image (signed Manhattan) or a point cloud.

    ``values="squared"`` reports point-cloud pairs in squared-radius units.
    """
    if values not in ("radius", "squared"):
        raise InputError(f"unknown value scale {values!r}")
    if isinstance(data, BinaryImage):
        if filtration != "cubical":
            raise InputError("images use the cubical filtration")
        if values != "radius":
            raise InputError("squared values apply to point clouds only")
        return image_persistence(signed_manhattan(data))
    if len(data) <= 1:
        dg = PersistenceDiagram([], reduced=True, source=filtration)
    else:
        build = cech_filtration if filtration == "cech" else rips_filtration
        dg = compute_persistence(build(data, max_dim=max(1, max_degree)), max_degree=max_degree)
    return squared_values(dg) if values == "squared" else dg


def stage_diagrams(samples: list[Sample], cfg: ExperimentConfig, threads: int = 1) -> list[PersistenceDiagram]:
    return _map(lambda s: compute_diagram(s.data, cfg.filtration, cfg.degree, cfg.values), samples, threads)


def stage_vectors(diagrams, degree: int, params: PIParams) -> np.ndarray:
    if not diagrams:
        return np.zeros((0, params.size))
    return np.vstack([vectorize(dg, degree, params).values for dg in diagrams])


def build_dataset(X: np.ndarray, targets, extras: Optional[np.ndarray] = None,
                  extra_names=(), pi_dim: Optional[int] = None) -> Dataset:
    pi_dim = X.shape[1] if pi_dim is None else pi_dim
    if extras is not None and extras.size:
        X = np.hstack([X, extras.reshape(len(X), -1)])
    return Dataset(X, np.asarray(targets, dtype=float), pi_dim=pi_dim, extra_names=tuple(extra_names))


def train_model(ds: Dataset, task: str, kind: str, lam: Optional[float], grid, folds: int, seed: int,
                threads: int = 1, standardize: bool = False, pi_params: Optional[PIParams] = None):
    """Fit at ``lam``, or at the CV choice when ``lam`` is None; returns ``(model, cv_scores)``."""
    cv_scores = None
    if lam is None:
        lam, cv_scores = cross_validate(ds, task, kind, grid, k=folds, seed=seed, threads=threads,
                                        standardize=standardize)
    model = fit(ds, task, Penalty(kind, float(lam)), standardize=standardize)
    if pi_params is not None and ds.pi_dim > 0:
        model.pi_params = pi_params.to_dict()
    return model, cv_scores


def write_dataset(ds: Dataset, names, path) -> None:
    """CSV matrix (one row per sample, target last) plus a JSON layout sidecar."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        for row, t in zip(ds.X, ds.y):
            wr.writerow([repr(float(v)) for v in row] + [repr(float(t))])
    path.with_suffix(".json").write_text(json.dumps({
        "names": list(names), "pi_dim": ds.pi_dim, "extras": list(ds.extra_names),
        "columns": "features..., target",
    }, indent=1))


# ---------------------------------------------------------------------------
# Inverse step

def inverse_outputs(model: TrainedLinearModel, diagrams: dict, degree: int, frac: float, out) -> dict:
    """Write dual diagram, significant region and selected pairs; return a summary."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    dd = dual_diagram(model)
    dd.to_json(out / "dual.json")
    summary = {"dual_nonzero": int(np.count_nonzero(dd.grid)), "frac": frac}
    if not np.any(dd.grid):
        summary["region"] = None
        return summary
    region = threshold_region(dd, frac)
    region.to_json(out / "region.json", dd)
    selected = {name: select_pairs(dg, region, degree) for name, dg in diagrams.items()}
    pairs_to_json(selected, out / "pairs.json", meta={"degree": degree, "frac": frac,
                                                      "threshold": region.threshold})
    summary["region"] = {"threshold": region.threshold, "positive_cells": len(region.positive_cells),
                         "negative_cells": len(region.negative_cells)}
    return summary


# ---------------------------------------------------------------------------
# Manifests

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out, command: str, params: dict, inputs=(), seeds=None) -> None:
    """Input hashes, parameters, seeds and tool version.  No timestamps, so reruns match."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    hashes = {}
    for p in inputs:
        p = Path(p)
        if p.is_file():
            hashes[str(p)] = sha256_file(p)
    outputs = sorted(str(p.relative_to(out)) for p in out.rglob("*")
                     if p.is_file() and p.name != "manifest.json")
    (out / "manifest.json").write_text(json.dumps({
        "tool": "pdlearn", "version": __version__, "command": command, "params": params,
        "seeds": seeds, "inputs": hashes, "outputs": outputs,
    }, indent=1, sort_keys=True, default=str))


# ---------------------------------------------------------------------------
# Full experiment

def _split(samples, X, split):
    idx = [i for i, s in enumerate(samples) if s.split == split]
    return idx, X[idx]


def _baseline_scores(samples, cfg, threads) -> dict:
    """Logistic regression on one standardized scalar descriptor at a time."""
    tr = [s for s in samples if s.split == "train"]
    te = [s for s in samples if s.split == "test"]
    out = {}
    for key in ("n_black_components", "n_white_components", "n_white"):
        if key not in tr[0].descriptors:
            continue
        ds_tr = Dataset(np.array([[s.descriptors[key]] for s in tr], float), [s.target for s in tr], pi_dim=0,
                        extra_names=(key,))
        ds_te = Dataset(np.array([[s.descriptors[key]] for s in te], float), [s.target for s in te], pi_dim=0,
                        extra_names=(key,))
        model, _ = train_model(ds_tr, "classification", "l2", None, cfg.lambda_grid, cfg.folds, cfg.seed,
                               threads, standardize=True)
        out[key] = {"accuracy": score(model, ds_te), "lambda": model.penalty.lam}
    return out


def run_experiment(cfg: ExperimentConfig, out, threads: int = 1, keep_intermediate: bool = False,
                   figures: bool = True) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    t0 = time.perf_counter()
    samples = stage_generate(cfg, threads)
    timings["generate"] = time.perf_counter() - t0
    if keep_intermediate:
        write_samples(samples, out / "data")

    t0 = time.perf_counter()
    diagrams = stage_diagrams(samples, cfg, threads)
    timings["diagrams"] = time.perf_counter() - t0
    if keep_intermediate:
        (out / "diagrams").mkdir(exist_ok=True)
        for s, dg in zip(samples, diagrams):
            dg.to_csv(out / "diagrams" / f"{s.name}.csv")

    params = cfg.pi_params
    t0 = time.perf_counter()
    X = stage_vectors(diagrams, cfg.degree, params)
    timings["vectorize"] = time.perf_counter() - t0
    if keep_intermediate:
        (out / "vectors").mkdir(exist_ok=True)
        for s, row in zip(samples, X):
            PersistenceImageVector(row, params).to_files(out / "vectors" / f"{s.name}.csv")

    itr, Xtr = _split(samples, X, "train")
    ite, Xte = _split(samples, X, "test")
    ytr = [samples[i].target for i in itr]
    yte = [samples[i].target for i in ite]
    ds_tr = build_dataset(Xtr, ytr)
    ds_te = build_dataset(Xte, yte)

    t0 = time.perf_counter()
    model, cv_scores = train_model(ds_tr, cfg.task, cfg.penalty, cfg.lam, cfg.lambda_grid, cfg.folds,
                                   cfg.seed, threads, pi_params=params)
    timings["train"] = time.perf_counter() - t0
    (out / "model").mkdir(exist_ok=True)
    model.to_json(out / "model" / "model.json")
    test_score = score(model, ds_te)
    metric = "accuracy" if cfg.task == "classification" else "r2"

    report: dict[str, Any] = {
        "experiment": cfg.experiment, "scale": cfg.scale, "seed": cfg.seed, "version": __version__,
        "n_train": len(itr), "n_test": len(ite), "metric": metric, "score": test_score,
        "lambda": model.penalty.lam, "penalty": model.penalty.kind,
        "cv": None if cv_scores is None else {"grid": list(cfg.lambda_grid), "scores": cv_scores.tolist()},
        "nonzero_w": int(np.count_nonzero(model.w)), "diagnostics": model.diagnostics,
    }
    rows = [("main", cfg.penalty, model.penalty.lam, metric, test_score, int(np.count_nonzero(model.w)))]

    # inverse analysis on a few samples per class
    t0 = time.perf_counter()
    labels = sorted({s.label for s in samples})
    chosen = [i for c in labels for i in [j for j in ite if samples[j].label == c][:cfg.n_inverse]]
    inv = inverse_outputs(model, {samples[i].name: diagrams[i] for i in chosen}, cfg.degree, cfg.frac,
                          out / "inverse")
    report["inverse"] = inv
    timings["inverse"] = time.perf_counter() - t0

    variants: dict[str, Any] = {}
    if figures:
        (out / "figures").mkdir(exist_ok=True)
    t0 = time.perf_counter()
    if "l1_path" in cfg.variants:
        path = []
        for lam in (0.01, 0.1, 1.0):
            m, _ = train_model(ds_tr, cfg.task, "l1", lam, None, cfg.folds, cfg.seed, pi_params=params)
            nnz = int(np.count_nonzero(m.w))
            dd = dual_diagram(m)
            path.append({"lambda": lam, "nonzero": nnz, "dual_nonzero": int(np.count_nonzero(dd.grid)),
                         "kkt": kkt_violation(m, ds_tr), "score": score(m, ds_te)})
            rows.append(("l1_path", "l1", lam, metric, path[-1]["score"], nnz))
            if figures:
                plotting.plot_dual_diagram(dd, out / "figures" / f"dual_l1_{lam:g}.png", title=f"l1, lambda={lam:g}")
        variants["l1_path"] = path
    if "l2_path" in cfg.variants:
        path = []
        for lam in (10.0, 100.0):
            m, _ = train_model(ds_tr, cfg.task, "l2", lam, None, cfg.folds, cfg.seed, pi_params=params)
            path.append({"lambda": lam, "score": score(m, ds_te), "max_abs_w": float(np.abs(m.w).max())})
            rows.append(("l2_path", "l2", lam, metric, path[-1]["score"], int(np.count_nonzero(m.w))))
            if figures:
                plotting.plot_dual_diagram(dual_diagram(m), out / "figures" / f"dual_l2_{lam:g}.png",
                                           title=f"l2, lambda={lam:g}")
        variants["l2_path"] = path
    if "fixed_lambda" in cfg.variants:
        m, _ = train_model(ds_tr, cfg.task, cfg.penalty, 1.0, None, cfg.folds, cfg.seed, pi_params=params)
        variants["fixed_lambda"] = {"lambda": 1.0, "score": score(m, ds_te)}
        rows.append(("fixed_lambda", cfg.penalty, 1.0, metric, variants["fixed_lambda"]["score"],
                     int(np.count_nonzero(m.w))))
        if figures:
            plotting.plot_dual_diagram(dual_diagram(m), out / "figures" / "dual_lambda1.png", title="lambda=1")
    if "baselines" in cfg.variants:
        variants["baselines"] = _baseline_scores(samples, cfg, threads)
        for key, v in variants["baselines"].items():
            rows.append((f"baseline:{key}", "l2", v["lambda"], metric, v["accuracy"], 1))
    if "birth_centroids" in cfg.variants:
        mp, mn = region_birth_centroids(dual_diagram(model))
        variants["birth_centroids"] = {"positive": mp, "negative": mn}
    if "ablation" in cfg.variants:
        variants["ablation"] = _ablation(samples, X, itr, ite, cfg, model, test_score, threads, rows)
    timings["variants"] = time.perf_counter() - t0
    report["variants"] = variants
    report["timings"] = timings

    if figures:
        _experiment_figures(cfg, samples, diagrams, model, chosen, out)

    (out / "report.json").write_text(json.dumps(report, indent=1, default=float))
    with open(out / "results.tsv", "w", newline="") as fh:
        wr = csv.writer(fh, delimiter="\t")
        wr.writerow(["experiment", "seed", "variant", "penalty", "lambda", "metric", "score", "nonzero"])
        for r in rows:
            wr.writerow([cfg.experiment, cfg.seed, r[0], r[1], repr(float(r[2])), r[3], repr(float(r[4])), r[5]])
    write_manifest(out, "experiment", cfg.to_dict(), seeds={"master": cfg.seed})
    return report


def _ablation(samples, X, itr, ite, cfg, pi_model, pi_score, threads, rows) -> dict:
    """Table-2 style comparison: PI only, white-pixel count only, and both."""
    white = np.array([[samples[i].descriptors["n_white"]] for i in range(len(samples))], float)
    ytr = [samples[i].target for i in itr]
    yte = [samples[i].target for i in ite]
    res = {}

    def run(name, Xtr_, Xte_, kind, lam, pi_dim, extras):
        dtr = Dataset(Xtr_, ytr, pi_dim=pi_dim, extra_names=extras)
        dte = Dataset(Xte_, yte, pi_dim=pi_dim, extra_names=extras)
        m, _ = train_model(dtr, "regression", kind, lam, cfg.lambda_grid, cfg.folds, cfg.seed, threads,
                           pi_params=cfg.pi_params if pi_dim > 0 else None)
        s = score(m, dte)
        res[name] = {"r2": s, "lambda": m.penalty.lam, "nonzero": int(np.count_nonzero(m.w)),
                     "v": m.v.tolist()}
        rows.append((name, kind, m.penalty.lam, "r2", s, int(np.count_nonzero(m.w))))
        return m, dte

    res["pi_ridge"] = {"r2": pi_score, "lambda": pi_model.penalty.lam,
                       "nonzero": int(np.count_nonzero(pi_model.w))} if cfg.penalty == "l2" else None
    if res["pi_ridge"] is None:
        run("pi_ridge", X[itr], X[ite], "l2", None, X.shape[1], ())
    run("pi_lasso", X[itr], X[ite], "l1", None, X.shape[1], ())
    # ordinary least squares on the single count
    run("white", white[itr], white[ite], "l2", 0.0, 0, ("n_white",))
    Xb = np.hstack([X, white])
    run("both_ridge", Xb[itr], Xb[ite], "l2", None, X.shape[1], ("n_white",))
    m, dte = run("both_lasso", Xb[itr], Xb[ite], "l1", None, X.shape[1], ("n_white",))
    decomp = []
    for k in range(min(3, len(dte))):
        d = prediction_decomposition(m, dte.X[k])
        d["target"] = float(dte.y[k])
        d["weighted_sum"] = float(weighted_diagram(m, dte.X[k]).grid.sum())
        decomp.append(d)
    res["decomposition"] = decomp
    return res


def _experiment_figures(cfg, samples, diagrams, model, chosen, out) -> None:
    figs = out / "figures"
    figs.mkdir(exist_ok=True)
    dd = dual_diagram(model)
    region = threshold_region(dd, cfg.frac) if np.any(dd.grid) else None
    plotting.plot_dual_diagram(dd, figs / "dual.png", title=f"lambda={model.penalty.lam:g}")
    if region is not None:
        plotting.plot_region(region, dd, figs / "region.png")
    which = "birth" if cfg.filtration == "cubical" else "death"
    for i in chosen:
        s, dg = samples[i], diagrams[i]
        plotting.plot_diagram(dg, cfg.degree, figs / f"{s.name}_diagram.png", params=cfg.pi_params)
        pos, neg = select_pairs(dg, region, cfg.degree) if region is not None else ([], [])
        kw = {"image": s.data} if isinstance(s.data, BinaryImage) else {"points": s.data}
        plotting.plot_positions(figs / f"{s.name}_{which}.png", pos, neg, which=which,
                                title=f"{s.name} ({which} positions)", **kw)
