"""Command-line pipeline: gen, pd, pi, train, inverse, plot, experiment.

Each subcommand writes its outputs plus ``manifest.json`` into ``--out``.
Failures exit nonzero with a one-line JSON error on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from . import plotting
from .complex import InputError, read_image, read_point_cloud
from .mlmodel import DEFAULT_LAMBDA_GRID, Dataset, TrainedLinearModel, score
from .pimage import DualDiagram, PIParams, PersistenceImageVector, read_vector
from .reduce import PersistenceDiagram


class FileError(InputError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> ex.ExperimentConfig:
    if getattr(args, "config", None):
        return ex.ExperimentConfig.load(args.config, seed=args.seed)
    if not getattr(args, "experiment", None):
        raise InputError("give --config or an experiment name")
    return ex.ExperimentConfig.preset(args.experiment, args.scale, args.seed if args.seed is not None else 0)


def _pi_params(args) -> PIParams:
    if args.pi_params:
        d = json.loads(Path(args.pi_params).read_text())
        return PIParams.from_dict(d.get("params", d))
    if args.grid is None or args.sigma is None:
        raise InputError("give --pi-params FILE or --sigma with --grid B_MIN B_MAX D_MIN D_MAX NB ND")
    b0, b1, d0, d1, nb, nd = args.grid
    return PIParams(args.sigma, args.C, args.p, b0, b1, d0, d1, int(nb), int(nd))


# ---------------------------------------------------------------------------
# Subcommands

def cmd_gen(args) -> None:
    cfg = _config(args)
    out = _out(args)
    samples = ex.stage_generate(cfg, args.threads)
    ex.write_samples(samples, out)
    (out / "config.yaml").write_text(ex.yaml.safe_dump(cfg.to_dict(), sort_keys=True))
    ex.write_manifest(out, "gen", cfg.to_dict(), seeds={"master": cfg.seed})


def _inputs(paths) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(q for q in p.iterdir() if q.suffix.lower() in (".png", ".csv", ".txt")
                            and q.name not in ("labels.csv",))
        elif p.exists():
            files.append(p)
        else:
            raise FileError(p, "no such file or directory")
    if not files:
        raise InputError("no input files")
    return files


def cmd_pd(args) -> None:
    out = _out(args)
    files = _inputs(args.inputs)

    def one(f):
        try:
            data = read_image(f) if f.suffix.lower() in (".png", ".txt") else read_point_cloud(f)
            filt = args.filtration or ("cubical" if f.suffix.lower() in (".png", ".txt") else "cech")
            return f, ex.compute_diagram(data, filt, args.max_degree, args.values)
        except InputError as exc:
            raise FileError(f, str(exc)) from None

    for f, dg in ex._map(one, files, args.threads):
        dg.to_csv(out / f"{f.stem}.csv")
    for p in map(Path, args.inputs):
        if p.is_dir() and (p / "labels.csv").exists():
            (out / "labels.csv").write_bytes((p / "labels.csv").read_bytes())
    ex.write_manifest(out, "pd", {"filtration": args.filtration, "max_degree": args.max_degree,
                                  "values": args.values}, inputs=files)


def cmd_pi(args) -> None:
    out = _out(args)
    params = _pi_params(args)
    files = [f for f in _inputs(args.inputs) if f.suffix == ".csv"]
    for f in files:
        try:
            dg = PersistenceDiagram.from_csv(f)
            ex.vectorize(dg, args.degree, params).to_files(out / f.name)
        except (InputError, KeyError, ValueError) as exc:
            raise FileError(f, str(exc)) from None
    for p in map(Path, args.inputs):
        if p.is_dir() and (p / "labels.csv").exists():
            (out / "labels.csv").write_bytes((p / "labels.csv").read_bytes())
    ex.write_manifest(out, "pi", {"degree": args.degree, "pi": params.to_dict()}, inputs=files)


def _load_vectors(vec_dir: Path, names) -> tuple[np.ndarray, PIParams | None]:
    rows, params, length = [], None, None
    for name in names:
        f = vec_dir / f"{name}.csv"
        if not f.exists():
            raise FileError(f, "vector file missing")
        v = read_vector(f)
        side = f.with_suffix(".json")
        if side.exists():
            p = PIParams.from_dict(json.loads(side.read_text())["params"])
            if params is not None and p != params:
                raise FileError(f, "PI parameters differ from the other vectors")
            params = p
        if length is None:
            length = v.size
        elif v.size != length:
            raise FileError(f, f"vector length {v.size} differs from {length}")
        rows.append(v)
    return np.vstack(rows), params


def _training_set(vec_dir: Path, labels_path: Path, split: str, extras) -> tuple[Dataset, list, PIParams]:
    rows = [r for r in ex.read_labels(labels_path) if split == "all" or r.get("split", "train") == split]
    if not rows:
        raise FileError(labels_path, f"no rows with split {split!r}")
    names = [r["name"] for r in rows]
    X, params = _load_vectors(vec_dir, names)
    E = None
    if extras:
        try:
            E = np.array([[float(r[k]) for k in extras] for r in rows])
        except (KeyError, ValueError):
            raise FileError(labels_path, f"missing extra feature column among {extras}") from None
    ds = ex.build_dataset(X, [float(r["target"]) for r in rows], E, extras)
    return ds, names, params


def cmd_train(args) -> None:
    out = _out(args)
    vec_dir = Path(args.vectors)
    labels = Path(args.labels) if args.labels else vec_dir / "labels.csv"
    extras = tuple(args.extras or ())
    ds, names, params = _training_set(vec_dir, labels, args.split, extras)
    grid = args.grid_lambda or list(DEFAULT_LAMBDA_GRID)
    model, cv = ex.train_model(ds, args.task, args.penalty, args.lam, grid, args.folds, args.seed or 0,
                               args.threads, standardize=args.standardize, pi_params=params)
    model.to_json(out / "model.json")
    ex.write_dataset(ds, names, out / "dataset.csv")
    lines = ["split\tmetric\tscore\tlambda"]
    metric = "accuracy" if args.task == "classification" else "r2"
    if cv is not None:
        (out / "cv.tsv").write_text("lambda\tscore\n" + "".join(f"{l!r}\t{s!r}\n" for l, s in zip(grid, cv.tolist())))
    if args.evaluate:
        ds_te, _, _ = _training_set(vec_dir, labels, args.evaluate, extras)
        lines.append(f"{args.evaluate}\t{metric}\t{score(model, ds_te)!r}\t{model.penalty.lam!r}")
    (out / "scores.tsv").write_text("\n".join(lines) + "\n")
    ex.write_manifest(out, "train", {"task": args.task, "penalty": args.penalty, "lambda": args.lam,
                                     "grid": grid, "folds": args.folds, "extras": list(extras),
                                     "standardize": args.standardize},
                      inputs=[labels] + [vec_dir / f"{n}.csv" for n in names], seeds={"cv": args.seed or 0})


def cmd_inverse(args) -> None:
    out = _out(args)
    model = TrainedLinearModel.from_json(args.model)
    dgs = {}
    files = []
    if args.diagrams:
        files = [f for f in _inputs(args.diagrams) if f.suffix == ".csv"]
        if args.samples:
            wanted = set(args.samples)
            files = [f for f in files if f.stem in wanted]
        dgs = {f.stem: PersistenceDiagram.from_csv(f) for f in files}
    summary = ex.inverse_outputs(model, dgs, args.degree, args.frac, out)
    if args.vectors:
        from .inverse import prediction_decomposition, weighted_diagram

        decomp = {}
        for f in _inputs(args.vectors):
            if f.suffix != ".csv":
                continue
            x = read_vector(f)
            if x.size != model.pi_dim:
                raise FileError(f, f"vector length {x.size} does not match the model's {model.pi_dim} PI weights")
            weighted_diagram(model, x).to_json(out / f"weighted_{f.stem}.json")
            if model.w.size == model.pi_dim:
                decomp[f.stem] = prediction_decomposition(model, x)
        (out / "decomposition.json").write_text(json.dumps(decomp, indent=1))
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    ex.write_manifest(out, "inverse", {"frac": args.frac, "degree": args.degree},
                      inputs=[args.model] + files)


def cmd_plot(args) -> None:
    art = Path(args.artifact)
    if not art.exists():
        raise FileError(art, "no such file")
    target = Path(args.out)
    if target.suffix.lower() != ".png":
        target.mkdir(parents=True, exist_ok=True)
        target = target / f"{art.stem}.png"
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
    suffix = art.suffix.lower()
    if suffix == ".json":
        d = json.loads(art.read_text())
        if "grid" in d:
            plotting.plot_dual_diagram(DualDiagram.from_json(art), target, title=args.title)
        elif "positive" in d and "threshold" in d:
            from .inverse import SignificantRegion

            params = PIParams.from_dict(d["params"])
            region = SignificantRegion(frozenset(tuple(c["cell"]) for c in d["positive"]),
                                       frozenset(tuple(c["cell"]) for c in d["negative"]),
                                       d["threshold"], d["frac"], params)
            plotting.plot_region(region, DualDiagram(np.zeros((params.nb, params.nd)), params), target,
                                 title=args.title)
        elif "samples" in d:
            _plot_pairs(d, args, target)
        else:
            raise FileError(art, "unrecognized JSON artifact")
    elif suffix in (".png", ".txt"):
        plotting.plot_image(read_image(art), target, title=args.title)
    elif suffix == ".csv":
        head = art.read_text().split("\n", 1)[0]
        if head.startswith("degree,"):
            plotting.plot_diagram(PersistenceDiagram.from_csv(art), args.degree, target, title=args.title)
        else:
            plotting.plot_point_cloud(read_point_cloud(art), target, title=args.title)
    else:
        raise FileError(art, "unsupported artifact type")
    ex.write_manifest(target.parent, "plot", {"artifact": str(art), "output": target.name}, inputs=[art])


def _plot_pairs(d, args, target: Path) -> None:
    from .reduce import PersistencePair

    def dec(e):
        return PersistencePair(e["degree"], e["birth"], e["death"],
                               birth_pos=tuple(map(tuple, e["birth_pos"])) if e["birth_pos"] else None,
                               death_pos=tuple(map(tuple, e["death_pos"])) if e["death_pos"] else None)

    name = args.sample or next(iter(d["samples"]), None)
    if name not in d["samples"]:
        raise InputError(f"sample {name!r} not in pairs file")
    entry = d["samples"][name]
    kw = {}
    if args.input:
        f = Path(args.input)
        kw = {"image": read_image(f)} if f.suffix.lower() in (".png", ".txt") else {"points": read_point_cloud(f)}
    plotting.plot_positions(target, [dec(e) for e in entry["positive"]], [dec(e) for e in entry["negative"]],
                            which=args.which, title=args.title or name, **kw)


def cmd_experiment(args) -> None:
    cfg = _config(args)
    report = ex.run_experiment(cfg, _out(args), threads=args.threads, keep_intermediate=args.keep_intermediate,
                               figures=not args.no_figures)
    print(json.dumps({"experiment": report["experiment"], "metric": report["metric"], "score": report["score"],
                      "lambda": report["lambda"]}))


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdlearn", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("gen", help="generate a dataset")
    p.add_argument("experiment", nargs="?", choices=ex.EXPERIMENTS)
    p.add_argument("--scale", default="tiny", choices=ex.SCALES)
    p.add_argument("--config")
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pd", help="persistence diagrams of images or point clouds")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--filtration", choices=("cubical", "cech", "rips"))
    p.add_argument("--max-degree", type=int, default=1)
    p.add_argument("--values", default="radius", choices=("radius", "squared"),
                   help="units of point-cloud pairs")
    common(p)
    p.set_defaults(func=cmd_pd)

    p = sub.add_parser("pi", help="persistence-image vectors")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--pi-params", help="JSON with PI parameters (or a vector sidecar)")
    p.add_argument("--sigma", type=float)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--grid", type=float, nargs=6, metavar=("B_MIN", "B_MAX", "D_MIN", "D_MAX", "NB", "ND"))
    common(p)
    p.set_defaults(func=cmd_pi)

    p = sub.add_parser("train", help="fit a regularized linear or logistic model")
    p.add_argument("vectors", help="directory of vector files")
    p.add_argument("--labels", help="labels CSV (default: VECTORS/labels.csv)")
    p.add_argument("--task", required=True, choices=("classification", "regression"))
    p.add_argument("--penalty", default="l2", choices=("l1", "l2"))
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="fixed lambda (default: CV)")
    p.add_argument("--grid-lambda", type=float, nargs="+")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--extras", nargs="*", help="labels columns appended as extra features")
    p.add_argument("--split", default="train")
    p.add_argument("--evaluate", help="also score on this split")
    p.add_argument("--standardize", action="store_true", help="standardize features (non-default)")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("inverse", help="dual diagram, significant region, selected pairs")
    p.add_argument("model")
    p.add_argument("--diagrams", nargs="*")
    p.add_argument("--samples", nargs="*")
    p.add_argument("--vectors", nargs="*", help="vector files for weighted diagrams")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--frac", type=float, default=0.5)
    common(p)
    p.set_defaults(func=cmd_inverse)

    p = sub.add_parser("plot", help="render an artifact to PNG")
    p.add_argument("artifact")
    p.add_argument("--input", help="image or point cloud under a pairs plot")
    p.add_argument("--sample")
    p.add_argument("--which", default="birth", choices=("birth", "death"))
    p.add_argument("--degree", type=int, default=0)
    p.add_argument("--title")
    common(p)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("experiment", help="run a whole experiment")
    p.add_argument("experiment", nargs="?", choices=ex.EXPERIMENTS)
    p.add_argument("--scale", default="desk", choices=ex.SCALES)
    p.add_argument("--config")
    p.add_argument("--keep-intermediate", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    common(p)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InputError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        path = getattr(exc, "path", None) or getattr(exc, "filename", None)
        if path:
            err["file"] = str(path)
        print(json.dumps(err), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
