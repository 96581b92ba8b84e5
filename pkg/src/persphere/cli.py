"""Command-line front end wiring the pipeline end to end via files.

Exit codes: 0 success, 2 missing file, 3 unparseable file, 4 bad parameter.
Errors print a single line `error: <kind>: <detail>` on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, density, embedding, persistence, sphere
from .errors import ParseError
from .wasserstein import alexandrov_geodesic, wasserstein

EXIT_OK = 0
EXIT_NOT_FOUND = 2
EXIT_PARSE = 3
EXIT_PARAMETER = 4

DEFAULT_M = 3
DEFAULT_TAU = 10
DEFAULT_SIGMA = 0.05
DEFAULT_GRID = 64


class _CliParameterError(ValueError):
    """Bad command-line usage, mapped to exit code 4."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliParameterError(message)


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_diagram(path, dim: int) -> persistence.PersistenceDiagram:
    return persistence.read_diagram(path, dim)


def _global_scale(diagrams) -> float:
    scale = max(d.max_finite() for d in diagrams)
    if scale <= 0:
        raise _CliParameterError(
            "no finite coordinates found; pass --scale explicitly"
        )
    return scale


def _densify(diagrams, scale: float, sigma: float, grid_size: int, names=None):
    normalized = [persistence.normalize_diagram(d, scale) for d in diagrams]
    pdfs = []
    for idx, pd in enumerate(normalized):
        try:
            pdfs.append(density.kde(pd, sigma, grid_size))
        except density.EmptyDiagramError as exc:
            name = names[idx] if names else f"input {idx}"
            raise density.EmptyDiagramError(
                f"{name}: no density: {exc}; a larger --scale keeps capped "
                "essential bars off the diagonal"
            ) from exc
    return pdfs


def _add_density_args(sub, with_scale=True):
    sub.add_argument("--sigma", type=float, default=DEFAULT_SIGMA,
                     help=f"kernel bandwidth (default {DEFAULT_SIGMA})")
    sub.add_argument("--grid", type=int, default=DEFAULT_GRID,
                     help=f"grid resolution K (default {DEFAULT_GRID})")
    if with_scale:
        sub.add_argument("--scale", type=float, default=None,
                         help="normalization scale (default: max finite death "
                              "across the inputs)")


def _cmd_embed(args) -> int:
    series = embedding.read_series(args.input, channel=args.channel)
    cloud = embedding.delay_embed(series, args.m, args.tau)
    embedding.write_cloud(args.output, cloud)
    print(f"embedded {len(series)} samples -> {cloud.shape[0]} points in R^{args.m}")
    return EXIT_OK


def _cmd_persist(args) -> int:
    cloud = embedding.read_cloud(args.input)
    pd0, pd1 = persistence.diagram_of_cloud(
        cloud, max_scale=args.max_scale, temporal_links=args.temporal_links
    )
    persistence.write_diagrams(args.output, [pd0, pd1])
    print(
        f"H0: {pd0.pairs.shape[0]} pairs + {pd0.essential.size} essential; "
        f"H1: {pd1.pairs.shape[0]} pairs + {pd1.essential.size} essential"
    )
    return EXIT_OK


def _cmd_density(args) -> int:
    pd = _load_diagram(args.input, args.dim)
    scale = args.scale if args.scale is not None else _global_scale([pd])
    pdf = _densify([pd], scale, args.sigma, args.grid, names=[args.input])[0]
    density.write_grid(args.output, pdf.grid)
    print(f"grid {args.grid}x{args.grid} sigma={args.sigma} scale={scale:.17g}")
    return EXIT_OK


def _cmd_dist(args) -> int:
    pa = _load_diagram(args.a, args.dim)
    pb = _load_diagram(args.b, args.dim)
    scale = args.scale if args.scale is not None else _global_scale([pa, pb])
    if args.metric == "hilbert":
        pdfs = _densify([pa, pb], scale, args.sigma, args.grid, names=[args.a, args.b])
        value = sphere.distance(*(density.sqrt_transform(p) for p in pdfs))
    else:
        q = 1 if args.metric == "w1" else 2
        na = persistence.normalize_diagram(pa, scale)
        nb = persistence.normalize_diagram(pb, scale)
        value, _ = wasserstein(na, nb, q)
    print(f"{value:.17g}")
    return EXIT_OK


def _group_inputs(paths, groups_file):
    """Item names with their per-channel diagram paths."""
    if groups_file is None:
        return [(os.path.splitext(os.path.basename(p))[0], [p]) for p in paths]
    grouped: dict[str, list[str]] = {}
    order: list[str] = []
    with open(groups_file, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "name,path":
            raise ParseError(f"{groups_file}: expected header 'name,path'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ParseError(f"{groups_file}:{lineno}: expected name,path")
            name, path = fields
            if name not in grouped:
                grouped[name] = []
                order.append(name)
            grouped[name].append(path)
    counts = {len(v) for v in grouped.values()}
    if len(counts) > 1:
        raise analysis.ConfigurationError(
            f"groups have mixed channel counts: {sorted(counts)}"
        )
    return [(name, grouped[name]) for name in order]


def _cmd_distmat(args) -> int:
    items = _group_inputs(args.inputs, args.groups)
    if len(items) < 2:
        raise _CliParameterError("need at least 2 items")
    labels = [name for name, _ in items]
    n_channels = len(items[0][1])
    per_channel = [
        [_load_diagram(paths[ch], args.dim) for name, paths in items]
        for ch in range(n_channels)
    ]
    all_diagrams = [d for channel in per_channel for d in channel]
    scale = args.scale if args.scale is not None else _global_scale(all_diagrams)

    # Channelwise matrices aggregated by mean distance across channels.
    total = None
    for channel in per_channel:
        if args.metric == "hilbert":
            pdfs = _densify(channel, scale, args.sigma, args.grid, names=labels)
            dm = analysis.distance_matrix(pdfs, "hilbert", labels, jobs=args.jobs)
        else:
            normalized = [persistence.normalize_diagram(d, scale) for d in channel]
            dm = analysis.distance_matrix(normalized, args.metric, labels, jobs=args.jobs)
        total = dm.values if total is None else total + dm.values
    values = total / n_channels
    matrix = analysis.DistanceMatrix(labels=labels, values=values, metric=args.metric)
    analysis.write_matrix(args.output, matrix)
    if args.manifest:
        _write_json(args.manifest, {
            "metric": args.metric,
            "dim": args.dim,
            "sigma": args.sigma,
            "grid_size": args.grid,
            "scale": scale,
            "channels": n_channels,
            "labels": labels,
        })
    print(f"{len(labels)}x{len(labels)} {args.metric} matrix -> {args.output}")
    return EXIT_OK


def _cmd_geodesic(args) -> int:
    pa = _load_diagram(args.from_path, args.dim)
    pb = _load_diagram(args.to_path, args.dim)
    if args.steps < 2:
        raise _CliParameterError(f"--steps must be >= 2, got {args.steps}")
    os.makedirs(args.output_dir, exist_ok=True)
    fractions = [i / (args.steps - 1) for i in range(args.steps)]
    if args.space == "sphere":
        scale = args.scale if args.scale is not None else _global_scale([pa, pb])
        pdfs = _densify([pa, pb], scale, args.sigma, args.grid,
                        names=[args.from_path, args.to_path])
        psi_a, psi_b = (density.sqrt_transform(p) for p in pdfs)
        for i, s in enumerate(fractions):
            point = sphere.geodesic(psi_a, psi_b, s)
            pdf = density.to_pdf(point)
            density.write_grid(os.path.join(args.output_dir, f"step_{i:03d}.csv"), pdf.grid)
    else:
        for i, s in enumerate(fractions):
            step = alexandrov_geodesic(pa, pb, s)
            persistence.write_diagrams(
                os.path.join(args.output_dir, f"step_{i:03d}.csv"), [step]
            )
    print(f"{args.steps} steps ({args.space}) -> {args.output_dir}")
    return EXIT_OK


def _cmd_mean(args) -> int:
    diagrams = [_load_diagram(p, args.dim) for p in args.inputs]
    if not diagrams:
        raise _CliParameterError("need at least 1 input diagram")
    scale = args.scale if args.scale is not None else _global_scale(diagrams)
    pdfs = _densify(diagrams, scale, args.sigma, args.grid, names=args.inputs)
    mean = sphere.extrinsic_mean([density.sqrt_transform(p) for p in pdfs])
    density.write_grid(args.output, density.to_pdf(mean).grid)
    print(f"mean of {len(diagrams)} densities -> {args.output}")
    return EXIT_OK


def _cmd_pga(args) -> int:
    diagrams = [_load_diagram(p, args.dim) for p in args.inputs]
    scale = args.scale if args.scale is not None else _global_scale(diagrams)
    pdfs = _densify(diagrams, scale, args.sigma, args.grid, names=args.inputs)
    psis = [density.sqrt_transform(p) for p in pdfs]
    model, coords = analysis.pga_features(psis, args.components)
    sphere.save_pga_model(model, args.output_dir, metadata={
        "sigma": args.sigma,
        "scale": scale,
        "dim": args.dim,
    })
    names = [os.path.splitext(os.path.basename(p))[0] for p in args.inputs]
    with open(os.path.join(args.output_dir, "coords.csv"), "w", encoding="utf-8") as fh:
        fh.write("name," + ",".join(f"c{i}" for i in range(args.components)) + "\n")
        for name, row in zip(names, coords):
            fh.write(name + "," + ",".join(f"{v:.17g}" for v in row) + "\n")
    print(
        f"pga: {args.components} components, variances "
        + " ".join(f"{v:.3e}" for v in model.variances)
    )
    return EXIT_OK


def _read_manifest_csv(path):
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "path,label":
            raise ParseError(f"{path}: expected header 'path,label'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ParseError(f"{path}:{lineno}: expected path,label")
            entries.append((fields[0], fields[1]))
    if not entries:
        raise ParseError(f"{path}: no entries")
    return entries


def _cmd_knn(args) -> int:
    train = _read_manifest_csv(args.train)
    train_paths = [p for p, _ in train]
    train_labels = [lab for _, lab in train]
    train_diagrams = [_load_diagram(p, args.dim) for p in train_paths]
    test_diagrams = [_load_diagram(p, args.dim) for p in args.test]
    everything = train_diagrams + test_diagrams
    scale = args.scale if args.scale is not None else _global_scale(everything)

    if args.metric == "hilbert":
        pdfs = _densify(everything, scale, args.sigma, args.grid,
                        names=train_paths + list(args.test))
        psis = np.stack([density.sqrt_transform(p).grid.ravel() for p in pdfs])
        k2 = args.grid * args.grid
        cosines = (psis[len(train_diagrams):] @ psis[: len(train_diagrams)].T) / k2
        dists = np.arccos(np.clip(cosines, -1.0, 1.0))
    else:
        q = 1 if args.metric == "w1" else 2
        norm_train = [persistence.normalize_diagram(d, scale) for d in train_diagrams]
        norm_test = [persistence.normalize_diagram(d, scale) for d in test_diagrams]

        def row(t):
            return [wasserstein(t, tr, q)[0] for tr in norm_train]

        if args.jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                dists = np.asarray(list(pool.map(row, norm_test)))
        else:
            dists = np.asarray([row(t) for t in norm_test])
    predictions = analysis.knn_classify(dists, train_labels, args.k)
    names = [os.path.splitext(os.path.basename(p))[0] for p in args.test]
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("name,label\n")
        for name, label in zip(names, predictions):
            fh.write(f"{name},{label}\n")
    if args.manifest:
        _write_json(args.manifest, {
            "metric": args.metric,
            "dim": args.dim,
            "k": args.k,
            "sigma": args.sigma,
            "grid_size": args.grid,
            "scale": scale,
            "train_size": len(train_labels),
        })
    print(f"{len(predictions)} predictions -> {args.output}")
    return EXIT_OK


def _cmd_regress(args) -> int:
    features, names = _read_feature_csv(args.features)
    scores = _read_score_csv(args.scores, names)
    predictions, r = analysis.loo_regression(features, scores)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("name,score,predicted\n")
        for name, score, pred in zip(names, scores, predictions):
            fh.write(f"{name},{score:.17g},{pred:.17g}\n")
    print(f"pearson_r {r:.17g}")
    return EXIT_OK


def _read_feature_csv(path):
    names, rows = [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("name,"):
            raise ParseError(f"{path}: expected header starting with 'name,'")
        width = len(header.split(",")) - 1
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != width + 1:
                raise ParseError(f"{path}:{lineno}: wrong column count")
            try:
                rows.append([float(f) for f in fields[1:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad feature row") from exc
            names.append(fields[0])
    if not rows:
        raise ParseError(f"{path}: no feature rows")
    return np.asarray(rows), names


def _read_score_csv(path, names):
    scores = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "name,score":
            raise ParseError(f"{path}: expected header 'name,score'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ParseError(f"{path}:{lineno}: expected name,score")
            try:
                scores[fields[0]] = float(fields[1])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad score") from exc
    missing = [n for n in names if n not in scores]
    if missing:
        raise ParseError(f"{path}: missing scores for {missing}")
    return np.asarray([scores[n] for n in names])


def _cmd_bench(args) -> int:
    report = analysis.benchmark(
        n_points=args.n,
        grid_size=args.grid,
        sigma=args.sigma,
        trials=args.trials,
        seed=args.seed,
    )
    analysis.write_bench_report(args.output, report)
    print(
        f"hilbert {report.hilbert_mean_s:.3e}s/pair, w1 {report.w1_mean_s:.3e}s/pair "
        f"({report.w1_mean_s / report.hilbert_mean_s:.0f}x) over {report.pairs} pairs"
    )
    return EXIT_OK


def _cmd_heatmap(args) -> int:
    grid = density.read_grid(args.input)
    density.write_pgm(args.output, grid)
    print(f"{grid.shape[0]}x{grid.shape[1]} heatmap -> {args.output}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    clouds, labels = analysis.synthetic_clouds(
        per_class=args.per_class,
        n_classes=args.classes,
        seed=args.seed,
        n_min=args.n_min,
        n_max=args.n_max,
    )
    os.makedirs(args.output_dir, exist_ok=True)
    rows = []
    for idx, (cloud, label) in enumerate(zip(clouds, labels)):
        name = f"cloud_{idx:03d}_{label}"
        embedding.write_cloud(os.path.join(args.output_dir, name + ".csv"), cloud)
        rows.append((name, label))
    with open(os.path.join(args.output_dir, "labels.csv"), "w", encoding="utf-8") as fh:
        fh.write("name,label\n")
        for name, label in rows:
            fh.write(f"{name},{label}\n")
    _write_json(os.path.join(args.output_dir, "manifest.json"), {
        "classes": args.classes,
        "per_class": args.per_class,
        "seed": args.seed,
        "n_min": args.n_min,
        "n_max": args.n_max,
    })
    print(f"{len(clouds)} clouds -> {args.output_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="persphere",
                     description="Topological summaries of point clouds and "
                                 "time series: diagrams, densities, sphere "
                                 "geometry, and matching baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="delay-embed a scalar time series")
    p.add_argument("--input", required=True)
    p.add_argument("--channel", type=int, default=None,
                   help="column of a multi-column CSV (0-based)")
    p.add_argument("--m", type=int, default=DEFAULT_M,
                   help=f"embedding dimension (default {DEFAULT_M}, arbitrary)")
    p.add_argument("--tau", type=int, default=DEFAULT_TAU,
                   help=f"embedding delay (default {DEFAULT_TAU}, arbitrary)")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("persist", help="H0/H1 diagrams of a point cloud")
    p.add_argument("--input", required=True)
    p.add_argument("--max-scale", type=float, default=None,
                   help="filtration cutoff (default: cloud diameter)")
    p.add_argument("--temporal-links", action="store_true",
                   help="insert zero-birth edges between consecutive points")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_persist)

    p = sub.add_parser("density", help="KDE grid of a diagram")
    p.add_argument("--input", required=True)
    p.add_argument("--dim", type=int, default=1, choices=(0, 1))
    _add_density_args(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("dist", help="distance between two diagram files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metric", choices=analysis.METRICS, default="hilbert")
    p.add_argument("--dim", type=int, default=1, choices=(0, 1))
    _add_density_args(p)
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("distmat", help="pairwise distance matrix")
    p.add_argument("--inputs", nargs="*", default=[],
                   help="diagram files (one item each)")
    p.add_argument("--groups", default=None,
                   help="CSV 'name,path' grouping channel files into items; "
                        "item distance is the mean across channels")
    p.add_argument("--metric", choices=analysis.METRICS, default="hilbert")
    p.add_argument("--dim", type=int, default=1, choices=(0, 1))
    _add_density_args(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", required=True)
    p.add_argument("--manifest", default=None, help="JSON provenance output")
    p.set_defaults(func=_cmd_distmat)

    p = sub.add_parser("geodesic", help="sample the path between two diagrams")
    p.add_argument("--from", dest="from_path", required=True)
    p.add_argument("--to", dest="to_path", required=True)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--space", choices=("sphere", "alexandrov"), default="sphere",
                   help="sphere: density grids; alexandrov: matched-point diagrams")
    p.add_argument("--dim", type=int, default=1, choices=(0, 1))
    _add_density_args(p)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_geodesic)

    p = sub.add_parser("mean", help="extrinsic mean density of diagrams")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--dim", type=int, default=1, choices=(0, 1))
    _add_density_args(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_mean)

    p = sub.add_parser("pga", help="principal geodesic analysis of diagrams")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--dim", type=int, default=1, choices=(0, 1))
    p.add_argument("--components", "-d", type=int, default=2)
    _add_density_args(p)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_pga)

    p = sub.add_parser("knn", help="k-NN classification of diagram files")
    p.add_argument("--train", required=True, help="CSV 'path,label'")
    p.add_argument("--test", nargs="+", required=True)
    p.add_argument("--metric", choices=analysis.METRICS, default="hilbert")
    p.add_argument("--dim", type=int, default=1, choices=(0, 1))
    p.add_argument("--k", type=int, default=1)
    _add_density_args(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", required=True)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_knn)

    p = sub.add_parser("regress", help="leave-one-out linear regression on features")
    p.add_argument("--features", required=True, help="CSV 'name,c0,...'")
    p.add_argument("--scores", required=True, help="CSV 'name,score'")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_regress)

    p = sub.add_parser("bench", help="per-pair timing of the two metric families")
    p.add_argument("--n", type=int, default=30, help="points per diagram")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("heatmap", help="grid CSV to 8-bit PGM (max-scaled)")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_heatmap)

    p = sub.add_parser("synth", help="seeded synthetic 3-class cloud benchmark")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--per-class", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-min", type=int, default=20)
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except FileNotFoundError as exc:
        name = exc.filename if exc.filename else exc
        print(f"error: not-found: {name}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except ParseError as exc:
        print(f"error: parse: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, _CliParameterError) as exc:
        print(f"error: parameter: {exc}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())
