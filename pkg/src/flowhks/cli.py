"""Command line entry points: integrate, hks, cluster, similarity, serve."""

from __future__ import annotations

import argparse
import math
import re
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, report
from .flowfield import (
    ABCParams,
    abc_velocity,
    integrate_pathlines,
    load_pathlines,
    seed_grid,
    write_pathlines,
)
from .hks import HKSField, write_hks
from .lbo import write_matrix_coo, write_spectrum_csv
from .neighborhood import write_graph_csv
from .pipeline import PipelineConfig, format_timings, parse_config_file, run_pipeline
from .service import DatasetRecord, load_dataset, serve

_PI_TOKEN = re.compile(r"^(-?\d*\.?\d*)pi$")


def parse_value(token: str) -> float:
    """Parse a float token with an optional ``pi`` multiplier, e.g. ``8pi``."""
    token = token.strip()
    m = _PI_TOKEN.match(token)
    if m:
        factor = m.group(1)
        if factor in ("", "-"):
            factor += "1"
        return float(factor) * math.pi
    return float(token)


def _parse_domain(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"domain needs 4 values, got {text!r}")
    return tuple(parse_value(p) for p in parts)


def _parse_grid(text: str):
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"grid must look like 50x50, got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_dataset_arg(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected ID=PATHLINES,HKS, got {text!r}")
    ds_id, files = text.split("=", 1)
    parts = files.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected ID=PATHLINES,HKS, got {text!r}")
    return ds_id, parts[0], parts[1]


def _parse_region_arg(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected ID=xmin,ymin,xmax,ymax, got {text!r}")
    ds_id, box = text.split("=", 1)
    values = box.split(",")
    if len(values) != 4:
        raise argparse.ArgumentTypeError(f"region needs 4 values, got {text!r}")
    return ds_id, tuple(parse_value(v) for v in values)


def _parse_index_range(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"range needs lo,hi got {text!r}")
    return int(parts[0]), int(parts[1])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowhks",
        description="Heat kernel signatures for pathlines of unsteady 2D flows",
    )
    parser.add_argument("--config", help="pipeline config file with key=value lines")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for per-point stages")
    sub = parser.add_subparsers(dest="command", required=True)

    p_int = sub.add_parser("integrate", help="integrate pathlines of an analytic field")
    p_int.add_argument("--field", choices=["abc"], default="abc")
    p_int.add_argument("--grid", type=_parse_grid, required=True, metavar="NXxNY")
    p_int.add_argument("--domain", type=_parse_domain, required=True, metavar="XMIN,YMIN,XMAX,YMAX")
    p_int.add_argument("--t0", type=parse_value, default=0.0)
    p_int.add_argument("--tau", type=parse_value, required=True)
    p_int.add_argument("--m", type=int, required=True, help="sample timesteps per pathline")
    p_int.add_argument("--substeps", type=int, default=16, help="RK4 substeps per sample interval")
    p_int.add_argument("--A", type=parse_value, default=math.sqrt(3.0))
    p_int.add_argument("--B", type=parse_value, default=math.sqrt(2.0))
    p_int.add_argument("--C", type=parse_value, default=1.0)
    p_int.add_argument("-o", "--output", required=True)
    p_int.add_argument("--binary", action="store_true", help="write the binary variant")

    p_hks = sub.add_parser("hks", help="compute signatures for a pathline file")
    p_hks.add_argument("input", help="pathline file")
    p_hks.add_argument("-o", "--output", required=True, help="output HKS file")
    p_hks.add_argument("--binary", action="store_true")
    p_hks.add_argument("--M", type=int)
    p_hks.add_argument("--alpha", type=float)
    p_hks.add_argument("--n-eig", type=int, dest="n_eig")
    p_hks.add_argument("--beta", type=float)
    p_hks.add_argument("--drop-ratio", type=float, dest="drop_ratio")
    p_hks.add_argument("--scales", type=int, dest="n_scales")
    p_hks.add_argument("--sparsity-mode", choices=["fraction", "absolute"], dest="sparsity_mode")
    p_hks.add_argument("--row-fraction", type=float, dest="row_fraction")
    p_hks.add_argument("--threshold", type=float)
    p_hks.add_argument("--exponent-sigma-squared", action="store_true", default=None,
                       dest="exponent_sigma_squared")
    p_hks.add_argument("--mass-weighted", action="store_true", default=None,
                       dest="mass_weighted_normalization")
    p_hks.add_argument("--report", help="directory for figures and debug CSV dumps")
    p_hks.add_argument("--dump-matrix", help="write the assembled operator in row/col/value text form")

    p_clu = sub.add_parser("cluster", help="k-means over HKS curves of one or two datasets")
    p_clu.add_argument("--dataset", action="append", required=True, type=_parse_dataset_arg,
                       metavar="ID=PATHLINES,HKS")
    p_clu.add_argument("--k", type=int, required=True)
    p_clu.add_argument("--range", type=_parse_index_range, metavar="LO,HI")
    p_clu.add_argument("--mode", choices=["joint", "separate"], default="joint")
    p_clu.add_argument("--seed", type=int, default=0)
    p_clu.add_argument("--region", action="append", type=_parse_region_arg, default=[],
                       metavar="ID=XMIN,YMIN,XMAX,YMAX")
    p_clu.add_argument("-o", "--output", required=True, help="labels CSV")
    p_clu.add_argument("--centroids", help="write centroid curves as an HKS file (n=k)")
    p_clu.add_argument("--report", help="directory for cluster map figures")

    p_sim = sub.add_parser("similarity", help="HKS curve distances to an anchor point")
    p_sim.add_argument("--dataset", action="append", required=True, type=_parse_dataset_arg,
                       metavar="ID=PATHLINES,HKS")
    p_sim.add_argument("--anchor", required=True, metavar="ID:INDEX")
    p_sim.add_argument("--range", type=_parse_index_range, metavar="LO,HI")
    p_sim.add_argument("-o", "--output", required=True, help="distances CSV")
    p_sim.add_argument("--report", help="directory for similarity map figures")

    p_srv = sub.add_parser("serve", help="serve loaded datasets over HTTP/JSON")
    p_srv.add_argument("--dataset", action="append", required=True, type=_parse_dataset_arg,
                       metavar="ID=PATHLINES,HKS")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8040)

    return parser


def _pipeline_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if args.config:
        config = parse_config_file(args.config, config)
    overrides = {}
    for key in (
        "M", "alpha", "n_eig", "beta", "drop_ratio", "n_scales", "sparsity_mode",
        "row_fraction", "threshold", "exponent_sigma_squared",
        "mass_weighted_normalization",
    ):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    overrides["threads"] = args.threads
    return replace(config, **overrides)


def _cmd_integrate(args, parser) -> int:
    if args.m < 2:
        parser.error("--m must be >= 2")
    if args.tau <= 0:
        parser.error("--tau must be positive")
    try:
        seeds = seed_grid(args.domain, args.grid)
    except ValueError as exc:
        parser.error(str(exc))
    params = ABCParams(A=args.A, B=args.B, C=args.C)
    start = time.perf_counter()
    pathlines = integrate_pathlines(
        abc_velocity(params), seeds, args.t0, args.tau, args.m, args.substeps
    )
    elapsed = time.perf_counter() - start
    write_pathlines(args.output, pathlines, binary=args.binary)
    print(f"n={pathlines.n} m={pathlines.m} d={pathlines.d}")
    print(f"integration: {elapsed:.2f} s")
    print(f"wrote {args.output}")
    return 0


def _cmd_hks(args, parser) -> int:
    config = _pipeline_config(args)
    pathlines = load_pathlines(args.input)
    result = run_pipeline(pathlines, config)
    write_hks(args.output, result.hks, binary=args.binary)
    print(f"n={pathlines.n} scales={result.hks.n_scales} "
          f"s_min={result.hks.s_min:.6g} s_max={result.hks.s_max:.6g}")
    print(format_timings(result.timings))
    print(f"wrote {args.output}")
    if args.dump_matrix:
        from .lbo import assemble

        Q, _ = assemble(result.graph, pathlines, config.lbo_config(pathlines.n))
        write_matrix_coo(args.dump_matrix, Q)
        print(f"wrote {args.dump_matrix}")
    if args.report:
        outdir = Path(args.report)
        outdir.mkdir(parents=True, exist_ok=True)
        write_graph_csv(outdir / "graph.csv", result.graph)
        write_spectrum_csv(outdir / "spectrum.csv", result.spectrum)
        full = analysis.ScaleRange(0, result.hks.n_scales - 1)
        report.figure_scalar_map(
            outdir / "mean_hks.png",
            pathlines.seeds,
            analysis.mean_hks(result.hks, full),
            title="mean log10 HKS (full scale range)",
        )
        report.figure_spectrum(outdir / "spectrum.png", result.spectrum.eigenvalues)
        sample = np.linspace(0, pathlines.n - 1, min(6, pathlines.n)).astype(int)
        report.figure_curves(
            outdir / "curves.png",
            result.hks.scales,
            result.hks.log_values()[sample],
            labels=[f"point {i}" for i in sample],
        )
        print(f"report written to {outdir}")
    return 0


def _load_records(dataset_args) -> list[DatasetRecord]:
    return [load_dataset(ds_id, pl, hk) for ds_id, pl, hk in dataset_args]


def _cmd_cluster(args, parser) -> int:
    records = _load_records(args.dataset)
    ids = [rec.id for rec in records]
    fields = [rec.hks for rec in records]
    if len(fields) == 2:
        fields = list(analysis.align_scales(fields[0], fields[1]))
    n_scales = min(f.n_scales for f in fields)
    lo, hi = args.range if args.range else (0, n_scales - 1)
    region_map = dict(args.region)
    unknown = set(region_map) - set(ids)
    if unknown:
        parser.error(f"regions reference unknown dataset ids {sorted(unknown)}")
    result = analysis.kmeans_hks(
        fields,
        analysis.ScaleRange(lo, hi),
        k=args.k,
        mode=args.mode,
        rng_seed=args.seed,
        seeds=[rec.pathlines.seeds for rec in records],
        regions=[region_map.get(i) for i in ids],
    )
    analysis.write_labels_csv(args.output, result, ids)
    print(f"clustered {sum(len(l) for l in result.labels)} points into k={args.k} ({args.mode})")
    print(f"wrote {args.output}")
    if args.centroids:
        centroids = np.vstack(result.centroids)
        write_hks(args.centroids, HKSField(scales=result.scales, values=10.0**centroids))
        print(f"wrote {args.centroids}")
    if args.report:
        outdir = Path(args.report)
        outdir.mkdir(parents=True, exist_ok=True)
        for rec, idx, labels in zip(records, result.indices, result.labels):
            report.figure_cluster_map(
                outdir / f"clusters_{rec.id}.png",
                rec.pathlines.seeds[idx],
                labels,
                title=f"{rec.id}: k={args.k} {args.mode}",
            )
        for ci, cent in enumerate(result.centroids):
            report.figure_curves(
                outdir / f"centroids_{ci}.png",
                result.scales,
                cent,
                labels=[f"cluster {i}" for i in range(cent.shape[0])],
                title="centroid curves",
            )
        print(f"report written to {outdir}")
    return 0


def _cmd_similarity(args, parser) -> int:
    records = _load_records(args.dataset)
    ids = [rec.id for rec in records]
    if ":" not in args.anchor:
        parser.error("--anchor must look like ID:INDEX")
    anchor_id, anchor_idx = args.anchor.rsplit(":", 1)
    if anchor_id not in ids:
        parser.error(f"anchor dataset {anchor_id!r} not among --dataset ids")
    anchor = (ids.index(anchor_id), int(anchor_idx))
    fields = [rec.hks for rec in records]
    if len(fields) == 2:
        fields = list(analysis.align_scales(fields[0], fields[1]))
    n_scales = min(f.n_scales for f in fields)
    lo, hi = args.range if args.range else (0, n_scales - 1)
    distances = analysis.similarity_field(fields, anchor, analysis.ScaleRange(lo, hi))
    with open(args.output, "w") as fh:
        fh.write("index,dataset,label_or_value\n")
        for ds_id, dist in zip(ids, distances):
            for i, v in enumerate(dist):
                fh.write(f"{i},{ds_id},{v:.17g}\n")
    print(f"anchor {anchor_id}:{anchor_idx}, range [{lo}, {hi}]")
    print(f"wrote {args.output}")
    if args.report:
        outdir = Path(args.report)
        outdir.mkdir(parents=True, exist_ok=True)
        for rec, dist in zip(records, distances):
            report.figure_scalar_map(
                outdir / f"similarity_{rec.id}.png",
                rec.pathlines.seeds,
                dist,
                title=f"curve distance to {anchor_id}:{anchor_idx}",
                cmap="magma",
            )
        print(f"report written to {outdir}")
    return 0


def _cmd_serve(args, parser) -> int:
    records = _load_records(args.dataset)
    serve(records, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "integrate": _cmd_integrate,
    "hks": _cmd_hks,
    "cluster": _cmd_cluster,
    "similarity": _cmd_similarity,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
