"""Command-line entry point.

Subcommands mirror the pipeline stages (render, backproject, gfa, segment,
eval, pipeline) plus synth for fixture generation. Every config field has a
flag; flags win over the JSON config file. Errors print a diagnostic naming
the offending path or field and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import PointpartsError
from .pipeline import (
    eval_pair,
    eval_upper_bound,
    format_report,
    run_backproject,
    run_eval,
    run_gfa,
    run_pipeline,
    run_render,
    run_segment,
    run_synth,
)


def _add_config_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--points", help="input points file (x y z [r g b] [label])")
    sp.add_argument("--grids", help="per-view feature grids: stacked .ftns or directory")
    sp.add_argument("--sim-maps", dest="sim_maps", help="per-view score maps (.ftns or directory)")
    sp.add_argument("--out-dir", dest="out_dir", help="artifact directory")
    sp.add_argument("--views", choices=["ortho6", "pc2_10", "sphere48"])
    sp.add_argument("--radius", type=float, help="camera distance from the origin")
    sp.add_argument("--fov-deg", dest="fov_deg", type=float)
    sp.add_argument("--canvas", type=int, help="square canvas size in pixels")
    sp.add_argument("--point-radius", dest="point_radius", type=float)
    sp.add_argument("--mode", choices=["depth", "rgb"])
    sp.add_argument("--polarity", dest="depth_polarity", choices=["near_light", "near_dark"])
    sp.add_argument("--dump-images", dest="dump_images", action="store_const", const=True)
    sp.add_argument("--p", type=int, help="number of target parts")
    sp.add_argument("--part-names", dest="part_names",
                    type=lambda s: s.split(","), help="comma-separated label names")
    sp.add_argument("--category", help="category tag used in reports")
    sp.add_argument("--gfa-m", dest="gfa_m_superpoints", type=int)
    sp.add_argument("--gfa-k-spatial", dest="gfa_k_spatial", type=int)
    sp.add_argument("--gfa-k-semantic", dest="gfa_k_semantic", type=int)
    sp.add_argument("--gfa-k-prime", dest="gfa_k_prime", type=int)
    sp.add_argument("--gfa-weighted", dest="gfa_weight_by_distance",
                    action="store_const", const=True)
    sp.add_argument("--gfa-order", dest="gfa_order",
                    choices=["spatial_first", "semantic_first"])
    sp.add_argument("--gfa-interp-space", dest="gfa_interp_space",
                    choices=["feature", "coordinate"])
    sp.add_argument("--fps-start", dest="fps_start", type=int)
    sp.add_argument("--kmeans-seed", dest="kmeans_seed", type=int)
    sp.add_argument("--sampling-seed", dest="sampling_seed", type=int)
    sp.add_argument("--sample-points", dest="sample_points", type=int,
                    help="random subsample size after rendering (0 disables)")
    sp.add_argument("--anchor-sample", dest="anchor_sample", type=int,
                    help="random subset receiving anchor labels (0 disables)")
    sp.add_argument("--cluster-on-sample", dest="cluster_on_sample",
                    action="store_const", const=True)


_CONFIG_KEYS = [
    "points", "grids", "sim_maps", "out_dir", "views", "radius", "fov_deg",
    "canvas", "point_radius", "mode", "depth_polarity", "dump_images", "p",
    "part_names", "category", "gfa_m_superpoints", "gfa_k_spatial",
    "gfa_k_semantic", "gfa_k_prime", "gfa_weight_by_distance", "gfa_order",
    "gfa_interp_space", "fps_start", "kmeans_seed", "sampling_seed",
    "sample_points", "anchor_sample", "cluster_on_sample",
]


def _config_from(args) -> "RunConfig":
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    for key in ("sample_points", "anchor_sample"):
        if overrides.get(key) == 0:
            overrides[key] = None  # 0 on the command line disables sampling
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pointparts",
        description="Training-free 3D part segmentation over multi-view features",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    for name, text in (
        ("render", "rasterize the cloud from the configured viewpoints"),
        ("backproject", "lift per-view pixel features onto the points"),
        ("gfa", "refine point features by geometric aggregation"),
        ("segment", "cluster points into parts and assign labels"),
        ("pipeline", "run every stage in order"),
    ):
        sp = sub.add_parser(name, help=text)
        _add_config_flags(sp)

    ev = sub.add_parser("eval", help="score predictions and print a TSV report")
    _add_config_flags(ev)
    ev.add_argument("--pred", help="predicted labels points file")
    ev.add_argument("--gt", help="ground-truth points file")
    ev.add_argument("--clusters", help="clusters tensor for --upper-bound scoring")
    ev.add_argument("--upper-bound", action="store_true",
                    help="score clusters under a perfect labeller")
    ev.add_argument("--manifest",
                    help="TSV of pred<TAB>gt<TAB>p<TAB>category rows for dataset scoring")

    sy = sub.add_parser("synth", help="emit a synthetic fixture (points, grids, score maps)")
    _add_config_flags(sy)
    sy.add_argument("--shape", default="segmented_bar",
                    choices=["segmented_bar", "two_blobs", "lamp_like"])
    sy.add_argument("--n", type=int, default=1000)
    sy.add_argument("--parts", type=int, default=3)
    sy.add_argument("--sigma", type=float, default=0.0)
    sy.add_argument("--margin", type=float, default=0.5)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--feat-dim", dest="feat_dim", type=int)
    return ap


def _run_eval_command(args) -> None:
    if args.manifest:
        records = []
        with open(args.manifest) as fh:
            for lineno, line in enumerate(fh, start=1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                cols = body.split("\t")
                if len(cols) != 4:
                    raise PointpartsError(
                        f"{args.manifest}:{lineno}: expected pred, gt, p, category"
                    )
                records.append(eval_pair(cols[0], cols[1], int(cols[2]), cols[3]))
        sys.stdout.write(format_report(records))
        return
    if args.upper_bound:
        if not args.clusters or not args.gt:
            raise PointpartsError("eval --upper-bound needs --clusters and --gt")
        cfg = _config_from(args)
        record = eval_upper_bound(args.clusters, args.gt, cfg.p, cfg.category)
        sys.stdout.write(format_report([record]))
        return
    if args.pred and args.gt:
        cfg = _config_from(args)
        record = eval_pair(args.pred, args.gt, cfg.p, cfg.category)
        sys.stdout.write(format_report([record]))
        return
    run_eval(_config_from(args))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "render":
            run_render(_config_from(args))
        elif args.command == "backproject":
            run_backproject(_config_from(args))
        elif args.command == "gfa":
            run_gfa(_config_from(args))
        elif args.command == "segment":
            run_segment(_config_from(args))
        elif args.command == "pipeline":
            run_pipeline(_config_from(args))
        elif args.command == "eval":
            _run_eval_command(args)
        elif args.command == "synth":
            cfg = _config_from(args)
            run_synth(cfg, args.shape, args.n, args.parts, args.sigma,
                      args.margin, args.seed, args.feat_dim)
    except PointpartsError as exc:
        print(f"pointparts {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pointparts {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
