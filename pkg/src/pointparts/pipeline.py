"""File-driven pipeline stages.

Each stage is a pure function of its input files: it reads, computes, writes,
and the chained `run_pipeline` is nothing more than the stages called in
order on the same paths, so running them separately produces identical bytes.
Clouds are normalized to the unit sphere on ingest; intermediate points files
carry the normalized (and, after back-projection, subsampled) coordinates.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np

from . import formats
from .aggregation import aggregate
from .cloud import PointCloud, normalize_unit_sphere
from .config import RunConfig
from .errors import ConfigError, InvalidInputError
from .features import backproject, bicubic_upsample, fill_hidden
from .metrics import EvalRecord, a_iou, dataset_metrics, object_miou
from .render import CorrespondenceMap, render_all, viewpoint_set
from .rng import SplitMix64
from .segmentation import Segmentation, SimilarityMaps, oracle_match, segment_full
from .synthetic import SynthSpec, synth_cloud, synth_feature_grids, synth_features, synth_sim_maps


def _grid_files(source: str) -> List[Path]:
    """A stacked tensor is one file; a directory holds one file per view,
    taken in sorted name order."""
    p = Path(source)
    if p.is_dir():
        files = sorted(p.glob("*.ftns"))
        if not files:
            raise ConfigError(f"grids: directory {p} holds no .ftns files")
        return files
    return [p]


def _iter_view_grids(source: str, n_views: int, canvas) -> Iterable[np.ndarray]:
    """Yield one (H, W, d) float grid per view, upsampling patch grids."""
    files = _grid_files(source)
    if len(files) == 1 and not Path(source).is_dir():
        dims = formats.validate_ftns(files[0])
        if len(dims) not in (3, 4):
            raise InvalidInputError(f"{files[0]}: expected rank 3 or 4, got {len(dims)}")
        if dims[0] != n_views:
            raise InvalidInputError(
                f"{files[0]}: {dims[0]} views in tensor, render pass has {n_views}"
            )
        for block in formats.iter_ftns_first_axis(files[0]):
            if block.ndim == 2:
                block = block[:, :, None]
            yield bicubic_upsample(block, canvas) if block.shape[:2] != tuple(canvas) else block
    else:
        if len(files) != n_views:
            raise InvalidInputError(f"{source}: {len(files)} files for {n_views} views")
        for f in files:
            block = formats.read_ftns(f)
            if block.ndim == 2:
                block = block[:, :, None]
            if block.ndim != 3:
                raise InvalidInputError(f"{f}: expected (h, w, d), got {block.shape}")
            yield bicubic_upsample(block, canvas) if block.shape[:2] != tuple(canvas) else block


def _read_corr(path, canvas) -> CorrespondenceMap:
    pix = formats.read_ftns(path)
    if pix.ndim != 2:
        raise InvalidInputError(f"{path}: correspondence tensor must be rank 2")
    pixels = np.rint(pix).astype(np.int64)
    if pixels.size and pixels.max() >= canvas[0] * canvas[1]:
        raise InvalidInputError(
            f"{path}: pixel index {pixels.max()} outside a {canvas[0]}x{canvas[1]} canvas"
        )
    return CorrespondenceMap(pixels=pixels, height=canvas[0], width=canvas[1])


def run_render(cfg: RunConfig) -> CorrespondenceMap:
    """points -> views.ftns + corr.ftns (+ optional debug images)."""
    cfg.require("points")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pc = normalize_unit_sphere(formats.read_points(cfg.points))
    cameras = viewpoint_set(cfg.views, cfg.radius, cfg.fov_deg, cfg.canvas)
    views, corr = render_all(pc, cameras, cfg.point_radius, cfg.mode, cfg.depth_polarity)

    stack = np.stack([v.image for v in views], axis=0).astype(np.float32)
    formats.write_ftns(cfg.out_path("views"), stack)
    formats.write_ftns(cfg.out_path("corr"), corr.pixels.astype(np.float32))

    if cfg.dump_images:
        img_dir = out / "images"
        img_dir.mkdir(exist_ok=True)
        for r, view in enumerate(views):
            if cfg.mode == "depth":
                formats.write_pgm(img_dir / f"view_{r:04d}.pgm", view.image)
            else:
                formats.write_ppm(img_dir / f"view_{r:04d}.ppm", view.image)
    return corr


def run_backproject(cfg: RunConfig) -> np.ndarray:
    """points + corr + grids -> feats.ftns, points_used.txt, corr_used.ftns.

    The per-point mean over views happens first; then the optional random
    subsample (seeded) restricts the cloud, the correspondence rows, and the
    features together, and hidden points are filled from the surviving
    visible neighbors.
    """
    cfg.require("points", "grids")
    corr_path = cfg.out_path("corr")
    if not corr_path.exists():
        raise ConfigError(f"corr: {corr_path} missing; run the render stage first")
    pc = normalize_unit_sphere(formats.read_points(cfg.points))
    corr = _read_corr(corr_path, cfg.canvas)
    if corr.n_points != pc.n_points:
        raise InvalidInputError(
            f"{corr_path}: correspondence for {corr.n_points} points, cloud has {pc.n_points}"
        )

    feats = backproject(_iter_view_grids(cfg.grids, corr.n_views, cfg.canvas), corr)

    n = pc.n_points
    if cfg.sample_points is not None and cfg.sample_points < n:
        chosen = SplitMix64(cfg.sampling_seed).sample_indices(n, cfg.sample_points)
    else:
        chosen = np.arange(n, dtype=np.int64)
    sub_pc = pc.subset(chosen)
    sub_corr = CorrespondenceMap(corr.pixels[:, chosen], corr.height, corr.width)
    sub_feats = type(feats)(feats.data[chosen], feats.provenance, feats.hidden[chosen])
    filled = fill_hidden(sub_pc.positions, sub_feats)

    formats.write_points(cfg.out_path("points_used"), sub_pc)
    formats.write_ftns(cfg.out_path("corr_used"), sub_corr.pixels.astype(np.float32))
    formats.write_ftns(cfg.out_path("feats"), filled.data.astype(np.float32))
    return filled.data


def run_gfa(cfg: RunConfig) -> np.ndarray:
    """points_used + feats -> feats_gfa.ftns."""
    for key in ("points_used", "feats"):
        if not cfg.out_path(key).exists():
            raise ConfigError(f"{key}: {cfg.out_path(key)} missing; run earlier stages first")
    pc = formats.read_points(cfg.out_path("points_used"))
    feats = formats.read_ftns(cfg.out_path("feats")).astype(np.float64)
    out = aggregate(pc.positions, feats, cfg.gfa, cfg.fps_start)
    formats.write_ftns(cfg.out_path("feats_gfa"), out.astype(np.float32))
    return out


def run_segment(cfg: RunConfig) -> Segmentation:
    """feats_gfa (+ sim maps) -> clusters.ftns (+ assignment.ftns, pred.txt)."""
    for key in ("points_used", "feats_gfa", "corr_used"):
        if not cfg.out_path(key).exists():
            raise ConfigError(f"{key}: {cfg.out_path(key)} missing; run earlier stages first")
    pc = formats.read_points(cfg.out_path("points_used"))
    feats = formats.read_ftns(cfg.out_path("feats_gfa")).astype(np.float64)
    corr = _read_corr(cfg.out_path("corr_used"), cfg.canvas)

    sim = None
    if cfg.sim_maps is not None:
        cfg.require("sim_maps")
        planes = np.stack(
            list(_iter_view_grids(cfg.sim_maps, corr.n_views, cfg.canvas)), axis=0
        )
        sim = SimilarityMaps(planes, cfg.labels())

    seg = segment_full(
        feats,
        sim,
        corr,
        cfg.p,
        positions=pc.positions,
        kmeans_seed=cfg.kmeans_seed,
        sampling_seed=cfg.sampling_seed,
        anchor_sample=cfg.anchor_sample,
        cluster_on_sample=cfg.cluster_on_sample,
    )
    formats.write_ftns(cfg.out_path("clusters"), seg.cluster_of.astype(np.float32))
    if seg.final_labels is not None:
        formats.write_ftns(cfg.out_path("assignment"), seg.label_of_cluster.astype(np.float32))
        pred = PointCloud(positions=pc.positions, gt_labels=seg.final_labels)
        formats.write_points(cfg.out_path("pred"), pred)
    return seg


def format_report(records: List[EvalRecord]) -> str:
    """Tab-separated: one line per category, then the overall block.
    All numbers are percentages with four decimals."""
    miou_i, miou_c = dataset_metrics(records)
    aiou_i, aiou_c = a_iou(records)
    by_cat = {}
    for r in records:
        by_cat.setdefault(r.category, []).append(r)
    lines = ["category\tinstances\tmiou\taiou"]
    for cat in sorted(by_cat):
        group = by_cat[cat]
        miou = float(np.mean([r.object_miou for r in group]))
        _, cat_aiou = a_iou(group)
        lines.append(f"{cat}\t{len(group)}\t{100 * miou:.4f}\t{100 * cat_aiou:.4f}")
    lines.append("#overall")
    lines.append(f"miou_instance\t{100 * miou_i:.4f}")
    lines.append(f"miou_class\t{100 * miou_c:.4f}")
    lines.append(f"aiou_instance\t{100 * aiou_i:.4f}")
    lines.append(f"aiou_class\t{100 * aiou_c:.4f}")
    return "\n".join(lines) + "\n"


def eval_pair(pred_path, gt_path, p: int, category: str = "object") -> EvalRecord:
    pred = formats.read_points(pred_path)
    gt = formats.read_points(gt_path)
    if pred.gt_labels is None:
        raise InvalidInputError(f"{pred_path}: no label column")
    if gt.gt_labels is None:
        raise InvalidInputError(f"{gt_path}: no label column")
    return object_miou(pred.gt_labels, gt.gt_labels, p, category)


def eval_upper_bound(clusters_path, gt_path, p: int, category: str = "object") -> EvalRecord:
    """Score clusters against ground truth under the best possible naming."""
    gt = formats.read_points(gt_path)
    if gt.gt_labels is None:
        raise InvalidInputError(f"{gt_path}: no label column")
    clusters = np.rint(formats.read_ftns(clusters_path)).astype(np.int64)
    label_of_cluster = oracle_match(clusters, gt.gt_labels, p)
    return object_miou(label_of_cluster[clusters], gt.gt_labels, p, category)


def run_eval(cfg: RunConfig, stream=None) -> List[EvalRecord]:
    """Score the segment stage output against the subsampled ground truth."""
    gt_path = cfg.out_path("points_used")
    if not gt_path.exists():
        raise ConfigError(f"points_used: {gt_path} missing; run earlier stages first")
    if cfg.out_path("pred").exists():
        record = eval_pair(cfg.out_path("pred"), gt_path, cfg.p, cfg.category)
    elif cfg.out_path("clusters").exists():
        record = eval_upper_bound(cfg.out_path("clusters"), gt_path, cfg.p, cfg.category)
    else:
        raise ConfigError(f"pred: {cfg.out_path('pred')} missing; run the segment stage first")
    report = format_report([record])
    cfg.out_path("report").write_text(report)
    (stream or sys.stdout).write(report)
    return [record]


def run_pipeline(cfg: RunConfig, stream=None) -> List[EvalRecord]:
    """render -> backproject -> gfa -> segment -> eval, sharing one out_dir."""
    run_render(cfg)
    run_backproject(cfg)
    run_gfa(cfg)
    run_segment(cfg)
    pc = formats.read_points(cfg.out_path("points_used"))
    if pc.gt_labels is None:
        return []
    return run_eval(cfg, stream)


def run_synth(
    cfg: RunConfig,
    shape: str,
    n_points: int,
    p_parts: int,
    noise_sigma: float,
    margin: float,
    seed: int,
    feat_dim: Optional[int] = None,
    out_dir: Optional[str] = None,
) -> Tuple[Path, Path, Path]:
    """Emit a fixture: points.txt + grids.ftns + sim_maps.ftns.

    The grids and score maps are rendered with the run's own camera settings,
    so a later pipeline run over the same config reproduces the identical
    correspondence and recovers the part structure.
    """
    dest = Path(out_dir or cfg.out_dir)
    dest.mkdir(parents=True, exist_ok=True)
    spec = SynthSpec(shape=shape, n_points=n_points, p_parts=p_parts,
                     noise_sigma=noise_sigma, seed=seed)
    pc = synth_cloud(spec)
    points_path = dest / "points.txt"
    formats.write_points(points_path, pc)

    cameras = viewpoint_set(cfg.views, cfg.radius, cfg.fov_deg, cfg.canvas)
    views, _ = render_all(
        normalize_unit_sphere(pc), cameras, cfg.point_radius, cfg.mode, cfg.depth_polarity
    )
    feats = synth_features(pc.gt_labels, feat_dim or p_parts, noise_sigma, seed)
    grids_path = dest / "grids.ftns"
    formats.write_ftns(grids_path, synth_feature_grids(views, feats))
    sim_path = dest / "sim_maps.ftns"
    formats.write_ftns(sim_path, synth_sim_maps(views, pc.gt_labels, p_parts, margin))
    return points_path, grids_path, sim_path
