"""Deterministic synthetic fixtures.

Labeled clouds whose parts are spatially separated (so neighborhood sizes
used elsewhere stay inside one part), one-hot-plus-noise features standing
in for a real image backbone, and score maps that agree with a render pass
pixel for pixel. Everything is driven by splitmix64, so one seed gives one
byte-stable fixture.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .cloud import PointCloud
from .errors import InvalidArgumentError, InvalidInputError
from .render import RenderedView
from .rng import SplitMix64

SHAPES = ("segmented_bar", "two_blobs", "lamp_like")


@dataclass
class SynthSpec:
    shape: str
    n_points: int = 1000
    p_parts: int = 3
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidArgumentError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        if self.n_points < 1:
            raise InvalidArgumentError("n_points must be >= 1")
        if not 1 <= self.p_parts <= self.n_points:
            raise InvalidArgumentError("need 1 <= p_parts <= n_points")
        if self.noise_sigma < 0:
            raise InvalidArgumentError("noise_sigma must be >= 0")
        if self.shape == "two_blobs" and self.p_parts != 2:
            raise InvalidArgumentError("two_blobs is a 2-part shape")
        if self.shape == "lamp_like" and self.p_parts != 3:
            raise InvalidArgumentError("lamp_like is a 3-part shape")


def _part_sizes(n: int, p: int) -> List[int]:
    sizes = [n // p] * p
    for i in range(n % p):
        sizes[i] += 1
    return sizes


def _uniform_in_ball(rng: SplitMix64, count: int, radius: float) -> np.ndarray:
    pts = np.empty((count, 3))
    for i in range(count):
        while True:
            x = 2.0 * rng.random() - 1.0
            y = 2.0 * rng.random() - 1.0
            z = 2.0 * rng.random() - 1.0
            if x * x + y * y + z * z <= 1.0:
                pts[i] = (radius * x, radius * y, radius * z)
                break
    return pts


def _uniform_in_disk_slab(rng, count, radius, y_lo, y_hi) -> np.ndarray:
    pts = np.empty((count, 3))
    for i in range(count):
        r = radius * np.sqrt(rng.random())
        ang = 2.0 * np.pi * rng.random()
        y = y_lo + (y_hi - y_lo) * rng.random()
        pts[i] = (r * np.cos(ang), y, r * np.sin(ang))
    return pts


def _uniform_in_frustum(rng, count, r_lo, r_hi, y_lo, y_hi) -> np.ndarray:
    pts = np.empty((count, 3))
    for i in range(count):
        t = rng.random()
        y = y_lo + (y_hi - y_lo) * t
        rmax = r_lo + (r_hi - r_lo) * t
        r = rmax * np.sqrt(rng.random())
        ang = 2.0 * np.pi * rng.random()
        pts[i] = (r * np.cos(ang), y, r * np.sin(ang))
    return pts


def synth_cloud(spec: SynthSpec) -> PointCloud:
    """Labeled cloud with contiguous, gap-separated parts.

    segmented_bar: p unit-length boxes along x with 0.5 gaps, one part per
    box, points stored part by part. two_blobs: two radius-0.3 balls 1.8
    apart. lamp_like: disk base, thin pole, frustum shade stacked along y
    with gaps.
    """
    rng = SplitMix64(spec.seed)
    sizes = _part_sizes(spec.n_points, spec.p_parts)
    chunks = []
    if spec.shape == "segmented_bar":
        for part, count in enumerate(sizes):
            x0 = part * 1.5  # 1.0 long + 0.5 gap
            pts = np.empty((count, 3))
            for i in range(count):
                pts[i] = (x0 + rng.random(), 0.35 * rng.random(), 0.35 * rng.random())
            chunks.append(pts)
    elif spec.shape == "two_blobs":
        for part, count in enumerate(sizes):
            center = np.array([-0.9 if part == 0 else 0.9, 0.0, 0.0])
            chunks.append(center + _uniform_in_ball(rng, count, 0.3))
    else:  # lamp_like
        chunks.append(_uniform_in_disk_slab(rng, sizes[0], 0.5, 0.0, 0.08))
        chunks.append(_uniform_in_disk_slab(rng, sizes[1], 0.06, 0.25, 1.05))
        chunks.append(_uniform_in_frustum(rng, sizes[2], 0.18, 0.45, 1.25, 1.65))

    labels = np.concatenate(
        [np.full(count, part + 1, dtype=np.int64) for part, count in enumerate(sizes)]
    )
    return PointCloud(
        positions=np.concatenate(chunks, axis=0),
        gt_labels=labels,
        category=f"{spec.shape}{spec.p_parts}",
    )


def synth_features(gt_labels, d: int, noise_sigma: float = 0.0, seed: int = 0) -> np.ndarray:
    """One-hot part encodings in d dims plus seeded Gaussian noise."""
    labels = np.asarray(gt_labels, dtype=np.int64)
    p = int(labels.max())
    if d < p:
        raise InvalidArgumentError(f"d={d} cannot hold one-hots for {p} parts")
    feats = np.zeros((labels.size, d))
    feats[np.arange(labels.size), labels - 1] = 1.0
    if noise_sigma > 0:
        feats += noise_sigma * SplitMix64(seed).normals(feats.shape)
    return feats


def synth_sim_maps(views: List[RenderedView], gt_labels, p: int, margin: float) -> np.ndarray:
    """(R, H, W, P) score maps consistent with the views' owner maps.

    At every owned pixel the owner's true label scores 1.0 and every other
    label scores 1.0 - margin; background pixels score 0 everywhere.
    """
    labels = np.asarray(gt_labels, dtype=np.int64)
    if labels.max() > p:
        raise InvalidInputError(f"labels reach {labels.max()} but p={p}")
    if not views:
        raise InvalidInputError("no views")
    h, w = views[0].owner.shape
    maps = np.zeros((len(views), h, w, p), dtype=np.float32)
    for r, view in enumerate(views):
        owner = view.owner
        fg = owner >= 0
        maps[r][fg] = 1.0 - margin
        vs, us = np.nonzero(fg)
        maps[r, vs, us, labels[owner[vs, us]] - 1] = 1.0
    return maps


def synth_feature_grids(views: List[RenderedView], feats: np.ndarray) -> np.ndarray:
    """(R, H, W, d) grids carrying each owned pixel's owner feature.

    Together with the correspondence from the same render pass, these make
    back-projection recover the per-point features exactly.
    """
    f = np.asarray(feats, dtype=np.float32)
    if not views:
        raise InvalidInputError("no views")
    h, w = views[0].owner.shape
    grids = np.zeros((len(views), h, w, f.shape[1]), dtype=np.float32)
    for r, view in enumerate(views):
        fg = view.owner >= 0
        grids[r][fg] = f[view.owner[fg]]
    return grids
