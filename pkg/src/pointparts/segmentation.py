"""Part decomposition and naming.

K-means splits the refined point features into the requested number of
parts. Per-label similarity score maps, back-projected through the same
pixel-to-point correspondence as the features, give each point an anchor
label; an optimal one-to-one assignment between clusters and labels (maximum
total overlap) names the clusters. With no score maps the head stops after
clustering, and an oracle assignment against ground truth gives the ceiling
a perfect labeller would reach.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cloud import knn
from .errors import InvalidArgumentError, InvalidInputError
from .features import accumulate_over_views
from .render import CorrespondenceMap
from .rng import SplitMix64

_IOU_TIE_TOL = 1e-9


@dataclass
class SimilarityMaps:
    """Per-view (H, W, P) label scores plus the label names, one per plane."""

    data: np.ndarray          # (R, H, W, P)
    label_names: List[str]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 4:
            raise InvalidInputError(f"score maps must be (R, H, W, P), got {self.data.shape}")
        if self.data.shape[3] != len(self.label_names):
            raise InvalidInputError(
                f"{self.data.shape[3]} score planes vs {len(self.label_names)} names"
            )


@dataclass
class Segmentation:
    cluster_of: np.ndarray                       # (N,) ints in [0, p)
    label_of_cluster: Optional[np.ndarray] = None  # (p,) permutation of {1..p}
    final_labels: Optional[np.ndarray] = None      # label_of_cluster[cluster_of]


def kmeans(
    feats: np.ndarray,
    p: int,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> np.ndarray:
    """Deterministic k-means: ++-style init from a seeded splitmix64 stream,
    Lloyd iterations until the largest centroid shift drops below tol.

    Empty clusters seize the point currently farthest from its own centroid
    (the point is moved into the empty cluster before the mean update), which
    also guarantees termination on fully degenerate inputs.
    """
    f = np.asarray(feats, dtype=np.float64)
    if f.ndim != 2:
        raise InvalidInputError(f"features must be (N, d), got {f.shape}")
    n = f.shape[0]
    if not 1 <= p <= n:
        raise InvalidArgumentError(f"p must be in [1, {n}], got {p}")

    rng = SplitMix64(seed)
    centers = np.empty((p, f.shape[1]))
    centers[0] = f[rng.randrange(n)]
    min_d2 = ((f - centers[0]) ** 2).sum(axis=1)
    for j in range(1, p):
        total = float(min_d2.sum())
        if total > 0.0:
            target = rng.random() * total
            pick = int(np.searchsorted(np.cumsum(min_d2), target, side="right"))
            pick = min(pick, n - 1)
        else:
            pick = rng.randrange(n)
        centers[j] = f[pick]
        np.minimum(min_d2, ((f - centers[j]) ** 2).sum(axis=1), out=min_d2)

    assign = np.zeros(n, dtype=np.int64)
    f_sq = np.einsum("nd,nd->n", f, f)
    for _ in range(max_iter):
        c_sq = np.einsum("pd,pd->p", centers, centers)
        d2 = f_sq[:, None] + c_sq[None, :] - 2.0 * (f @ centers.T)
        np.maximum(d2, 0.0, out=d2)
        assign = np.argmin(d2, axis=1)  # ties to the smallest cluster index
        own_d2 = d2[np.arange(n), assign]
        for j in range(p):
            if not (assign == j).any():
                worst = int(np.argmax(own_d2))
                assign[worst] = j
                own_d2[worst] = 0.0
        new_centers = np.empty_like(centers)
        for j in range(p):
            new_centers[j] = f[assign == j].mean(axis=0)
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        if shift < tol:
            break
    return assign


def anchor_scores(
    sim: SimilarityMaps,
    corr: CorrespondenceMap,
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean score vector per point over its recorded pixels.

    Returns (scores (N, P), visible (N,) bool). Hidden points get zeros.
    """
    r, h, w, _ = sim.data.shape
    if r != corr.n_views or h != corr.height or w != corr.width:
        raise InvalidInputError(
            f"score maps {sim.data.shape[:3]} do not match the render pass "
            f"({corr.n_views}, {corr.height}, {corr.width})"
        )
    sums, counts = accumulate_over_views((sim.data[i] for i in range(r)), corr)
    visible = counts > 0
    return sums / np.maximum(counts, 1)[:, None], visible


def anchor_masks(
    sim: SimilarityMaps,
    corr: CorrespondenceMap,
    positions: np.ndarray,
    sample: Optional[int] = 2048,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Anchor label per point: argmax of the back-projected scores.

    Ties take the smallest score-plane index; hidden points inherit the label
    of their nearest visible point. Labels are 0-based plane indices. When
    `sample` is set, only a random subset of that size receives anchors;
    everything else is -1 and the returned index array names the subset.
    """
    scores, visible = anchor_scores(sim, corr)
    if not visible.any():
        raise InvalidInputError("no point is visible in any view")
    n = scores.shape[0]

    labels = np.argmax(scores, axis=1)  # first max wins ties
    vis_idx = np.flatnonzero(visible)
    hid_idx = np.flatnonzero(~visible)
    if hid_idx.size:
        pos = np.asarray(positions, dtype=np.float64)
        nn_idx, _ = knn(pos[hid_idx], pos[vis_idx], 1)
        labels[hid_idx] = labels[vis_idx[nn_idx[:, 0]]]

    if sample is None or sample >= n:
        return labels, np.arange(n, dtype=np.int64)
    chosen = SplitMix64(seed).sample_indices(n, sample)
    out = np.full(n, -1, dtype=np.int64)
    out[chosen] = labels[chosen]
    return out, chosen


def _overlap_matrix(cluster_of, anchor_labels, p) -> np.ndarray:
    c = np.asarray(cluster_of, dtype=np.int64)
    a = np.asarray(anchor_labels, dtype=np.int64)
    if c.shape != a.shape:
        raise InvalidInputError("cluster ids and anchor labels differ in length")
    if c.size and (c.min() < 0 or c.max() >= p):
        raise InvalidInputError(f"cluster ids must lie in [0, {p})")
    if a.size and (a.min() < 1 or a.max() > p):
        raise InvalidInputError(f"anchor labels must lie in {{1..{p}}}")
    mat = np.zeros((p, p), dtype=np.int64)
    np.add.at(mat, (c, a - 1), 1)
    return mat


def _lex_optimal_assignment(score: np.ndarray) -> np.ndarray:
    """Maximum-total assignment; among optima, the lexicographically smallest
    row-to-column vector. Columns are tried in ascending order and kept when
    the remaining subproblem can still reach the optimum (within a small
    tolerance, since IoU scores are floats)."""
    p = score.shape[0]

    def best_total(sub: np.ndarray) -> float:
        if sub.size == 0:
            return 0.0
        rows, cols = linear_sum_assignment(-sub)
        return float(sub[rows, cols].sum())

    target = best_total(score)
    cols_left = list(range(p))
    assignment = np.empty(p, dtype=np.int64)
    fixed_gain = 0.0
    for row in range(p):
        rest_rows = slice(row + 1, p)
        for pos, col in enumerate(cols_left):
            remaining = [c for c in cols_left if c != col]
            reachable = fixed_gain + score[row, col] + best_total(score[rest_rows][:, remaining])
            if reachable >= target - _IOU_TIE_TOL:
                assignment[row] = col
                fixed_gain += score[row, col]
                cols_left.pop(pos)
                break
    return assignment


def hungarian_assign(cluster_of, anchor_labels, p: int) -> np.ndarray:
    """Name clusters by maximizing total cluster/anchor overlap.

    Returns label_of_cluster, a permutation of {1..p}; equal-total optima
    resolve to the lexicographically smallest vector. Labels never chosen by
    any anchor simply yield zero overlap columns and fall to whichever
    clusters the optimum leaves over.
    """
    mat = _overlap_matrix(cluster_of, anchor_labels, p)
    return _lex_optimal_assignment(mat.astype(np.float64)) + 1


def oracle_match(cluster_of, gt_labels, p: int) -> np.ndarray:
    """Name clusters against ground truth by maximizing total per-pair IoU.

    This is the ceiling with a perfect labeller: no score maps involved,
    clusters are matched straight to the ground-truth parts. Pairs whose
    union is empty count as IoU 1.
    """
    c = np.asarray(cluster_of, dtype=np.int64)
    g = np.asarray(gt_labels, dtype=np.int64)
    if c.shape != g.shape:
        raise InvalidInputError("cluster ids and gt labels differ in length")
    if c.size and (c.min() < 0 or c.max() >= p):
        raise InvalidInputError(f"cluster ids must lie in [0, {p})")
    if g.size and (g.min() < 1 or g.max() > p):
        raise InvalidInputError(f"gt labels must lie in {{1..{p}}}")

    inter = np.zeros((p, p), dtype=np.int64)
    np.add.at(inter, (c, g - 1), 1)
    csize = np.bincount(c, minlength=p)
    gsize = np.bincount(g - 1, minlength=p)
    union = csize[:, None] + gsize[None, :] - inter
    iou = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
    return _lex_optimal_assignment(iou) + 1


def segment_full(
    feats: np.ndarray,
    sim: Optional[SimilarityMaps],
    corr: Optional[CorrespondenceMap],
    p: int,
    positions: Optional[np.ndarray] = None,
    kmeans_seed: int = 0,
    sampling_seed: int = 0,
    anchor_sample: Optional[int] = 2048,
    cluster_on_sample: bool = False,
) -> Segmentation:
    """Cluster, anchor, assign.

    Without score maps this is label-free: only cluster_of is populated.
    cluster_on_sample=True clusters just the anchor subsample and propagates
    cluster ids to the rest via the nearest sampled point (by default the
    whole cloud is clustered and only the assignment uses the subsample).
    """
    f = np.asarray(feats, dtype=np.float64)
    n = f.shape[0]

    if sim is None:
        return Segmentation(cluster_of=kmeans(f, p, kmeans_seed))
    if corr is None or positions is None:
        raise InvalidInputError("labelled segmentation needs corr and positions")
    if len(sim.label_names) != p:
        raise InvalidInputError(
            f"{len(sim.label_names)} score planes for {p} target parts"
        )

    anchors, chosen = anchor_masks(sim, corr, positions, anchor_sample, sampling_seed)

    if cluster_on_sample:
        sub_assign = kmeans(f[chosen], p, kmeans_seed)
        cluster_of = np.empty(n, dtype=np.int64)
        cluster_of[chosen] = sub_assign
        rest = np.setdiff1d(np.arange(n), chosen, assume_unique=False)
        if rest.size:
            nn_idx, _ = knn(np.asarray(positions)[rest], np.asarray(positions)[chosen], 1)
            cluster_of[rest] = sub_assign[nn_idx[:, 0]]
    else:
        cluster_of = kmeans(f, p, kmeans_seed)

    label_of_cluster = hungarian_assign(
        cluster_of[chosen], anchors[chosen] + 1, p
    )
    return Segmentation(
        cluster_of=cluster_of,
        label_of_cluster=label_of_cluster,
        final_labels=label_of_cluster[cluster_of],
    )
