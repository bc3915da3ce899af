"""Point-cloud container and the geometric primitives everything else uses.

The cloud is a plain dataclass around float64 arrays. Sampling and neighbor
queries are exact and deterministic: ties are always broken by the smallest
index so results can be asserted bit-for-bit against brute-force references.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError

# Direct coordinate differences are used for distance computations up to this
# many multiply-adds; above it the expanded |a|^2+|b|^2-2ab form (clipped at 0)
# keeps memory flat. Ties between duplicate rows are preserved by either path.
_DIRECT_BUDGET = 1 << 26


@dataclass
class PointCloud:
    """N points with positions and optional per-point color / part label.

    positions: (N, 3) float64, finite.
    colors: optional (N, 3) float64 in [0, 1].
    gt_labels: optional (N,) integer part ids in {1..P}.
    category: optional free-form tag used by the metrics grouping.
    """

    positions: np.ndarray
    colors: Optional[np.ndarray] = None
    gt_labels: Optional[np.ndarray] = None
    category: Optional[str] = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise InvalidInputError(
                f"positions must be (N, 3), got {self.positions.shape}"
            )
        if self.positions.shape[0] < 1:
            raise InvalidInputError("a point cloud needs at least one point")
        if not np.isfinite(self.positions).all():
            raise InvalidInputError("positions contain NaN or Inf")
        n = self.positions.shape[0]
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.float64)
            if self.colors.shape != (n, 3):
                raise InvalidInputError(
                    f"colors must be ({n}, 3), got {self.colors.shape}"
                )
            if not np.isfinite(self.colors).all():
                raise InvalidInputError("colors contain NaN or Inf")
            if self.colors.min() < 0.0 or self.colors.max() > 1.0:
                raise InvalidInputError("colors must lie in [0, 1]")
        if self.gt_labels is not None:
            self.gt_labels = np.asarray(self.gt_labels, dtype=np.int64)
            if self.gt_labels.shape != (n,):
                raise InvalidInputError(
                    f"gt_labels must be ({n},), got {self.gt_labels.shape}"
                )
            if self.gt_labels.min() < 1:
                raise InvalidInputError("gt labels are 1-based positive integers")

    @property
    def n_points(self) -> int:
        return self.positions.shape[0]

    def subset(self, indices: np.ndarray) -> "PointCloud":
        """New cloud restricted to `indices` (order preserved)."""
        idx = np.asarray(indices, dtype=np.int64)
        return PointCloud(
            positions=self.positions[idx],
            colors=None if self.colors is None else self.colors[idx],
            gt_labels=None if self.gt_labels is None else self.gt_labels[idx],
            category=self.category,
        )


@dataclass
class IndexSet:
    """Ordered, duplicate-free indices into a referenced cloud."""

    indices: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.indices.ndim != 1:
            raise InvalidInputError("indices must be a flat sequence")
        if len(np.unique(self.indices)) != self.indices.size:
            raise InvalidInputError("duplicate indices")
        if self.indices.size and self.indices.min() < 0:
            raise InvalidInputError("negative index")

    def __len__(self) -> int:
        return int(self.indices.size)


def normalize_unit_sphere(pc: PointCloud) -> PointCloud:
    """Center the cloud on its centroid and scale the farthest point to norm 1.

    An all-coincident cloud collapses to all-zeros instead of erroring so
    degenerate synthetic cases can flow through the pipeline. Colors and
    labels pass through untouched.
    """
    if (pc.positions == pc.positions[0]).all():
        # exactly coincident: the mean may round away from the shared value,
        # and dividing by that residue would blow noise up to unit scale
        return replace(pc, positions=np.zeros_like(pc.positions))
    centered = pc.positions - pc.positions.mean(axis=0)
    max_norm = float(np.linalg.norm(centered, axis=1).max())
    if max_norm > 0.0:
        centered = centered / max_norm
    return replace(pc, positions=centered)


def farthest_point_sampling(points: np.ndarray, m: int, start: int = 0) -> IndexSet:
    """Greedy farthest point sampling over Euclidean distance.

    The first index is `start`; each following pick maximizes the minimum
    distance to everything picked so far, ties going to the smallest index.
    Deterministic, exact, works for any point dimension.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise InvalidInputError(f"points must be (N, D), got {pts.shape}")
    n = pts.shape[0]
    if not 1 <= m <= n:
        raise InvalidArgumentError(f"m must be in [1, {n}], got {m}")
    if not 0 <= start < n:
        raise InvalidArgumentError(f"start must be in [0, {n}), got {start}")

    chosen = np.empty(m, dtype=np.int64)
    chosen[0] = start
    min_d2 = ((pts - pts[start]) ** 2).sum(axis=1)
    for i in range(1, m):
        nxt = int(np.argmax(min_d2))  # argmax returns the first (smallest) index on ties
        chosen[i] = nxt
        np.minimum(min_d2, ((pts - pts[nxt]) ** 2).sum(axis=1), out=min_d2)
    return IndexSet(chosen)


def _pairwise_sq_dists(queries: np.ndarray, corpus: np.ndarray) -> np.ndarray:
    q, c, d = queries.shape[0], corpus.shape[0], corpus.shape[1]
    if q * c * d <= _DIRECT_BUDGET:
        diff = queries[:, None, :] - corpus[None, :, :]
        return np.einsum("qcd,qcd->qc", diff, diff)
    # expanded form; clip tiny negative round-off at zero
    qn = np.einsum("qd,qd->q", queries, queries)
    cn = np.einsum("cd,cd->c", corpus, corpus)
    d2 = qn[:, None] + cn[None, :] - 2.0 * (queries @ corpus.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def knn(
    queries: np.ndarray,
    corpus: np.ndarray,
    k: int,
    exclude_self: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbors of each query row in the corpus.

    Returns (indices, distances), both (Q, k), rows sorted ascending by
    distance with ties broken by the smaller corpus index. `exclude_self`
    drops corpus row i from query i's result (queries must then be the
    corpus, row for row).
    """
    qs = np.asarray(queries, dtype=np.float64)
    cs = np.asarray(corpus, dtype=np.float64)
    if qs.ndim != 2 or cs.ndim != 2 or qs.shape[1] != cs.shape[1]:
        raise InvalidInputError("queries and corpus must be 2-D with equal width")
    c = cs.shape[0]
    limit = c - 1 if exclude_self else c
    if not 1 <= k <= limit:
        raise InvalidArgumentError(f"k must be in [1, {limit}], got {k}")
    if exclude_self and qs.shape[0] != c:
        raise InvalidArgumentError("exclude_self requires queries == corpus rows")

    idx_out = np.empty((qs.shape[0], k), dtype=np.int64)
    dist_out = np.empty((qs.shape[0], k), dtype=np.float64)
    # chunk queries so the distance block stays small
    chunk = max(1, _DIRECT_BUDGET // max(1, c * cs.shape[1]))
    for lo in range(0, qs.shape[0], chunk):
        hi = min(lo + chunk, qs.shape[0])
        d2 = _pairwise_sq_dists(qs[lo:hi], cs)
        if exclude_self:
            d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        idx_out[lo:hi] = order
        dist_out[lo:hi] = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return idx_out, dist_out
