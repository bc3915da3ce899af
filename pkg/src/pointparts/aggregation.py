"""Two-stage feature refinement through super points.

A set of super points (farthest point sampling over coordinates) summarizes
the cloud. The spatial stage averages each super point's coordinate-space
neighborhood and re-expresses every other point through its nearest super
points in coordinate space; the semantic stage does the same with neighbor
retrieval in feature space, so far-apart points with similar features (the
two armrests of a chair) exchange information. Every step is a convex
combination, so outputs stay inside the per-coordinate bounds of the inputs
and constant features are a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import farthest_point_sampling, knn
from .errors import InvalidArgumentError, InvalidInputError

INV_DIST_EPS = 1e-8


@dataclass
class GfaConfig:
    m_superpoints: int = 256
    k_spatial: int = 10
    k_semantic: int = 90
    k_prime: int = 3          # super points blended into each point
    weight_by_distance: bool = False
    order: str = "spatial_first"          # or semantic_first
    interp_space: str = "feature"         # metric for the semantic blend step

    def __post_init__(self):
        if self.m_superpoints < 1:
            raise InvalidArgumentError("m_superpoints must be >= 1")
        if self.k_spatial < 1 or self.k_semantic < 1 or self.k_prime < 1:
            raise InvalidArgumentError("neighbor counts must be >= 1")
        if self.k_prime > self.m_superpoints:
            raise InvalidArgumentError("k_prime cannot exceed m_superpoints")
        if self.order not in ("spatial_first", "semantic_first"):
            raise InvalidArgumentError(f"unknown order {self.order!r}")
        if self.interp_space not in ("feature", "coordinate"):
            raise InvalidArgumentError(f"unknown interp_space {self.interp_space!r}")


def _neighbor_mean(values, nn_idx, nn_dist, weighted):
    if not weighted:
        return values[nn_idx].mean(axis=1)
    wgt = 1.0 / (INV_DIST_EPS + nn_dist)
    wgt = wgt / wgt.sum(axis=1, keepdims=True)
    return np.einsum("qk,qkd->qd", wgt, values[nn_idx])


def _check(positions, feats, cfg):
    pos = np.asarray(positions, dtype=np.float64)
    f = np.asarray(feats, dtype=np.float64)
    if pos.ndim != 2 or f.ndim != 2 or pos.shape[0] != f.shape[0]:
        raise InvalidInputError("positions and feats must be (N, 3) and (N, d)")
    if not np.isfinite(f).all():
        raise InvalidInputError("features contain NaN or Inf")
    if cfg.m_superpoints > pos.shape[0]:
        raise InvalidArgumentError(
            f"m_superpoints={cfg.m_superpoints} exceeds N={pos.shape[0]}"
        )
    return pos, f


def spatial_aggregate(
    positions: np.ndarray,
    feats: np.ndarray,
    cfg: GfaConfig,
    fps_start: int = 0,
) -> np.ndarray:
    """Coordinate-space stage: super point means, then nearest-super blend.

    Super point features are the mean of their k_spatial nearest points in
    coordinate space (the super point is its own nearest neighbor and is
    included). Non-super points take the mean of their k_prime nearest super
    points in coordinate space; super points keep their own updated feature.
    """
    pos, f = _check(positions, feats, cfg)
    centroids = farthest_point_sampling(pos, cfg.m_superpoints, fps_start).indices

    nn_idx, nn_dist = knn(pos[centroids], pos, cfg.k_spatial)
    centroid_feats = _neighbor_mean(f, nn_idx, nn_dist, cfg.weight_by_distance)

    cn_idx, cn_dist = knn(pos, pos[centroids], cfg.k_prime)
    out = _neighbor_mean(centroid_feats, cn_idx, cn_dist, cfg.weight_by_distance)
    out[centroids] = centroid_feats
    return out


def semantic_aggregate(
    positions: np.ndarray,
    feats: np.ndarray,
    cfg: GfaConfig,
    fps_start: int = 0,
) -> np.ndarray:
    """Feature-space stage: super points are still sampled over coordinates,
    but their k_semantic neighborhoods and (by default) the final k_prime
    blend are retrieved in feature space. cfg.interp_space switches the blend
    metric back to coordinates for comparison runs.
    """
    pos, f = _check(positions, feats, cfg)
    centroids = farthest_point_sampling(pos, cfg.m_superpoints, fps_start).indices

    nn_idx, nn_dist = knn(f[centroids], f, cfg.k_semantic)
    centroid_feats = _neighbor_mean(f, nn_idx, nn_dist, cfg.weight_by_distance)

    if cfg.interp_space == "feature":
        cn_idx, cn_dist = knn(f, f[centroids], cfg.k_prime)
    else:
        cn_idx, cn_dist = knn(pos, pos[centroids], cfg.k_prime)
    out = _neighbor_mean(centroid_feats, cn_idx, cn_dist, cfg.weight_by_distance)
    out[centroids] = centroid_feats
    return out


def aggregate(
    positions: np.ndarray,
    feats: np.ndarray,
    cfg: GfaConfig,
    fps_start: int = 0,
) -> np.ndarray:
    """Run both stages in cfg.order (spatial before semantic by default)."""
    if cfg.order == "spatial_first":
        mid = spatial_aggregate(positions, feats, cfg, fps_start)
        return semantic_aggregate(positions, mid, cfg, fps_start)
    mid = semantic_aggregate(positions, feats, cfg, fps_start)
    return spatial_aggregate(positions, mid, cfg, fps_start)
