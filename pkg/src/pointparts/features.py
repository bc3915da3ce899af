"""Pixel features to point features.

Patch grids are upsampled to the canvas with Catmull-Rom bicubic filtering,
looked up at each point's recorded correspondence pixel, and averaged across
views. Points no view ever saw are filled from their nearest visible
neighbors in 3D.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .cloud import knn
from .errors import InvalidArgumentError, InvalidInputError, UnrecoverableInputError
from .render import CorrespondenceMap

CATMULL_ROM_A = -0.5


@dataclass
class PointFeatures:
    """(N, d) float64 features plus how they were produced."""

    data: np.ndarray
    provenance: str = "backprojected"  # backprojected | filled | aggregated
    hidden: np.ndarray = None  # (N,) bool, True where no view contributed

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise InvalidInputError(f"features must be (N, d), got {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise InvalidInputError("features contain NaN or Inf")
        if self.hidden is None:
            self.hidden = np.zeros(self.data.shape[0], dtype=bool)
        self.hidden = np.asarray(self.hidden, dtype=bool)


def _cubic_kernel(t: np.ndarray) -> np.ndarray:
    """Keys cubic convolution kernel with a = -0.5 (Catmull-Rom)."""
    a = CATMULL_ROM_A
    at = np.abs(t)
    at2 = at * at
    at3 = at2 * at
    near = (a + 2.0) * at3 - (a + 3.0) * at2 + 1.0
    far = a * at3 - 5.0 * a * at2 + 8.0 * a * at - 4.0 * a
    return np.where(at <= 1.0, near, np.where(at < 2.0, far, 0.0))


def _interp_matrix(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) dense Catmull-Rom interpolation matrix.

    Output sample p reads input coordinate (p + 0.5) * n_in / n_out - 0.5
    (half-pixel alignment); the four taps use clamped indices, so weights of
    taps that clamp onto the same border sample accumulate.
    """
    x = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(x).astype(np.int64)
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for tap in (-1, 0, 1, 2):
        idx = base + tap
        wgt = _cubic_kernel(x - idx)
        np.add.at(mat, (rows, np.clip(idx, 0, n_in - 1)), wgt)
    return mat


def bicubic_upsample(patches: np.ndarray, out_hw: Tuple[int, int]) -> np.ndarray:
    """Resample an (h, w, d) grid to (H, W, d) with Catmull-Rom bicubic.

    Separable along rows then columns; constants are reproduced (to float
    round-off) and identical input/output sizes are the identity.
    """
    grid = np.asarray(patches, dtype=np.float64)
    if grid.ndim == 2:
        grid = grid[:, :, None]
    if grid.ndim != 3 or grid.shape[0] < 1 or grid.shape[1] < 1:
        raise InvalidInputError(f"patches must be (h, w, d), got {grid.shape}")
    out_h, out_w = int(out_hw[0]), int(out_hw[1])
    if out_h < 1 or out_w < 1:
        raise InvalidArgumentError(f"output size must be >= 1x1, got {out_hw}")

    h, w = grid.shape[:2]
    row_mat = np.eye(h) if out_h == h else _interp_matrix(h, out_h)
    col_mat = np.eye(w) if out_w == w else _interp_matrix(w, out_w)
    tmp = np.tensordot(row_mat, grid, axes=(1, 0))          # (H, w, d)
    out = np.tensordot(col_mat, tmp, axes=(1, 1))           # (W, H, d)
    return np.ascontiguousarray(out.transpose(1, 0, 2))


def accumulate_over_views(
    per_view_grids: Iterable[np.ndarray],
    corr: CorrespondenceMap,
) -> Tuple[np.ndarray, np.ndarray]:
    """Sum each point's pixel values over the views that recorded it.

    Grids may arrive as a generator; only one (H, W, d) block is held at a
    time. Returns (sums (N, d), counts (N,)).
    """
    sums = None
    counts = np.zeros(corr.n_points, dtype=np.int64)
    r = -1
    for r, grid in enumerate(per_view_grids):
        g = np.asarray(grid, dtype=np.float64)
        if g.ndim == 2:
            g = g[:, :, None]
        if g.shape[0] != corr.height or g.shape[1] != corr.width:
            raise InvalidInputError(
                f"view {r}: grid is {g.shape[:2]}, canvas is "
                f"({corr.height}, {corr.width})"
            )
        if sums is None:
            sums = np.zeros((corr.n_points, g.shape[2]))
        elif g.shape[2] != sums.shape[1]:
            raise InvalidInputError(
                f"view {r}: feature dim {g.shape[2]} != {sums.shape[1]}"
            )
        pts, vs, us = corr.view_entries(r)
        if pts.size:
            sums[pts] += g[vs, us]
            counts[pts] += 1
    if r + 1 != corr.n_views:
        raise InvalidInputError(f"got {r + 1} grids for {corr.n_views} views")
    if sums is None:
        raise InvalidInputError("no views to accumulate")
    return sums, counts


def backproject(
    per_view_grids: Iterable[np.ndarray],
    corr: CorrespondenceMap,
) -> PointFeatures:
    """Average each point's feature over its recorded pixels across views.

    Points visible in no view get a zero vector and are marked hidden.
    """
    sums, counts = accumulate_over_views(per_view_grids, corr)
    hidden = counts == 0
    feats = sums / np.maximum(counts, 1)[:, None]
    return PointFeatures(data=feats, provenance="backprojected", hidden=hidden)


def fill_hidden(
    positions: np.ndarray,
    feats: PointFeatures,
    l_neighbors: int = 20,
) -> PointFeatures:
    """Replace hidden features by the mean over the nearest visible points.

    Only visible points serve as donors; if fewer than `l_neighbors` exist
    they are all used. Visible points pass through unchanged.
    """
    hidden = feats.hidden
    if not hidden.any():
        return PointFeatures(feats.data.copy(), "filled", np.zeros_like(hidden))
    visible = np.flatnonzero(~hidden)
    if visible.size == 0:
        raise UnrecoverableInputError("every point is hidden; nothing to fill from")
    if l_neighbors < 1:
        raise InvalidArgumentError("l_neighbors must be >= 1")

    pos = np.asarray(positions, dtype=np.float64)
    k = min(l_neighbors, visible.size)
    nn_idx, _ = knn(pos[hidden], pos[visible], k)
    out = feats.data.copy()
    out[hidden] = feats.data[visible][nn_idx].mean(axis=1)
    return PointFeatures(out, "filled", np.zeros_like(hidden))
