"""Catmull-Rom bicubic upsampling for patch-level score grids."""

import numpy as np

A = -0.5


def _kernel(t):
    at = np.abs(t)
    near = (A + 2) * at ** 3 - (A + 3) * at ** 2 + 1
    far = A * at ** 3 - 5 * A * at ** 2 + 8 * A * at - 4 * A
    return np.where(at <= 1, near, np.where(at < 2, far, 0.0))


def _axis_matrix(n_in, n_out):
    x = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(x).astype(int)
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for tap in (-1, 0, 1, 2):
        idx = base + tap
        np.add.at(mat, (rows, np.clip(idx, 0, n_in - 1)), _kernel(x - idx))
    return mat


def upsample(grid, out_h, out_w):
    """(h, w, c) -> (out_h, out_w, c); identity when sizes already match."""
    g = np.asarray(grid, dtype=np.float64)
    if g.shape[:2] == (out_h, out_w):
        return g
    rows = np.eye(g.shape[0]) if g.shape[0] == out_h else _axis_matrix(g.shape[0], out_h)
    cols = np.eye(g.shape[1]) if g.shape[1] == out_w else _axis_matrix(g.shape[1], out_w)
    tmp = np.tensordot(rows, g, axes=(1, 0))
    return np.ascontiguousarray(np.tensordot(cols, tmp, axes=(1, 1)).transpose(1, 0, 2))
