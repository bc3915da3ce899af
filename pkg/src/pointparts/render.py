"""Deterministic software point rasterizer.

Cameras sit on a sphere around the normalized object and look at the origin.
Each point splats a screen-space disk; per pixel the nearest point wins the
z-buffer (ties to the smallest point index). A point's correspondence pixel
is its projected center pixel, recorded only when the point also owns that
pixel, so back-projection never reads an occluded feature.

Conventions, fixed for reproducibility:
  - pinhole perspective, vertical fov, square pixels;
  - (0, 0) is the center of the top-left pixel; +u right, +v down;
  - depth is distance along the view axis; points at or behind the camera
    are flagged invalid and skipped;
  - the center pixel is the nearest pixel to the projected point (numpy
    rounding, ties to even);
  - point_radius is in normalized-device units where the shorter canvas
    side spans [-1, 1], i.e. radius_px = point_radius * min(H, W) / 2;
  - depth images are min-max normalized over foreground pixels; under
    near_light the closest point maps to 1 and background is 0, under
    near_dark the closest maps to 0 and background is 1. A view whose
    foreground is a single depth maps it all to the "near" extreme.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .cloud import PointCloud
from .errors import InvalidArgumentError, InvalidInputError

DEFAULT_FOV_DEG = 60.0
DEFAULT_RADIUS = 2.2
DEFAULT_CANVAS = (224, 224)

VIEWPOINT_KINDS = ("ortho6", "pc2_10", "sphere48")


@dataclass
class Camera:
    position: np.ndarray                 # (3,) on the camera sphere
    up: np.ndarray                       # (3,) not parallel to the view axis
    fov_deg: float = DEFAULT_FOV_DEG
    canvas: Tuple[int, int] = DEFAULT_CANVAS  # (H, W)
    look_at: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.up = np.asarray(self.up, dtype=np.float64)
        self.look_at = np.asarray(self.look_at, dtype=np.float64)
        if self.canvas[0] < 1 or self.canvas[1] < 1:
            raise InvalidArgumentError(f"canvas must be >= 1x1, got {self.canvas}")
        view = self.look_at - self.position
        norm = np.linalg.norm(view)
        if norm == 0.0:
            raise InvalidArgumentError("camera position equals look_at")
        cosang = abs(float(np.dot(view / norm, self.up / np.linalg.norm(self.up))))
        if cosang > 1.0 - 1e-12:
            raise InvalidArgumentError("up vector is parallel to the view direction")

    def basis(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Right-handed camera basis (x right, y up, z backward)."""
        z = self.position - self.look_at
        z = z / np.linalg.norm(z)
        x = np.cross(self.up, z)
        x = x / np.linalg.norm(x)
        y = np.cross(z, x)
        return x, y, z


@dataclass
class RenderedView:
    image: np.ndarray       # (H, W) depth in [0,1] or (H, W, 3) rgb in [0,1]
    owner: np.ndarray       # (H, W) int64 point index, -1 for background
    camera: Camera


@dataclass
class CorrespondenceMap:
    """Per view and per point, the owned center pixel as a flat index (v*W+u).

    pixels: (R, N) int64, -1 where the point has no pixel in that view.
    """

    pixels: np.ndarray
    height: int
    width: int

    @property
    def n_views(self) -> int:
        return self.pixels.shape[0]

    @property
    def n_points(self) -> int:
        return self.pixels.shape[1]

    @property
    def visibility(self) -> np.ndarray:
        """(N,) bool: visible in at least one view."""
        return (self.pixels >= 0).any(axis=0)

    def view_entries(self, r: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Indices of points visible in view r and their (v, u) pixel coords."""
        pts = np.flatnonzero(self.pixels[r] >= 0)
        flat = self.pixels[r, pts]
        return pts, flat // self.width, flat % self.width


def _fibonacci_directions(n: int) -> np.ndarray:
    """n unit directions on a Fibonacci spiral (offset 1/2, golden angle)."""
    i = np.arange(n, dtype=np.float64)
    y = 1.0 - 2.0 * (i + 0.5) / n
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    rho = np.sqrt(np.maximum(0.0, 1.0 - y * y))
    return np.stack([rho * np.cos(phi), y, rho * np.sin(phi)], axis=1)


def viewpoint_set(
    kind: str,
    radius: float = DEFAULT_RADIUS,
    fov_deg: float = DEFAULT_FOV_DEG,
    canvas: Tuple[int, int] = DEFAULT_CANVAS,
) -> List[Camera]:
    """Fixed camera layouts, all looking at the origin.

    ortho6: the axis directions in the order front(+z), back(-z), left(-x),
    right(+x), top(+y), bottom(-y). pc2_10: ortho6 plus four oblique cameras
    at 35 degrees elevation, azimuths 45/135/225/315 measured from +z toward
    +x. sphere48: 48 directions on a Fibonacci spiral. Cameras on the y axis
    use +z as the up vector, everything else uses +y.
    """
    if radius <= 1.0:
        raise InvalidArgumentError(f"camera radius must exceed 1, got {radius}")

    def cam(direction) -> Camera:
        d = np.asarray(direction, dtype=np.float64)
        d = d / np.linalg.norm(d)
        up = np.array([0.0, 0.0, 1.0]) if abs(d[1]) > 0.999 else np.array([0.0, 1.0, 0.0])
        return Camera(position=radius * d, up=up, fov_deg=fov_deg, canvas=canvas)

    if kind == "ortho6":
        dirs = [(0, 0, 1), (0, 0, -1), (-1, 0, 0), (1, 0, 0), (0, 1, 0), (0, -1, 0)]
        return [cam(d) for d in dirs]
    if kind == "pc2_10":
        cams = viewpoint_set("ortho6", radius, fov_deg, canvas)
        el = math.radians(35.0)
        for az_deg in (45.0, 135.0, 225.0, 315.0):
            az = math.radians(az_deg)
            d = (math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az))
            cams.append(cam(d))
        return cams
    if kind == "sphere48":
        return [cam(d) for d in _fibonacci_directions(48)]
    raise InvalidArgumentError(f"unknown viewpoint kind {kind!r}; expected one of {VIEWPOINT_KINDS}")


def project(camera: Camera, positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Perspective-project points: returns (uv (N,2), depth (N,), valid (N,)).

    Depth is the distance along the view axis; points at or behind the
    camera plane come back with valid=False (their uv is meaningless).
    """
    pts = np.asarray(positions, dtype=np.float64)
    x_axis, y_axis, z_axis = camera.basis()
    rel = pts - camera.position
    qx = rel @ x_axis
    qy = rel @ y_axis
    depth = -(rel @ z_axis)
    valid = depth > 1e-12

    h, w = camera.canvas
    focal = (h / 2.0) / math.tan(math.radians(camera.fov_deg) / 2.0)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    safe = np.where(valid, depth, 1.0)
    u = cx + focal * qx / safe
    v = cy - focal * qy / safe
    return np.stack([u, v], axis=1), depth, valid


def _splat_offsets(radius_px: float) -> np.ndarray:
    """Candidate (dv, du) offsets around the center pixel that a disk of
    radius_px could reach; the exact per-point test happens later."""
    r = int(math.ceil(radius_px + 0.5))
    dv, du = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    reach = np.maximum(np.abs(dv) - 0.5, 0.0) ** 2 + np.maximum(np.abs(du) - 0.5, 0.0) ** 2
    keep = reach <= radius_px * radius_px
    keep[r, r] = False  # the center pixel is handled unconditionally
    return np.stack([dv[keep], du[keep]], axis=1)


def rasterize(
    pc: PointCloud,
    camera: Camera,
    point_radius: float = 0.0,
    mode: str = "depth",
    depth_polarity: str = "near_light",
) -> Tuple[RenderedView, np.ndarray]:
    """Render one view; returns the view and each point's owned center pixel.

    The returned pixel array is (N,) int64 flat indices (v*W+u), -1 when the
    point is invalid, projects off-canvas, or lost its center pixel to a
    nearer point.
    """
    if mode not in ("depth", "rgb"):
        raise InvalidArgumentError(f"mode must be depth or rgb, got {mode!r}")
    if depth_polarity not in ("near_light", "near_dark"):
        raise InvalidArgumentError(f"unknown depth polarity {depth_polarity!r}")
    if mode == "rgb" and pc.colors is None:
        raise InvalidInputError("rgb mode requires point colors")
    if point_radius < 0:
        raise InvalidArgumentError("point_radius must be >= 0")

    h, w = camera.canvas
    n = pc.n_points
    uv, depth, valid = project(camera, pc.positions)
    u, v = uv[:, 0], uv[:, 1]
    cu = np.round(u).astype(np.int64)
    cv = np.round(v).astype(np.int64)

    radius_px = point_radius * min(h, w) / 2.0

    # gather candidate (pixel, point) pairs: center pixels plus disk pixels
    pix_list = []
    pt_list = []
    center_in = valid & (cu >= 0) & (cu < w) & (cv >= 0) & (cv < h)
    pix_list.append(cv[center_in] * w + cu[center_in])
    pt_list.append(np.flatnonzero(center_in))

    offsets = _splat_offsets(radius_px) if radius_px > 0 else np.zeros((0, 2), np.int64)
    vidx = np.flatnonzero(valid)
    for dv, du in offsets:
        pv = cv[vidx] + dv
        pu = cu[vidx] + du
        inside = (pu >= 0) & (pu < w) & (pv >= 0) & (pv < h)
        # exact disk test against the continuous projected center
        dist2 = (pu - u[vidx]) ** 2 + (pv - v[vidx]) ** 2
        keep = inside & (dist2 <= radius_px * radius_px)
        pix_list.append(pv[keep] * w + pu[keep])
        pt_list.append(vidx[keep])

    pix = np.concatenate(pix_list)
    pts = np.concatenate(pt_list)

    # z-buffer pass 1: minimum depth per pixel; pass 2: smallest index among
    # the points achieving that depth
    dbuf = np.full(h * w, np.inf)
    np.minimum.at(dbuf, pix, depth[pts])
    obuf = np.full(h * w, n, dtype=np.int64)
    winners = depth[pts] == dbuf[pix]
    np.minimum.at(obuf, pix[winners], pts[winners])
    owner = np.where(obuf < n, obuf, -1).reshape(h, w)

    # correspondence: the center pixel, gated by ownership
    point_pixel = np.full(n, -1, dtype=np.int64)
    flat_center = cv * w + cu
    owned = center_in & (obuf[np.where(center_in, flat_center, 0)] == np.arange(n))
    point_pixel[owned] = flat_center[owned]

    fg = obuf < n
    if mode == "depth":
        image = np.zeros(h * w) if depth_polarity == "near_light" else np.ones(h * w)
        if fg.any():
            dmin = dbuf[fg].min()
            dmax = dbuf[fg].max()
            if dmax > dmin:
                near01 = (dmax - dbuf[fg]) / (dmax - dmin)
            else:
                near01 = np.ones(int(fg.sum()))
            image[fg] = near01 if depth_polarity == "near_light" else 1.0 - near01
        image = image.reshape(h, w)
    else:
        image = np.zeros((h * w, 3))
        image[fg] = pc.colors[obuf[fg]]
        image = image.reshape(h, w, 3)

    return RenderedView(image=image, owner=owner, camera=camera), point_pixel


def _render_one(args):
    pc, camera, point_radius, mode, depth_polarity = args
    return rasterize(pc, camera, point_radius, mode, depth_polarity)


def render_all(
    pc: PointCloud,
    cameras: List[Camera],
    point_radius: float = 0.0,
    mode: str = "depth",
    depth_polarity: str = "near_light",
    workers: Optional[int] = None,
) -> Tuple[List[RenderedView], CorrespondenceMap]:
    """Render every camera and assemble the correspondence map.

    Views are independent; POINTPARTS_WORKERS (or `workers`) > 1 renders them
    in a process pool. Results are assembled in camera order either way.
    """
    if workers is None:
        workers = int(os.environ.get("POINTPARTS_WORKERS", "1"))
    if not cameras:
        return [], CorrespondenceMap(
            pixels=np.full((0, pc.n_points), -1, dtype=np.int64), height=0, width=0
        )
    canvas = cameras[0].canvas
    if any(c.canvas != canvas for c in cameras):
        raise InvalidInputError("all cameras in one pass must share a canvas")

    jobs = [(pc, c, point_radius, mode, depth_polarity) for c in cameras]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_render_one, jobs))
    else:
        results = [_render_one(j) for j in jobs]

    views = [r[0] for r in results]
    pixels = np.stack([r[1] for r in results], axis=0)
    return views, CorrespondenceMap(pixels=pixels, height=canvas[0], width=canvas[1])
