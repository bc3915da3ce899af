"""Run configuration: JSON file, overridable field by field from the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

from .aggregation import GfaConfig
from .errors import ConfigError
from .render import VIEWPOINT_KINDS

STAGE_FILES = {
    "views": "views.ftns",
    "corr": "corr.ftns",
    "points_used": "points_used.txt",
    "corr_used": "corr_used.ftns",
    "feats": "feats.ftns",
    "feats_gfa": "feats_gfa.ftns",
    "clusters": "clusters.ftns",
    "assignment": "assignment.ftns",
    "pred": "pred.txt",
    "report": "report.tsv",
}


@dataclass
class RunConfig:
    points: Optional[str] = None
    grids: Optional[str] = None          # stacked .ftns or a directory of per-view files
    sim_maps: Optional[str] = None
    out_dir: str = "out"

    views: str = "sphere48"
    radius: float = 2.2
    fov_deg: float = 60.0
    canvas: Tuple[int, int] = (224, 224)
    point_radius: float = 0.02
    mode: str = "depth"
    depth_polarity: str = "near_light"
    dump_images: bool = False

    p: int = 2
    part_names: Optional[List[str]] = None
    gfa: GfaConfig = field(default_factory=GfaConfig)

    fps_start: int = 0
    kmeans_seed: int = 0
    sampling_seed: int = 0
    sample_points: Optional[int] = 10000
    anchor_sample: Optional[int] = 2048
    cluster_on_sample: bool = False
    category: str = "object"

    def __post_init__(self):
        if isinstance(self.canvas, int):
            self.canvas = (self.canvas, self.canvas)
        self.canvas = (int(self.canvas[0]), int(self.canvas[1]))
        if self.views not in VIEWPOINT_KINDS:
            raise ConfigError(f"views: unknown kind {self.views!r}")
        if self.radius <= 1.0:
            raise ConfigError(f"radius: must exceed 1, got {self.radius}")
        if self.canvas[0] < 1 or self.canvas[1] < 1:
            raise ConfigError(f"canvas: must be >= 1x1, got {self.canvas}")
        if self.point_radius < 0:
            raise ConfigError(f"point_radius: must be >= 0, got {self.point_radius}")
        if self.mode not in ("depth", "rgb"):
            raise ConfigError(f"mode: expected depth or rgb, got {self.mode!r}")
        if self.depth_polarity not in ("near_light", "near_dark"):
            raise ConfigError(f"depth_polarity: got {self.depth_polarity!r}")
        if self.p < 1:
            raise ConfigError(f"p: must be >= 1, got {self.p}")
        if self.part_names is not None and len(self.part_names) != self.p:
            raise ConfigError(
                f"part_names: {len(self.part_names)} names for p={self.p}"
            )
        for name in ("sample_points", "anchor_sample"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name}: must be >= 1 or null, got {v}")

    def out_path(self, key: str) -> Path:
        return Path(self.out_dir) / STAGE_FILES[key]

    def labels(self) -> List[str]:
        return self.part_names or [f"part_{i + 1}" for i in range(self.p)]

    def require(self, *fields: str) -> None:
        """Fail early with the field name if a needed path is missing."""
        for f in fields:
            value = getattr(self, f)
            if value is None:
                raise ConfigError(f"{f}: required by this stage but not set")
            path = Path(value)
            if not path.exists():
                raise ConfigError(f"{f}: no such file or directory: {path}")


def load_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    """Build a RunConfig from an optional JSON file plus override dict.

    JSON uses the same field names; "seeds" and "paths" sub-objects are
    flattened ({"seeds": {"kmeans": 1}} sets kmeans_seed). CLI flags arrive
    through `overrides` and win over the file.
    """
    data = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config: no such file: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: {p}: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config: {p}: top level must be an object")
        seeds = raw.pop("seeds", {})
        for key, dest in (("fps_start", "fps_start"), ("kmeans", "kmeans_seed"),
                          ("sampling", "sampling_seed")):
            if key in seeds:
                raw[dest] = seeds[key]
        paths = raw.pop("paths", {})
        for key in ("points", "grids", "sim_maps", "out_dir"):
            if key in paths:
                raw[key] = paths[key]
        if "gfa" in raw:
            try:
                raw["gfa"] = GfaConfig(**raw["gfa"])
            except TypeError as exc:
                raise ConfigError(f"config: gfa: {exc}") from None
        data.update(raw)
    if overrides:
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
    gfa_overrides = {k[4:]: data.pop(k) for k in list(data) if k.startswith("gfa_")}
    if gfa_overrides:
        base = data.get("gfa", GfaConfig())
        merged = {**base.__dict__, **gfa_overrides}
        data["gfa"] = GfaConfig(**merged)
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from None
