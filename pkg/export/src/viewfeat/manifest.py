"""Export manifest: what ran, over which views, into which files."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional


@dataclass
class ExportManifest:
    model: str = "stub-vit-base-14"
    layer: int = -1
    patch_size: int = 14
    canvas: int = 224
    d: Optional[int] = None
    prompts: List[str] = field(default_factory=list)
    views: List[dict] = field(default_factory=list)  # {image, features?, similarity?}

    @classmethod
    def load(cls, path):
        raw = json.loads(Path(path).read_text())
        known = {k: raw[k] for k in cls.__dataclass_fields__ if k in raw}
        return cls(**known)

    def save(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n")

    def view_entry(self, image_path):
        key = str(image_path)
        for entry in self.views:
            if entry.get("image") == key:
                return entry
        entry = {"image": key}
        self.views.append(entry)
        return entry
