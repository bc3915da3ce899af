"""Per-view tensor export for the 3D part-segmentation pipeline."""

from .backbones import StubBackbone, load_backbone, load_similarity
from .manifest import ExportManifest

__version__ = "0.1.0"
