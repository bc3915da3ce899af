"""Training-free 3D part segmentation.

Render a point cloud from fixed viewpoints, lift per-pixel features back
onto the points through the rasterizer's pixel-to-point correspondence,
refine them with spatial and semantic aggregation through super points,
split the cloud into parts by clustering, and name the parts by optimal
matching against back-projected label scores.
"""

from .aggregation import GfaConfig, aggregate, semantic_aggregate, spatial_aggregate
from .cloud import (
    IndexSet,
    PointCloud,
    farthest_point_sampling,
    knn,
    normalize_unit_sphere,
)
from .errors import (
    ConfigError,
    InvalidArgumentError,
    InvalidInputError,
    PointpartsError,
    UnrecoverableInputError,
)
from .features import PointFeatures, backproject, bicubic_upsample, fill_hidden
from .metrics import EvalRecord, a_iou, dataset_metrics, object_miou
from .render import (
    Camera,
    CorrespondenceMap,
    RenderedView,
    project,
    rasterize,
    render_all,
    viewpoint_set,
)
from .segmentation import (
    Segmentation,
    SimilarityMaps,
    anchor_masks,
    anchor_scores,
    hungarian_assign,
    kmeans,
    oracle_match,
    segment_full,
)
from .synthetic import SynthSpec, synth_cloud, synth_feature_grids, synth_features, synth_sim_maps

__version__ = "0.1.0"
