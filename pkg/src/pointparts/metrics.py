"""Part-segmentation scoring.

Per object: IoU per part over the category's full part schema, with the
empty-union convention IoU = 1 (a part absent from both prediction and
ground truth is scored as agreed). Dataset level: instance average (mean
over all objects) and class average (mean of per-category means). The
pooled variant sums intersections and unions per part across a group before
dividing, which rewards consistency on large parts differently than the
per-object mean; reports label it separately so the two are never confused.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError


@dataclass
class EvalRecord:
    category: str
    per_part_iou: np.ndarray          # (p,) in [0, 1]
    object_miou: float
    per_part_intersection: np.ndarray = field(default=None, repr=False)  # (p,) ints
    per_part_union: np.ndarray = field(default=None, repr=False)         # (p,) ints


def object_miou(pred, gt, p: int, category: str = "") -> EvalRecord:
    """Score one object: per-part IoU and their mean over all p parts."""
    pr = np.asarray(pred, dtype=np.int64)
    g = np.asarray(gt, dtype=np.int64)
    if pr.shape != g.shape or pr.ndim != 1:
        raise InvalidInputError(
            f"pred and gt must be equal-length vectors, got {pr.shape} vs {g.shape}"
        )
    if pr.size == 0:
        raise InvalidInputError("empty label vectors")
    for name, arr in (("pred", pr), ("gt", g)):
        if arr.min() < 1 or arr.max() > p:
            raise InvalidInputError(f"{name} labels must lie in {{1..{p}}}")

    inter = np.empty(p, dtype=np.int64)
    union = np.empty(p, dtype=np.int64)
    for j in range(1, p + 1):
        in_pred = pr == j
        in_gt = g == j
        inter[j - 1] = int((in_pred & in_gt).sum())
        union[j - 1] = int((in_pred | in_gt).sum())
    iou = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
    return EvalRecord(
        category=category,
        per_part_iou=iou,
        object_miou=float(iou.mean()),
        per_part_intersection=inter,
        per_part_union=union,
    )


def dataset_metrics(records: Sequence[EvalRecord]) -> Tuple[float, float]:
    """(instance average, class average) of the per-object mIoU."""
    if not records:
        raise InvalidInputError("no records to aggregate")
    miou_instance = float(np.mean([r.object_miou for r in records]))
    by_cat: Dict[str, List[float]] = {}
    for r in records:
        by_cat.setdefault(r.category, []).append(r.object_miou)
    miou_class = float(np.mean([np.mean(v) for v in by_cat.values()]))
    return miou_instance, miou_class


def _pooled_aiou(records: Sequence[EvalRecord]) -> float:
    """Mean over part slots of (sum of intersections / sum of unions)."""
    width = max(r.per_part_iou.size for r in records)
    inter = np.zeros(width, dtype=np.int64)
    union = np.zeros(width, dtype=np.int64)
    for r in records:
        if r.per_part_intersection is None or r.per_part_union is None:
            raise InvalidInputError("records lack intersection/union counts")
        k = r.per_part_intersection.size
        inter[:k] += r.per_part_intersection
        union[:k] += r.per_part_union
    iou = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
    return float(iou.mean())


def a_iou(records: Sequence[EvalRecord]) -> Tuple[float, float]:
    """Pooled IoU: (instance variant over everything, class variant).

    The class variant pools within each category then averages categories;
    the instance variant pools across all records at once.
    """
    if not records:
        raise InvalidInputError("no records to aggregate")
    by_cat: Dict[str, List[EvalRecord]] = {}
    for r in records:
        by_cat.setdefault(r.category, []).append(r)
    aiou_class = float(np.mean([_pooled_aiou(v) for v in by_cat.values()]))
    aiou_instance = _pooled_aiou(records)
    return aiou_instance, aiou_class
