"""Default-protocol mAP: greedy pair matching per HOI class and all-point AP."""

from __future__ import annotations

import logging
from typing import Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from cuehoi.data.annotations import HoiAnnotation
from cuehoi.data.registry import HoiClassRegistry
from cuehoi.evaluation.scoring import ScoredPrediction
from cuehoi.evaluation.splits import RARE_THRESHOLD, SplitSpec, split_rare_nonrare

logger = logging.getLogger(__name__)

IOU_THRESHOLD = 0.5


def box_iou(a: Sequence[float], b: Sequence[float]) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def voc_ap(recall: np.ndarray, precision: np.ndarray) -> float:
    """Area under the PR curve with the precision envelope, integrated at every recall step."""
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


class ClassResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    hoi_class: int
    name: str
    num_gt: int
    ap: float
    max_recall: float
    rare: bool
    seen: Optional[bool] = None


class PrCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    hoi_class: int
    recall: tuple[float, ...]
    precision: tuple[float, ...]


class MapResult(BaseModel):
    """mAP per group plus the per-class table; groups with no evaluated class are None."""

    model_config = ConfigDict(frozen=True)

    setting: str = "regular"
    split_seed: Optional[int] = None
    map_full: float
    map_rare: Optional[float]
    map_nonrare: Optional[float]
    map_seen: Optional[float] = None
    map_unseen: Optional[float] = None
    mean_max_recall: float
    per_class: tuple[ClassResult, ...]
    curves: tuple[PrCurve, ...] = Field(default=(), exclude=True)

    def group_table(self) -> dict[str, Optional[float]]:
        table = {"Full": self.map_full, "Rare": self.map_rare, "Non-Rare": self.map_nonrare}
        if self.setting != "regular":
            table.update({"Seen": self.map_seen, "Unseen": self.map_unseen})
        return table


def match_class(
    predictions: Sequence[tuple[str, ScoredPrediction]],
    ground_truth: Mapping[str, Sequence[tuple[Sequence[float], Sequence[float]]]],
) -> np.ndarray:
    """Greedy matching of one class's predictions, best confidence first.

    A prediction hits the unmatched ground truth of its image with the largest
    min(human IoU, object IoU) when that exceeds the threshold; each ground truth is
    matched at most once. Returns the hit flags in confidence order.
    """
    order = sorted(range(len(predictions)), key=lambda i: -predictions[i][1].confidence)
    used = {image_id: [False] * len(gts) for image_id, gts in ground_truth.items()}
    hits = np.zeros(len(predictions), dtype=bool)
    for rank, i in enumerate(order):
        image_id, pred = predictions[i]
        gts = ground_truth.get(image_id, ())
        best, best_overlap = -1, IOU_THRESHOLD
        for g, (hbox, obox) in enumerate(gts):
            if used[image_id][g]:
                continue
            overlap = min(box_iou(pred.human_box, hbox), box_iou(pred.object_box, obox))
            if overlap > best_overlap:
                best, best_overlap = g, overlap
        if best >= 0:
            used[image_id][best] = True
            hits[rank] = True
    return hits


def _mean(values: Sequence[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def compute_map(
    predictions: Mapping[str, Sequence[ScoredPrediction]],
    annotations: Sequence[HoiAnnotation],
    registry: HoiClassRegistry,
    split: Optional[SplitSpec] = None,
    rare_threshold: int = RARE_THRESHOLD,
) -> MapResult:
    """Evaluates ranked predictions against ground truth.

    AP is computed for every HOI class with at least one ground-truth instance and mAP
    averages over those classes only. Rare and non-rare groups follow the registry's
    training counts; seen and unseen groups are reported when a split is given.
    """
    ground_truth: dict[int, dict[str, list[tuple[Sequence[float], Sequence[float]]]]] = {}
    for ann in annotations:
        for gt in ann.gts:
            c = registry.hoi_index(gt.verb, gt.obj)
            ground_truth.setdefault(c, {}).setdefault(ann.image_id, []).append((gt.hbox, gt.obox))

    by_class: dict[int, list[tuple[str, ScoredPrediction]]] = {}
    for ann in annotations:
        for pred in predictions.get(ann.image_id, ()):
            by_class.setdefault(pred.hoi_class, []).append((ann.image_id, pred))

    rare, _ = split_rare_nonrare(registry, rare_threshold)
    rare_set = set(rare)
    rows: list[ClassResult] = []
    curves: list[PrCurve] = []
    for c in sorted(ground_truth):
        gts = ground_truth[c]
        num_gt = sum(len(v) for v in gts.values())
        hits = match_class(by_class.get(c, []), gts)
        tp = np.cumsum(hits)
        fp = np.cumsum(~hits)
        recall = tp / num_gt
        precision = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)
        ap = voc_ap(recall, precision) if len(hits) else 0.0
        rows.append(
            ClassResult(
                hoi_class=c,
                name=registry.class_text(c),
                num_gt=num_gt,
                ap=ap,
                max_recall=float(recall[-1]) if len(hits) else 0.0,
                rare=c in rare_set,
                seen=None if split is None else not split.is_unseen(c),
            )
        )
        curves.append(PrCurve(hoi_class=c, recall=tuple(recall.tolist()), precision=tuple(precision.tolist())))

    result = MapResult(
        setting=split.setting if split is not None else "regular",
        split_seed=split.seed if split is not None else None,
        map_full=_mean([r.ap for r in rows]) or 0.0,
        map_rare=_mean([r.ap for r in rows if r.rare]),
        map_nonrare=_mean([r.ap for r in rows if not r.rare]),
        map_seen=_mean([r.ap for r in rows if r.seen]) if split is not None else None,
        map_unseen=_mean([r.ap for r in rows if r.seen is False]) if split is not None else None,
        mean_max_recall=_mean([r.max_recall for r in rows]) or 0.0,
        per_class=tuple(rows),
        curves=tuple(curves),
    )
    logger.info(
        "Evaluated %d class(es) over %d image(s): mAP %.4f", len(rows), len(annotations), result.map_full
    )
    return result
