"""Inference scoring: per-query HOI candidates, confidence and top-k selection."""

from __future__ import annotations

import logging
import math

import torch
from pydantic import BaseModel, ConfigDict, field_validator

from cuehoi.data.annotations import Box
from cuehoi.data.registry import HoiClassRegistry
from cuehoi.models.detector import DecoderOutput

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 100


class ScoredPrediction(BaseModel):
    """One detected triplet with its boxes, object class, HOI class and confidence."""

    model_config = ConfigDict(frozen=True)

    human_box: Box
    object_box: Box
    object_class: int
    hoi_class: int
    confidence: float
    query: int = -1

    @field_validator("confidence")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError(f"confidence {v} is not finite")
        return v


@torch.no_grad()
def score_and_rank(outputs: DecoderOutput, registry: HoiClassRegistry, k: int = DEFAULT_TOP_K) -> list[ScoredPrediction]:
    """Ranks the candidate triplets of one image and keeps the k best.

    Each query proposes its argmax object class (the "no object" column excluded) and,
    for every HOI class involving that object, a triplet whose confidence is the object
    probability plus the sigmoid interaction probability. Every (pair, verb) candidate
    competes separately for the k slots; ties keep query order.
    """
    object_prob = outputs.object_logits.softmax(dim=-1)[:, :-1]
    best_prob, best_obj = object_prob.max(dim=-1)
    interaction_prob = outputs.interaction_logits.sigmoid()
    human_boxes = outputs.human_boxes.tolist()
    object_boxes = outputs.object_boxes.tolist()

    candidates: list[ScoredPrediction] = []
    for q in range(outputs.num_queries):
        obj = int(best_obj[q])
        for c in registry.classes_for_object(obj):
            candidates.append(
                ScoredPrediction(
                    human_box=tuple(human_boxes[q]),
                    object_box=tuple(object_boxes[q]),
                    object_class=obj,
                    hoi_class=c,
                    confidence=float(best_prob[q]) + float(interaction_prob[q, c]),
                    query=q,
                )
            )
    candidates.sort(key=lambda p: -p.confidence)
    logger.debug("Scored %d candidate(s), keeping %d", len(candidates), min(k, len(candidates)))
    return candidates[:k]
