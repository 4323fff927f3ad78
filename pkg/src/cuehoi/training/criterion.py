"""Set-prediction loss: box L1, GIoU, object classification and interaction classification."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn.functional as F
from torch import Tensor

from cuehoi.config import LossWeights
from cuehoi.models.detector import DecoderOutput
from cuehoi.training.box_ops import box_xyxy_to_cxcywh, elementwise_giou
from cuehoi.training.matcher import Assignment, HungarianMatcher
from cuehoi.training.targets import HoiTargets

logger = logging.getLogger(__name__)

TERMS = ("loss_b", "loss_u", "loss_o", "loss_c")


@dataclass(frozen=True)
class LossBreakdown:
    """Weighted loss terms; `total` is their sum."""

    total: Tensor
    loss_b: Tensor
    loss_u: Tensor
    loss_o: Tensor
    loss_c: Tensor

    def as_floats(self) -> dict[str, float]:
        return {"total": self.total.item(), **{k: getattr(self, k).item() for k in TERMS}}


def total_loss(
    outputs: DecoderOutput,
    targets: HoiTargets,
    assignment: Assignment,
    w: LossWeights,
) -> LossBreakdown:
    """Loss of one image under a fixed assignment.

    Matched slots pay all four terms; every other slot is trained toward the trailing
    "no object" class, whose cross-entropy weight is `w.background`. Box terms and the
    interaction term are normalized by the number of ground truths (at least 1).
    """
    num_objects = outputs.object_logits.shape[1] - 1
    num = max(len(targets), 1)
    pred = torch.tensor(assignment.pred_indices, dtype=torch.long)
    gt = torch.tensor(assignment.gt_indices, dtype=torch.long)

    class_weight = torch.ones(num_objects + 1, dtype=outputs.object_logits.dtype)
    class_weight[-1] = w.background
    object_target = torch.full((outputs.num_queries,), num_objects, dtype=torch.long)
    if len(assignment):
        object_target[pred] = targets.object_labels[gt]
    loss_o = F.cross_entropy(outputs.object_logits, object_target, weight=class_weight)

    if len(assignment):
        h_pred, o_pred = outputs.human_boxes[pred], outputs.object_boxes[pred]
        h_gt, o_gt = targets.human_boxes[gt], targets.object_boxes[gt]
        loss_b = (
            F.l1_loss(box_xyxy_to_cxcywh(h_pred), box_xyxy_to_cxcywh(h_gt), reduction="sum")
            + F.l1_loss(box_xyxy_to_cxcywh(o_pred), box_xyxy_to_cxcywh(o_gt), reduction="sum")
        ) / num
        loss_u = ((1 - elementwise_giou(h_pred, h_gt)).sum() + (1 - elementwise_giou(o_pred, o_gt)).sum()) / num
        logits = outputs.interaction_logits[pred]
        one_hot = F.one_hot(targets.hoi_labels[gt], logits.shape[1]).to(logits.dtype)
        loss_c = F.binary_cross_entropy_with_logits(logits, one_hot, reduction="none").mean(dim=1).sum() / num
    else:
        zero = outputs.human_boxes.sum() * 0.0
        loss_b = loss_u = zero
        loss_c = outputs.interaction_logits.sum() * 0.0

    loss_b = w.box * loss_b
    loss_u = w.giou * loss_u
    loss_o = w.object * loss_o
    loss_c = w.interaction * loss_c
    return LossBreakdown(total=loss_b + loss_u + loss_o + loss_c, loss_b=loss_b, loss_u=loss_u, loss_o=loss_o, loss_c=loss_c)


class SetCriterion:
    """Matches then scores one image; the assignment is constant under backward."""

    def __init__(self, weights: LossWeights, matcher: Optional[HungarianMatcher] = None):
        self.weights = weights
        self.matcher = matcher or HungarianMatcher(weights)

    def __call__(self, outputs: DecoderOutput, targets: HoiTargets) -> tuple[LossBreakdown, Assignment]:
        assignment = self.matcher(outputs, targets)
        return total_loss(outputs, targets, assignment, self.weights), assignment
