"""Hungarian matching of ground-truth triplets to prediction slots."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch
from scipy.optimize import linear_sum_assignment
from torch import Tensor

from cuehoi.config import LossWeights
from cuehoi.exceptions import NumericsError
from cuehoi.models.detector import DecoderOutput
from cuehoi.training.box_ops import box_xyxy_to_cxcywh, generalized_box_iou
from cuehoi.training.targets import HoiTargets

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Assignment:
    """Injective (prediction index, ground-truth index) pairs, ordered by ground truth."""

    pairs: tuple[tuple[int, int], ...] = ()

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def pred_indices(self) -> list[int]:
        return [p for p, _ in self.pairs]

    @property
    def gt_indices(self) -> list[int]:
        return [g for _, g in self.pairs]


@torch.no_grad()
def build_cost_matrix(outputs: DecoderOutput, targets: HoiTargets, w: LossWeights) -> Tensor:
    """Matching cost, one row per ground truth and one column per prediction.

    cost(g, p) = w.box * (L1 of both boxes in centre format)
               + w.giou * ((1 - GIoU_h) + (1 - GIoU_o))
               - w.object * P(object class of g | p)
               - w.interaction * sigmoid(HOI class logit of g | p)
    """
    n = outputs.num_queries
    if len(targets) == 0:
        return torch.zeros(0, n, dtype=outputs.human_boxes.dtype)
    object_prob = outputs.object_logits.softmax(dim=-1)[:, targets.object_labels].T
    interaction_prob = outputs.interaction_logits.sigmoid()[:, targets.hoi_labels].T
    l1 = torch.cdist(box_xyxy_to_cxcywh(targets.human_boxes), box_xyxy_to_cxcywh(outputs.human_boxes), p=1)
    l1 = l1 + torch.cdist(box_xyxy_to_cxcywh(targets.object_boxes), box_xyxy_to_cxcywh(outputs.object_boxes), p=1)
    giou_cost = (1 - generalized_box_iou(targets.human_boxes, outputs.human_boxes)) + (
        1 - generalized_box_iou(targets.object_boxes, outputs.object_boxes)
    )
    cost = w.box * l1 + w.giou * giou_cost - w.object * object_prob - w.interaction * interaction_prob
    if not torch.isfinite(cost).all():
        raise NumericsError("non-finite matching cost")
    return cost


def _lex_smallest_optimum(matrix: np.ndarray, chosen: np.ndarray) -> np.ndarray:
    """Lowers `chosen` row by row to the lexicographically smallest optimal column choice.

    `chosen` is any optimal assignment. For each row in order the smaller free columns
    are tried, keeping one as soon as the remaining rows can still complete an optimum.
    """
    rows, cols = matrix.shape
    best = float(matrix[np.arange(rows), chosen].sum())
    tol = 1e-9 * max(1.0, abs(best))
    chosen = chosen.copy()
    used = np.zeros(cols, dtype=bool)
    fixed = 0.0
    for g in range(rows):
        rest = np.arange(g + 1, rows)
        for p in range(int(chosen[g])):
            if used[p]:
                continue
            free = ~used
            free[p] = False
            partial = fixed + matrix[g, p]
            if len(rest):
                bound = partial + matrix[np.ix_(rest, np.flatnonzero(free))].min(axis=1).sum()
                if bound > best + tol:
                    continue
                columns = np.flatnonzero(free)
                sub_rows, sub_cols = linear_sum_assignment(matrix[np.ix_(rest, columns)])
                tail = float(matrix[rest[sub_rows], columns[sub_cols]].sum())
            else:
                tail = 0.0
            if partial + tail <= best + tol:
                chosen[g] = p
                if len(rest):
                    chosen[rest[sub_rows]] = columns[sub_cols]
                break
        used[chosen[g]] = True
        fixed += matrix[g, chosen[g]]
    return chosen


def hungarian_match(cost: Tensor | np.ndarray) -> Assignment:
    """Minimum-cost injective assignment of every row (ground truth) to a column (prediction).

    Among equal-cost optima the result is the lexicographically smallest: ground truths in
    order, each taking the lowest prediction index that still allows an optimum.
    """
    matrix = cost.detach().cpu().numpy() if isinstance(cost, Tensor) else np.asarray(cost, dtype=np.float64)
    if matrix.ndim != 2:
        raise NumericsError(f"cost must be a matrix, got shape {matrix.shape}")
    rows, cols = matrix.shape
    if rows == 0:
        return Assignment()
    if rows > cols:
        raise NumericsError(f"{rows} ground truths cannot be matched to {cols} predictions")
    if not np.isfinite(matrix).all():
        bad = np.argwhere(~np.isfinite(matrix))[:5].tolist()
        raise NumericsError(f"non-finite cost entries at {bad}")
    gt_idx, pred_idx = linear_sum_assignment(matrix)
    pred_idx = _lex_smallest_optimum(matrix, pred_idx[np.argsort(gt_idx)])
    gt_idx = np.arange(rows)
    return Assignment(tuple((int(p), int(g)) for g, p in zip(gt_idx, pred_idx)))


def assignment_cost(cost: Tensor | np.ndarray, assignment: Assignment) -> float:
    matrix = cost.detach().cpu().numpy() if isinstance(cost, Tensor) else np.asarray(cost)
    return float(sum(matrix[g, p] for p, g in assignment.pairs))


class HungarianMatcher:
    def __init__(self, weights: LossWeights):
        self.weights = weights

    def __call__(self, outputs: DecoderOutput, targets: HoiTargets) -> Assignment:
        return hungarian_match(build_cost_matrix(outputs, targets, self.weights))
