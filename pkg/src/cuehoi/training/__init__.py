from .box_ops import (
    box_area,
    box_cxcywh_to_xyxy,
    box_xyxy_to_cxcywh,
    elementwise_giou,
    generalized_box_iou,
    giou,
    iou,
    pairwise_iou,
)
from .criterion import TERMS, LossBreakdown, SetCriterion, total_loss
from .matcher import Assignment, HungarianMatcher, assignment_cost, build_cost_matrix, hungarian_match
from .targets import HoiTargets
from .trainer import (
    CURVE_COLUMNS,
    EpochLosses,
    Trainer,
    TrainingExample,
    build_examples,
    trainable_named_parameters,
    write_loss_curve,
)

__all__ = [
    "CURVE_COLUMNS",
    "TERMS",
    "Assignment",
    "EpochLosses",
    "HoiTargets",
    "HungarianMatcher",
    "LossBreakdown",
    "SetCriterion",
    "Trainer",
    "TrainingExample",
    "assignment_cost",
    "box_area",
    "box_cxcywh_to_xyxy",
    "box_xyxy_to_cxcywh",
    "build_cost_matrix",
    "build_examples",
    "elementwise_giou",
    "generalized_box_iou",
    "giou",
    "hungarian_match",
    "iou",
    "pairwise_iou",
    "total_loss",
    "trainable_named_parameters",
    "write_loss_curve",
]
