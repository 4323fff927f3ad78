from .hoi_map import IOU_THRESHOLD, ClassResult, MapResult, PrCurve, box_iou, compute_map, match_class, voc_ap
from .results import format_table, write_pr_curves, write_results
from .scoring import DEFAULT_TOP_K, ScoredPrediction, score_and_rank
from .splits import (
    RARE_THRESHOLD,
    SplitSpec,
    filter_training_set,
    load_split,
    make_zero_shot_split,
    save_split,
    split_from_config,
    split_rare_nonrare,
)

__all__ = [
    "DEFAULT_TOP_K",
    "IOU_THRESHOLD",
    "RARE_THRESHOLD",
    "ClassResult",
    "MapResult",
    "PrCurve",
    "ScoredPrediction",
    "SplitSpec",
    "box_iou",
    "compute_map",
    "filter_training_set",
    "format_table",
    "load_split",
    "make_zero_shot_split",
    "match_class",
    "save_split",
    "score_and_rank",
    "split_from_config",
    "split_rare_nonrare",
    "voc_ap",
    "write_pr_curves",
    "write_results",
]
