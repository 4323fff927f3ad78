from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import Tensor

from cuehoi.data.annotations import HoiAnnotation
from cuehoi.data.registry import HoiClassRegistry
from cuehoi.numerics import DTYPE


@dataclass(frozen=True)
class HoiTargets:
    """Ground truth of one image as tensors: G boxes each, object labels and HOI class labels."""

    human_boxes: Tensor
    object_boxes: Tensor
    object_labels: Tensor
    hoi_labels: Tensor

    def __len__(self) -> int:
        return self.object_labels.shape[0]

    @classmethod
    def from_annotation(cls, ann: HoiAnnotation, registry: HoiClassRegistry) -> "HoiTargets":
        gts = ann.gts
        return cls(
            human_boxes=torch.tensor([gt.hbox for gt in gts], dtype=DTYPE).reshape(-1, 4),
            object_boxes=torch.tensor([gt.obox for gt in gts], dtype=DTYPE).reshape(-1, 4),
            object_labels=torch.tensor([gt.obj for gt in gts], dtype=torch.long),
            hoi_labels=torch.tensor([registry.hoi_index(gt.verb, gt.obj) for gt in gts], dtype=torch.long),
        )
