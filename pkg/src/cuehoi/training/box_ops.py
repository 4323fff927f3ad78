"""Box conversions, IoU and generalized IoU on normalized corner boxes."""

from __future__ import annotations

from typing import Sequence, Union

import torch
from torch import Tensor

from cuehoi.numerics import DTYPE

# Guards zero-area unions and enclosures: such boxes behave as points with IoU 0.
_TINY = 1e-12

BoxLike = Union[Tensor, Sequence[float]]


def _as_tensor(b: BoxLike) -> Tensor:
    return b if isinstance(b, Tensor) else torch.tensor(b, dtype=DTYPE)


def box_cxcywh_to_xyxy(b: Tensor) -> Tensor:
    cx, cy, w, h = b.unbind(-1)
    return torch.stack([cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h], dim=-1)


def box_xyxy_to_cxcywh(b: Tensor) -> Tensor:
    x1, y1, x2, y2 = b.unbind(-1)
    return torch.stack([(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1], dim=-1)


def box_area(b: Tensor) -> Tensor:
    return (b[..., 2] - b[..., 0]).clamp(min=0) * (b[..., 3] - b[..., 1]).clamp(min=0)


def pairwise_iou(a: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    """IoU and union of every pair in (A x 4) x (B x 4); returns two A x B matrices."""
    area_a = box_area(a)
    area_b = box_area(b)
    lt = torch.max(a[:, None, :2], b[None, :, :2])
    rb = torch.min(a[:, None, 2:], b[None, :, 2:])
    wh = (rb - lt).clamp(min=0)
    inter = wh[..., 0] * wh[..., 1]
    union = area_a[:, None] + area_b[None, :] - inter
    return inter / union.clamp(min=_TINY), union


def generalized_box_iou(a: Tensor, b: Tensor) -> Tensor:
    """Pairwise generalized IoU, an A x B matrix with values in (-1, 1]."""
    iou, union = pairwise_iou(a, b)
    lt = torch.min(a[:, None, :2], b[None, :, :2])
    rb = torch.max(a[:, None, 2:], b[None, :, 2:])
    wh = (rb - lt).clamp(min=0)
    enclosure = wh[..., 0] * wh[..., 1]
    return iou - (enclosure - union) / enclosure.clamp(min=_TINY)


def elementwise_giou(a: Tensor, b: Tensor) -> Tensor:
    """Generalized IoU of matching rows of two (K x 4) tensors."""
    area_a = box_area(a)
    area_b = box_area(b)
    lt = torch.max(a[:, :2], b[:, :2])
    rb = torch.min(a[:, 2:], b[:, 2:])
    wh = (rb - lt).clamp(min=0)
    inter = wh[:, 0] * wh[:, 1]
    union = area_a + area_b - inter
    iou = inter / union.clamp(min=_TINY)
    lt = torch.min(a[:, :2], b[:, :2])
    rb = torch.max(a[:, 2:], b[:, 2:])
    wh = (rb - lt).clamp(min=0)
    enclosure = wh[:, 0] * wh[:, 1]
    return iou - (enclosure - union) / enclosure.clamp(min=_TINY)


def giou(a: BoxLike, b: BoxLike) -> float:
    """Generalized IoU of two corner boxes; the GIoU loss term is 1 - giou."""
    return float(elementwise_giou(_as_tensor(a)[None], _as_tensor(b)[None])[0])


def iou(a: BoxLike, b: BoxLike) -> float:
    value, _ = pairwise_iou(_as_tensor(a)[None], _as_tensor(b)[None])
    return float(value[0, 0])
