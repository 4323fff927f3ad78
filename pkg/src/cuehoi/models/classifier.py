"""Interaction classifier whose weight rows come from HOI class text templates."""

from __future__ import annotations

import logging
from typing import Optional

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from cuehoi.cues.encoder import HashTokenEmbedder
from cuehoi.data.registry import HoiClassRegistry
from cuehoi.numerics import DTYPE

logger = logging.getLogger(__name__)


def build_classifier_weights(registry: HoiClassRegistry, embedder: HashTokenEmbedder) -> Tensor:
    """One L2-normalized row per HOI class: the frozen embedding of "a photo of a person {verb} a {object}"."""
    rows = torch.stack([embedder.mean_embedding(registry.class_text(c)) for c in range(registry.num_classes)])
    return F.normalize(rows, dim=1)


class InteractionClassifier(nn.Module):
    """Scaled cosine classifier: logits = temperature * cos(proj(E_inter), row_c)."""

    def __init__(
        self,
        in_width: int,
        rows: Tensor,
        trainable_rows: bool = False,
        temperature_init: float = 10.0,
    ):
        super().__init__()
        self.projection = nn.Linear(in_width, rows.shape[1], dtype=DTYPE)
        rows = F.normalize(rows.to(DTYPE), dim=1)
        if trainable_rows:
            self.rows = nn.Parameter(rows)
        else:
            self.register_buffer("rows", rows)
        self.temperature = nn.Parameter(torch.tensor(float(temperature_init), dtype=DTYPE))

    @classmethod
    def build(
        cls,
        in_width: int,
        registry: HoiClassRegistry,
        embedder: HashTokenEmbedder,
        prior: bool = True,
        freeze: bool = True,
        temperature_init: float = 10.0,
        generator: Optional[torch.Generator] = None,
    ) -> "InteractionClassifier":
        if prior:
            rows = build_classifier_weights(registry, embedder)
        else:
            rows = torch.randn(registry.num_classes, embedder.width, generator=generator, dtype=DTYPE)
        # Random rows carry no prior and are always learned.
        return cls(in_width, rows, trainable_rows=(not prior) or (not freeze), temperature_init=temperature_init)

    def forward(self, embeddings: Tensor) -> Tensor:
        projected = F.normalize(self.projection(embeddings), dim=1)
        return self.temperature * projected @ F.normalize(self.rows, dim=1).T
