"""Two-branch HOI detector: instance decoder, projection, interaction decoder and heads."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
from torch import Tensor, nn

from cuehoi.config import EncoderConfig, FusionConfig
from cuehoi.cues.encoder import CueEncoder, CueFeatures
from cuehoi.cues.schema import CueSet
from cuehoi.data.registry import HoiClassRegistry
from cuehoi.exceptions import NumericsError
from cuehoi.models.classifier import InteractionClassifier
from cuehoi.models.fusion import FusionDecoder
from cuehoi.numerics import DTYPE, MLP, check_finite

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecoderOutput:
    """Per-image predictions for N query slots.

    Boxes are normalized corners; `object_logits` has one extra trailing column for
    "no object"; `interaction_embeddings` is E_inter with one C_i block per tower.
    """

    human_embeddings: Tensor
    object_embeddings: Tensor
    human_boxes: Tensor
    object_boxes: Tensor
    object_logits: Tensor
    interaction_queries: Tensor
    interaction_embeddings: Tensor
    interaction_logits: Tensor

    @property
    def num_queries(self) -> int:
        return self.human_boxes.shape[0]


def squashed_to_corners(raw: Tensor) -> Tensor:
    """Maps unbounded (c_x, c_y, w, h) head outputs to corner boxes inside the unit square.

    After a sigmoid, x1 = c_x * (1 - w) and x2 = x1 + w, so 0 <= x1 < x2 <= 1.
    """
    s = torch.sigmoid(raw)
    c, size = s[:, :2], s[:, 2:]
    low = c * (1 - size)
    return torch.cat([low, low + size], dim=1)


class HoiDetector(nn.Module):
    def __init__(
        self,
        config: FusionConfig,
        encoder_config: EncoderConfig,
        registry: HoiClassRegistry,
        seed: int = 0,
    ):
        super().__init__()
        self.config = config
        self.encoder_config = encoder_config
        self.registry = registry
        n, c_d, c_i = config.num_queries, config.instance_width, config.interaction_width

        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.cue_encoder = CueEncoder.build(config, encoder_config)
            self.human_queries = nn.Parameter(torch.randn(n, c_d, dtype=DTYPE))
            self.object_queries = nn.Parameter(torch.randn(n, c_d, dtype=DTYPE))
            self.instance_decoder = FusionDecoder(config, width=c_d, visual_width=c_d)
            self.human_box_head = MLP(c_d, c_d, 4, 3, config.activation)
            self.object_box_head = MLP(c_d, c_d, 4, 3, config.activation)
            self.object_class_head = nn.Linear(c_d, registry.num_objects + 1, dtype=DTYPE)
            self.projection = nn.Linear(2 * c_d, c_i, dtype=DTYPE)
            visual_width = c_i if config.interaction_visual == "clip" else c_d
            self.interaction_decoder = FusionDecoder(config, width=c_i, visual_width=visual_width)
            self.classifier = InteractionClassifier.build(
                config.num_towers * c_i,
                registry,
                self.cue_encoder.embedder,
                prior=config.prior_classifier,
                freeze=config.freeze_classifier,
                temperature_init=config.temperature_init,
            )

    @property
    def cue_kinds(self) -> tuple[str, ...]:
        return () if self.config.tower_mode == "no_cues" else tuple(self.config.cues)

    def encode_cues(self, cues: Optional[CueSet]) -> Optional[CueFeatures]:
        if not self.cue_kinds:
            return None
        if cues is None:
            raise NumericsError(f"tower mode {self.config.tower_mode!r} needs cue texts")
        return self.cue_encoder(cues, self.cue_kinds)

    def _cue_matrices(self, cues: Optional[CueFeatures]) -> Optional[Sequence[Tensor]]:
        if not self.cue_kinds:
            return None
        if cues is None:
            raise NumericsError(f"tower mode {self.config.tower_mode!r} needs cue features")
        return [cues[k] for k in self.cue_kinds]

    def instance_decode(self, instance_features: Tensor, cues: Optional[CueFeatures]) -> tuple[Tensor, Tensor]:
        """Decodes the joint [Q_h; Q_o] query set; returns (E_h, E_o)."""
        n = self.config.num_queries
        queries = torch.cat([self.human_queries, self.object_queries], dim=0)
        out = self.instance_decoder.averaged(queries, instance_features, self._cue_matrices(cues))
        return out[:n], out[n:]

    def instance_heads(self, human: Tensor, obj: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        """Returns (B_h, B_o, C_o)."""
        return (
            squashed_to_corners(self.human_box_head(human)),
            squashed_to_corners(self.object_box_head(obj)),
            self.object_class_head(obj),
        )

    def project_to_interaction(self, human: Tensor, obj: Tensor) -> Tensor:
        return self.projection(torch.cat([human, obj], dim=1))

    def interaction_decode(self, queries: Tensor, visual: Tensor, cues: Optional[CueFeatures]) -> tuple[Tensor, Tensor]:
        """Returns (E_inter, interaction logits)."""
        embeddings = self.interaction_decoder.concatenated(
            queries, visual, self._cue_matrices(cues), self.config.interaction_streams
        )
        return embeddings, self.classifier(embeddings)

    def forward(
        self,
        instance_features: Tensor,
        interaction_features: Tensor,
        cues: Optional[CueFeatures] = None,
    ) -> DecoderOutput:
        check_finite(instance_features, "instance features")
        check_finite(interaction_features, "interaction features")
        human, obj = self.instance_decode(instance_features, cues)
        human_boxes, object_boxes, object_logits = self.instance_heads(human, obj)
        queries = self.project_to_interaction(human, obj)
        visual = interaction_features if self.config.interaction_visual == "clip" else instance_features
        embeddings, logits = self.interaction_decode(queries, visual, cues)
        return DecoderOutput(
            human_embeddings=human,
            object_embeddings=obj,
            human_boxes=human_boxes,
            object_boxes=object_boxes,
            object_logits=object_logits,
            interaction_queries=queries,
            interaction_embeddings=embeddings,
            interaction_logits=logits,
        )

    def predict(
        self,
        instance_features: Tensor,
        interaction_features: Tensor,
        cues: Optional[CueSet] = None,
    ) -> DecoderOutput:
        return self(instance_features, interaction_features, self.encode_cues(cues))
