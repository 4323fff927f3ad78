"""Multitower cross-attention fusion of queries, visual features and cue features."""

from __future__ import annotations

from typing import Optional, Sequence

import torch
from torch import Tensor, nn

from cuehoi.config import FusionConfig
from cuehoi.exceptions import NumericsError
from cuehoi.numerics import FeedForward, LayerNorm, MultiHeadAttention


class FusionTower(nn.Module):
    """One tower of one decoder layer.

    Self-attention over the queries, cross-attention to the visual grid, cross-attention
    to one cue's token features, then a feed-forward block. Every sublayer is pre-norm
    with a residual connection. Without a cue block this is a vanilla decoder layer.
    """

    def __init__(
        self,
        width: int,
        visual_width: int,
        text_width: int,
        num_heads: int,
        ffn_multiplier: int = 4,
        activation: str = "gelu",
        eps: float = 1e-5,
        use_cue: bool = True,
    ):
        super().__init__()
        self.norm_self = LayerNorm(width, eps)
        self.self_attn = MultiHeadAttention(width, num_heads)
        self.norm_visual = LayerNorm(width, eps)
        self.visual_attn = MultiHeadAttention(width, num_heads, kv_width=visual_width)
        if use_cue:
            self.norm_cue = LayerNorm(width, eps)
            self.cue_attn = MultiHeadAttention(width, num_heads, kv_width=text_width)
        else:
            self.norm_cue = None
            self.cue_attn = None
        self.norm_ffn = LayerNorm(width, eps)
        self.ffn = FeedForward(width, ffn_multiplier * width, activation)

    @property
    def uses_cue(self) -> bool:
        return self.cue_attn is not None

    def forward(self, queries: Tensor, visual: Tensor, cue: Optional[Tensor] = None) -> Tensor:
        x = queries
        h = self.norm_self(x)
        x = x + self.self_attn(h, h, h)
        h = self.norm_visual(x)
        x = x + self.visual_attn(h, visual, visual)
        if self.cue_attn is not None:
            if cue is None:
                raise NumericsError("this tower fuses a cue but none was given")
            h = self.norm_cue(x)
            x = x + self.cue_attn(h, cue, cue)
        return x + self.ffn(self.norm_ffn(x))


def fusion_tower_step(queries: Tensor, visual: Tensor, cue: Optional[Tensor], tower: FusionTower) -> Tensor:
    """Runs one tower of one layer; the output has the shape of `queries`."""
    return tower(queries, visual, cue)


class FusionDecoder(nn.Module):
    """`num_layers` layers of towers.

    multitower: one tower per active cue, independent parameters.
    one_tower: a single tower per layer, applied to each cue in turn.
    no_cues: a single vanilla tower per layer, no cue block.
    """

    def __init__(self, config: FusionConfig, width: int, visual_width: int):
        super().__init__()
        self.mode = config.tower_mode
        self.num_towers = config.num_towers
        towers_per_layer = self.num_towers if self.mode == "multitower" else 1
        self.layers = nn.ModuleList(
            nn.ModuleList(
                FusionTower(
                    width,
                    visual_width,
                    config.text_width,
                    config.num_heads,
                    config.ffn_multiplier,
                    config.activation,
                    config.layer_norm_eps,
                    use_cue=self.mode != "no_cues",
                )
                for _ in range(towers_per_layer)
            )
            for _ in range(config.num_layers)
        )
        self.norm = LayerNorm(width, config.layer_norm_eps)

    def tower(self, layer: int, slot: int) -> FusionTower:
        towers = self.layers[layer]
        return towers[slot] if len(towers) > 1 else towers[0]

    def _cues(self, cues: Optional[Sequence[Tensor]]) -> list[Optional[Tensor]]:
        if self.mode == "no_cues":
            return [None]
        if cues is None or len(cues) != self.num_towers:
            got = 0 if cues is None else len(cues)
            raise NumericsError(f"decoder has {self.num_towers} tower(s) but got {got} cue matrices")
        return list(cues)

    def _layer_outputs(self, layer: int, inputs: Sequence[Tensor], visual: Tensor, cues: list) -> list[Tensor]:
        return [fusion_tower_step(x, visual, cue, self.tower(layer, t)) for t, (x, cue) in enumerate(zip(inputs, cues))]

    def averaged(self, queries: Tensor, visual: Tensor, cues: Optional[Sequence[Tensor]]) -> Tensor:
        """Tower outputs averaged elementwise after every layer."""
        cue_list = self._cues(cues)
        x = queries
        for layer in range(len(self.layers)):
            outputs = self._layer_outputs(layer, [x] * len(cue_list), visual, cue_list)
            x = torch.stack(outputs).mean(dim=0)
        return self.norm(x)

    def concatenated(
        self,
        queries: Tensor,
        visual: Tensor,
        cues: Optional[Sequence[Tensor]],
        streams: str = "averaged",
    ) -> Tensor:
        """Final-layer tower outputs concatenated along the width.

        With `streams="averaged"` intermediate layers average like `averaged()`; with
        `"separate"` every tower keeps its own stream through all layers.
        """
        cue_list = self._cues(cues)
        n = len(cue_list)
        inputs = [queries] * n
        last = len(self.layers) - 1
        for layer in range(len(self.layers)):
            outputs = self._layer_outputs(layer, inputs, visual, cue_list)
            if layer < last and streams == "averaged":
                inputs = [torch.stack(outputs).mean(dim=0)] * n
            else:
                inputs = outputs
        return torch.cat([self.norm(x) for x in inputs], dim=1)
