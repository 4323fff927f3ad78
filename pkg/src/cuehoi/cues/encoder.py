"""Cue text encoder: a frozen hash-bucket token embedder followed by trainable self-attention layers."""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
from torch import Tensor, nn

from cuehoi.config import CUE_KINDS, EncoderConfig, FusionConfig
from cuehoi.cues.schema import CueSet
from cuehoi.numerics import DTYPE, FeedForward, LayerNorm, MultiHeadAttention

PAD_ID = 0

_TOKEN = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


def tokenize(text: str) -> list[str]:
    """Lower-cased word and punctuation tokens."""
    return _TOKEN.findall(text.lower())


def hash_token(token: str, buckets: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return 1 + int.from_bytes(digest, "little") % (buckets - 1)


def token_ids(text: str, buckets: int, max_tokens: int) -> list[int]:
    """Bucket ids of the first `max_tokens` tokens; a lone PAD for empty text."""
    ids = [hash_token(t, buckets) for t in tokenize(text)[:max_tokens]]
    return ids or [PAD_ID]


def sinusoidal_positions(length: int, width: int) -> Tensor:
    position = torch.arange(length, dtype=DTYPE)[:, None]
    half = (width + 1) // 2
    freq = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=DTYPE) / half)
    angles = position * freq[None]
    return torch.cat([angles.sin(), angles.cos()], dim=1)[:, :width]


class HashTokenEmbedder(nn.Module):
    """Frozen token embedding table indexed by hashed token buckets.

    The table is a buffer, never a parameter: no optimizer can see it and autograd
    never produces a gradient for it.
    """

    def __init__(self, buckets: int, width: int, max_tokens: int, seed: int = 1234):
        super().__init__()
        self.buckets = buckets
        self.width = width
        self.max_tokens = max_tokens
        generator = torch.Generator().manual_seed(seed)
        table = torch.randn(buckets, width, generator=generator, dtype=DTYPE) / math.sqrt(width)
        table[PAD_ID] = 0.0
        self.register_buffer("table", table)

    def ids(self, text: str) -> list[int]:
        return token_ids(text, self.buckets, self.max_tokens)

    def forward(self, text: str) -> Tensor:
        ids = torch.tensor(self.ids(text), dtype=torch.long)
        return self.table[ids] + sinusoidal_positions(len(ids), self.width)

    def mean_embedding(self, text: str) -> Tensor:
        ids = torch.tensor(self.ids(text), dtype=torch.long)
        return self.table[ids].mean(dim=0)


class CueEncoderLayer(nn.Module):
    """Pre-norm transformer encoder layer over the tokens of one cue."""

    def __init__(self, width: int, num_heads: int, ffn_multiplier: int, activation: str, eps: float):
        super().__init__()
        self.norm_attn = LayerNorm(width, eps)
        self.attn = MultiHeadAttention(width, num_heads)
        self.norm_ffn = LayerNorm(width, eps)
        self.ffn = FeedForward(width, ffn_multiplier * width, activation)

    def forward(self, x: Tensor) -> Tensor:
        h = self.norm_attn(x)
        x = x + self.attn(h, h, h)
        return x + self.ffn(self.norm_ffn(x))


@dataclass(frozen=True)
class CueFeatures:
    """Encoded cue matrices (tokens x text width), one per active cue kind."""

    kinds: tuple[str, ...]
    matrices: tuple[Tensor, ...]

    def __getitem__(self, kind: str) -> Tensor:
        try:
            return self.matrices[self.kinds.index(kind)]
        except ValueError:
            raise KeyError(kind) from None

    def __len__(self) -> int:
        return len(self.kinds)

    @property
    def participant(self) -> Tensor:
        return self["participant"]

    @property
    def body_language(self) -> Tensor:
        return self["body_language"]

    @property
    def environmental(self) -> Tensor:
        return self["environmental"]


class CueEncoder(nn.Module):
    def __init__(self, embedder: HashTokenEmbedder, fusion: FusionConfig, num_layers: int):
        super().__init__()
        self.embedder = embedder
        self.layers = nn.ModuleList(
            CueEncoderLayer(
                embedder.width, fusion.num_heads, fusion.ffn_multiplier, fusion.activation, fusion.layer_norm_eps
            )
            for _ in range(num_layers)
        )

    @classmethod
    def build(cls, fusion: FusionConfig, encoder: EncoderConfig) -> "CueEncoder":
        embedder = HashTokenEmbedder(
            encoder.hash_buckets, fusion.text_width, encoder.max_cue_tokens, encoder.embedder_seed
        )
        return cls(embedder, fusion, encoder.cue_encoder_layers)

    def encode_text(self, text: str) -> Tensor:
        x = self.embedder(text)
        for layer in self.layers:
            x = layer(x)
        return x

    def forward(self, cues: CueSet, kinds: Sequence[str] = CUE_KINDS) -> CueFeatures:
        return CueFeatures(tuple(kinds), tuple(self.encode_text(cues.text(k)) for k in kinds))


def encode_cues(cues: CueSet, encoder: CueEncoder, kinds: Optional[Sequence[str]] = None) -> CueFeatures:
    """Encodes the cue texts of one image into T matrices, one per kind."""
    return encoder(cues, tuple(kinds or CUE_KINDS))
