"""Dense float64 primitives: stable softmax, multi-head attention, feed-forward, layer norm.

Every tensor in cuehoi is a 2-D (rows x width) float64 `torch.Tensor`; batching is
done by the caller over independent images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from cuehoi.exceptions import NumericsError

DTYPE = torch.float64

_ACTIVATIONS = {
    "gelu": F.gelu,
    "silu": F.silu,
}


def check_finite(t: Tensor, what: str) -> Tensor:
    if not torch.isfinite(t).all():
        bad = (~torch.isfinite(t)).nonzero()[0].tolist()
        raise NumericsError(f"{what} contains non-finite values (first at index {bad})")
    return t


def _check_matrix(t: Tensor, what: str) -> None:
    if t.dim() != 2:
        raise NumericsError(f"{what} must be a matrix, got shape {tuple(t.shape)}")


def softmax_rows(m: Tensor) -> Tensor:
    """Row-wise softmax with max subtraction; rejects non-finite input."""
    check_finite(m, "softmax input")
    shifted = m - m.max(dim=-1, keepdim=True).values
    e = shifted.exp()
    return e / e.sum(dim=-1, keepdim=True)


def activation(x: Tensor, kind: str = "gelu") -> Tensor:
    try:
        return _ACTIVATIONS[kind](x)
    except KeyError:
        raise NumericsError(f"unknown activation {kind!r}") from None


def layer_norm(x: Tensor, weight: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    _check_matrix(x, "layer-norm input")
    return F.layer_norm(x, (x.shape[1],), weight, bias, eps)


def feed_forward(
    x: Tensor,
    w1: Tensor,
    w2: Tensor,
    b1: Optional[Tensor] = None,
    b2: Optional[Tensor] = None,
    kind: str = "gelu",
) -> Tensor:
    """Two linear maps with a smooth rectifier in between.

    Weights use the `torch.nn.Linear` convention: w1 is (hidden, width), w2 is (width, hidden).
    """
    _check_matrix(x, "feed-forward input")
    if w1.shape[1] != x.shape[1] or w2.shape[1] != w1.shape[0] or w2.shape[0] != x.shape[1]:
        raise NumericsError(
            f"feed-forward shape mismatch: x {tuple(x.shape)}, w1 {tuple(w1.shape)}, w2 {tuple(w2.shape)}"
        )
    return F.linear(activation(F.linear(x, w1, b1), kind), w2, b2)


@dataclass(frozen=True)
class AttentionParams:
    """Projection weights of one multi-head attention block (nn.Linear convention)."""

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor
    num_heads: int
    b_q: Optional[Tensor] = None
    b_k: Optional[Tensor] = None
    b_v: Optional[Tensor] = None
    b_o: Optional[Tensor] = None

    @property
    def width(self) -> int:
        return self.w_q.shape[0]

    def validate(self, query_width: int, key_width: int, value_width: int) -> None:
        d = self.width
        if self.num_heads < 1 or d % self.num_heads:
            raise NumericsError(f"width {d} is not divisible by {self.num_heads} heads")
        expected = {
            "w_q": (d, query_width),
            "w_k": (d, key_width),
            "w_v": (d, value_width),
            "w_o": (query_width, d),
        }
        for name, shape in expected.items():
            if tuple(getattr(self, name).shape) != shape:
                raise NumericsError(f"{name} has shape {tuple(getattr(self, name).shape)}, expected {shape}")


def multi_head_attention(q: Tensor, k: Tensor, v: Tensor, p: AttentionParams) -> Tensor:
    """Scaled dot-product attention of q rows over (k, v) rows, split across heads."""
    for t, what in ((q, "query"), (k, "key"), (v, "value")):
        _check_matrix(t, what)
    if k.shape[0] != v.shape[0]:
        raise NumericsError(f"keys ({k.shape[0]} rows) and values ({v.shape[0]} rows) disagree")
    if k.shape[0] == 0:
        raise NumericsError("attention needs at least one key")
    p.validate(q.shape[1], k.shape[1], v.shape[1])

    h = p.num_heads
    head = p.width // h
    qh = F.linear(q, p.w_q, p.b_q).view(q.shape[0], h, head).transpose(0, 1)
    kh = F.linear(k, p.w_k, p.b_k).view(k.shape[0], h, head).transpose(0, 1)
    vh = F.linear(v, p.w_v, p.b_v).view(v.shape[0], h, head).transpose(0, 1)

    logits = qh @ kh.transpose(1, 2) / math.sqrt(head)
    weights = softmax_rows(logits)
    out = (weights @ vh).transpose(0, 1).reshape(q.shape[0], p.width)
    return F.linear(out, p.w_o, p.b_o)


class LayerNorm(nn.Module):
    def __init__(self, width: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.weight = nn.Parameter(torch.ones(width, dtype=DTYPE))
        self.bias = nn.Parameter(torch.zeros(width, dtype=DTYPE))

    def forward(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.weight, self.bias, self.eps)


class MultiHeadAttention(nn.Module):
    """Trainable attention block; keys and values may come from a different width."""

    def __init__(self, width: int, num_heads: int, kv_width: Optional[int] = None):
        super().__init__()
        if num_heads < 1 or width % num_heads:
            raise NumericsError(f"width {width} is not divisible by {num_heads} heads")
        kv_width = kv_width or width
        self.num_heads = num_heads
        self.q_proj = nn.Linear(width, width, dtype=DTYPE)
        self.k_proj = nn.Linear(kv_width, width, dtype=DTYPE)
        self.v_proj = nn.Linear(kv_width, width, dtype=DTYPE)
        self.out_proj = nn.Linear(width, width, dtype=DTYPE)
        for lin in (self.q_proj, self.k_proj, self.v_proj, self.out_proj):
            nn.init.xavier_uniform_(lin.weight)
            nn.init.zeros_(lin.bias)

    @property
    def params(self) -> AttentionParams:
        return AttentionParams(
            w_q=self.q_proj.weight,
            w_k=self.k_proj.weight,
            w_v=self.v_proj.weight,
            w_o=self.out_proj.weight,
            num_heads=self.num_heads,
            b_q=self.q_proj.bias,
            b_k=self.k_proj.bias,
            b_v=self.v_proj.bias,
            b_o=self.out_proj.bias,
        )

    def forward(self, q: Tensor, k: Tensor, v: Tensor) -> Tensor:
        return multi_head_attention(q, k, v, self.params)


class FeedForward(nn.Module):
    def __init__(self, width: int, hidden: int, kind: str = "gelu"):
        super().__init__()
        self.kind = kind
        self.linear1 = nn.Linear(width, hidden, dtype=DTYPE)
        self.linear2 = nn.Linear(hidden, width, dtype=DTYPE)

    def forward(self, x: Tensor) -> Tensor:
        return feed_forward(x, self.linear1.weight, self.linear2.weight, self.linear1.bias, self.linear2.bias, self.kind)


class MLP(nn.Module):
    """Small perceptron used by the prediction heads (DETR-style box MLP)."""

    def __init__(self, in_width: int, hidden: int, out_width: int, num_layers: int, kind: str = "gelu"):
        super().__init__()
        self.kind = kind
        widths = [in_width] + [hidden] * (num_layers - 1) + [out_width]
        self.layers = nn.ModuleList(nn.Linear(a, b, dtype=DTYPE) for a, b in zip(widths[:-1], widths[1:]))

    def forward(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = activation(x, self.kind)
        return x
