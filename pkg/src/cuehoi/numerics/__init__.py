from .ops import (
    DTYPE,
    MLP,
    AttentionParams,
    FeedForward,
    LayerNorm,
    MultiHeadAttention,
    activation,
    check_finite,
    feed_forward,
    layer_norm,
    multi_head_attention,
    softmax_rows,
)
from .gradcheck import grad_check, trainable_parameters

__all__ = [
    "DTYPE",
    "MLP",
    "AttentionParams",
    "FeedForward",
    "LayerNorm",
    "MultiHeadAttention",
    "activation",
    "check_finite",
    "feed_forward",
    "grad_check",
    "layer_norm",
    "multi_head_attention",
    "softmax_rows",
    "trainable_parameters",
]
