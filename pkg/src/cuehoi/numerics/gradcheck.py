"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import logging
import math
from typing import Callable, Mapping, Sequence, Union

import numpy as np
import torch
from torch import Tensor, nn

from cuehoi.exceptions import GradientCheckError, NumericsError

logger = logging.getLogger(__name__)

Inputs = Union[Sequence[Tensor], Mapping[str, Tensor]]


def _named(inputs: Inputs) -> dict[str, Tensor]:
    if isinstance(inputs, Mapping):
        return dict(inputs)
    return {f"input{i}": t for i, t in enumerate(inputs)}


def grad_check(
    f: Callable[[], Tensor],
    inputs: Inputs,
    step: float = 1e-5,
    max_coords: int = 16,
    seed: int = 0,
) -> float:
    """Compares autograd gradients of the scalar `f()` with central differences.

    Args:
        f: Zero-argument closure returning a scalar tensor that depends on `inputs`.
        inputs: Leaf tensors (requires_grad) to perturb in place.
        step: Central-difference step.
        max_coords: Coordinates sampled per input; all of them when the input is smaller.
        seed: Sampling seed.

    Returns:
        The max over sampled coordinates of |analytic - numeric| / max(1, |numeric|).
    """
    named = _named(inputs)
    for name, t in named.items():
        if not t.requires_grad:
            raise NumericsError(f"grad_check input {name!r} does not require grad")

    loss = f()
    if loss.numel() != 1:
        raise NumericsError(f"grad_check needs a scalar, got shape {tuple(loss.shape)}")
    grads = torch.autograd.grad(loss, list(named.values()), allow_unused=True)

    bad: list[tuple[str, tuple[int, ...]]] = []
    analytic: dict[str, Tensor] = {}
    for (name, t), g in zip(named.items(), grads):
        g = torch.zeros_like(t) if g is None else g.detach()
        for idx in (~torch.isfinite(g)).nonzero().tolist():
            bad.append((name, tuple(idx)))
        analytic[name] = g
    if bad:
        raise GradientCheckError("non-finite analytic gradient", bad)

    rng = np.random.default_rng(seed)
    worst = 0.0
    with torch.no_grad():
        for name, t in named.items():
            flat = t.view(-1)
            g = analytic[name].reshape(-1)
            n = flat.numel()
            coords = range(n) if n <= max_coords else sorted(rng.choice(n, size=max_coords, replace=False).tolist())
            for i in coords:
                orig = flat[i].item()
                flat[i] = orig + step
                plus = f().item()
                flat[i] = orig - step
                minus = f().item()
                flat[i] = orig
                numeric = (plus - minus) / (2 * step)
                if not math.isfinite(numeric):
                    bad.append((name, tuple(int(j) for j in np.unravel_index(i, tuple(t.shape)))))
                    continue
                err = abs(g[i].item() - numeric) / max(1.0, abs(numeric))
                worst = max(worst, err)
    if bad:
        raise GradientCheckError("non-finite numeric gradient", bad)
    logger.debug("grad_check over %d input(s): max relative error %.3e", len(named), worst)
    return worst


def trainable_parameters(module: nn.Module, prefix: str = "") -> dict[str, Tensor]:
    return {f"{prefix}{name}": p for name, p in module.named_parameters() if p.requires_grad}
