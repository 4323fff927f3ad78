"""Precomputed feature grids: a `<II` header (tokens, width) then row-major float64 data."""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np
import torch
from torch import Tensor

from cuehoi.exceptions import DataError
from cuehoi.numerics import DTYPE

_HEADER = struct.Struct("<II")


def write_embedding(path: Union[str, Path], features: Union[Tensor, np.ndarray]) -> Path:
    data = features.detach().cpu().numpy() if isinstance(features, Tensor) else np.asarray(features)
    if data.ndim != 2:
        raise DataError(f"embedding must be a matrix, got shape {data.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(_HEADER.pack(*data.shape))
        f.write(np.ascontiguousarray(data, dtype="<f8").tobytes())
    return path


def read_embedding(path: Union[str, Path], expected_width: int | None = None) -> Tensor:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read embedding file {path}: {e}") from e
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header")
    tokens, width = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size:]
    if len(body) != tokens * width * 8:
        raise DataError(f"{path}: header says {tokens}x{width} but payload has {len(body)} bytes")
    if tokens == 0:
        raise DataError(f"{path}: empty feature grid")
    if expected_width is not None and width != expected_width:
        raise DataError(f"{path}: width {width} does not match the configured width {expected_width}")
    data = np.frombuffer(body, dtype="<f8").reshape(tokens, width)
    if not np.isfinite(data).all():
        raise DataError(f"{path}: non-finite feature values")
    return torch.from_numpy(data.astype(np.float64)).to(DTYPE)
