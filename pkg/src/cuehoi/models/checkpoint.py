"""Versioned model checkpoints with strict name and shape validation."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional, Union

import torch
from pydantic import ValidationError

from cuehoi.config import EncoderConfig, FusionConfig, RunConfig
from cuehoi.data.registry import HoiClassRegistry
from cuehoi.exceptions import CheckpointError, RegistryError
from cuehoi.models.detector import HoiDetector

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(
    path: Union[str, Path],
    model: HoiDetector,
    run_config: Optional[RunConfig] = None,
    extra: Optional[dict[str, Any]] = None,
) -> Path:
    """Writes every named tensor plus the configs and the registry the model was built for."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "fusion": model.config.model_dump(mode="json"),
        "encoder": model.encoder_config.model_dump(mode="json"),
        "registry": model.registry.to_dict(),
        "run_config": run_config.model_dump(mode="json") if run_config else None,
        "extra": extra or {},
        "state_dict": {k: v.detach().clone() for k, v in model.state_dict().items()},
    }
    torch.save(payload, path)
    logger.info("Saved checkpoint to %s", path)
    return path


def read_checkpoint(path: Union[str, Path]) -> dict[str, Any]:
    path = Path(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError as e:
        raise CheckpointError(f"checkpoint {path} does not exist") from e
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or payload.get("format_version") != FORMAT_VERSION:
        found = payload.get("format_version") if isinstance(payload, dict) else None
        raise CheckpointError(f"{path}: unsupported checkpoint format version {found!r} (expected {FORMAT_VERSION})")
    missing = [k for k in ("fusion", "encoder", "registry", "state_dict") if k not in payload]
    if missing:
        raise CheckpointError(f"{path}: missing section(s) {missing}")
    return payload


def load_checkpoint(
    path: Union[str, Path],
    registry: Optional[HoiClassRegistry] = None,
) -> tuple[HoiDetector, dict[str, Any]]:
    """Rebuilds the detector stored at `path`.

    Args:
        path: Checkpoint written by `save_checkpoint`.
        registry: Dataset registry to check against; its vocabulary and class layout must
            match the checkpoint's.

    Returns:
        The detector (eval mode) and the raw payload.
    """
    payload = read_checkpoint(path)
    try:
        fusion = FusionConfig.model_validate(payload["fusion"])
        encoder = EncoderConfig.model_validate(payload["encoder"])
        stored = HoiClassRegistry.model_validate(payload["registry"])
    except ValidationError as e:
        raise CheckpointError(f"{path}: invalid stored configuration: {e}") from e
    if registry is not None and registry.fingerprint() != stored.fingerprint():
        raise RegistryError(
            f"checkpoint {path} was trained on registry {stored.fingerprint()} "
            f"({stored.num_classes} classes) but the dataset uses {registry.fingerprint()} "
            f"({registry.num_classes} classes)"
        )

    model = HoiDetector(fusion, encoder, stored)
    expected = model.state_dict()
    state = payload["state_dict"]
    unexpected = sorted(set(state) - set(expected))
    absent = sorted(set(expected) - set(state))
    if unexpected or absent:
        raise CheckpointError(f"{path}: unexpected tensors {unexpected[:5]}, missing tensors {absent[:5]}")
    for name, tensor in expected.items():
        if tuple(state[name].shape) != tuple(tensor.shape):
            raise CheckpointError(
                f"{path}: tensor {name!r} has shape {tuple(state[name].shape)}, expected {tuple(tensor.shape)}"
            )
    model.load_state_dict(state, strict=True)
    model.eval()
    logger.info("Loaded checkpoint %s (%d tensors)", path, len(state))
    return model, payload
