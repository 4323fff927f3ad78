"""Run manifests: everything needed to repeat a run."""

from __future__ import annotations

import json
import logging
import platform
import sys
from importlib import metadata
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import torch

from cuehoi.config import RunConfig, dump_run_config

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def package_version() -> str:
    try:
        return metadata.version("cuehoi")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def build_manifest(
    command: str,
    config: RunConfig,
    outputs: Sequence[Union[str, Path]] = (),
    argv: Optional[Sequence[str]] = None,
    extra: Optional[dict[str, Any]] = None,
) -> dict[str, Any]:
    return {
        "command": command,
        "argv": list(sys.argv if argv is None else argv),
        "config": dump_run_config(config),
        "seeds": {
            "run": config.seed,
            "synthetic": config.synthetic.seed,
            "pattern": config.synthetic.pattern_seed,
            "split": config.split.seed,
            "embedder": config.encoder.embedder_seed,
        },
        "versions": {
            "cuehoi": package_version(),
            "python": platform.python_version(),
            "torch": torch.__version__,
            "numpy": np.__version__,
        },
        "outputs": [str(p) for p in outputs],
        **({"extra": extra} if extra else {}),
    }


def write_manifest(output_dir: Union[str, Path], manifest: dict[str, Any]) -> Path:
    path = Path(output_dir) / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Wrote run manifest to %s", path)
    return path


def read_manifest(path: Union[str, Path]) -> dict[str, Any]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    return json.loads(path.read_text(encoding="utf-8"))
