"""Desk-scale synthetic HOI scenes.

A scene is a set of triplets placed on a `grid_size x grid_size` feature grid. Each
human and each object occupies its own grid cell and its box is centred on that cell,
so the stub visual encoders can plant class and box signal at known feature rows.
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from cuehoi.config import SyntheticSceneConfig
from cuehoi.data.annotations import Box, HoiAnnotation, HoiInstance, count_instances
from cuehoi.data.registry import HoiClassRegistry, resolve_registry
from cuehoi.exceptions import ConfigError

logger = logging.getLogger(__name__)

MIN_BOX_SIDE = 0.1
MAX_BOX_SIDE = 0.35


class SyntheticDataset(NamedTuple):
    registry: HoiClassRegistry
    annotations: list[HoiAnnotation]
    feature_seeds: dict[str, int]


def cell_of(box: Box, grid_size: int) -> int:
    """Row-major index of the grid cell holding the centre of `box`."""
    cx = (box[0] + box[2]) / 2
    cy = (box[1] + box[3]) / 2
    col = min(int(cx * grid_size), grid_size - 1)
    row = min(int(cy * grid_size), grid_size - 1)
    return row * grid_size + col


def _centred_box(cell: int, grid_size: int, sides: np.ndarray) -> Box:
    row, col = divmod(cell, grid_size)
    cx = (col + 0.5) / grid_size
    cy = (row + 0.5) / grid_size
    # Symmetric around the cell centre and clipped by shrinking, so cell_of() recovers `cell`.
    hw = min(sides[0] / 2, cx, 1.0 - cx)
    hh = min(sides[1] / 2, cy, 1.0 - cy)
    return (
        round(cx - hw, 4),
        round(cy - hh, 4),
        round(cx + hw, 4),
        round(cy + hh, 4),
    )


def generate_synthetic(cfg: SyntheticSceneConfig, registry: HoiClassRegistry | None = None) -> SyntheticDataset:
    """Generates a reproducible synthetic dataset.

    Args:
        cfg: Scene configuration; `cfg.seed` fixes every random draw.
        registry: Class vocabulary; defaults to the registry named by `cfg.registry`.

    Returns:
        The registry with counts tallied over the scenes, the annotations and the
        per-image feature seeds the stub encoders consume.
    """
    registry = registry or resolve_registry(cfg.registry)
    cells = cfg.grid_size * cfg.grid_size
    if 2 * cfg.max_objects > cells:
        raise ConfigError(
            f"{cfg.max_objects} triplets need {2 * cfg.max_objects} distinct cells; "
            f"a {cfg.grid_size}x{cfg.grid_size} grid has {cells}"
        )
    if registry.num_classes == 0:
        raise ConfigError("registry has no HOI classes to sample from")

    rng = np.random.default_rng(cfg.seed)
    annotations: list[HoiAnnotation] = []
    seeds: dict[str, int] = {}
    for i in range(cfg.num_images):
        n = int(rng.integers(cfg.min_objects, cfg.max_objects + 1))
        picked = rng.choice(cells, size=2 * n, replace=False)
        gts = []
        for j in range(n):
            verb, obj = registry.hoi_classes[int(rng.integers(registry.num_classes))]
            sides = rng.uniform(MIN_BOX_SIDE, MAX_BOX_SIDE, size=4)
            gts.append(
                HoiInstance(
                    hbox=_centred_box(int(picked[2 * j]), cfg.grid_size, sides[:2]),
                    obox=_centred_box(int(picked[2 * j + 1]), cfg.grid_size, sides[2:]),
                    obj=obj,
                    verb=verb,
                )
            )
        image_id = f"synth_{i:05d}"
        seed = int(rng.integers(2**31 - 1))
        seeds[image_id] = seed
        annotations.append(HoiAnnotation(id=image_id, gts=tuple(gts), feature_seed=seed))

    registry = registry.with_counts(count_instances(registry, annotations))
    logger.info(
        "Generated %d synthetic scene(s) with %d triplet(s) (seed %d)",
        len(annotations), sum(registry.counts), cfg.seed,
    )
    return SyntheticDataset(registry, annotations, seeds)
