"""Stub visual encoders producing the instance grid F_i and the interaction grid F_c.

Both grids are seeded pseudo-random noise plus fixed per-cell codes, with the scene's
classes and boxes planted at the grid cells that hold each human and object centre.
An image may instead point at precomputed embedding files, which pass through as-is.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import torch
from torch import Tensor

from cuehoi.config import FusionConfig, SyntheticSceneConfig
from cuehoi.data.annotations import Box, HoiAnnotation
from cuehoi.data.embedding_file import read_embedding
from cuehoi.data.registry import HoiClassRegistry
from cuehoi.data.synthetic import cell_of
from cuehoi.exceptions import DataError
from cuehoi.numerics import DTYPE

logger = logging.getLogger(__name__)

BoxRole = Literal["human", "object", "interaction"]

INSTANCE_STREAM = 0
INTERACTION_STREAM = 1


def sine_position_codes(grid_size: int, width: int, quadrature: bool = False) -> np.ndarray:
    """2-D sine/cosine codes, centred over the grid.

    A quarter of the channels each hold sin/cos of the row and the column. With
    `quadrature` every (sin, cos) pair becomes (cos, -sin): a fixed linear map of the
    plain codes that is orthogonal to them at every cell.
    """
    quarter = math.ceil(width / 4)
    omega = 1.0 / (100.0 ** (np.arange(quarter) / quarter))
    rows, cols = np.divmod(np.arange(grid_size * grid_size), grid_size)
    ry = rows[:, None] * omega[None]
    cx = cols[:, None] * omega[None]
    if quadrature:
        blocks = [np.cos(ry), -np.sin(ry), np.cos(cx), -np.sin(cx)]
    else:
        blocks = [np.sin(ry), np.cos(ry), np.sin(cx), np.cos(cx)]
    codes = np.concatenate(blocks, axis=1)
    return (codes - codes.mean(axis=0))[:, :width]


def box_to_cxcywh(box: Box) -> np.ndarray:
    x1, y1, x2, y2 = box
    return np.array([(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1])


class StubVisualEncoder:
    """Deterministic stand-in for the detector backbone and the CLIP image encoder."""

    def __init__(
        self,
        registry: HoiClassRegistry,
        grid_size: int,
        instance_width: int,
        interaction_width: int,
        noise_level: float = 0.05,
        pattern_seed: int = 7,
        feature_root: Optional[Union[str, Path]] = None,
    ):
        self.registry = registry
        self.grid_size = grid_size
        self.instance_width = instance_width
        self.interaction_width = interaction_width
        self.noise_level = noise_level
        self.feature_root = Path(feature_root) if feature_root else None

        rng = np.random.default_rng([pattern_seed, INSTANCE_STREAM])
        self._object_patterns = rng.standard_normal((registry.num_objects, instance_width))
        self._human_marker = rng.standard_normal(instance_width)
        self._box_human = rng.standard_normal((instance_width, 4))
        self._box_object = rng.standard_normal((instance_width, 4))
        self._positions = sine_position_codes(grid_size, instance_width)

        crng = np.random.default_rng([pattern_seed, INTERACTION_STREAM])
        self._verb_patterns = crng.standard_normal((registry.num_verbs, interaction_width))
        self._interaction_object_patterns = crng.standard_normal((registry.num_objects, interaction_width))
        self._box_interaction = crng.standard_normal((interaction_width, 4))
        self._cell_codes = sine_position_codes(grid_size, interaction_width, quadrature=True)

    @classmethod
    def build(
        cls,
        registry: HoiClassRegistry,
        fusion: FusionConfig,
        scene: SyntheticSceneConfig,
        feature_root: Optional[Union[str, Path]] = None,
    ) -> "StubVisualEncoder":
        return cls(
            registry,
            grid_size=scene.grid_size,
            instance_width=fusion.instance_width,
            interaction_width=fusion.interaction_width,
            noise_level=scene.noise_level,
            pattern_seed=scene.pattern_seed,
            feature_root=feature_root,
        )

    @property
    def num_tokens(self) -> int:
        return self.grid_size * self.grid_size

    def position_codes(self) -> np.ndarray:
        return self._positions.copy()

    def cell_codes(self) -> np.ndarray:
        return self._cell_codes.copy()

    def object_pattern(self, obj: int, branch: Literal["instance", "interaction"] = "instance") -> np.ndarray:
        table = self._object_patterns if branch == "instance" else self._interaction_object_patterns
        return table[obj].copy()

    def verb_pattern(self, verb: int) -> np.ndarray:
        return self._verb_patterns[verb].copy()

    def human_marker(self) -> np.ndarray:
        return self._human_marker.copy()

    def box_code(self, box: Box, role: BoxRole) -> np.ndarray:
        projection = {"human": self._box_human, "object": self._box_object, "interaction": self._box_interaction}[role]
        return projection @ box_to_cxcywh(box)

    def _path(self, name: str) -> Path:
        return self.feature_root / name if self.feature_root else Path(name)

    def _seed(self, image: HoiAnnotation) -> int:
        if image.feature_seed is None:
            raise DataError(f"image {image.image_id!r} has neither a feature seed nor an embedding file")
        return image.feature_seed

    def _noise(self, image: HoiAnnotation, stream: int, width: int) -> np.ndarray:
        rng = np.random.default_rng([self._seed(image), stream])
        return self.noise_level * rng.standard_normal((self.num_tokens, width))

    def encode_instance_visual(self, image: HoiAnnotation) -> Tensor:
        """F_i: (grid tokens x instance width)."""
        if image.instance_features:
            return read_embedding(self._path(image.instance_features), self.instance_width)
        grid = self._noise(image, INSTANCE_STREAM, self.instance_width) + self._positions
        for gt in image.gts:
            h = cell_of(gt.hbox, self.grid_size)
            o = cell_of(gt.obox, self.grid_size)
            grid[h] += (
                self._human_marker
                + self.box_code(gt.hbox, "human")
                + self.box_code(gt.obox, "object")
                + self._object_patterns[gt.obj]
            )
            grid[o] += self._object_patterns[gt.obj] + self.box_code(gt.obox, "object")
        return torch.from_numpy(grid).to(DTYPE)

    def encode_interaction_visual(self, image: HoiAnnotation) -> Tensor:
        """F_c: (grid tokens x interaction width), drawn from a stream independent of F_i."""
        if image.interaction_features:
            return read_embedding(self._path(image.interaction_features), self.interaction_width)
        grid = self._noise(image, INTERACTION_STREAM, self.interaction_width) + self._cell_codes
        for gt in image.gts:
            h = cell_of(gt.hbox, self.grid_size)
            o = cell_of(gt.obox, self.grid_size)
            grid[h] += (
                self._verb_patterns[gt.verb]
                + self._interaction_object_patterns[gt.obj]
                + self.box_code(gt.hbox, "interaction")
            )
            grid[o] += self._interaction_object_patterns[gt.obj]
        return torch.from_numpy(grid).to(DTYPE)
