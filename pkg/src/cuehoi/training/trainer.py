"""Training loop: per-image forward and matching, summed gradients per batch, AdamW steps."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
import torch
from torch import Tensor

from cuehoi.config import LossWeights, OptimizerConfig
from cuehoi.cues.schema import CueSet
from cuehoi.data.annotations import HoiAnnotation
from cuehoi.data.registry import HoiClassRegistry
from cuehoi.exceptions import DataError, MissingCuesError, NumericsError
from cuehoi.models.detector import HoiDetector
from cuehoi.models.encoders import StubVisualEncoder
from cuehoi.training.criterion import TERMS, LossBreakdown, SetCriterion
from cuehoi.training.targets import HoiTargets

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ("epoch", "total", *TERMS)


@dataclass(frozen=True)
class TrainingExample:
    image_id: str
    instance_features: Tensor
    interaction_features: Tensor
    cues: Optional[CueSet]
    targets: HoiTargets


@dataclass(frozen=True)
class EpochLosses:
    epoch: int
    total: float
    loss_b: float
    loss_u: float
    loss_o: float
    loss_c: float

    def row(self) -> list[str]:
        return [str(self.epoch)] + [repr(getattr(self, k)) for k in CURVE_COLUMNS[1:]]


def build_examples(
    annotations: Sequence[HoiAnnotation],
    registry: HoiClassRegistry,
    visual: StubVisualEncoder,
    cues: Optional[Mapping[str, CueSet]] = None,
    needs_cues: bool = True,
    targets: Optional[Sequence[HoiAnnotation]] = None,
) -> list[TrainingExample]:
    """Encodes the visual grids once and pairs each image with its cues and targets.

    Features always come from the full `annotations`; `targets`, when given, are the same
    images with held-out triplets removed and supply the training ground truth.

    Raises:
        MissingCuesError: if the model fuses cues and some image has none.
    """
    cues = cues or {}
    targets = annotations if targets is None else targets
    if len(targets) != len(annotations):
        raise DataError(f"{len(targets)} target image(s) for {len(annotations)} scene(s)")
    if needs_cues:
        missing = [a.image_id for a in annotations if a.image_id not in cues]
        if missing:
            raise MissingCuesError(missing)
    return [
        TrainingExample(
            image_id=ann.image_id,
            instance_features=visual.encode_instance_visual(ann),
            interaction_features=visual.encode_interaction_visual(ann),
            cues=cues.get(ann.image_id) if needs_cues else None,
            targets=HoiTargets.from_annotation(target, registry),
        )
        for ann, target in zip(annotations, targets)
    ]


def trainable_named_parameters(model: torch.nn.Module) -> list[tuple[str, torch.nn.Parameter]]:
    return [(name, p) for name, p in model.named_parameters() if p.requires_grad]


class Trainer:
    """Optimizes a detector with AdamW under the epoch learning-rate schedule of `optimizer_config`.

    A batch's gradient is the exact sum of its images' gradients. Batch order is
    shuffled by a generator seeded from `seed`, so a run is a pure function of
    (model init, data, config, seed).
    """

    def __init__(
        self,
        model: HoiDetector,
        loss_weights: LossWeights,
        optimizer_config: OptimizerConfig,
        seed: int = 0,
    ):
        self.model = model
        self.config = optimizer_config
        self.criterion = SetCriterion(loss_weights)
        self.optimizer = torch.optim.AdamW(
            [p for _, p in trainable_named_parameters(model)],
            lr=optimizer_config.learning_rate,
            betas=optimizer_config.betas,
            weight_decay=optimizer_config.weight_decay,
            foreach=True,
        )
        self.scheduler = torch.optim.lr_scheduler.LambdaLR(
            self.optimizer, lambda index: optimizer_config.lr_factor(index + 1)
        )
        self._rng = np.random.default_rng(seed)
        self._batch_id = 0

    def loss(self, example: TrainingExample) -> LossBreakdown:
        outputs = self.model.predict(example.instance_features, example.interaction_features, example.cues)
        breakdown, _ = self.criterion(outputs, example.targets)
        return breakdown

    def train_step(self, batch: Sequence[TrainingExample]) -> list[LossBreakdown]:
        """One optimizer step on the summed loss of `batch`."""
        self.model.train()
        self.optimizer.zero_grad(set_to_none=True)
        losses = []
        for example in batch:
            breakdown = self.loss(example)
            value = breakdown.total.item()
            if not math.isfinite(value):
                raise NumericsError(f"non-finite loss {value} on image {example.image_id!r}", batch_id=self._batch_id)
            breakdown.total.backward()
            losses.append(breakdown)
        if self.config.max_grad_norm is not None:
            torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.config.max_grad_norm)
        self.optimizer.step()
        logger.debug(
            "batch %d: mean loss %.6f over %d image(s)",
            self._batch_id, sum(b.total.item() for b in losses) / len(losses), len(losses),
        )
        self._batch_id += 1
        return losses

    def train_epoch(self, examples: Sequence[TrainingExample], epoch: int) -> EpochLosses:
        order = self._rng.permutation(len(examples))
        size = self.config.batch_size
        sums = dict.fromkeys(CURVE_COLUMNS[1:], 0.0)
        for start in range(0, len(order), size):
            batch = [examples[int(i)] for i in order[start:start + size]]
            for breakdown in self.train_step(batch):
                for key, value in breakdown.as_floats().items():
                    sums[key] += value
        count = max(len(examples), 1)
        return EpochLosses(epoch=epoch, **{k: v / count for k, v in sums.items()})

    def fit(
        self,
        examples: Sequence[TrainingExample],
        epochs: int,
        on_epoch: Optional[Callable[[EpochLosses], None]] = None,
    ) -> list[EpochLosses]:
        curve = []
        for epoch in range(1, epochs + 1):
            losses = self.train_epoch(examples, epoch)
            logger.info(
                "epoch %d/%d: total %.5f (L_b %.5f, L_u %.5f, L_o %.5f, L_c %.5f) lr %.2e",
                epoch, epochs, losses.total, losses.loss_b, losses.loss_u, losses.loss_o, losses.loss_c,
                self.optimizer.param_groups[0]["lr"],
            )
            self.scheduler.step()
            curve.append(losses)
            if on_epoch is not None:
                on_epoch(losses)
        return curve


def write_loss_curve(path: Union[str, Path], curve: Sequence[EpochLosses]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        for losses in curve:
            writer.writerow(losses.row())
    return path
