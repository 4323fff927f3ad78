"""Rare/non-rare partition and the zero-shot seen/unseen split constructors."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, ValidationError, model_validator

from cuehoi.config import SplitConfig, SplitSetting
from cuehoi.data.annotations import HoiAnnotation
from cuehoi.data.registry import HoiClassRegistry
from cuehoi.exceptions import DataError, RegistryError

logger = logging.getLogger(__name__)

RARE_THRESHOLD = 10


class SplitSpec(BaseModel):
    """Partition of the HOI classes into those seen in training and those held out."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    setting: SplitSetting
    num_classes: int
    seen: tuple[int, ...]
    unseen: tuple[int, ...]
    seed: Optional[int] = None
    unseen_objects: tuple[int, ...] = ()
    unseen_verbs: tuple[int, ...] = ()

    _unseen: frozenset[int] = PrivateAttr(default_factory=frozenset)

    @model_validator(mode="after")
    def _partition(self) -> "SplitSpec":
        seen, unseen = set(self.seen), set(self.unseen)
        if len(seen) != len(self.seen) or len(unseen) != len(self.unseen):
            raise ValueError("class ids repeat within seen or unseen")
        if seen & unseen:
            raise ValueError(f"classes {sorted(seen & unseen)[:10]} are both seen and unseen")
        if seen | unseen != set(range(self.num_classes)):
            raise ValueError(f"seen and unseen do not cover the {self.num_classes} HOI classes")
        return self

    def is_unseen(self, hoi_class: int) -> bool:
        return hoi_class in self._unseen

    def model_post_init(self, __context: Any) -> None:
        self._unseen = frozenset(self.unseen)

    def summary(self) -> dict[str, int]:
        return {
            "seen": len(self.seen),
            "unseen": len(self.unseen),
            "unseen_objects": len(self.unseen_objects),
            "unseen_verbs": len(self.unseen_verbs),
        }


def split_rare_nonrare(registry: HoiClassRegistry, threshold: int = RARE_THRESHOLD) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Splits classes by training count: rare below `threshold`, non-rare at or above."""
    rare = tuple(c for c, n in enumerate(registry.counts) if n < threshold)
    nonrare = tuple(c for c, n in enumerate(registry.counts) if n >= threshold)
    return rare, nonrare


def _spec(
    setting: SplitSetting,
    registry: HoiClassRegistry,
    unseen: Iterable[int],
    seed: Optional[int] = None,
    objects: Sequence[int] = (),
    verbs: Sequence[int] = (),
) -> SplitSpec:
    unseen = tuple(sorted(set(unseen)))
    hidden = set(unseen)
    return SplitSpec(
        setting=setting,
        num_classes=registry.num_classes,
        seen=tuple(c for c in range(registry.num_classes) if c not in hidden),
        unseen=unseen,
        seed=seed,
        unseen_objects=tuple(sorted(objects)),
        unseen_verbs=tuple(sorted(verbs)),
    )


def _require(available: int, requested: int, what: str, setting: str) -> None:
    if requested > available:
        raise RegistryError(f"{setting} needs {requested} {what} but the registry has only {available}")


def make_zero_shot_split(
    setting: SplitSetting,
    registry: HoiClassRegistry,
    seed: int = 0,
    unseen_classes: int = 120,
    unseen_objects: int = 12,
    unseen_verbs: int = 20,
) -> SplitSpec:
    """Builds one of the zero-shot splits.

    RF-UC holds out the `unseen_classes` lowest-count classes and NF-UC the highest-count
    ones; count ties go to the lower class id first. UO and UV sample objects or verbs
    with a generator seeded by `seed` and hold out every class that involves them.

    Raises:
        RegistryError: if the registry has fewer classes, objects or verbs than requested.
    """
    if setting == "regular":
        return _spec(setting, registry, ())
    if setting in ("RF-UC", "NF-UC"):
        _require(registry.num_classes, unseen_classes, "HOI classes", setting)
        sign = 1 if setting == "RF-UC" else -1
        order = sorted(range(registry.num_classes), key=lambda c: (sign * registry.counts[c], c))
        return _spec(setting, registry, order[:unseen_classes])
    rng = np.random.default_rng(seed)
    if setting == "UO":
        _require(registry.num_objects, unseen_objects, "objects", setting)
        objects = [int(o) for o in rng.choice(registry.num_objects, size=unseen_objects, replace=False)]
        unseen = [c for o in objects for c in registry.classes_for_object(o)]
        return _spec(setting, registry, unseen, seed=seed, objects=objects)
    if setting == "UV":
        _require(registry.num_verbs, unseen_verbs, "verbs", setting)
        verbs = [int(v) for v in rng.choice(registry.num_verbs, size=unseen_verbs, replace=False)]
        unseen = [c for v in verbs for c in registry.classes_for_verb(v)]
        return _spec(setting, registry, unseen, seed=seed, verbs=verbs)
    raise RegistryError(f"unknown split setting {setting!r}")


def split_from_config(config: SplitConfig, registry: HoiClassRegistry) -> SplitSpec:
    if config.path:
        split = load_split(config.path)
        if split.num_classes != registry.num_classes:
            raise RegistryError(
                f"split {config.path} covers {split.num_classes} classes, registry has {registry.num_classes}"
            )
        return split
    return make_zero_shot_split(
        config.setting,
        registry,
        seed=config.seed,
        unseen_classes=config.unseen_classes,
        unseen_objects=config.unseen_objects,
        unseen_verbs=config.unseen_verbs,
    )


def filter_training_set(
    annotations: Sequence[HoiAnnotation],
    split: SplitSpec,
    registry: HoiClassRegistry,
) -> list[HoiAnnotation]:
    """Drops every ground-truth triplet of an unseen class; images themselves are kept."""
    if not split.unseen:
        return list(annotations)
    filtered = []
    removed = 0
    for ann in annotations:
        kept = tuple(gt for gt in ann.gts if not split.is_unseen(registry.hoi_index(gt.verb, gt.obj)))
        removed += len(ann.gts) - len(kept)
        filtered.append(ann.model_copy(update={"gts": kept}))
    logger.info("Split %s removed %d unseen triplet(s) from training", split.setting, removed)
    return filtered


def save_split(path: Union[str, Path], split: SplitSpec) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(split.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    return path


def load_split(path: Union[str, Path]) -> SplitSpec:
    path = Path(path)
    try:
        return SplitSpec.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except ValidationError as e:
        raise DataError(f"invalid split file {path}:\n{e}") from e
    except (OSError, ValueError) as e:
        raise DataError(f"cannot read split file {path}: {e}") from e
