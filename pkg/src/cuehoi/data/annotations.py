"""Ground-truth annotation schema and the JSON annotation file format."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from cuehoi.data.registry import HoiClassRegistry, parse_registry
from cuehoi.exceptions import AnnotationError

logger = logging.getLogger(__name__)

Box = tuple[float, float, float, float]


def _check_box(box: Box) -> Box:
    x1, y1, x2, y2 = box
    if not all(0.0 <= v <= 1.0 for v in box):
        raise ValueError(f"box {list(box)} is not normalized to [0, 1]")
    if not (x1 < x2 and y1 < y2):
        raise ValueError(f"box {list(box)} violates x1 < x2, y1 < y2")
    return box


class HoiInstance(BaseModel):
    """One ground-truth triplet: human box, object box, object class and verb class."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    hbox: Box
    obox: Box
    obj: int = Field(ge=0)
    verb: int = Field(ge=0)

    @field_validator("hbox", "obox")
    @classmethod
    def _ordered(cls, v: Box) -> Box:
        return _check_box(v)


class HoiAnnotation(BaseModel):
    """An image and its ground truth.

    At desk scale an image is its id plus either a stub-encoder `feature_seed` or paths
    to precomputed embedding files (`instance_features`, `interaction_features`).
    `image` optionally points at the picture sent to a vision-language model.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: Union[int, str]
    gts: tuple[HoiInstance, ...] = ()
    feature_seed: Optional[int] = None
    instance_features: Optional[str] = None
    interaction_features: Optional[str] = None
    image: Optional[str] = None

    @property
    def image_id(self) -> str:
        return str(self.id)


def count_instances(registry: HoiClassRegistry, annotations: Iterable[HoiAnnotation]) -> tuple[int, ...]:
    counts = [0] * registry.num_classes
    for ann in annotations:
        for gt in ann.gts:
            counts[registry.hoi_index(gt.verb, gt.obj)] += 1
    return tuple(counts)


def hoi_class_of(registry: HoiClassRegistry, gt: HoiInstance) -> int:
    return registry.hoi_index(gt.verb, gt.obj)


def _field_name(loc: Sequence[Union[int, str]]) -> str:
    parts: list[str] = []
    for item in loc:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(("." if parts else "") + item)
    return "".join(parts)


def parse_image(record: Any, registry: HoiClassRegistry, position: int) -> HoiAnnotation:
    """Validates one image record against the schema and the registry."""
    image_id = str(record.get("id", f"#{position}")) if isinstance(record, dict) else f"#{position}"
    try:
        ann = HoiAnnotation.model_validate(record)
    except ValidationError as e:
        first = e.errors()[0]
        raise AnnotationError(first["msg"], image_id=image_id, field=_field_name(first["loc"])) from e
    for i, gt in enumerate(ann.gts):
        if gt.obj >= registry.num_objects:
            raise AnnotationError(f"unknown object id {gt.obj}", image_id=image_id, field=f"gts[{i}].obj")
        if gt.verb >= registry.num_verbs:
            raise AnnotationError(f"unknown verb id {gt.verb}", image_id=image_id, field=f"gts[{i}].verb")
        if not registry.has_class(gt.verb, gt.obj):
            raise AnnotationError(
                f"(verb={gt.verb}, object={gt.obj}) is not a registered HOI class",
                image_id=image_id,
                field=f"gts[{i}]",
            )
    return ann


def parse_annotations(data: Any, source: str = "<memory>") -> tuple[HoiClassRegistry, list[HoiAnnotation]]:
    if not isinstance(data, dict):
        raise AnnotationError(f"{source}: top level must be an object")
    missing = [k for k in ("objects", "verbs", "hoi_classes", "images") if k not in data]
    if missing:
        raise AnnotationError(f"{source}: missing top-level key(s) {missing}")
    if not isinstance(data["images"], list):
        raise AnnotationError(f"{source}: 'images' must be a list", field="images")
    registry = parse_registry(
        {"objects": data["objects"], "verbs": data["verbs"], "hoi_classes": data["hoi_classes"]}, source
    )
    annotations = [parse_image(record, registry, i) for i, record in enumerate(data["images"])]
    seen: set[str] = set()
    for ann in annotations:
        if ann.image_id in seen:
            raise AnnotationError("duplicate image id", image_id=ann.image_id, field="id")
        seen.add(ann.image_id)
    return registry.with_counts(count_instances(registry, annotations)), annotations


def load_annotations(path: Union[str, Path]) -> tuple[HoiClassRegistry, list[HoiAnnotation]]:
    """Reads an annotation file.

    Args:
        path: UTF-8 JSON file with `objects`, `verbs`, `hoi_classes` and `images`.

    Returns:
        The registry, with per-class counts tallied over the file, and the validated images.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise AnnotationError(f"cannot read annotation file {path}: {e}") from e
    except ValueError as e:
        raise AnnotationError(f"{path} is not valid JSON: {e}") from e
    registry, annotations = parse_annotations(data, str(path))
    logger.info(
        "Loaded %d image(s) with %d triplet(s) from %s",
        len(annotations), sum(registry.counts), path,
    )
    return registry, annotations


def serialize_annotations(registry: HoiClassRegistry, annotations: Sequence[HoiAnnotation]) -> dict[str, Any]:
    return {
        "objects": list(registry.objects),
        "verbs": list(registry.verbs),
        "hoi_classes": [list(pair) for pair in registry.hoi_classes],
        "images": [ann.model_dump(mode="json", exclude_none=True) for ann in annotations],
    }


def save_annotations(
    path: Union[str, Path], registry: HoiClassRegistry, annotations: Sequence[HoiAnnotation]
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(serialize_annotations(registry, annotations), indent=2) + "\n", encoding="utf-8")
    return path
