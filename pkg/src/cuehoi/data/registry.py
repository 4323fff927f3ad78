"""HOI class vocabulary: objects, verbs, valid (verb, object) pairs and training counts."""

from __future__ import annotations

import hashlib
import json
import logging
from importlib import resources
from pathlib import Path
from typing import Any, Sequence, Union

from pydantic import BaseModel, ConfigDict, PrivateAttr, ValidationError, model_validator

from cuehoi.exceptions import RegistryError

logger = logging.getLogger(__name__)

CLASS_TEMPLATE = "a photo of a person {verb} a {object}"

BUNDLED_REGISTRIES = {
    "fixture": "fixture_registry.json",
    "hico_det": "hico_det_profile.json",
}


class HoiClassRegistry(BaseModel):
    """Object classes, verb classes and the HOI classes built from them.

    `hoi_classes[c]` is the `(verb, object)` pair of HOI class `c`; `counts[c]` is the
    number of training instances of that class.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    objects: tuple[str, ...]
    verbs: tuple[str, ...]
    hoi_classes: tuple[tuple[int, int], ...]
    counts: tuple[int, ...] = ()

    _index: dict[tuple[int, int], int] = PrivateAttr(default_factory=dict)
    _by_object: dict[int, tuple[int, ...]] = PrivateAttr(default_factory=dict)
    _by_verb: dict[int, tuple[int, ...]] = PrivateAttr(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _default_counts(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("counts") is None:
            data = {**data, "counts": [0] * len(data.get("hoi_classes") or ())}
        return data

    @model_validator(mode="after")
    def _check(self) -> "HoiClassRegistry":
        for c, (verb, obj) in enumerate(self.hoi_classes):
            if not 0 <= verb < len(self.verbs):
                raise ValueError(f"HOI class {c} references unknown verb id {verb}")
            if not 0 <= obj < len(self.objects):
                raise ValueError(f"HOI class {c} references unknown object id {obj}")
        if len(set(self.hoi_classes)) != len(self.hoi_classes):
            raise ValueError("duplicate (verb, object) pairs in hoi_classes")
        if len(self.counts) != len(self.hoi_classes):
            raise ValueError(f"{len(self.counts)} counts for {len(self.hoi_classes)} HOI classes")
        if any(n < 0 for n in self.counts):
            raise ValueError("instance counts must be nonnegative")
        return self

    def model_post_init(self, __context: Any) -> None:
        by_object: dict[int, list[int]] = {}
        by_verb: dict[int, list[int]] = {}
        for c, (verb, obj) in enumerate(self.hoi_classes):
            self._index[(verb, obj)] = c
            by_object.setdefault(obj, []).append(c)
            by_verb.setdefault(verb, []).append(c)
        self._by_object = {k: tuple(v) for k, v in by_object.items()}
        self._by_verb = {k: tuple(v) for k, v in by_verb.items()}

    @property
    def num_objects(self) -> int:
        return len(self.objects)

    @property
    def num_verbs(self) -> int:
        return len(self.verbs)

    @property
    def num_classes(self) -> int:
        return len(self.hoi_classes)

    def hoi_index(self, verb: int, obj: int) -> int:
        try:
            return self._index[(verb, obj)]
        except KeyError:
            raise RegistryError(f"(verb={verb}, object={obj}) is not a registered HOI class") from None

    def has_class(self, verb: int, obj: int) -> bool:
        return (verb, obj) in self._index

    def classes_for_object(self, obj: int) -> tuple[int, ...]:
        return self._by_object.get(obj, ())

    def classes_for_verb(self, verb: int) -> tuple[int, ...]:
        return self._by_verb.get(verb, ())

    def class_text(self, c: int) -> str:
        verb, obj = self.hoi_classes[c]
        return CLASS_TEMPLATE.format(
            verb=self.verbs[verb].replace("_", " "),
            object=self.objects[obj].replace("_", " "),
        )

    def fingerprint(self) -> str:
        """Hash of the vocabulary and class layout; counts are not part of it."""
        payload = json.dumps(
            {"objects": self.objects, "verbs": self.verbs, "hoi_classes": self.hoi_classes},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def with_counts(self, counts: Sequence[int]) -> "HoiClassRegistry":
        return HoiClassRegistry(
            objects=self.objects,
            verbs=self.verbs,
            hoi_classes=self.hoi_classes,
            counts=tuple(int(n) for n in counts),
        )

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


def parse_registry(data: dict[str, Any], source: str = "<memory>") -> HoiClassRegistry:
    data = {k: v for k, v in data.items() if k != "description"}
    try:
        return HoiClassRegistry.model_validate(data)
    except ValidationError as e:
        raise RegistryError(f"invalid registry in {source}:\n{e}") from e


def load_registry(path: Union[str, Path]) -> HoiClassRegistry:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise RegistryError(f"cannot read registry file {path}: {e}") from e
    registry = parse_registry(data, str(path))
    logger.debug(
        "Loaded registry %s: %d objects, %d verbs, %d HOI classes",
        path, registry.num_objects, registry.num_verbs, registry.num_classes,
    )
    return registry


def resource_path(name: str) -> Path:
    return Path(str(resources.files("cuehoi").joinpath("resources", name)))


def bundled_registry(name: str) -> HoiClassRegistry:
    """Loads one of the registries shipped with the package (`fixture` or `hico_det`)."""
    if name not in BUNDLED_REGISTRIES:
        raise RegistryError(f"unknown bundled registry {name!r}; choose from {sorted(BUNDLED_REGISTRIES)}")
    return load_registry(resource_path(BUNDLED_REGISTRIES[name]))


def resolve_registry(name_or_path: str) -> HoiClassRegistry:
    if name_or_path in BUNDLED_REGISTRIES:
        return bundled_registry(name_or_path)
    return load_registry(name_or_path)
