from __future__ import annotations

from pathlib import Path
from typing import Any, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, model_validator

from cuehoi.config import CUE_KINDS
from cuehoi.data.annotations import HoiAnnotation

Provenance = Literal["live", "cache", "fixture"]


class CueSet(BaseModel):
    """The three generated cue texts for one image."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    image_id: str
    participant: str
    body_language: str
    environmental: str
    provenance: Provenance

    @model_validator(mode="after")
    def _check_texts(self) -> "CueSet":
        if self.provenance != "fixture":
            empty = [k for k in CUE_KINDS if not getattr(self, k).strip()]
            if empty:
                raise ValueError(f"empty cue text for {empty} is only allowed for fixture cues")
        return self

    @property
    def degenerate(self) -> bool:
        return any(not getattr(self, k).strip() for k in CUE_KINDS)

    def text(self, kind: str) -> str:
        return getattr(self, kind)

    def texts(self, kinds: Sequence[str] = CUE_KINDS) -> tuple[str, ...]:
        return tuple(self.text(k) for k in kinds)

    def cache_record(self) -> dict[str, str]:
        return {"image_id": self.image_id, **{k: getattr(self, k) for k in CUE_KINDS}}

    @classmethod
    def from_record(cls, record: dict[str, Any], provenance: Provenance) -> "CueSet":
        return cls.model_validate({**record, "provenance": provenance})


class ImageRef(BaseModel):
    """What a VLM client needs to describe an image: its id and, when available, a local file."""

    model_config = ConfigDict(frozen=True)

    image_id: str
    path: Optional[str] = None

    @classmethod
    def from_annotation(cls, ann: HoiAnnotation, image_root: Optional[str] = None) -> "ImageRef":
        path = None
        if ann.image:
            path = str(Path(image_root) / ann.image) if image_root else ann.image
        return cls(image_id=ann.image_id, path=path)
