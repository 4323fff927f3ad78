"""Fixture cues derived from an annotated scene, for images no VLM has seen."""

from __future__ import annotations

from typing import Iterable

from cuehoi.cues.schema import CueSet
from cuehoi.data.annotations import HoiAnnotation
from cuehoi.data.registry import HoiClassRegistry


def _name(label: str) -> str:
    return label.replace("_", " ")


def _join(items: list[str]) -> str:
    if len(items) <= 1:
        return "".join(items)
    return ", ".join(items[:-1]) + " and " + items[-1]


def synthesize_cues(registry: HoiClassRegistry, ann: HoiAnnotation) -> CueSet:
    """Writes participant, posture and setting sentences from the ground truth."""
    objects = sorted({_name(registry.objects[gt.obj]) for gt in ann.gts})
    people = len(ann.gts)
    if people == 0:
        participant = "No person is visible."
        body = "There is no posture to describe."
    else:
        who = "One person" if people == 1 else f"{people} people"
        participant = f"{who} in the scene, near a {_join(objects)}."
        body = " ".join(
            f"A person is posed to {_name(registry.verbs[gt.verb])} the {_name(registry.objects[gt.obj])}."
            for gt in ann.gts
        )
    setting = f"A scene containing a {_join(objects)}." if objects else "An empty scene."
    return CueSet(
        image_id=ann.image_id,
        participant=participant,
        body_language=body,
        environmental=setting,
        provenance="fixture",
    )


def synthesize_all(registry: HoiClassRegistry, annotations: Iterable[HoiAnnotation]) -> list[CueSet]:
    return [synthesize_cues(registry, ann) for ann in annotations]
