"""Cue generation: cache lookup, VLM calls for the three prompts, cache write-back."""

from __future__ import annotations

import asyncio
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from cuehoi.config import CUE_KINDS
from cuehoi.cues.cache import CueCache
from cuehoi.cues.clients import CueClient, FixtureCueClient
from cuehoi.cues.prompts import PromptTemplates, build_prompt
from cuehoi.cues.schema import CueSet, ImageRef
from cuehoi.exceptions import CueGenerationError, MissingCuesError
from cuehoi.utils import normalize_cue_text

logger = logging.getLogger(__name__)

AnyClient = Union[CueClient, FixtureCueClient]


async def generate_cues(
    image: ImageRef,
    client: Optional[AnyClient],
    cache: Optional[CueCache] = None,
    templates: Optional[PromptTemplates] = None,
) -> CueSet:
    """Returns the cue texts for one image.

    A cache hit returns immediately without touching the client. Fixture clients are
    served as-is; live clients are asked the three prompts in turn and the result is
    appended to the cache.

    Args:
        image: The image to describe.
        client: Live or fixture client; None means cache-only.
        cache: Cue cache, consulted first and written after live generation.
        templates: Prompt templates; the bundled ones by default.

    Returns:
        A CueSet whose provenance says where the texts came from.
    """
    if cache is not None:
        hit = cache.get(image.image_id)
        if hit is not None:
            logger.debug("Cue cache hit for %s", image.image_id)
            return hit
    if client is None:
        raise CueGenerationError("not in the cue cache", image_id=image.image_id)
    if isinstance(client, FixtureCueClient):
        return client.cues_for(image.image_id)

    texts = {}
    for kind in CUE_KINDS:
        raw = await client.describe(image, build_prompt(kind, templates))
        texts[kind] = normalize_cue_text(raw)
        if not texts[kind]:
            raise CueGenerationError(f"empty {kind} cue", image_id=image.image_id, raw_payload=raw)
    cues = CueSet(image_id=image.image_id, provenance="live", **texts)
    if cache is not None:
        await cache.put(cues)
    return cues


@dataclass
class CueReport:
    cues: dict[str, CueSet] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)

    @property
    def provenance_counts(self) -> dict[str, int]:
        counts = Counter(c.provenance for c in self.cues.values())
        return {k: counts.get(k, 0) for k in ("live", "cache", "fixture")}

    def raise_for_missing(self) -> None:
        if self.failures:
            raise MissingCuesError(sorted(self.failures))


async def generate_all(
    images: Sequence[ImageRef],
    client: Optional[AnyClient],
    cache: Optional[CueCache] = None,
    max_in_flight: int = 4,
    templates: Optional[PromptTemplates] = None,
) -> CueReport:
    """Generates cues for many images with at most `max_in_flight` running at once.

    Per-image failures are collected in the report instead of aborting the batch.
    """
    semaphore = asyncio.Semaphore(max_in_flight)
    report = CueReport()

    async def one(image: ImageRef) -> None:
        async with semaphore:
            try:
                report.cues[image.image_id] = await generate_cues(image, client, cache, templates)
            except CueGenerationError as e:
                logger.error("Cue generation failed for %s: %s", image.image_id, e)
                report.failures[image.image_id] = str(e)

    await asyncio.gather(*(one(image) for image in images))
    # gather() finishes in completion order; report in input order.
    report.cues = {i.image_id: report.cues[i.image_id] for i in images if i.image_id in report.cues}
    logger.info(
        "Cues for %d/%d image(s): %s",
        len(report.cues), len(images),
        ", ".join(f"{k}={v}" for k, v in report.provenance_counts.items()),
    )
    return report
