"""Append-only JSON-lines cue cache keyed by image id."""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path
from typing import Any, Iterator, Optional, Union

from pydantic import ValidationError

from cuehoi.config import CUE_KINDS
from cuehoi.cues.schema import CueSet
from cuehoi.exceptions import DataError

logger = logging.getLogger(__name__)

_RECORD_KEYS = ("image_id", *CUE_KINDS)


def read_cue_records(path: Union[str, Path]) -> Iterator[dict[str, Any]]:
    """Yields `{"image_id", "participant", "body_language", "environmental"}` records."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read cue file {path}: {e}") from e
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}:{lineno}: invalid JSON: {e}") from e
        missing = [k for k in _RECORD_KEYS if not isinstance(record.get(k), str)]
        if missing:
            raise DataError(f"{path}:{lineno}: missing or non-string field(s) {missing}")
        yield {k: record[k] for k in _RECORD_KEYS}


def write_cue_records(path: Union[str, Path], cues: list[CueSet]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for c in cues:
            f.write(json.dumps(c.cache_record(), ensure_ascii=False) + "\n")
    return path


class CueCache:
    """Cue texts already paid for.

    Reads every record on construction (a later line for the same image wins) and
    appends new records as they arrive. Appends are serialized by an asyncio lock so
    concurrent generators never interleave lines. With `path=None` the cache lives
    in memory only.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path else None
        self._records: dict[str, dict[str, str]] = {}
        self._lock = asyncio.Lock()
        if self.path and self.path.exists():
            for record in read_cue_records(self.path):
                self._records[record["image_id"]] = record
            logger.debug("Cue cache %s holds %d image(s)", self.path, len(self._records))

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._records

    def __len__(self) -> int:
        return len(self._records)

    def get(self, image_id: str) -> Optional[CueSet]:
        record = self._records.get(image_id)
        if record is None:
            return None
        try:
            return CueSet.from_record(record, "cache")
        except ValidationError as e:
            raise DataError(f"cached cues for {image_id!r} are invalid: {e}") from e

    async def put(self, cues: CueSet) -> None:
        record = cues.cache_record()
        async with self._lock:
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as f:
                    f.write(json.dumps(record, ensure_ascii=False) + "\n")
            self._records[cues.image_id] = record
