from __future__ import annotations

import re
from typing import Optional

# --- Utility Functions ---

_WHITESPACE = re.compile(r"\s+")
_ANSWER_PREFIX = re.compile(r"^(?:answer|response|description)\s*:\s*", re.IGNORECASE)


def extract_tag_content(text: str, tag: str) -> Optional[str]:
    """Joins the contents of every <tag>...</tag> in `text`; None when the tag is absent."""
    matches = re.findall(rf"<{tag}>(.*?)</{tag}>", text, re.DOTALL | re.IGNORECASE)
    if not matches:
        return None
    return "\n".join(m.strip() for m in matches).strip()


def check_tag_presence(text: str, tag: str) -> bool:
    """Checks if <tag/> or <tag>...</tag> exists."""
    return bool(re.search(rf"<{tag}\s*/>|<{tag}>", text, re.IGNORECASE))


def normalize_cue_text(raw: str, tag: str = "answer") -> str:
    """Cleans a VLM reply into a single-line cue.

    Keeps only the tagged part when the model wrapped its answer in <tag>...</tag>,
    drops a leading "Answer:" style label and collapses whitespace.
    """
    text = extract_tag_content(raw, tag) if check_tag_presence(raw, tag) else raw
    text = _WHITESPACE.sub(" ", text or "").strip()
    return _ANSWER_PREFIX.sub("", text)
