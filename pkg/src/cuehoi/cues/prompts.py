"""Prompt templates for the three human-centric cue kinds."""

from __future__ import annotations

import functools
import logging
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from cuehoi.config import CUE_KINDS, CueKind
from cuehoi.data.registry import resource_path
from cuehoi.exceptions import ConfigError

logger = logging.getLogger(__name__)


class CuePrompt(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: CueKind
    template: str = Field(min_length=1)
    version: int = 1


class PromptTemplates(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    version: int
    prompts: dict[CueKind, str]


def load_prompt_templates(path: Optional[Union[str, Path]] = None) -> PromptTemplates:
    """Reads a prompts TOML file; the bundled `prompts.toml` by default."""
    if path is None:
        return _bundled_templates()
    return _read_templates(Path(path))


@functools.lru_cache(maxsize=1)
def _bundled_templates() -> PromptTemplates:
    return _read_templates(resource_path("prompts.toml"))


def _read_templates(path: Path) -> PromptTemplates:
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
        templates = PromptTemplates.model_validate(data)
    except (OSError, tomllib.TOMLDecodeError, ValueError) as e:
        raise ConfigError(f"cannot load prompt templates from {path}: {e}") from e
    missing = [k for k in CUE_KINDS if not templates.prompts.get(k, "").strip()]
    if missing:
        raise ConfigError(f"{path}: missing or empty prompt(s) for {missing}")
    logger.debug("Loaded prompt templates v%d from %s", templates.version, path)
    return templates


def build_prompt(kind: str, templates: Optional[PromptTemplates] = None) -> CuePrompt:
    if kind not in CUE_KINDS:
        raise ConfigError(f"unknown cue kind {kind!r}; choose from {list(CUE_KINDS)}")
    templates = templates or load_prompt_templates()
    return CuePrompt(kind=kind, template=templates.prompts[kind], version=templates.version)
