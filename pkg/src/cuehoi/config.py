"""Run configuration models, ablation presets and config-file loading."""

from __future__ import annotations

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from cuehoi.exceptions import ConfigError

logger = logging.getLogger(__name__)

load_dotenv()

CueKind = Literal["participant", "body_language", "environmental"]
CUE_KINDS: tuple[str, ...] = ("participant", "body_language", "environmental")

TowerMode = Literal["multitower", "one_tower", "no_cues"]
CueMode = Literal["live", "fixture", "cache"]
SplitSetting = Literal["regular", "RF-UC", "NF-UC", "UO", "UV"]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class FusionConfig(_Frozen):
    """Shape and structure of the two fusion decoders.

    `interaction_streams` controls how the interaction decoder stacks its towers. With
    "averaged" the tower outputs are averaged after every layer but the last, so for
    `num_layers > 1` each concatenated block of E_inter depends on every cue. With
    "separate" each tower keeps its own stream through all layers, and for fixed interaction
    queries changing cue j changes only block j. Both settings coincide when `num_layers == 1`.
    """

    num_queries: int = Field(64, ge=1)
    num_layers: int = Field(6, ge=1)
    instance_width: int = Field(64, ge=1)
    interaction_width: int = Field(64, ge=1)
    text_width: int = Field(64, ge=1)
    num_heads: int = Field(4, ge=1)
    ffn_multiplier: int = Field(4, ge=1)
    activation: Literal["gelu", "silu"] = "gelu"
    layer_norm_eps: float = Field(1e-5, gt=0)
    tower_mode: TowerMode = "multitower"
    cues: tuple[CueKind, ...] = CUE_KINDS
    interaction_visual: Literal["clip", "instance"] = "clip"
    interaction_streams: Literal["averaged", "separate"] = "averaged"
    prior_classifier: bool = True
    freeze_classifier: bool = True
    temperature_init: float = Field(10.0, gt=0)

    @model_validator(mode="after")
    def _check_widths(self) -> "FusionConfig":
        for name in ("instance_width", "interaction_width", "text_width"):
            if getattr(self, name) % self.num_heads:
                raise ValueError(f"{name}={getattr(self, name)} is not divisible by num_heads={self.num_heads}")
        if not self.cues:
            raise ValueError("at least one cue kind is required")
        if len(set(self.cues)) != len(self.cues):
            raise ValueError(f"duplicate cue kinds in {self.cues}")
        if self.interaction_visual == "instance" and self.instance_width != self.interaction_width:
            raise ValueError("interaction_visual='instance' needs instance_width == interaction_width")
        return self

    @property
    def num_towers(self) -> int:
        return 1 if self.tower_mode == "no_cues" else len(self.cues)


class LossWeights(_Frozen):
    box: float = Field(2.5, ge=0, allow_inf_nan=False)
    giou: float = Field(1.0, ge=0, allow_inf_nan=False)
    object: float = Field(1.0, ge=0, allow_inf_nan=False)
    interaction: float = Field(1.0, ge=0, allow_inf_nan=False)
    background: float = Field(0.1, ge=0, allow_inf_nan=False)

    def scaled(self, factor: float) -> "LossWeights":
        return self.model_copy(
            update={
                "box": self.box * factor,
                "giou": self.giou * factor,
                "object": self.object * factor,
                "interaction": self.interaction * factor,
            }
        )


class OptimizerConfig(_Frozen):
    """AdamW settings with an optional linear warmup and a single step drop.

    The learning rate ramps up over the first `warmup_epochs` epochs, stays constant, and
    is multiplied by `lr_drop_factor` from epoch `lr_drop_epoch` on.
    """

    learning_rate: float = Field(5e-5, gt=0)
    weight_decay: float = Field(1e-4, ge=0)
    betas: tuple[float, float] = (0.9, 0.999)
    batch_size: int = Field(16, ge=1)
    epochs: int = Field(50, ge=0)
    max_grad_norm: Optional[float] = Field(None, gt=0)
    warmup_epochs: int = Field(0, ge=0)
    lr_drop_epoch: Optional[int] = Field(None, ge=1)
    lr_drop_factor: float = Field(0.1, gt=0, le=1)

    def lr_factor(self, epoch: int) -> float:
        """Learning-rate multiplier for 1-based `epoch`."""
        factor = min(1.0, epoch / self.warmup_epochs) if self.warmup_epochs else 1.0
        if self.lr_drop_epoch is not None and epoch >= self.lr_drop_epoch:
            factor *= self.lr_drop_factor
        return factor


class SyntheticSceneConfig(_Frozen):
    num_images: int = Field(20, ge=1)
    min_objects: int = Field(1, ge=1)
    max_objects: int = Field(3, ge=1)
    grid_size: int = Field(8, ge=2)
    noise_level: float = Field(0.05, ge=0, allow_inf_nan=False)
    seed: int = 0
    pattern_seed: int = 7
    registry: str = "fixture"

    @model_validator(mode="after")
    def _check_range(self) -> "SyntheticSceneConfig":
        if self.min_objects > self.max_objects:
            raise ValueError(f"min_objects={self.min_objects} exceeds max_objects={self.max_objects}")
        return self


class EncoderConfig(_Frozen):
    hash_buckets: int = Field(4096, ge=2)
    max_cue_tokens: int = Field(64, ge=1)
    cue_encoder_layers: int = Field(3, ge=0)
    embedder_seed: int = 1234


class CueClientConfig(_Frozen):
    mode: CueMode = "fixture"
    backend: Literal["http", "litellm"] = "http"
    endpoint: Optional[str] = Field(default_factory=lambda: os.getenv("CUEHOI_VLM_ENDPOINT"))
    token: Optional[str] = Field(default_factory=lambda: os.getenv("CUEHOI_VLM_TOKEN"), exclude=True, repr=False)
    model: Optional[str] = Field(default_factory=lambda: os.getenv("CUEHOI_VLM_MODEL"))
    timeout: float = Field(30.0, gt=0)
    retries: int = Field(3, ge=0)
    backoff: float = Field(0.5, ge=0)
    backoff_max: float = Field(8.0, ge=0)
    max_in_flight: int = Field(4, ge=1)
    cache_path: Optional[str] = None
    fixture_path: Optional[str] = None
    image_root: Optional[str] = None


class SplitConfig(_Frozen):
    setting: SplitSetting = "regular"
    seed: int = 0
    unseen_classes: int = Field(120, ge=0)
    unseen_objects: int = Field(12, ge=0)
    unseen_verbs: int = Field(20, ge=0)
    rare_threshold: int = Field(10, ge=1)
    path: Optional[str] = None


class RunConfig(_Frozen):
    model: FusionConfig = FusionConfig()
    loss: LossWeights = LossWeights()
    optimizer: OptimizerConfig = OptimizerConfig()
    encoder: EncoderConfig = EncoderConfig()
    synthetic: SyntheticSceneConfig = SyntheticSceneConfig()
    cues: CueClientConfig = Field(default_factory=CueClientConfig)
    split: SplitConfig = SplitConfig()
    dataset: Optional[str] = None
    preset: Optional[str] = None
    seed: int = 0
    top_k: int = Field(100, ge=1)
    output_dir: str = "runs/default"


# Architecture ablation presets, applied before explicit `model` keys.
PRESETS: dict[str, dict[str, Any]] = {
    "base": {"tower_mode": "no_cues", "interaction_visual": "instance", "prior_classifier": False},
    "clip": {"tower_mode": "no_cues", "interaction_visual": "clip", "prior_classifier": True},
    "one_tower": {"tower_mode": "one_tower", "interaction_visual": "clip", "prior_classifier": True},
    "multitower": {"tower_mode": "multitower", "interaction_visual": "clip", "prior_classifier": True},
}


def apply_preset(fusion: FusionConfig, name: str) -> FusionConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return FusionConfig.model_validate({**fusion.model_dump(), **PRESETS[name]})


def _read_config_file(path: Union[str, Path]) -> dict[str, Any]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    try:
        if path.suffix == ".json":
            return json.loads(raw.decode("utf-8"))
        return tomllib.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse config file {path}: {e}") from e


def _parse_override(item: str) -> tuple[list[str], Any]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key.path=value")
    key, _, value = item.partition("=")
    keys = [k for k in key.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return keys, parsed


def apply_overrides(data: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Applies `a.b.c=value` overrides; values are JSON literals with a string fallback."""
    data = copy.deepcopy(data)
    for item in overrides:
        keys, value = _parse_override(item)
        node = data
        for key in keys[:-1]:
            child = node.setdefault(key, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {item!r}: {key!r} is not a table")
            node = child
        node[keys[-1]] = value
    return data


def build_run_config(data: dict[str, Any]) -> RunConfig:
    data = copy.deepcopy(data)
    preset = data.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        data["model"] = {**PRESETS[preset], **data.get("model", {})}
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration:\n{e}") from e


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[list[str]] = None) -> RunConfig:
    """Loads a TOML/JSON run config, applies flag overrides and validates it."""
    data: dict[str, Any] = _read_config_file(path) if path else {}
    data = apply_overrides(data, overrides or [])
    config = build_run_config(data)
    logger.debug("Loaded run config from %s with %d override(s)", path, len(overrides or []))
    return config


def dump_run_config(config: RunConfig) -> dict[str, Any]:
    return config.model_dump(mode="json")
