"""Run orchestration behind the CLI subcommands: train, eval, cues, splits and synth."""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import torch

from cuehoi.config import RunConfig, apply_overrides, build_run_config
from cuehoi.cues import (
    CueCache,
    CueReport,
    CueSet,
    FixtureCueClient,
    ImageRef,
    build_client,
    generate_all,
    synthesize_all,
    write_cue_records,
)
from cuehoi.data import (
    HoiAnnotation,
    HoiClassRegistry,
    count_instances,
    generate_synthetic,
    load_annotations,
    resolve_registry,
    save_annotations,
)
from cuehoi.evaluation import (
    MapResult,
    ScoredPrediction,
    SplitSpec,
    compute_map,
    filter_training_set,
    format_table,
    save_split,
    score_and_rank,
    split_from_config,
    split_rare_nonrare,
    write_pr_curves,
    write_results,
)
from cuehoi.exceptions import ConfigError
from cuehoi.models import HoiDetector, StubVisualEncoder, load_checkpoint, read_checkpoint, save_checkpoint
from cuehoi.training import EpochLosses, Trainer, build_examples, write_loss_curve
from cuehoi.workflows.manifest import build_manifest, write_manifest

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.pt"
LOSS_CURVE_NAME = "loss_curve.csv"
RESULTS_NAME = "results.json"
PR_CURVES_NAME = "pr_curves.csv"
SPLIT_NAME = "split.json"
CUES_NAME = "cues.jsonl"


@dataclass(frozen=True)
class LoadedDataset:
    registry: HoiClassRegistry
    annotations: list[HoiAnnotation]
    synthetic: bool
    feature_root: Optional[Path] = None


def resolve_dataset(config: RunConfig) -> LoadedDataset:
    """Reads `config.dataset`, or generates the synthetic scenes when no file is set."""
    if config.dataset:
        registry, annotations = load_annotations(config.dataset)
        return LoadedDataset(registry, annotations, synthetic=False, feature_root=Path(config.dataset).parent)
    dataset = generate_synthetic(config.synthetic)
    logger.info("Generated %d synthetic scene(s) over the %r registry", len(dataset.annotations), config.synthetic.registry)
    return LoadedDataset(dataset.registry, dataset.annotations, synthetic=True)


def _cue_sources(config: RunConfig, dataset: LoadedDataset):
    cue_config = config.cues
    cache = CueCache(cue_config.cache_path) if cue_config.cache_path else None
    if cue_config.mode == "cache":
        if cache is None:
            raise ConfigError("cue mode 'cache' needs cues.cache_path")
        return None, cache
    if cue_config.mode == "fixture" and dataset.synthetic and not cue_config.fixture_path:
        cues = synthesize_all(dataset.registry, dataset.annotations)
        return FixtureCueClient({c.image_id: c for c in cues}), cache
    return build_client(cue_config), cache


def resolve_cues(config: RunConfig, dataset: LoadedDataset) -> CueReport:
    """Gathers a CueSet per image from the configured source; failures land in the report."""
    client, cache = _cue_sources(config, dataset)
    images = [ImageRef.from_annotation(ann, config.cues.image_root) for ann in dataset.annotations]
    return asyncio.run(generate_all(images, client, cache, config.cues.max_in_flight))


def _split(config: RunConfig, registry: HoiClassRegistry) -> Optional[SplitSpec]:
    split = split_from_config(config.split, registry)
    return None if split.setting == "regular" else split


def _cues_for(model: HoiDetector, config: RunConfig, dataset: LoadedDataset) -> dict[str, CueSet]:
    if not model.cue_kinds:
        return {}
    report = resolve_cues(config, dataset)
    report.raise_for_missing()
    return report.cues


@dataclass(frozen=True)
class TrainOutcome:
    checkpoint: Path
    loss_curve: Path
    manifest: Path
    curve: list[EpochLosses]


def cmd_train(config: RunConfig, argv: Optional[Sequence[str]] = None) -> TrainOutcome:
    """Trains a detector on the configured dataset and writes checkpoint, loss curve and manifest.

    Held-out triplets of a zero-shot split are removed from the targets only; the scenes
    themselves still contain them. Cues are resolved for every image before the first step.
    """
    out = Path(config.output_dir)
    dataset = resolve_dataset(config)
    split = _split(config, dataset.registry)
    targets = dataset.annotations
    if split is not None:
        targets = filter_training_set(dataset.annotations, split, dataset.registry)
    registry = dataset.registry.with_counts(count_instances(dataset.registry, targets))

    model = HoiDetector(config.model, config.encoder, registry, seed=config.seed)
    cues = _cues_for(model, config, dataset)
    visual = StubVisualEncoder.build(registry, config.model, config.synthetic, dataset.feature_root)
    examples = build_examples(
        dataset.annotations, registry, visual, cues, needs_cues=bool(model.cue_kinds), targets=targets
    )
    rare, nonrare = split_rare_nonrare(registry, config.split.rare_threshold)
    logger.info(
        "Training on %d image(s), %d triplet(s), %d rare / %d non-rare class(es), %d epoch(s)",
        len(examples), sum(registry.counts), len(rare), len(nonrare), config.optimizer.epochs,
    )

    trainer = Trainer(model, config.loss, config.optimizer, seed=config.seed)
    curve = trainer.fit(examples, config.optimizer.epochs)

    checkpoint = save_checkpoint(out / CHECKPOINT_NAME, model, config, extra={"epochs": len(curve)})
    loss_curve = write_loss_curve(out / LOSS_CURVE_NAME, curve)
    outputs = [checkpoint, loss_curve]
    if split is not None:
        outputs.append(save_split(out / SPLIT_NAME, split))
    manifest = write_manifest(out, build_manifest("train", config, outputs, argv))
    return TrainOutcome(checkpoint, loss_curve, manifest, curve)


def config_from_checkpoint(path: str, overrides: Sequence[str] = ()) -> RunConfig:
    """The run config stored in a checkpoint, with `key=value` overrides applied."""
    stored = read_checkpoint(path).get("run_config")
    if stored is None:
        raise ConfigError(f"checkpoint {path} carries no run config; pass --config")
    return build_run_config(apply_overrides(stored, list(overrides)))


@torch.no_grad()
def predict_dataset(
    model: HoiDetector,
    dataset: LoadedDataset,
    visual: StubVisualEncoder,
    cues: dict[str, CueSet],
    top_k: int,
) -> dict[str, list[ScoredPrediction]]:
    predictions = {}
    for ann in dataset.annotations:
        outputs = model.predict(
            visual.encode_instance_visual(ann),
            visual.encode_interaction_visual(ann),
            cues.get(ann.image_id),
        )
        predictions[ann.image_id] = score_and_rank(outputs, model.registry, top_k)
    return predictions


@dataclass(frozen=True)
class EvalOutcome:
    result: MapResult
    results: Path
    pr_curves: Path
    manifest: Path
    table: str


def evaluate_model(model: HoiDetector, config: RunConfig, dataset: LoadedDataset) -> MapResult:
    """Scores every image and computes mAP; rarity follows the model's training counts."""
    model.eval()
    split = _split(config, dataset.registry)
    cues = _cues_for(model, config, dataset)
    visual = StubVisualEncoder.build(model.registry, model.config, config.synthetic, dataset.feature_root)
    predictions = predict_dataset(model, dataset, visual, cues, config.top_k)
    return compute_map(predictions, dataset.annotations, model.registry, split, config.split.rare_threshold)


def cmd_eval(config: RunConfig, checkpoint: str, argv: Optional[Sequence[str]] = None) -> EvalOutcome:
    out = Path(config.output_dir)
    dataset = resolve_dataset(config)
    model, _ = load_checkpoint(checkpoint, dataset.registry)
    result = evaluate_model(model, config, dataset)
    results = write_results(out / RESULTS_NAME, result)
    pr_curves = write_pr_curves(out / PR_CURVES_NAME, result)
    manifest = write_manifest(
        out, build_manifest("eval", config, [results, pr_curves], argv, extra={"checkpoint": str(checkpoint)})
    )
    table = format_table(result)
    logger.info("Evaluation results:\n%s", table)
    return EvalOutcome(result, results, pr_curves, manifest, table)


def cmd_cues(config: RunConfig, argv: Optional[Sequence[str]] = None) -> CueReport:
    """Fills the cue cache for every image and reports where each CueSet came from.

    The cache defaults to `<output_dir>/cues.jsonl`. Cues served by a fixture are
    copied into the cache as well, so a later `cache` run finds every image.
    """
    out = Path(config.output_dir)
    cache_path = config.cues.cache_path or str(out / CUES_NAME)
    config = config.model_copy(update={"cues": config.cues.model_copy(update={"cache_path": cache_path})})
    dataset = resolve_dataset(config)
    report = resolve_cues(config, dataset)

    cache = CueCache(cache_path)
    copied = [c for c in report.cues.values() if c.provenance == "fixture" and not c.degenerate]
    for skipped in (c for c in report.cues.values() if c.provenance == "fixture" and c.degenerate):
        logger.warning("Not caching degenerate fixture cues for %s", skipped.image_id)

    async def _copy() -> None:
        for cues in copied:
            await cache.put(cues)

    asyncio.run(_copy())
    counts = report.provenance_counts
    logger.info(
        "Cue cache %s: %d image(s) (live=%d, cache=%d, fixture=%d), %d failure(s)",
        cache_path, len(cache), counts["live"], counts["cache"], counts["fixture"], len(report.failures),
    )
    write_manifest(
        out, build_manifest("cues", config, [cache_path], argv, extra={"provenance": counts, "failures": report.failures})
    )
    report.raise_for_missing()
    return report


def cmd_splits(config: RunConfig, path: Optional[str] = None, argv: Optional[Sequence[str]] = None) -> SplitSpec:
    """Builds the configured split over the dataset's registry and writes it as JSON."""
    out = Path(config.output_dir)
    registry = resolve_dataset(config).registry if config.dataset else resolve_registry(config.synthetic.registry)
    split = split_from_config(config.split, registry)
    target = save_split(path or out / SPLIT_NAME, split)
    rare, nonrare = split_rare_nonrare(registry, config.split.rare_threshold)
    summary = split.summary()
    logger.info(
        "Split %s (seed %s): %d seen / %d unseen class(es), %d unseen object(s), %d unseen verb(s); %d rare / %d non-rare",
        split.setting, split.seed, summary["seen"], summary["unseen"], summary["unseen_objects"],
        summary["unseen_verbs"], len(rare), len(nonrare),
    )
    write_manifest(out, build_manifest("splits", config, [target], argv, extra=summary))
    return split


@dataclass(frozen=True)
class SynthOutcome:
    annotations: Path
    cues: Path
    manifest: Path


def cmd_synth(config: RunConfig, argv: Optional[Sequence[str]] = None) -> SynthOutcome:
    """Writes the synthetic dataset as an annotation file plus its derived fixture cues."""
    out = Path(config.output_dir)
    dataset = generate_synthetic(config.synthetic)
    annotations = save_annotations(out / "annotations.json", dataset.registry, dataset.annotations)
    cues = write_cue_records(out / "fixture_cues.jsonl", synthesize_all(dataset.registry, dataset.annotations))
    manifest = write_manifest(
        out,
        build_manifest(
            "synth", config, [annotations, cues], argv,
            extra={"images": len(dataset.annotations), "triplets": sum(dataset.registry.counts)},
        ),
    )
    logger.info("Wrote %d synthetic scene(s) to %s", len(dataset.annotations), annotations)
    return SynthOutcome(annotations, cues, manifest)

