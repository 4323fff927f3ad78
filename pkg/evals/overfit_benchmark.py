import os
import json
import time
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from cuehoi.config import PRESETS, RunConfig, load_run_config
from cuehoi.data import resource_path
from cuehoi.exceptions import CueHoiError
from cuehoi.models import HoiDetector, load_checkpoint
from cuehoi.workflows import cmd_train, evaluate_model, resolve_dataset

# --- Configuration ---
RESULTS_DIR = "results"
RESULT_FILE = os.path.join(RESULTS_DIR, "overfit_results.jsonl")
RUNS_DIR = os.path.join(RESULTS_DIR, "overfit_runs")
OVERFIT_CONFIG = resource_path("overfit_run.toml")
PRESET_ORDER = ["base", "clip", "one_tower", "multitower"]
TARGET_MAP = 0.9
BASELINE_CEILING = 0.05
load_dotenv()
# --- End Configuration ---

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger('overfit_benchmark')


def preset_config(preset: str, epochs: Optional[int] = None) -> RunConfig:
    """The benchmark config for one ablation preset, writing into its own run directory."""
    overrides = [f"preset={preset}", f"output_dir={os.path.join(RUNS_DIR, preset)}"]
    if epochs is not None:
        overrides.append(f"optimizer.epochs={epochs}")
    return load_run_config(OVERFIT_CONFIG, overrides)


def run_preset(preset: str, epochs: Optional[int] = None) -> Dict[str, Any]:
    """Trains one preset on the synthetic scenes and evaluates it on the same scenes."""
    config = preset_config(preset, epochs)
    dataset = resolve_dataset(config)

    untrained = HoiDetector(config.model, config.encoder, dataset.registry, seed=config.seed)
    baseline = evaluate_model(untrained, config, dataset)
    logger.info(f"[{preset}] untrained mAP {baseline.map_full:.4f}")

    started = time.perf_counter()
    outcome = cmd_train(config, argv=["overfit_benchmark", preset])
    elapsed = time.perf_counter() - started

    model, _ = load_checkpoint(outcome.checkpoint, dataset.registry)
    trained = evaluate_model(model, config, dataset)
    logger.info(f"[{preset}] trained mAP {trained.map_full:.4f} after {len(outcome.curve)} epoch(s) in {elapsed:.1f}s")

    totals = [e.total for e in outcome.curve]
    return {
        "preset": preset,
        "epochs": len(outcome.curve),
        "train_seconds": round(elapsed, 2),
        "untrained_map": baseline.map_full,
        "trained_map": trained.map_full,
        "map_rare": trained.map_rare,
        "map_nonrare": trained.map_nonrare,
        "first_loss": totals[0] if totals else None,
        "final_loss": totals[-1] if totals else None,
        "passed": trained.map_full > TARGET_MAP and baseline.map_full < BASELINE_CEILING,
        "checkpoint": str(outcome.checkpoint),
    }


def evaluate_overfit_benchmark(presets: List[str], result_path: str, epochs: Optional[int] = None) -> None:
    """Runs every preset in turn and appends one JSON line per preset to `result_path`."""
    Path(result_path).parent.mkdir(parents=True, exist_ok=True)
    logger.info(f"Starting overfit benchmark on {len(presets)} preset(s). Results will be saved to {result_path}")
    for preset in presets:
        logger.info(f"--- Processing preset {preset} ---")
        try:
            result = run_preset(preset, epochs)
        except CueHoiError as e:
            logger.error(f"Error processing preset {preset}: {e}", exc_info=True)
            result = {"preset": preset, "error": str(e), "status": "failed"}
        try:
            with open(result_path, 'a') as f:
                f.write(json.dumps(result) + '\n')
            logger.info(f"Result for preset {preset} saved.")
        except IOError as e:
            logger.error(f"Error writing result for preset {preset} to {result_path}: {e}")
    logger.info(f"Overfit benchmark completed. Results saved to {result_path}")


def main():
    presets = os.getenv("CUEHOI_BENCH_PRESETS", ",".join(PRESET_ORDER)).split(",")
    unknown = [p for p in presets if p not in PRESETS]
    if unknown:
        logger.critical(f"Unknown preset(s) {unknown}; choose from {sorted(PRESETS)}")
        return
    epochs = os.getenv("CUEHOI_BENCH_EPOCHS")
    evaluate_overfit_benchmark(presets, RESULT_FILE, int(epochs) if epochs else None)


if __name__ == "__main__":
    try:
        main()
    except KeyboardInterrupt:
        logger.info("Benchmark interrupted by user.")
