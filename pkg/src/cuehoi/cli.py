"""Command-line front end: `cuehoi {train,eval,cues,splits,synth}`."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from cuehoi.config import PRESETS, RunConfig, load_run_config
from cuehoi.exceptions import CueHoiError
from cuehoi.workflows import cmd_cues, cmd_eval, cmd_splits, cmd_synth, cmd_train, config_from_checkpoint

logger = logging.getLogger("cuehoi")

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML or JSON run config")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key, e.g. --set optimizer.epochs=10 (repeatable)",
    )
    parser.add_argument("--preset", choices=sorted(PRESETS), help="architecture ablation preset")
    parser.add_argument("--output-dir", help="directory for run outputs")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cuehoi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("train", help="train a detector and write a checkpoint and loss curve"))

    p = sub.add_parser("eval", help="evaluate a checkpoint and write the results file")
    _common(p)
    p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("cues", help="generate or collect cues for every image into the cue cache")
    _common(p)
    p.add_argument("--mode", choices=["live", "fixture", "cache"])

    p = sub.add_parser("splits", help="build a zero-shot split and write it as JSON")
    _common(p)
    p.add_argument("--setting", choices=["regular", "RF-UC", "NF-UC", "UO", "UV"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="split file path (default <output-dir>/split.json)")

    _common(sub.add_parser("synth", help="write a synthetic dataset, its registry and fixture cues"))
    return parser


def _overrides(args: argparse.Namespace) -> list[str]:
    overrides = list(args.overrides)
    if args.preset:
        overrides.append(f"preset={args.preset}")
    if args.output_dir:
        overrides.append(f"output_dir={args.output_dir}")
    if getattr(args, "mode", None):
        overrides.append(f"cues.mode={args.mode}")
    if getattr(args, "setting", None):
        overrides.append(f"split.setting={args.setting}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"split.seed={args.seed}")
    return overrides


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Flag overrides on top of the config file; `eval` without a file reuses the checkpoint's."""
    if args.command == "eval" and not args.config:
        return config_from_checkpoint(args.checkpoint, _overrides(args))
    return load_run_config(args.config, _overrides(args))


def run(args: argparse.Namespace, argv: Sequence[str]) -> None:
    config = resolve_config(args)
    logger.info("cuehoi %s: output_dir=%s preset=%s", args.command, config.output_dir, config.preset)
    if args.command == "train":
        outcome = cmd_train(config, argv)
        print(f"checkpoint: {outcome.checkpoint}\nloss curve: {outcome.loss_curve}")
    elif args.command == "eval":
        outcome = cmd_eval(config, args.checkpoint, argv)
        print(outcome.table)
    elif args.command == "cues":
        report = cmd_cues(config, argv)
        print(", ".join(f"{k}={v}" for k, v in report.provenance_counts.items()))
    elif args.command == "splits":
        split = cmd_splits(config, args.out, argv)
        print(", ".join(f"{k}={v}" for k, v in split.summary().items()))
    elif args.command == "synth":
        outcome = cmd_synth(config, argv)
        print(f"annotations: {outcome.annotations}\ncues: {outcome.cues}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        run(args, ["cuehoi", *argv])
    except CueHoiError as e:
        logger.error("%s failed: %s", args.command, e, exc_info=args.log_level == "DEBUG")
        return e.exit_code
    return 0
