"""Results files: JSON summary, PR-curve CSV and the console table."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Union

from cuehoi.evaluation.hoi_map import MapResult

logger = logging.getLogger(__name__)


def write_results(path: Union[str, Path], result: MapResult) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(result.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    logger.info("Wrote results to %s", path)
    return path


def write_pr_curves(path: Union[str, Path], result: MapResult) -> Path:
    """One row per (class, rank) point: hoi_class, name, rank, recall, precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = {row.hoi_class: row.name for row in result.per_class}
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["hoi_class", "name", "rank", "recall", "precision"])
        for curve in result.curves:
            for rank, (r, p) in enumerate(zip(curve.recall, curve.precision), start=1):
                writer.writerow([curve.hoi_class, names[curve.hoi_class], rank, repr(r), repr(p)])
    return path


def format_table(result: MapResult) -> str:
    groups = result.group_table()
    header = " | ".join(f"{name:>9}" for name in groups)
    values = " | ".join(f"{'-' if v is None else format(100 * v, '.2f'):>9}" for v in groups.values())
    rule = "-" * len(header)
    return "\n".join([f"mAP (%) setting={result.setting}", rule, header, values, rule])
