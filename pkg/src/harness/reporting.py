"""
reporting.py - Result CSVs and trace JSON

Rows CSV: dataset,strategy,m,seed,status,rel_l2,wall_time_ms,extra
Summary CSV: dataset,strategy,m,mean_rel_l2,std_rel_l2,n_seeds

Both start with the schema line. The summary depends only on the rel_l2
values, so it is byte-identical across reruns of the same config.
"""

import csv
import json
import logging
import os
from collections import defaultdict
from typing import Dict, Iterable, List

import numpy as np
from pydantic import BaseModel

from ..models.experiment import ResultRow
from ..sensing.snapshot_io import SCHEMA_LINE

logger = logging.getLogger("harness.reporting")

ROW_FIELDS = ["dataset", "strategy", "m", "seed", "status", "rel_l2", "wall_time_ms", "extra"]
SUMMARY_FIELDS = ["dataset", "strategy", "m", "mean_rel_l2", "std_rel_l2", "n_seeds"]


def _number(value: float) -> str:
    return f"{value:.12g}"


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def summarize(rows: Iterable[ResultRow]) -> List[Dict[str, object]]:
    """
    Mean and sample standard deviation of rel_l2 per (dataset, strategy, m).

    Failed rows are left out; a group with no successful row is omitted.
    """
    groups: Dict[tuple, List[float]] = defaultdict(list)
    for row in rows:
        if row.status == "ok":
            groups[(row.dataset, row.strategy, row.m)].append(row.rel_l2)
    summary = []
    for key in sorted(groups):
        values = np.array(groups[key])
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        summary.append({
            "dataset": key[0],
            "strategy": key[1],
            "m": key[2],
            "mean_rel_l2": float(values.mean()),
            "std_rel_l2": std,
            "n_seeds": int(values.size),
        })
    return summary


def write_rows_csv(rows: Iterable[ResultRow], path: str) -> None:
    _ensure_parent(path)
    with open(path, "w", newline="") as f:
        f.write(SCHEMA_LINE + "\n")
        writer = csv.writer(f)
        writer.writerow(ROW_FIELDS)
        for row in sorted(rows, key=ResultRow.sort_key):
            writer.writerow([
                row.dataset, row.strategy, row.m, row.seed, row.status,
                "" if row.rel_l2 is None else _number(row.rel_l2),
                f"{row.wall_time_ms:.3f}",
                json.dumps(row.extra, sort_keys=True),
            ])
    logger.info(f"Wrote result rows to {path}")


def write_summary_csv(summary: List[Dict[str, object]], path: str) -> None:
    _ensure_parent(path)
    with open(path, "w", newline="") as f:
        f.write(SCHEMA_LINE + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_FIELDS)
        for entry in summary:
            writer.writerow([
                entry["dataset"], entry["strategy"], entry["m"],
                _number(entry["mean_rel_l2"]), _number(entry["std_rel_l2"]), entry["n_seeds"],
            ])
    logger.info(f"Wrote summary to {path}")


def read_summary_csv(path: str) -> List[Dict[str, str]]:
    with open(path, newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(payload, path: str) -> None:
    """Write a pydantic model or plain dict as indented JSON."""
    _ensure_parent(path)
    with open(path, "w") as f:
        if isinstance(payload, BaseModel):
            f.write(payload.model_dump_json(indent=2))
        else:
            json.dump(payload, f, indent=2, sort_keys=True)


def write_step_record_csv(record: List[Dict[str, float]], path: str) -> None:
    """Per-step sigma and residual norm of one guided run."""
    _ensure_parent(path)
    with open(path, "w", newline="") as f:
        f.write(SCHEMA_LINE + "\n")
        writer = csv.writer(f)
        writer.writerow(["step", "sigma", "residual_norm"])
        for entry in record:
            writer.writerow([entry["step"], _number(entry["sigma"]), _number(entry["residual_norm"])])
