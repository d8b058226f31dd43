"""Batch-relative normalised coverage metrics.

Each run in a batch reports, per metric, how many items its assertions
covered and how many items were relevant to it. The normalised value divides
the covered count by the largest relevant-item total seen for that metric
anywhere in the batch, so runs with different cones of influence share one
denominator. The values are batch-relative, not absolute design coverage.

Input formats
-------------
CSV with a header ``run,metric,covered,total`` (one row per run and metric),
or JSON::

    {"runs": [{"name": "top1", "metrics": {"COI": {"covered": 40, "total": 80}}}]}
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

METRICS = ("BFC", "SFC", "TFC", "COI")
REPORT_SCHEMA = "keysig-coverage/1"
UNDEFINED = "undefined"


class EmptyBatch(ValueError):
    pass


class ZeroDenominator(ArithmeticError):
    """Every run reported zero relevant items for a metric."""


@dataclass(frozen=True)
class MetricCount:
    covered: int
    total: int


@dataclass(frozen=True)
class CoverageRun:
    name: str
    counts: dict[str, MetricCount]


@dataclass(frozen=True)
class CoverageBatch:
    runs: tuple[CoverageRun, ...]

    def __post_init__(self) -> None:
        names = [r.name for r in self.runs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate run names in coverage batch")
        for r in self.runs:
            for metric, c in r.counts.items():
                if metric not in METRICS:
                    raise ValueError(f"unknown metric {metric!r} in run {r.name!r}")
                if c.covered < 0 or c.total < 0:
                    raise ValueError(f"negative count for {metric} in run {r.name!r}")
                if c.covered > c.total:
                    raise ValueError(f"{metric} covered > total in run {r.name!r}")

    def max_total(self, metric: str) -> int | None:
        totals = [r.counts[metric].total for r in self.runs if metric in r.counts]
        return max(totals) if totals else None


def normalized_metrics(batch: CoverageBatch) -> dict[str, dict[str, float | None]]:
    """Return ``{run: {metric: covered / batch_max_total}}``.

    ``None`` marks an undefined value: the metric is absent from the run or
    every run in the batch has a zero total for it.
    """
    if not batch.runs:
        raise EmptyBatch("coverage batch has no runs")
    out: dict[str, dict[str, float | None]] = {}
    for run in batch.runs:
        vals: dict[str, float | None] = {}
        for metric in METRICS:
            denom = batch.max_total(metric)
            if metric not in run.counts or not denom:
                vals[metric] = None
            else:
                vals[metric] = run.counts[metric].covered / denom
        out[run.name] = vals
    return out


def _count(v) -> int:
    n = float(v)
    if n != int(n):
        raise ValueError(f"coverage counts must be integers, got {v!r}")
    return int(n)


def batch_from_rows(rows: list[dict[str, str]]) -> CoverageBatch:
    runs: dict[str, dict[str, MetricCount]] = {}
    for row in rows:
        metric = row["metric"].strip().upper().rstrip("*")
        runs.setdefault(row["run"].strip(), {})[metric] = MetricCount(_count(row["covered"]), _count(row["total"]))
    return CoverageBatch(tuple(CoverageRun(n, c) for n, c in runs.items()))


def batch_from_json(data: dict) -> CoverageBatch:
    runs = []
    for r in data["runs"]:
        counts = {
            m.upper(): MetricCount(_count(v["covered"]), _count(v["total"])) for m, v in r["metrics"].items()
        }
        runs.append(CoverageRun(str(r["name"]), counts))
    return CoverageBatch(tuple(runs))


def load_batch(path: str | Path) -> CoverageBatch:
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() == ".json":
        return batch_from_json(json.loads(text))
    return batch_from_rows(list(csv.DictReader(io.StringIO(text))))


def metrics_to_json(batch: CoverageBatch, values: dict[str, dict[str, float | None]]) -> str:
    doc = {
        "schema": REPORT_SCHEMA,
        "note": "values are relative to the largest item count in this batch, not absolute design coverage",
        "denominators": {m: batch.max_total(m) for m in METRICS},
        "runs": [
            {"name": name, "metrics": {m: (UNDEFINED if v is None else v) for m, v in vals.items()}}
            for name, vals in values.items()
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def metrics_table(values: dict[str, dict[str, float | None]]) -> str:
    head = f"{'run':<20}" + "".join(f"{m + '*':>12}" for m in METRICS)
    lines = [head, "-" * len(head)]
    for name, vals in values.items():
        cells = "".join(f"{UNDEFINED:>12}" if vals[m] is None else f"{100 * vals[m]:>11.2f}%" for m in METRICS)
        lines.append(f"{name:<20}{cells}")
    return "\n".join(lines) + "\n"
