"""Batch evaluation of schedules and the ensemble comparison statistics."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .simulator import DEFAULT_TROTTER, TrotterConfig, run_schedule, squared_overlap

RECORD_COLUMNS = ("instance_id", "schedule", "overlap")
COMPARISON_COLUMNS = (
    "schedule", "baseline", "num_instances", "mean_overlap", "baseline_mean_overlap",
    "ratio_of_averages", "average_of_ratios", "excluded_ids",
)
BIN_COLUMNS = (
    "schedule", "baseline", "bin_reference", "bin", "size",
    "lower_overlap", "upper_overlap", "ratio_of_averages",
)


class EvalRecord(NamedTuple):
    instance_id: str
    schedule: str
    overlap: float


def evaluate(schedules, instances, cfg: TrotterConfig = DEFAULT_TROTTER, threads: int = 1) -> list:
    """One record per (schedule, instance), schedule-major.

    Instances need ``id``, ``ground_index`` and ``diagonal()``; the diagonal
    is built once per instance.
    """
    schedules = list(schedules)
    instances = list(instances)
    if not schedules:
        return []
    targets = [inst.ground_index for inst in instances]

    def one(k):
        diag = instances[k].diagonal()
        return [squared_overlap(run_schedule(diag, s, cfg), targets[k]) for s in schedules]

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            table = list(pool.map(one, range(len(instances))))
    else:
        table = [one(k) for k in range(len(instances))]
    return [
        EvalRecord(inst.id, s.label, table[k][j])
        for j, s in enumerate(schedules)
        for k, inst in enumerate(instances)
    ]


def by_schedule(records) -> dict:
    """label -> {instance_id: overlap}, in first-seen order."""
    out = defaultdict(dict)
    for r in records:
        out[r.schedule][r.instance_id] = r.overlap
    return dict(out)


def _as_map(records) -> dict:
    if isinstance(records, dict):
        return records
    return {r.instance_id: r.overlap for r in records}


def _paired(a, b):
    a, b = _as_map(a), _as_map(b)
    if set(a) != set(b):
        raise ValueError("record sets cover different instances")
    if not a:
        raise ValueError("no records")
    ids = sorted(a)
    return ids, [a[i] for i in ids], [b[i] for i in ids]


def mean(values) -> float:
    # fsum is exactly rounded, hence independent of ordering
    values = list(values)
    return math.fsum(values) / len(values)


def ratio_of_averages(a, b) -> float:
    _, va, vb = _paired(a, b)
    denom = mean(vb)
    if denom == 0.0:
        raise ZeroDivisionError("baseline mean overlap is zero")
    return mean(va) / denom


class RatioAverage(NamedTuple):
    value: float
    excluded: tuple

    @property
    def defined(self) -> bool:
        return not self.excluded


def average_of_ratios(a, b) -> RatioAverage:
    """Mean of per-instance ratios; zero-baseline instances are excluded and listed."""
    ids, va, vb = _paired(a, b)
    ratios = [x / y for x, y in zip(va, vb) if y > 0.0]
    excluded = tuple(i for i, y in zip(ids, vb) if not y > 0.0)
    return RatioAverage(mean(ratios) if ratios else math.nan, excluded)


@dataclass
class Binning:
    bins: list
    lower: list
    upper: list
    reference: str = ""

    def bin_of(self) -> dict:
        return {i: k for k, ids in enumerate(self.bins) for i in ids}


def bin_by_hardness(reference, num_bins: int = 8, label: str = "") -> Binning:
    """Equal-count bins by ascending reference overlap; bin 0 is hardest.

    The first ``count % num_bins`` bins take one extra instance.
    """
    ref = _as_map(reference)
    if not ref:
        raise ValueError("no reference records")
    if not 1 <= num_bins <= len(ref):
        raise ValueError(f"num_bins must lie in 1..{len(ref)}")
    order = sorted(ref, key=lambda i: (ref[i], i))
    q, r = divmod(len(order), num_bins)
    bins, start = [], 0
    for k in range(num_bins):
        size = q + (1 if k < r else 0)
        bins.append(order[start:start + size])
        start += size
    return Binning(bins, [ref[b[0]] for b in bins], [ref[b[-1]] for b in bins], label)


@dataclass
class ComparisonReport:
    schedule: str
    baseline: str
    num_instances: int
    mean_overlap_a: float
    mean_overlap_b: float
    ratio_of_averages: float
    average_of_ratios: float
    excluded: tuple = ()
    binning: Binning | None = None
    per_bin: list = field(default_factory=list)


def compare(a, b, schedule: str, baseline: str, binning: Binning | None = None) -> ComparisonReport:
    a, b = _as_map(a), _as_map(b)
    ids, va, vb = _paired(a, b)
    ma, mb = mean(va), mean(vb)
    aor = average_of_ratios(a, b)
    per_bin = []
    if binning is not None:
        for ids_k in binning.bins:
            sub_b = mean(b[i] for i in ids_k)
            per_bin.append(mean(a[i] for i in ids_k) / sub_b if sub_b > 0 else math.nan)
    return ComparisonReport(
        schedule, baseline, len(ids), ma, mb,
        ma / mb if mb > 0 else math.nan, aor.value, aor.excluded, binning, per_bin,
    )


def compare_all(records, baseline: str, bin_ref: str | None = None, num_bins: int = 8) -> list:
    """Compare every schedule in ``records`` (including the baseline) to ``baseline``."""
    table = by_schedule(records)
    if baseline not in table:
        raise ValueError(f"baseline {baseline!r} not among evaluated schedules")
    binning = None
    if bin_ref is not None:
        if bin_ref not in table:
            raise ValueError(f"bin reference {bin_ref!r} not among evaluated schedules")
        binning = bin_by_hardness(table[bin_ref], num_bins, bin_ref)
    return [compare(vals, table[baseline], label, baseline, binning) for label, vals in table.items()]


# --- output ------------------------------------------------------------------

def sig3(x: float) -> str:
    """Three significant figures, the way results tables print them."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.3g}"


def _open_csv(path):
    return open(Path(path), "w", newline="")


def write_records(path, records) -> None:
    with _open_csv(path) as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow((r.instance_id, r.schedule, repr(float(r.overlap))))


def read_records(path) -> list:
    with open(path, newline="") as fh:
        return [EvalRecord(row["instance_id"], row["schedule"], float(row["overlap"])) for row in csv.DictReader(fh)]


def write_comparisons(path, reports) -> None:
    with _open_csv(path) as fh:
        w = csv.writer(fh)
        w.writerow(COMPARISON_COLUMNS)
        for c in reports:
            w.writerow((
                c.schedule, c.baseline, c.num_instances, repr(c.mean_overlap_a), repr(c.mean_overlap_b),
                repr(c.ratio_of_averages), repr(c.average_of_ratios), " ".join(c.excluded),
            ))


def write_bins(path, reports) -> None:
    with _open_csv(path) as fh:
        w = csv.writer(fh)
        w.writerow(BIN_COLUMNS)
        for c in reports:
            if c.binning is None:
                continue
            b = c.binning
            for k, ratio in enumerate(c.per_bin):
                w.writerow((c.schedule, c.baseline, b.reference, k, len(b.bins[k]),
                            repr(b.lower[k]), repr(b.upper[k]), repr(ratio)))


def pivot(records, row_key=None) -> tuple:
    """(header, rows): one row per instance id, one column per schedule."""
    table = by_schedule(records)
    labels = list(table)
    ids = []
    for vals in table.values():
        ids.extend(i for i in vals if i not in ids)
    if row_key is not None:
        ids.sort(key=row_key)
    rows = [[i] + [table[s].get(i, math.nan) for s in labels] for i in ids]
    return ["instance_id"] + labels, rows


def write_pivot(path, records, row_key=None) -> None:
    header, rows = pivot(records, row_key)
    with _open_csv(path) as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def sorted_overlaps(records) -> list:
    """(schedule, rank, overlap) with overlaps ascending per schedule."""
    out = []
    for label, vals in by_schedule(records).items():
        out.extend((label, k, v) for k, v in enumerate(sorted(vals.values())))
    return out


def format_table(header, rows) -> str:
    """Fixed-width text table; floats shown to three significant figures."""
    cells = [[str(h) for h in header]]
    for row in rows:
        cells.append([sig3(v) if isinstance(v, float) else str(v) for v in row])
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"
