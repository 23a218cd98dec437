"""Resumable on-disk cache for the long ensemble-level acceptance runs.

Running this module directly precomputes everything, so the acceptance tests
only read results:

    python tests/acceptance_data.py            # all stages
    python tests/acceptance_data.py max2sat    # one stage

The cache lives in ``$QAOA_ACCEPTANCE_CACHE`` or ``.acceptance_cache`` next
to ``tests/``. Every stage appends rows as it goes and resumes after an
interruption.
"""

from __future__ import annotations

import csv
import json
import os
import sys
import time
from pathlib import Path

from qaoa_schedules.ensembles import (
    EnsembleSpec,
    generate_one,
    instance_rng,
    load_instances,
    select_hardest,
    split_training,
    write_instances,
    write_manifest,
)
from qaoa_schedules.evaluation import EvalRecord
from qaoa_schedules.schedules import initial_schedule, resolve_schedule, save_schedule
from qaoa_schedules.simulator import DEFAULT_TROTTER, run_schedule, squared_overlap
from qaoa_schedules.trainer import Objective, OptimizerConfig, train

CACHE_VERSION = "v1"
ROOT = Path(os.environ.get("QAOA_ACCEPTANCE_CACHE", Path(__file__).resolve().parent.parent / ".acceptance_cache"))
CACHE = ROOT / CACHE_VERSION

POOL = 3346
SPECS = {
    "max2sat": EnsembleSpec("max2sat", 20, 60, POOL, seed=20_000),
    "max3sat": EnsembleSpec("max3sat", 20, 120, POOL, seed=30_000),
}
REFERENCE = "L(10,1,1)"
HARD_SCHEDULES = ("154", "157", "L(10,1,1)", "L(80,1,1)")

TRAIN_SEED = 11
TRAIN_K = 13
# two outer rounds with at most three Powell sweeps each keeps a 1-core run near 3.5 hours
TRAIN_CONFIG = dict(max_outer_rounds=2, max_powell_rounds=3, seed=TRAIN_SEED)


def _say(msg):
    print(f"[{time.strftime('%H:%M:%S')}] {msg}", flush=True)


def _read_rows(path) -> list:
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _append_rows(path, columns, rows):
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(columns)
        for r in rows:
            w.writerow(r)


def ensemble(kind: str) -> list:
    """The full pool of instances, generated once and then read from disk."""
    spec = SPECS[kind]
    d = CACHE / kind / "pool"
    d.mkdir(parents=True, exist_ok=True)
    have = {p.stem for p in d.glob("*.cnf")}
    todo = [i for i in range(spec.target_count) if f"inst{i:05d}" not in have]
    if todo:
        _say(f"{kind}: generating {len(todo)} instances")
        for n, i in enumerate(todo):
            write_instances(d, [generate_one(spec, i)])
            if n % 500 == 499:
                _say(f"{kind}: generated {n + 1}")
        write_manifest(d, {"spec": vars(spec), "count": spec.target_count})
    return load_instances(d)


def reference_overlaps(kind: str, instances=None) -> dict:
    path = CACHE / kind / "reference_overlaps.csv"
    done = {r["instance_id"]: float(r["overlap"]) for r in _read_rows(path)}
    instances = instances if instances is not None else ensemble(kind)
    todo = [inst for inst in instances if inst.id not in done]
    if todo:
        ref = resolve_schedule(REFERENCE)
        _say(f"{kind}: reference overlaps for {len(todo)} instances")
        for n, inst in enumerate(todo):
            v = squared_overlap(run_schedule(inst.diagonal(), ref, DEFAULT_TROTTER), inst.ground_index)
            _append_rows(path, ("instance_id", "schedule", "overlap"), [(inst.id, ref.label, repr(v))])
            done[inst.id] = v
            if n % 500 == 499:
                _say(f"{kind}: {n + 1} overlaps done")
    return done


def hard_set(kind: str) -> list:
    instances = ensemble(kind)
    overlaps = reference_overlaps(kind, instances)
    ids = select_hardest(overlaps, SPECS[kind].hardness_fraction)
    by_id = {inst.id: inst for inst in instances}
    return [by_id[i] for i in ids]


def evaluate_cached(name: str, instances, schedules) -> list:
    """Records for every (schedule, instance), computed at most once."""
    path = CACHE / f"{name}_records.csv"
    done = {(r["schedule"], r["instance_id"]): float(r["overlap"]) for r in _read_rows(path)}
    schedules = [resolve_schedule(s) if isinstance(s, str) else s for s in schedules]
    todo = [inst for inst in instances if any((s.label, inst.id) not in done for s in schedules)]
    if todo:
        _say(f"{name}: evaluating {len(schedules)} schedules on {len(todo)} instances")
    for inst in todo:
        diag = inst.diagonal()
        rows = []
        for s in schedules:
            if (s.label, inst.id) in done:
                continue
            v = squared_overlap(run_schedule(diag, s, DEFAULT_TROTTER), inst.ground_index)
            done[s.label, inst.id] = v
            rows.append((inst.id, s.label, repr(v)))
        _append_rows(path, ("instance_id", "schedule", "overlap"), rows)
    return [EvalRecord(inst.id, s.label, done[s.label, inst.id]) for s in schedules for inst in instances]


def hard_records(kind: str) -> list:
    return evaluate_cached(f"{kind}/hard", hard_set(kind), HARD_SCHEDULES)


def trained_schedule():
    """Learn from initial key 11 on 13 hard N=20 instances; cached as JSON."""
    from qaoa_schedules.schedules import load_schedule

    path = CACHE / "training" / "schedule.json"
    if path.exists():
        return load_schedule(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    hard = hard_set("max2sat")
    training, _ = split_training(hard, TRAIN_K, instance_rng(TRAIN_SEED, 1))
    start, mask = initial_schedule(11)
    obj = Objective([(i.diagonal(), i.ground_index) for i in training])
    _say(f"training from key 11 on {[i.id for i in training]}")
    run = train(start, mask, obj, OptimizerConfig(**TRAIN_CONFIG))
    run.write_log(path.parent / "training_log.jsonl")
    provenance = {
        "initial_key": 11, "training_ids": [i.id for i in training], "config": TRAIN_CONFIG,
        "initial_objective": run.initial_objective, "final_objective": run.final_objective,
        "evaluations": len(run.trajectory), "rounds": run.rounds,
    }
    save_schedule(path, run.final.relabel("trained11"), run.mask, provenance)
    _say(f"training done: {run.initial_objective:.4g} -> {run.final_objective:.4g}")
    return load_schedule(path)


def training_records() -> list:
    sf = trained_schedule()
    start, _ = initial_schedule(11)
    return evaluate_cached("training/hard", hard_set("max2sat"), [sf.schedule, start, resolve_schedule(REFERENCE)])


STAGES = {"max2sat": lambda: hard_records("max2sat"),
          "max3sat": lambda: hard_records("max3sat"),
          "training": training_records}


if __name__ == "__main__":
    for stage in sys.argv[1:] or list(STAGES):
        STAGES[stage]()
        _say(f"stage {stage} complete")
    print(json.dumps({"cache": str(CACHE)}))
