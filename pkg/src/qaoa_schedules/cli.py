"""Command-line pipeline: gen, filter, train, eval, toy, report.

Every command that writes files puts them in a fresh ``--out`` directory
along with ``manifest.json``, which records the fully merged configuration.
Passing that manifest back through ``--config`` repeats the run.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import (
    EnsembleSpec,
    copy_instance_files,
    generate,
    import_instances,
    instance_rng,
    load_instances,
    overlap_key,
    prepare_output_dir,
    read_manifest,
    reference_overlaps,
    select_hardest,
    spec_dict,
    split_training,
    write_instances,
    write_manifest,
)
from .errors import CapacityError, ConfigError, DimensionError, FormatError, MetadataError
from .evaluation import (
    BIN_COLUMNS,
    COMPARISON_COLUMNS,
    RECORD_COLUMNS,
    EvalRecord,
    compare_all,
    evaluate,
    format_table,
    pivot,
    read_records,
    sorted_overlaps,
    write_bins,
    write_comparisons,
    write_records,
)
from .schedules import (
    RAMPS,
    FreezeMask,
    initial_schedule,
    load_schedule,
    resolve_schedule,
    save_schedule,
    schedule_to_dict,
    split_schedule_list,
)
from .simulator import TrotterConfig
from .toymodels import (
    FULL_FIELD,
    MISSING_FIELD,
    REDUCED_FIELDS,
    RingModelParams,
    SubspaceModelParams,
    run_ring,
    run_subspace,
    subspace_spectrum,
)
from .trainer import Objective, OptimizerConfig, train

log = logging.getLogger("qaoa_schedules")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_IO = 4
EXIT_DATA = 5

TABLE_SCHEDULES = "8,31,49,84,113,122,154,157,L(10,1,1),L(10,2,2),L(10,3,3),L(10,4,4),L(20,1,1),L(40,1,1),L(80,1,1)"
VARIANT_NAMES = {"missing": MISSING_FIELD, "reduced": REDUCED_FIELDS, "full": FULL_FIELD}
SPLIT_STREAM = 1  # spawn key for the training-set draw; the optimizer uses the bare seed


# --- argument parsing --------------------------------------------------------

def _add_common(p, seed=False, out=True):
    p.add_argument("--config", help="JSON config file or a previous run's manifest")
    p.add_argument("--threads", type=int, default=1, help="worker threads over instances")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="master seed")
    if out:
        p.add_argument("--out", help="output directory (must be new or empty)")
        p.add_argument("--overwrite", action="store_true", help="replace a non-empty --out")


def _add_trotter(p, substeps=4, ramp="p+1"):
    p.add_argument("--substeps", type=int, default=substeps, help="Trotter substeps per schedule step")
    p.add_argument("--exact", action="store_true", help="dense exponentials instead of Trotter (N <= 12)")
    p.add_argument("--ramp", choices=RAMPS, default=ramp, help="denominator of L(p,x,z) ramps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaoa-schedules", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random SAT ensemble or import DIMACS files")
    p.add_argument("--kind", choices=("max2sat", "max3sat"), default="max2sat")
    p.add_argument("--n", type=int, default=20, help="variables")
    p.add_argument("--m", type=int, default=60, help="clauses")
    p.add_argument("--count", type=int, default=100, help="instances to generate")
    p.add_argument("--import", dest="import_files", nargs="+", metavar="FILE", help="import DIMACS files instead")
    _add_common(p, seed=True)

    p = sub.add_parser("filter", help="keep the hardest fraction under a reference schedule")
    p.add_argument("ensemble")
    p.add_argument("--reference", default="L(10,1,1)")
    p.add_argument("--fraction", type=float, default=0.068)
    _add_trotter(p)
    _add_common(p)

    p = sub.add_parser("train", help="learn a schedule on k instances of a hard set")
    p.add_argument("instances")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--initial", type=int, help="initial schedule key")
    g.add_argument("--initial-file", help="initial schedule JSON file")
    p.add_argument("--freeze-z", action="store_true", help="hold theta_z fixed")
    p.add_argument("--freeze-x", action="store_true", help="hold theta_x fixed")
    p.add_argument("--k", type=int, default=13, help="training instances")
    defaults = OptimizerConfig()
    for name in ("noisy_evals", "adapt_window", "accept_hi", "accept_lo", "max_powell_rounds", "max_outer_rounds"):
        p.add_argument("--" + name.replace("_", "-"), type=int, default=getattr(defaults, name))
    for name in ("step_grow", "step_shrink", "initial_step", "bracket_step", "powell_tol", "outer_tol"):
        p.add_argument("--" + name.replace("_", "-"), type=float, default=getattr(defaults, name))
    _add_trotter(p)
    _add_common(p, seed=True)

    p = sub.add_parser("eval", help="evaluate schedules on an instance set")
    p.add_argument("instances")
    p.add_argument("--schedules", default=TABLE_SCHEDULES, help="comma list of keys, L(p,x,z) or files")
    p.add_argument("--baseline", default="L(10,1,1)")
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--bin-ref", help="schedule whose overlaps define hardness bins")
    _add_trotter(p)
    _add_common(p)

    p = sub.add_parser("toy", help="ring or three-subspace toy models")
    p.add_argument("model", choices=("ring", "subspace"))
    p.add_argument("--schedules", default="154,L(10,1,1),L(80,1,1)")
    p.add_argument("--k", default="2..10", help="ring sizes, e.g. 2..10 or 2,4,6")
    p.add_argument("--variant", choices=tuple(VARIANT_NAMES), default="missing")
    defaults = SubspaceModelParams()
    for name in ("n1", "n2"):
        p.add_argument("--" + name, type=int, default=getattr(defaults, name))
    for name in ("a", "b", "e1", "e2", "e3"):
        p.add_argument("--" + name, type=float, default=getattr(defaults, name))
    p.add_argument("--sweep", help="PARAM=LO..HI over a subspace parameter")
    p.add_argument("--sweep-points", type=int, default=51)
    p.add_argument("--s-points", type=int, default=401, help="grid for the spectral gap scan")
    _add_trotter(p, substeps=16, ramp="p")
    _add_common(p)

    p = sub.add_parser("report", help="print CSV outputs as tables")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--sorted", help="write a sorted per-schedule overlap dump of a records file here")
    p.add_argument("--config", help=argparse.SUPPRESS)
    return parser


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _load_config(path, command) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    if "command" in data and "config" in data:
        if data["command"] != command:
            raise ConfigError(f"{path} is a manifest for {data['command']!r}, not {command!r}")
        data = data["config"]
    elif command in data and isinstance(data[command], dict):
        data = data[command]
    return data


def parse_args(argv=None) -> argparse.Namespace:
    """Flags beat config-file values, which beat built-in defaults."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = _subparser(parser, args.command)
        known = {a.dest for a in sub._actions}
        values = _load_config(args.config, args.command)
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {unknown}")
        values.pop("config", None)
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def resolved_config(args) -> dict:
    skip = {"command", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _trotter(args) -> TrotterConfig:
    return TrotterConfig(substeps=args.substeps, exact=args.exact)


def _schedules(text, ramp):
    refs = split_schedule_list(text)
    if not refs:
        raise ConfigError("no schedules given")
    try:
        return [resolve_schedule(r, ramp) for r in refs]
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc


def _out_dir(args) -> Path:
    if not args.out:
        raise ConfigError("--out is required")
    return prepare_output_dir(args.out, args.overwrite)


def _manifest(args, **extra) -> dict:
    return {
        "command": args.command,
        "config": resolved_config(args),
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        **extra,
    }


def parse_int_range(text: str) -> list:
    out = []
    for part in text.split(","):
        m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            out.extend(range(lo, hi + 1))
        elif part.strip():
            out.append(int(part))
    if not out:
        raise ConfigError(f"empty range {text!r}")
    return out


def parse_sweep(text: str, points: int):
    m = re.fullmatch(r"\s*(\w+)\s*=\s*([-+0-9.eE]+)\s*\.\.\s*([-+0-9.eE]+)\s*", text)
    if not m:
        raise ConfigError(f"sweep must look like b=0..5, got {text!r}")
    name = m.group(1)
    if name not in ("a", "b", "e1", "e2", "e3", "n1", "n2"):
        raise ConfigError(f"cannot sweep {name!r}")
    if points < 1:
        raise ConfigError("--sweep-points must be >= 1")
    values = np.linspace(float(m.group(2)), float(m.group(3)), points)
    if name in ("n1", "n2"):
        values = np.unique(np.rint(values).astype(int))
    return name, values


# --- commands ----------------------------------------------------------------

def cmd_gen(args) -> int:
    out = _out_dir(args)
    if args.import_files:
        instances = import_instances(args.import_files)
        write_instances(out, instances)
        write_manifest(out, _manifest(
            args, ids=[i.id for i in instances],
            degenerate=[i.id for i in instances if not i.meta["unique"]],
        ))
        print(f"imported {len(instances)} instances into {out}")
        return EXIT_OK
    spec = EnsembleSpec(args.kind, args.n, args.m, args.count, seed=args.seed)
    if not spec.of_record:
        log.warning("(N, M) = (%d, %d) is not one of the standard sizes for %s", args.n, args.m, args.kind)
    instances = generate(spec, threads=args.threads)
    write_instances(out, instances)
    write_manifest(out, _manifest(
        args, spec=spec_dict(spec), ids=[i.id for i in instances],
        draws=sum(i.meta["attempts"] for i in instances),
    ))
    print(f"wrote {len(instances)} instances to {out}")
    return EXIT_OK


def cmd_filter(args) -> int:
    src = Path(args.ensemble)
    instances = load_instances(src)
    reference = _schedules(args.reference, args.ramp)[0]
    cfg = _trotter(args)
    out = _out_dir(args)
    overlaps = reference_overlaps(instances, reference, cfg, threads=args.threads)
    kept = select_hardest(overlaps, args.fraction)
    by_id = {i.id: i for i in instances}
    copy_instance_files([by_id[i] for i in kept], src, out)
    write_records(out / "reference_overlaps.csv", [EvalRecord(i, reference.label, overlaps[i]) for i in sorted(overlaps)])
    cutoff = overlaps[kept[-1]] if kept else None
    write_manifest(out, _manifest(
        args, source=str(src), source_manifest=read_manifest(src),
        reference_schedule=schedule_to_dict(reference), overlap_key=overlap_key(reference, cfg),
        count=len(instances), retained=len(kept), cutoff=cutoff, ids=kept,
    ))
    print(f"kept {len(kept)} of {len(instances)} instances (cutoff overlap {cutoff!r}) in {out}")
    return EXIT_OK


def _initial(args):
    if args.initial_file:
        sf = load_schedule(args.initial_file)
        mask = sf.mask or FreezeMask.none(sf.schedule.steps)
        return sf.schedule, mask, {"initial_file": str(args.initial_file)}
    key = 11 if args.initial is None else args.initial
    try:
        schedule, mask = initial_schedule(key)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    return schedule, mask, {"initial_key": key}


def cmd_train(args) -> int:
    instances = load_instances(args.instances)
    schedule, mask, origin = _initial(args)
    if args.freeze_x or args.freeze_z:
        mask = FreezeMask(mask.freeze_x | args.freeze_x, mask.freeze_z | args.freeze_z)
    cfg = OptimizerConfig(
        noisy_evals=args.noisy_evals, adapt_window=args.adapt_window, accept_hi=args.accept_hi,
        accept_lo=args.accept_lo, step_grow=args.step_grow, step_shrink=args.step_shrink,
        initial_step=args.initial_step, bracket_step=args.bracket_step, powell_tol=args.powell_tol,
        max_powell_rounds=args.max_powell_rounds, outer_tol=args.outer_tol,
        max_outer_rounds=args.max_outer_rounds, seed=args.seed,
    )
    if args.k > len(instances):
        raise ConfigError(f"--k {args.k} exceeds the {len(instances)} available instances")
    training, _ = split_training(instances, args.k, instance_rng(args.seed, SPLIT_STREAM))
    out = _out_dir(args)
    obj = Objective([(i.diagonal(), i.ground_index) for i in training], _trotter(args), args.threads)
    run = train(schedule, mask, obj, cfg)
    final = run.final.relabel(f"trained-{origin.get('initial_key', 'file')}-s{args.seed}")
    provenance = {
        **origin,
        "training_ids": [i.id for i in training],
        "instances": str(args.instances),
        "seed": args.seed,
        "optimizer": vars(cfg),
        "substeps": args.substeps,
        "initial_objective": run.initial_objective,
        "final_objective": run.final_objective,
        "rounds": run.rounds,
        "evaluations": len(run.trajectory),
        "package_version": __version__,
    }
    save_schedule(out / "schedule.json", final, run.mask, provenance)
    run.write_log(out / "training_log.jsonl")
    write_manifest(out, _manifest(args, training_ids=provenance["training_ids"],
                                  initial_objective=run.initial_objective, final_objective=run.final_objective))
    print(f"objective {run.initial_objective:.6g} -> {run.final_objective:.6g} "
          f"after {len(run.trajectory)} evaluations; wrote {out / 'schedule.json'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    instances = load_instances(args.instances)
    schedules = _schedules(args.schedules, args.ramp)
    labels = [s.label for s in schedules]
    for extra in filter(None, (args.baseline, args.bin_ref)):
        s = _schedules(extra, args.ramp)[0]
        if s.label not in labels:
            schedules.append(s)
            labels.append(s.label)
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate schedule labels in {labels}")
    baseline = _schedules(args.baseline, args.ramp)[0].label
    bin_ref = _schedules(args.bin_ref, args.ramp)[0].label if args.bin_ref else None
    out = _out_dir(args)
    records = evaluate(schedules, instances, _trotter(args), threads=args.threads)
    reports = compare_all(records, baseline, bin_ref, args.bins)
    write_records(out / "records.csv", records)
    write_comparisons(out / "comparisons.csv", reports)
    if bin_ref:
        write_bins(out / "bins.csv", reports)
    write_manifest(out, _manifest(args, schedules=[schedule_to_dict(s) for s in schedules],
                                  ids=[i.id for i in instances]))
    rows = [[c.schedule, c.mean_overlap_a, c.ratio_of_averages, c.average_of_ratios] for c in reports]
    print(format_table(["schedule", "mean_overlap", "ratio_of_averages", "average_of_ratios"], rows), end="")
    return EXIT_OK


def _ring_id(K, variant):
    return f"ring:K={K}:{variant}"


def _ring_k(instance_id: str) -> int:
    return int(instance_id.split("K=")[1].split(":")[0])


def run_ring_table(schedules, ks, variant, cfg) -> list:
    return [
        EvalRecord(_ring_id(K, variant), s.label, run_ring(s, RingModelParams(K, variant), cfg))
        for s in schedules
        for K in ks
    ]


def cmd_toy(args) -> int:
    schedules = _schedules(args.schedules, args.ramp)
    out = _out_dir(args) if args.out else None
    if args.model == "ring":
        ks = parse_int_range(args.k)
        records = run_ring_table(schedules, ks, VARIANT_NAMES[args.variant], _trotter(args))
        header, rows = pivot(records, row_key=_ring_k)
        header[0] = "K"
        rows = [[_ring_k(r[0])] + r[1:] for r in rows]
        if out:
            write_records(out / "records.csv", records)
            with open(out / "table.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows([r[0]] + [repr(float(v)) for v in r[1:]] for r in rows)
    else:
        header, rows = _subspace_rows(args, schedules)
        if out:
            with open(out / "sweep.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows([[repr(v) if isinstance(v, float) else v for v in r] for r in rows])
    if out:
        write_manifest(out, _manifest(args, schedules=[schedule_to_dict(s) for s in schedules]))
    print(format_table(header, rows), end="")
    return EXIT_OK


def _subspace_rows(args, schedules):
    base = {k: getattr(args, k) for k in ("n1", "n2", "a", "b", "e1", "e2", "e3")}
    if args.sweep:
        name, values = parse_sweep(args.sweep, args.sweep_points)
    else:
        name, values = "b", [base["b"]]
    s_grid = np.linspace(0.0, 1.0, args.s_points)
    header = [name, "min_gap", "s_at_min_gap", "w1", "w2", "w3"] + [s.label for s in schedules]
    rows = []
    for v in values:
        v = int(v) if name in ("n1", "n2") else float(v)
        params = SubspaceModelParams(**{**base, name: v})
        gaps, weights = subspace_spectrum(params, s_grid)
        k = int(np.argmin(gaps))
        w = _block_weights(params, weights[k])
        rows.append([v, float(gaps[k]), float(s_grid[k]), *w] + [run_subspace(s, params) for s in schedules])
    return header, rows


def _block_weights(params, w):
    # the reduced basis drops empty blocks; report all three
    full, it = [], iter(w)
    for size in (params.n1, params.n2, 1):
        full.append(float(next(it)) if size > 0 else 0.0)
    return full


def _csv_kind(header) -> str:
    h = tuple(header)
    if h == RECORD_COLUMNS:
        return "records"
    if h == COMPARISON_COLUMNS:
        return "comparisons"
    if h == BIN_COLUMNS:
        return "bins"
    return "other"


def _numeric(v):
    try:
        return float(v)
    except ValueError:
        return v


def cmd_report(args) -> int:
    for path in args.inputs:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise FormatError(f"{path} is empty")
        header, body = rows[0], rows[1:]
        print(f"# {path}")
        if _csv_kind(header) == "records":
            records = read_records(path)
            if args.sorted:
                with open(args.sorted, "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(("schedule", "rank", "overlap"))
                    w.writerows((s, k, repr(v)) for s, k, v in sorted_overlaps(records))
            header, body = pivot(records)
        print(format_table(header, [[_numeric(v) for v in r] for r in body]), end="")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "filter": cmd_filter, "train": cmd_train,
            "eval": cmd_eval, "toy": cmd_toy, "report": cmd_report}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, OSError) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)


def exit_code(exc: Exception) -> int:
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, (FormatError, MetadataError, DimensionError)):
        return EXIT_DATA
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
