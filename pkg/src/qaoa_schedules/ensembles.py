"""Random MAX-2-SAT / MAX-3-SAT ensembles, hardness filtering and train/test splits.

An ensemble directory holds one DIMACS file per instance (``<id>.cnf``), a
JSON sidecar per instance with its ground state, and ``manifest.json``.
"""

from __future__ import annotations

import hashlib
import json
import math
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, FormatError, MetadataError
from .problems import (
    Clause,
    SatInstance,
    build_diagonal,
    describe_ground_state,
    ground_states,
    load_instance,
    meta_path,
    save_instance,
)
from .simulator import DEFAULT_TROTTER, TrotterConfig, run_schedule, squared_overlap

KINDS = ("max2sat", "max3sat")
SIZES_OF_RECORD = {"max2sat": ((20, 60), (24, 72), (28, 84)), "max3sat": ((20, 120),)}
MANIFEST = "manifest.json"
INSTANCE_SUFFIXES = (".cnf", ".wcnf")


@dataclass
class EnsembleSpec:
    kind: str
    num_vars: int
    num_clauses: int
    target_count: int
    hardness_fraction: float = 0.068
    reference: str = "L(10,1,1)"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        if not 0 < self.hardness_fraction <= 1:
            raise ConfigError("hardness_fraction must lie in (0, 1]")
        if self.target_count < 1:
            raise ConfigError("target_count must be >= 1")
        if self.kind == "max2sat" and self.num_clauses > max_2sat_clauses(self.num_vars):
            raise ConfigError(f"{self.num_clauses} distinct 2-clauses impossible on {self.num_vars} variables")

    @property
    def of_record(self) -> bool:
        return (self.num_vars, self.num_clauses) in SIZES_OF_RECORD[self.kind]


@dataclass
class Instance:
    """A SAT instance plus its identity and sidecar metadata."""

    id: str
    sat: SatInstance
    meta: dict = field(default_factory=dict)

    @property
    def ground_index(self) -> int:
        if not self.meta.get("unique", False) or "ground_index" not in self.meta:
            raise MetadataError(f"instance {self.id} has no unique ground state recorded")
        return int(self.meta["ground_index"])

    @property
    def num_vars(self) -> int:
        return self.sat.num_vars

    def diagonal(self):
        return build_diagonal(self.sat)


def max_2sat_clauses(n: int) -> int:
    return 4 * n * (n - 1) // 2


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for instance ``index`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _unique_optimum(inst: SatInstance) -> dict | None:
    info = describe_ground_state(build_diagonal(inst))
    return info if info["unique"] else None


def _draw_until_unique(draw, max_attempts):
    for attempt in range(1, max_attempts + 1):
        inst = draw()
        info = _unique_optimum(inst)
        if info is not None:
            info["attempts"] = attempt
            return inst, info
    raise RuntimeError(f"no instance with a unique ground state in {max_attempts} attempts")


def gen_max2sat(N: int, M: int, rng: np.random.Generator, max_attempts: int = 10_000, return_info: bool = False):
    """M distinct 2-clauses on distinct variables, redrawn until the optimum is unique."""
    if N < 2 or M < 1 or M > max_2sat_clauses(N):
        raise ConfigError(f"cannot draw {M} distinct 2-clauses on {N} variables")

    def draw():
        clauses, seen = [], set()
        while len(clauses) < M:
            i, j = rng.choice(N, size=2, replace=False)
            ni, nj = rng.integers(0, 2, size=2)
            c = Clause(((i, ni), (j, nj)))
            if c.key in seen:
                continue
            seen.add(c.key)
            clauses.append(c)
        return SatInstance(N, clauses)

    inst, info = _draw_until_unique(draw, max_attempts)
    return (inst, info) if return_info else inst


def gen_max3sat(N: int, M: int, rng: np.random.Generator, max_attempts: int = 10_000, return_info: bool = False):
    """M independent 3-clauses; repeated variables and repeated clauses allowed."""
    if N < 1 or M < 1:
        raise ConfigError("need N >= 1 and M >= 1")

    def draw():
        vs = rng.integers(0, N, size=(M, 3))
        ns = rng.integers(0, 2, size=(M, 3))
        return SatInstance(N, [Clause(tuple(zip(v, n))) for v, n in zip(vs, ns)])

    inst, info = _draw_until_unique(draw, max_attempts)
    return (inst, info) if return_info else inst


GENERATORS = {"max2sat": gen_max2sat, "max3sat": gen_max3sat}


def instance_id(index: int) -> str:
    return f"inst{index:05d}"


def generate_one(spec: EnsembleSpec, index: int) -> Instance:
    rng = instance_rng(spec.seed, index)
    sat, info = GENERATORS[spec.kind](spec.num_vars, spec.num_clauses, rng, return_info=True)
    meta = {"id": instance_id(index), "kind": spec.kind, "seed": spec.seed, "index": index, **info}
    return Instance(meta["id"], sat, meta)


def generate(spec: EnsembleSpec, threads: int = 1, start: int = 0) -> list:
    """Instances ``start .. target_count-1``; each depends only on (seed, index)."""
    indices = range(start, spec.target_count)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda i: generate_one(spec, i), indices))
    return [generate_one(spec, i) for i in indices]


# --- hardness ----------------------------------------------------------------

def overlap_key(reference, cfg: TrotterConfig) -> str:
    """Cache key: label, a digest of the angles, and the Trotter setting."""
    mode = "exact" if cfg.exact else f"n={cfg.substeps}"
    digest = hashlib.sha1(np.ascontiguousarray(reference.as_vector()).tobytes()).hexdigest()[:10]
    return f"{reference.label}|{digest}|{mode}"


def reference_overlaps(instances, reference, cfg: TrotterConfig = DEFAULT_TROTTER, threads: int = 1) -> dict:
    """Ground-state squared overlap of each instance under ``reference``.

    Values already cached in an instance's sidecar under the same schedule
    label and Trotter setting are reused rather than recomputed.
    """
    instances = list(instances)
    if not instances:
        raise ValueError("no instances given")
    sizes = {inst.num_vars for inst in instances}
    if len(sizes) > 1:
        raise DimensionError(f"instances mix variable counts {sorted(sizes)}")
    key = overlap_key(reference, cfg)

    def one(inst):
        cached = inst.meta.get("overlaps", {}).get(key)
        if cached is not None:
            return float(cached)
        value = squared_overlap(run_schedule(inst.diagonal(), reference, cfg), inst.ground_index)
        inst.meta.setdefault("overlaps", {})[key] = value
        return value

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            values = list(pool.map(one, instances))
    else:
        values = [one(inst) for inst in instances]
    return {inst.id: v for inst, v in zip(instances, values)}


def retained_count(count: int, fraction: float) -> int:
    # small slack so e.g. 0.29 * 100 counts as 29
    return int(math.floor(fraction * count + 1e-9))


def select_hardest(overlaps: dict, fraction: float) -> list:
    """Ids of the floor(fraction * count) smallest overlaps, ties by id."""
    if not overlaps:
        raise ValueError("no overlaps given")
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    order = sorted(overlaps, key=lambda i: (overlaps[i], i))
    return order[: retained_count(len(order), fraction)]


def hardness_filter(instances, reference, fraction: float, cfg: TrotterConfig = DEFAULT_TROTTER, threads: int = 1) -> list:
    """The hardest instances under ``reference``, hardest first."""
    instances = list(instances)
    overlaps = reference_overlaps(instances, reference, cfg, threads)
    by_id = {inst.id: inst for inst in instances}
    return [by_id[i] for i in select_hardest(overlaps, fraction)]


def split_training(hard_set, k: int, rng: np.random.Generator):
    """(k random instances in original order, the full set)."""
    hard_set = list(hard_set)
    if not 1 <= k <= len(hard_set):
        raise ValueError(f"k={k} must lie in 1..{len(hard_set)}")
    picks = np.sort(rng.choice(len(hard_set), size=k, replace=False))
    return [hard_set[i] for i in picks], hard_set


# --- directories -------------------------------------------------------------

def prepare_output_dir(path, overwrite: bool = False) -> Path:
    path = Path(path)
    if path.exists() and any(path.iterdir()):
        if not overwrite:
            raise FileExistsError(f"{path} exists and is not empty")
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_instances(directory, instances) -> None:
    directory = Path(directory)
    for inst in instances:
        suffix = ".wcnf" if inst.sat.weighted else ".cnf"
        save_instance(directory / f"{inst.id}{suffix}", inst.sat, inst.meta)


def write_manifest(directory, manifest: dict) -> None:
    (Path(directory) / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def load_instances(directory, require_ground_state: bool = True) -> list:
    """All instance files in ``directory``, sorted by id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no instance directory {directory}")
    files = sorted(p for p in directory.iterdir() if p.suffix in INSTANCE_SUFFIXES)
    if not files:
        raise FileNotFoundError(f"no instance files in {directory}")
    out = []
    for path in files:
        sat, meta = load_instance(path)
        inst = Instance(meta.get("id", path.stem), sat, meta)
        if require_ground_state:
            inst.ground_index
        out.append(inst)
    return out


def import_instances(paths) -> list:
    """Read externally supplied DIMACS files and attach ground-state metadata.

    Ids are file stems. Instances with a degenerate optimum are kept but
    flagged ``unique: false``; evaluation refuses them.
    """
    out = []
    for path in sorted(Path(p) for p in paths):
        sat, meta = load_instance(path)
        diag = build_diagonal(sat)
        gs = ground_states(diag)
        meta = {**meta, "id": path.stem, "source": str(path), "kind": "imported"}
        meta.update(ground_energy=gs.min_energy, ground_index=int(gs.optima[0]), unique=not gs.degenerate)
        if gs.degenerate:
            meta["degeneracy"] = int(len(gs.optima))
        out.append(Instance(path.stem, sat, meta))
    ids = [inst.id for inst in out]
    if len(set(ids)) != len(ids):
        raise FormatError("imported files must have distinct stems")
    return out


def copy_instance_files(instances, source: Path, dest: Path) -> None:
    """Copy instance files and write (possibly updated) sidecars into ``dest``."""
    for inst in instances:
        for suffix in INSTANCE_SUFFIXES:
            src = Path(source) / f"{inst.id}{suffix}"
            if src.exists():
                shutil.copyfile(src, Path(dest) / src.name)
                meta_path(Path(dest) / src.name).write_text(json.dumps(inst.meta, indent=2, sort_keys=True) + "\n")
                break
        else:
            raise FileNotFoundError(f"instance file for {inst.id} not found in {source}")


def spec_dict(spec: EnsembleSpec) -> dict:
    return asdict(spec)
