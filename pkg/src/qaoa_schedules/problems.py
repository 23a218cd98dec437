"""MAX-k-SAT and Ising encodings of the diagonal cost Hamiltonian H_Z."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DimensionError, FormatError
from .simulator import DiagonalEnergy, check_capacity

ENERGY_TOL = 1e-9


class Literal(NamedTuple):
    variable: int
    negated: bool = False

    def __str__(self):
        return f"{'~' if self.negated else ''}x{self.variable}"


@dataclass(frozen=True)
class Clause:
    literals: tuple

    def __post_init__(self):
        lits = tuple(Literal(int(v), bool(n)) for v, n in self.literals)
        if len(lits) not in (2, 3):
            raise ValueError(f"clauses must have 2 or 3 literals, got {len(lits)}")
        object.__setattr__(self, "literals", lits)

    @property
    def key(self) -> frozenset:
        """Order-independent identity used for duplicate detection."""
        return frozenset(self.literals)

    def is_violated(self, assignment: int) -> bool:
        # literal x_i is false when bit i is 1, ~x_i is false when bit i is 0
        return all(((assignment >> v) & 1) ^ n for v, n in self.literals)

    def __str__(self):
        return " v ".join(map(str, self.literals))


@dataclass
class SatInstance:
    num_vars: int
    clauses: list
    weights: list | None = None

    def __post_init__(self):
        self.clauses = [c if isinstance(c, Clause) else Clause(c) for c in self.clauses]
        for c in self.clauses:
            for lit in c.literals:
                if not 0 <= lit.variable < self.num_vars:
                    raise ValueError(f"literal {lit} out of range for {self.num_vars} variables")
        if self.weights is not None and len(self.weights) != len(self.clauses):
            raise ValueError("one weight per clause required")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    def clause_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.clauses))
        return np.asarray(self.weights, dtype=float)


@dataclass
class IsingModel:
    """E(s) = constant + sum J_ij s_i s_j + sum h_i s_i, with s_i = +-1."""

    num_spins: int
    couplings: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    constant: float = 0.0

    def __post_init__(self):
        for i, j, _ in self.couplings:
            if i == j:
                raise ValueError("coupling endpoints must differ")


@dataclass
class GroundStateReport:
    min_energy: float
    optima: np.ndarray
    degenerate: bool

    @property
    def ground_index(self) -> int:
        if self.degenerate:
            raise ValueError(f"ground state is {len(self.optima)}-fold degenerate")
        return int(self.optima[0])


def energy_of_assignment(instance: SatInstance, assignment: int) -> float:
    w = instance.clause_weights()
    return float(sum(wk for c, wk in zip(instance.clauses, w) if c.is_violated(assignment)))


def _violation_factors(instance: SatInstance, lo_bits: int):
    """Split each clause indicator into a high-bits factor and a low-bits factor.

    A clause is violated iff every literal is false, and each literal depends
    on a single bit, so the indicator factorizes over the two bit halves.
    """
    hi_bits = instance.num_vars - lo_bits
    lo = np.arange(1 << lo_bits)
    hi = np.arange(1 << hi_bits)
    m = len(instance.clauses)
    u = np.ones((hi.size, m))
    v = np.ones((lo.size, m))
    for c, clause in enumerate(instance.clauses):
        for var, neg in clause.literals:
            if var < lo_bits:
                v[:, c] *= ((lo >> var) & 1) ^ neg
            else:
                u[:, c] *= ((hi >> (var - lo_bits)) & 1) ^ neg
    return u, v


def build_diagonal(instance: SatInstance) -> DiagonalEnergy:
    """Weighted violated-clause count for every assignment."""
    n = instance.num_vars
    check_capacity(n)
    lo_bits = n // 2
    u, v = _violation_factors(instance, lo_bits)
    u *= instance.clause_weights()
    if instance.weighted:
        return DiagonalEnergy.from_energies((u @ v.T).ravel())
    m = len(instance.clauses)
    levels = np.arange(m + 1, dtype=float)
    index = np.empty(1 << n, dtype=_kernels.level_index_dtype(m + 1))
    # row chunks keep the float64 product small at large N
    rows = max(1, (1 << 22) >> lo_bits)
    width = 1 << lo_bits
    for r0 in range(0, u.shape[0], rows):
        block = u[r0:r0 + rows] @ v.T
        index[r0 * width:(r0 + block.shape[0]) * width] = block.ravel()
    return DiagonalEnergy(n, levels, index)


def ising_diagonal(model: IsingModel) -> DiagonalEnergy:
    n = model.num_spins
    check_capacity(n)
    x = np.arange(1 << n)
    spin = [1.0 - 2.0 * ((x >> i) & 1) for i in range(n)]
    e = np.full(x.size, float(model.constant))
    for i, j, jij in model.couplings:
        e += jij * spin[i] * spin[j]
    for i, hi in model.fields:
        e += hi * spin[i]
    return DiagonalEnergy.from_energies(e, tol=ENERGY_TOL)


def sat2_to_ising(instance: SatInstance) -> IsingModel:
    """Expand each 2-literal clause penalty w/4 (1 + a s_i)(1 + b s_j)."""
    const = 0.0
    h = defaultdict(float)
    jmap = defaultdict(float)
    for clause, w in zip(instance.clauses, instance.clause_weights()):
        if len(clause.literals) != 2:
            raise ValueError("sat2_to_ising needs 2-literal clauses")
        (i, ni), (j, nj) = clause.literals
        if i == j:
            raise ValueError(f"clause {clause} repeats variable {i}")
        # a literal is false at s=-1 if plain, at s=+1 if negated
        a = 1.0 if ni else -1.0
        b = 1.0 if nj else -1.0
        const += w / 4
        h[i] += w * a / 4
        h[j] += w * b / 4
        jmap[min(i, j), max(i, j)] += w * a * b / 4
    return IsingModel(
        instance.num_vars,
        couplings=[(i, j, c) for (i, j), c in sorted(jmap.items()) if c != 0.0],
        fields=[(i, c) for i, c in sorted(h.items()) if c != 0.0],
        constant=const,
    )


def ground_states(diag: DiagonalEnergy, tol: float = ENERGY_TOL) -> GroundStateReport:
    """Exhaustive minimum over all basis states."""
    present = np.bincount(diag.index, minlength=diag.levels.size) > 0
    emin = float(diag.levels[present].min())
    close = present & (diag.levels <= emin + tol)
    optima = np.flatnonzero(close[diag.index])
    return GroundStateReport(emin, optima, len(optima) > 1)


# --- instance files ----------------------------------------------------------

def meta_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def format_dimacs(instance: SatInstance) -> str:
    kind = "wcnf" if instance.weighted else "cnf"
    lines = [f"p {kind} {instance.num_vars} {instance.num_clauses}"]
    for k, clause in enumerate(instance.clauses):
        lits = [str(-(v + 1) if n else v + 1) for v, n in clause.literals]
        if instance.weighted:
            lits.insert(0, repr(float(instance.weights[k])))
        lines.append(" ".join(lits + ["0"]))
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> SatInstance:
    header = None
    tokens = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise FormatError("duplicate problem line")
            parts = line.split()
            if len(parts) != 4 or parts[1] not in ("cnf", "wcnf"):
                raise FormatError(f"bad problem line: {line!r}")
            header = (parts[1], int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise FormatError("clause before problem line")
        tokens.extend(line.split())
    if header is None:
        raise FormatError("missing problem line")
    kind, n, m = header
    clauses, weights, cur = [], [], []
    expect_weight = kind == "wcnf"
    for tok in tokens:
        if expect_weight:
            weights.append(float(tok))
            expect_weight = False
            continue
        lit = int(tok)
        if lit == 0:
            clauses.append(tuple((abs(x) - 1, x < 0) for x in cur))
            cur = []
            expect_weight = kind == "wcnf"
            continue
        if abs(lit) > n:
            raise FormatError(f"literal {lit} exceeds {n} variables")
        cur.append(lit)
    if cur:
        raise FormatError("last clause is not terminated by 0")
    if len(clauses) != m:
        raise FormatError(f"header declares {m} clauses, found {len(clauses)}")
    try:
        return SatInstance(n, clauses, weights if kind == "wcnf" else None)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save_instance(path, instance: SatInstance, meta: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(format_dimacs(instance))
    if meta is not None:
        write_meta(path, meta)
    return path


def load_instance(path):
    """Return (instance, meta); meta is {} when no sidecar exists."""
    path = Path(path)
    instance = parse_dimacs(path.read_text())
    mp = meta_path(path)
    meta = json.loads(mp.read_text()) if mp.exists() else {}
    return instance, meta


def write_meta(path, meta: dict) -> None:
    meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def describe_ground_state(diag: DiagonalEnergy) -> dict:
    """Sidecar fields derived from exhaustive enumeration."""
    gs = ground_states(diag)
    return {
        "ground_energy": gs.min_energy,
        "ground_index": int(gs.optima[0]),
        "unique": not gs.degenerate,
    }


def check_same_size(diags) -> int:
    sizes = {d.num_qubits for d in diags}
    if len(sizes) > 1:
        raise DimensionError(f"instances mix qubit counts {sorted(sizes)}")
    return sizes.pop() if sizes else 0
