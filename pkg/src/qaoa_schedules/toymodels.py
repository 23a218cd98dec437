"""Hand-built hard models: the ring/spoke Ising model and the three-subspace model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import IsingModel, ising_diagonal
from .simulator import DEFAULT_TROTTER, TrotterConfig, dense_evolve, run_schedule, squared_overlap

MISSING_FIELD = "missing_field"
REDUCED_FIELDS = "reduced_fields"
FULL_FIELD = "full_field"
VARIANTS = (MISSING_FIELD, REDUCED_FIELDS, FULL_FIELD)


@dataclass(frozen=True)
class RingModelParams:
    K: int
    variant: str = MISSING_FIELD

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("ring needs K >= 2")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")

    @property
    def num_spins(self) -> int:
        return 2 * self.K


def ring_ising(params: RingModelParams) -> IsingModel:
    """Inner ferromagnetic ring of K spins, one outer spin on each, fields of strength 1/4.

    Spins 0..K-1 form the inner ring and spin i+K hangs off spin i. Outer
    spins feel field -1/4. In the default variant inner spins 0..K-2 feel
    +1/4 and spin K-1 none; ``reduced_fields`` spreads the same total inner
    field evenly, ``full_field`` puts +1/4 on every inner spin (degenerate).
    """
    K = params.K
    q = 0.25
    couplings = [(i, (i + 1) % K, -q) for i in range(K)]
    couplings += [(i, i + K, -q) for i in range(K)]
    fields = [(i, -q) for i in range(K, 2 * K)]
    if params.variant == MISSING_FIELD:
        fields += [(i, q) for i in range(K - 1)]
    elif params.variant == REDUCED_FIELDS:
        fields += [(i, q * (K - 1) / K) for i in range(K)]
    else:
        fields += [(i, q) for i in range(K)]
    return IsingModel(2 * K, couplings, fields)


ALL_UP_INDEX = 0


def run_ring(schedule, params: RingModelParams, cfg: TrotterConfig = DEFAULT_TROTTER) -> float:
    """Squared overlap with the all-up ground state after running ``schedule``."""
    diag = ising_diagonal(ring_ising(params))
    return squared_overlap(run_schedule(diag, schedule, cfg), ALL_UP_INDEX)


@dataclass(frozen=True)
class SubspaceModelParams:
    """Abstract space split into blocks of size n1, n2 and 1.

    H_X = a |U><U| + b |u2><u2| where |U> is the uniform state over all
    n1+n2+1 states and |u2> the uniform state over block 2. H_Z is e1, e2,
    e3 on the three blocks; block 3 holds the target. Negative ``a`` makes
    |U> the ground state of H_X; negative ``b`` pulls weight towards block 2.
    """

    n1: int = 100
    n2: int = 50
    a: float = -1.0
    b: float = -1.0
    e1: float = 1.0
    e2: float = 0.5
    e3: float = 0.0

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0 or self.n1 + self.n2 < 1:
            raise ValueError("need n1, n2 >= 0 and n1 + n2 >= 1")
        if not self.e3 < self.e2 <= self.e1:
            raise ValueError("energies must satisfy e3 < e2 <= e1")

    @property
    def dim(self) -> int:
        return self.n1 + self.n2 + 1


def subspace_hamiltonians(params: SubspaceModelParams):
    """(H_X, H_Z, initial state) in the basis of block-uniform states.

    Blocks of size zero are dropped, so the basis has 2 or 3 elements; the
    target block is always last.
    """
    sizes = [s for s in (params.n1, params.n2, 1) if s > 0]
    energies = [e for s, e in zip((params.n1, params.n2, 1), (params.e1, params.e2, params.e3)) if s > 0]
    u = np.sqrt(np.asarray(sizes, dtype=float) / params.dim)
    hx = params.a * np.outer(u, u)
    if params.n2 > 0:
        k = 1 if params.n1 > 0 else 0
        hx[k, k] += params.b
    hz = np.diag(energies).astype(float)
    return hx, hz, u.astype(np.complex128)


def run_subspace(schedule, params: SubspaceModelParams) -> float:
    """Exact evolution in the symmetric sector; returns target-block weight."""
    hx, hz, psi = subspace_hamiltonians(params)
    for tx, tz in zip(schedule.theta_x, schedule.theta_z):
        psi = dense_evolve(tx * hx + tz * hz, psi, 1.0)
    return float(abs(psi[-1]) ** 2)


def subspace_spectrum(params: SubspaceModelParams, s_values) -> tuple:
    """Ground-state gap and ground-state block weights along H_s = (1-s)H_X + sH_Z."""
    hx, hz, _ = subspace_hamiltonians(params)
    gaps, weights = [], []
    for s in s_values:
        w, v = np.linalg.eigh((1 - s) * hx + s * hz)
        gaps.append(w[1] - w[0])
        weights.append(np.abs(v[:, 0]) ** 2)
    return np.asarray(gaps), np.asarray(weights)
