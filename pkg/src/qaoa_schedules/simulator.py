"""State-vector simulation of the modified (summed-exponent) QAOA ansatz.

Basis index bit ``i`` set to 0 means sigma^z_i = +1 (variable ``i`` true).
All operations on a :class:`StateVector` mutate it in place and also return
it, so calls can be chained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CapacityError, DimensionError

MAX_QUBITS = 30
DENSE_MAX_DIM = 2**12


def check_capacity(num_qubits: int) -> None:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise CapacityError(
            f"num_qubits={num_qubits} outside supported range 1..{MAX_QUBITS}"
        )


def set_max_qubits(limit: int) -> None:
    """Change the qubit cap used by :func:`check_capacity`."""
    global MAX_QUBITS
    if limit < 1:
        raise CapacityError("qubit limit must be positive")
    MAX_QUBITS = int(limit)


class StateVector:
    """Amplitudes over 2**num_qubits basis states, stored as re/im arrays."""

    def __init__(self, num_qubits: int, re: np.ndarray, im: np.ndarray):
        if re.shape != (1 << num_qubits,) or im.shape != re.shape:
            raise DimensionError("amplitude arrays must have length 2**num_qubits")
        self.num_qubits = num_qubits
        self.re = re
        self.im = im

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        n = int(round(np.log2(amps.size)))
        if amps.ndim != 1 or amps.size != 1 << n:
            raise DimensionError("length must be a power of two")
        check_capacity(n)
        return cls(n, np.ascontiguousarray(amps.real), np.ascontiguousarray(amps.imag))

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "StateVector":
        check_capacity(num_qubits)
        re = np.zeros(1 << num_qubits)
        re[index] = 1.0
        return cls(num_qubits, re, np.zeros_like(re))

    @property
    def dim(self) -> int:
        return self.re.shape[0]

    @property
    def amplitudes(self) -> np.ndarray:
        return self.re + 1j * self.im

    def norm_squared(self) -> float:
        return float(_kernels.norm_squared(self.re, self.im))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.re.copy(), self.im.copy())

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits})"


class DiagonalEnergy:
    """Energy of H_Z on every basis state.

    Stored as a small table of distinct energy ``levels`` plus a per-state
    integer ``index`` into it, so a diagonal phase needs one sin/cos per level
    rather than per amplitude, and an N=28 diagonal fits in 256 MiB.
    """

    def __init__(self, num_qubits: int, levels: np.ndarray, index: np.ndarray):
        if index.shape != (1 << num_qubits,):
            raise DimensionError("index array must have length 2**num_qubits")
        self.num_qubits = num_qubits
        self.levels = np.asarray(levels, dtype=np.float64)
        self.index = index

    @classmethod
    def from_energies(cls, energies, tol: float = 1e-9) -> "DiagonalEnergy":
        """Build from a dense energy array.

        Integer-valued energies map exactly; real energies closer than
        ``tol`` are merged into one level.
        """
        e = np.asarray(energies, dtype=np.float64)
        n = int(round(np.log2(e.size))) if e.size else -1
        if e.ndim != 1 or n < 0 or e.size != 1 << n:
            raise DimensionError("energy array length must be a power of two")
        check_capacity(n)
        lo, hi = float(e.min()), float(e.max())
        if np.all(e == np.rint(e)) and hi - lo < 2**16:
            levels = np.arange(lo, hi + 1.0)
            dtype = _kernels.level_index_dtype(levels.size)
            return cls(n, levels, (e - lo).astype(dtype))
        uniq = np.unique(e)
        # start a new level wherever the gap to the previous value exceeds tol
        starts = np.concatenate(([True], np.diff(uniq) > tol))
        reps = uniq[starts]
        cluster = np.cumsum(starts) - 1
        dtype = _kernels.level_index_dtype(reps.size)
        index = cluster[np.searchsorted(uniq, e)].astype(dtype)
        return cls(n, reps, index)

    @classmethod
    def zeros(cls, num_qubits: int) -> "DiagonalEnergy":
        check_capacity(num_qubits)
        return cls(num_qubits, np.zeros(1), np.zeros(1 << num_qubits, dtype=np.uint8))

    @property
    def energies(self) -> np.ndarray:
        return self.levels[self.index]

    def __len__(self):
        return self.index.shape[0]


@dataclass(frozen=True)
class TrotterConfig:
    """How each exp[i(tx*H_X + tz*H_Z)] factor is realized.

    ``exact=True`` swaps in dense matrix exponentials (N <= 12 only).
    """

    substeps: int = 4
    exact: bool = False

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


DEFAULT_TROTTER = TrotterConfig()


def init_plus_state(num_qubits: int) -> StateVector:
    """Uniform superposition, the zero-energy ground state of H_X."""
    check_capacity(num_qubits)
    dim = 1 << num_qubits
    re = np.full(dim, 2.0 ** (-num_qubits / 2))
    return StateVector(num_qubits, re, np.zeros(dim))


def _check_match(state: StateVector, diag: DiagonalEnergy) -> None:
    if state.num_qubits != diag.num_qubits:
        raise DimensionError(
            f"state has {state.num_qubits} qubits, diagonal has {diag.num_qubits}"
        )


def apply_diagonal_phase(state: StateVector, diag: DiagonalEnergy, theta: float) -> StateVector:
    """psi[x] <- exp(i*theta*E[x]) * psi[x]."""
    _check_match(state, diag)
    arg = theta * diag.levels
    _kernels.phase_by_level(state.re, state.im, diag.index, np.cos(arg), np.sin(arg))
    return state


def apply_mixer(state: StateVector, theta: float) -> StateVector:
    """Apply exp(i*theta*H_X) with H_X = sum_i (1 - sigma^x_i)/2."""
    # per qubit: |+> keeps phase 1, |-> gets exp(i*theta)
    e = np.exp(1j * theta)
    _kernels.apply_uniform_gate(state.re, state.im, state.num_qubits, (1 + e) / 2, (1 - e) / 2)
    return state


def apply_step(
    state: StateVector,
    diag: DiagonalEnergy,
    theta_x: float,
    theta_z: float,
    cfg: TrotterConfig = DEFAULT_TROTTER,
) -> StateVector:
    """One factor exp[i(theta_x*H_X + theta_z*H_Z)].

    Symmetric split (Z/2n, X/n, Z/2n)^n with the touching interior half-Z
    phases merged into single Z/n phases.
    """
    _check_match(state, diag)
    if cfg.exact:
        return _apply_step_exact(state, diag, theta_x, theta_z)
    n = cfg.substeps
    half = theta_z / (2 * n)
    apply_diagonal_phase(state, diag, half)
    for k in range(n):
        apply_mixer(state, theta_x / n)
        apply_diagonal_phase(state, diag, half if k == n - 1 else 2 * half)
    return state


def run_schedule(diag: DiagonalEnergy, schedule, cfg: TrotterConfig = DEFAULT_TROTTER) -> StateVector:
    """Evolve the all-plus state through every schedule step, j=1 first."""
    tx = np.asarray(schedule.theta_x, dtype=float)
    tz = np.asarray(schedule.theta_z, dtype=float)
    if tx.size < 1 or tx.shape != tz.shape:
        raise DimensionError("schedule needs p >= 1 paired angles")
    state = init_plus_state(diag.num_qubits)
    for x, z in zip(tx, tz):
        apply_step(state, diag, float(x), float(z), cfg)
    return state


def squared_overlap(state: StateVector, basis_index: int) -> float:
    if not 0 <= basis_index < state.dim:
        raise IndexError(f"basis index {basis_index} out of range for {state.num_qubits} qubits")
    return float(state.re[basis_index] ** 2 + state.im[basis_index] ** 2)


# --- dense reference backend -------------------------------------------------

def dense_evolve(hamiltonian, state, t: float) -> np.ndarray:
    """exp(i*t*H) @ v by eigendecomposition of a Hermitian H."""
    h = np.asarray(hamiltonian, dtype=np.complex128)
    v = np.asarray(state, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or v.shape != (h.shape[0],):
        raise DimensionError("hamiltonian must be square and match the vector length")
    if h.shape[0] > DENSE_MAX_DIM:
        raise CapacityError(f"dense dimension {h.shape[0]} exceeds {DENSE_MAX_DIM}")
    if not np.allclose(h, h.conj().T, rtol=0.0, atol=1e-10):
        raise ValueError("hamiltonian is not Hermitian")
    w, u = np.linalg.eigh(h)
    return u @ (np.exp(1j * t * w) * (u.conj().T @ v))


def dense_mixer_hamiltonian(num_qubits: int) -> np.ndarray:
    """H_X = sum_i (1 - sigma^x_i)/2 as a dense real matrix."""
    dim = 1 << num_qubits
    h = np.zeros((dim, dim))
    idx = np.arange(dim)
    for q in range(num_qubits):
        h[idx, idx] += 0.5
        h[idx, idx ^ (1 << q)] -= 0.5
    return h


def _apply_step_exact(state, diag, theta_x, theta_z):
    if state.dim > DENSE_MAX_DIM:
        raise CapacityError("exact backend limited to 12 qubits")
    h = theta_x * dense_mixer_hamiltonian(state.num_qubits) + np.diag(theta_z * diag.energies)
    out = dense_evolve(h, state.amplitudes, 1.0)
    state.re[:] = out.real
    state.im[:] = out.imag
    return state
