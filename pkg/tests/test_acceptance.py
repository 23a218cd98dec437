"""Acceptance criteria, one test each, with a PASS/FAIL summary line.

The ensemble criteria (3, 4, 5, 9) read the cache built by
``tests/acceptance_data.py`` and compute whatever is missing, which takes
hours on one core. Run that module first to precompute.
"""

import csv

import numpy as np
import pytest

import acceptance_data as data
from oracles import brute_energies, evolve, mixer_matrix
from qaoa_schedules.cli import main
from qaoa_schedules.ensembles import import_instances
from qaoa_schedules.evaluation import bin_by_hardness, by_schedule, compare, mean, ratio_of_averages, average_of_ratios
from qaoa_schedules.problems import SatInstance, build_diagonal, ground_states, ising_diagonal, sat2_to_ising
from qaoa_schedules.schedules import FreezeMask, Schedule
from qaoa_schedules.simulator import (
    DiagonalEnergy,
    StateVector,
    TrotterConfig,
    apply_diagonal_phase,
    apply_mixer,
    apply_step,
    dense_evolve,
)
from qaoa_schedules.toymodels import FULL_FIELD, RingModelParams, ring_ising
from qaoa_schedules.trainer import OptimizerConfig, noisy_search, train

RESULTS = []

TABLE_IV = {
    "154": [0.409, 0.237, 0.157, 0.1, 0.0582, 0.0313, 0.0169, 0.0095, 0.00543],
    "L(10,1,1)": [0.379, 0.208, 0.104, 0.0493, 0.0233, 0.011, 0.00524, 0.00248, 0.00118],
    "L(80,1,1)": [0.811, 0.212, 0.0182, 0.000683, 1.25e-5, 9.37e-6, 1.34e-5, 4.0e-6, 5.42e-7],
}
TABLE_V = {
    "154": [0.422, 0.265, 0.186, 0.121, 0.0704, 0.0379, 0.0204, 0.0115, 0.0066],
    "L(10,1,1)": [0.386, 0.228, 0.122, 0.0594, 0.0283, 0.0135, 0.00647, 0.00309, 0.00147],
    "L(80,1,1)": [0.8, 0.191, 0.0124, 0.000353, 0.000214, 0.000113, 3.98e-5, 6.79e-6, 2.15e-7],
}
MEANS_N20 = {"L(10,1,1)": 0.019, "L(80,1,1)": 0.288, "154": 0.085}


def record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} | {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def within(got, ref, rel=0.05, abs_=0.0005):
    return abs(got - ref) <= max(rel * abs(ref), abs_)


def ring_table(tmp_path, variant):
    out = tmp_path / variant
    code = main(["toy", "ring", "--k", "2..10", "--variant", variant,
                 "--schedules", "154,L(10,1,1),L(80,1,1)", "--out", str(out)])
    assert code == 0
    with open(out / "table.csv", newline="") as fh:
        return {int(r["K"]): r for r in csv.DictReader(fh)}


def compare_table(table, expected):
    worst, misses = 0.0, []
    for label, refs in expected.items():
        for K, ref in zip(range(2, 11), refs):
            got = float(table[K][label])
            worst = max(worst, abs(got - ref) / ref)
            if not within(got, ref):
                misses.append(f"{label}@K={K}: {got:.3g} vs {ref:.3g}")
    return misses, worst


@pytest.mark.slow
def test_criterion_1_ring_table_missing_field(tmp_path):
    misses, worst = compare_table(ring_table(tmp_path, "missing"), TABLE_IV)
    record(1, "ring model, one inner field removed", not misses,
           f"27 values, worst relative deviation {worst:.3f}; misses {misses or 'none'}")


@pytest.mark.slow
def test_criterion_2_ring_table_reduced_fields(tmp_path):
    misses, worst = compare_table(ring_table(tmp_path, "reduced"), TABLE_V)
    record(2, "ring model, reduced uniform inner fields", not misses,
           f"27 values, worst relative deviation {worst:.3f}; misses {misses or 'none'}")


def hard_bin_ratio(table, schedule, baseline, bin_schedule, bins=8):
    binning = bin_by_hardness(table[bin_schedule], bins, bin_schedule)
    return compare(table[schedule], table[baseline], schedule, baseline, binning).per_bin[0]


@pytest.mark.slow
def test_criterion_3_ensemble_means_n20():
    table = by_schedule(data.hard_records("max2sat"))
    means = {k: mean(table[k].values()) for k in MEANS_N20}
    close = all(abs(means[k] - v) <= 0.5 * v for k, v in MEANS_N20.items())
    roa = ratio_of_averages(table["154"], table["L(10,1,1)"])
    aor = average_of_ratios(table["154"], table["L(10,1,1)"]).value
    ok = close and roa >= 3.0 and aor >= 3.5
    shown = ", ".join(f"{k}={v:.3g}" for k, v in means.items())
    record(3, "hard MAX-2-SAT N=20 ensemble", ok,
           f"{len(table['154'])} hard instances; means {shown}; ratio of averages {roa:.3g}; "
           f"average of ratios {aor:.3g}")


@pytest.mark.slow
def test_criterion_4_hardest_bin_order_2sat():
    table = by_schedule(data.hard_records("max2sat"))
    r154 = hard_bin_ratio(table, "154", "L(10,1,1)", "L(80,1,1)")
    r80 = hard_bin_ratio(table, "L(80,1,1)", "L(10,1,1)", "L(80,1,1)")
    record(4, "hardest bin by L(80,1,1), MAX-2-SAT", r154 > r80,
           f"ratio vs L(10,1,1): 154 {r154:.3g}, L(80,1,1) {r80:.3g}")


@pytest.mark.slow
def test_criterion_5_hardest_bin_order_3sat():
    table = by_schedule(data.hard_records("max3sat"))
    r = {s: hard_bin_ratio(table, s, "L(10,1,1)", "L(80,1,1)") for s in ("154", "157", "L(80,1,1)")}
    ok = r["154"] > r["L(80,1,1)"] and r["157"] > r["L(80,1,1)"]
    record(5, "hardest bin by L(80,1,1), MAX-3-SAT", ok,
           "ratio vs L(10,1,1): " + ", ".join(f"{k} {v:.3g}" for k, v in r.items()))


def test_criterion_6_oracle_equivalence():
    rng = np.random.default_rng(6)
    amp_err, rates, norm_err = 0.0, [], 0.0
    for n in (1, 2, 3):
        for _ in range(5):
            e = rng.integers(0, 4, 2**n).astype(float)
            diag = DiagonalEnergy.from_energies(e)
            v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
            v /= np.linalg.norm(v)
            tx, tz = rng.uniform(-2, 2, 2)
            got = apply_mixer(StateVector.from_amplitudes(v), tx).amplitudes
            amp_err = max(amp_err, np.abs(got - evolve(mixer_matrix(n), v, tx)).max())
            got = apply_diagonal_phase(StateVector.from_amplitudes(v), diag, tz).amplitudes
            amp_err = max(amp_err, np.abs(got - np.exp(1j * tz * e) * v).max())
            exact = dense_evolve(tx * mixer_matrix(n) + np.diag(tz * e), v, 1.0)
            errs = [np.linalg.norm(apply_step(StateVector.from_amplitudes(v), diag, tx, tz,
                                              TrotterConfig(k)).amplitudes - exact) for k in (8, 16)]
            if errs[1] > 1e-12:
                rates.append(errs[0] / errs[1])
    state = StateVector.from_amplitudes(np.full(8, 8**-0.5, complex))
    diag = DiagonalEnergy.from_energies(rng.normal(size=8))
    for tx, tz in rng.uniform(-3, 3, (5000, 2)):
        apply_mixer(state, tx)
        apply_diagonal_phase(state, diag, tz)
    norm_err = abs(np.linalg.norm(state.amplitudes) - 1.0)
    ok = amp_err <= 1e-10 and all(2.0 <= r <= 6.0 for r in rates) and norm_err <= 1e-10
    record(6, "simulator against dense exponentials", ok,
           f"max amplitude error {amp_err:.2e}; error ratios {min(rates):.2f}..{max(rates):.2f}; "
           f"norm drift {norm_err:.1e} over 10^4 operations")


def test_criterion_7_encoding_equivalence():
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(2, 13))
        clauses = []
        for _ in range(int(rng.integers(0, 3 * n))):
            i, j = rng.choice(n, 2, replace=False)
            clauses.append(((int(i), bool(rng.integers(2))), (int(j), bool(rng.integers(2)))))
        sat = SatInstance(n, clauses)
        direct = build_diagonal(sat).energies
        if not np.array_equal(ising_diagonal(sat2_to_ising(sat)).energies, direct):
            mismatches += 1
        if n <= 8 and not np.array_equal(direct, brute_energies(clauses, n)):
            mismatches += 1
    ring_ok = True
    for K in range(2, 9):
        e = ising_diagonal(ring_ising(RingModelParams(K))).energies
        gs = ground_states(ising_diagonal(ring_ising(RingModelParams(K))))
        cluster = np.arange(4**K)[(np.arange(4**K) & (2**K - 1)) == 2**K - 1]
        full = ground_states(ising_diagonal(ring_ising(RingModelParams(K, FULL_FIELD))))
        ring_ok &= (not gs.degenerate and gs.ground_index == 0
                    and bool(np.all(e[cluster] - e.min() == 0.5))
                    and len(full.optima) == 2**K + 1)
    record(7, "clause and Ising encodings; ring spectrum", mismatches == 0 and ring_ok,
           f"{mismatches} diagonal mismatches over 100 instances; ring K=2..8 structure {'ok' if ring_ok else 'wrong'}")


def test_criterion_8_trainer_properties():
    target = np.array([0.7, -0.4, 1.3, 0.05, 0.9, -1.1])
    w = np.array([1, 2, 3, 0.5, 1, 4])

    def f(s):
        return -float(np.sum(w * (s.as_vector() - target) ** 2))

    run = train(Schedule(np.zeros(3), np.zeros(3)), None, f, OptimizerConfig(seed=4, outer_tol=1e-10))
    optimum_gap = abs(run.final_objective)
    props = True
    calls = []
    for seed in range(5):
        mask = FreezeMask([seed % 2 == 0, False, True], [False, seed % 3 == 0, False])
        init = Schedule([0.1, 0.2, 0.3], [0.4, 0.5, 0.6])
        cfg = OptimizerConfig(seed=seed, max_outer_rounds=2, max_powell_rounds=2)
        a, b = train(init, mask, f, cfg), train(init, mask, f, cfg)
        acc = a.accepted_values()
        fv = mask.as_vector()
        props &= all(x <= y for x, y in zip(acc, acc[1:]))
        props &= bool(np.array_equal(a.final.as_vector()[fv], init.as_vector()[fv]))
        props &= [(e.objective, e.step) for e in a.trajectory] == [(e.objective, e.step) for e in b.trajectory]
        counter = []
        noisy_search(init, mask, lambda s: counter.append(1) or f(s), cfg, np.random.default_rng(seed),
                     start_value=f(init))
        calls.append(len(counter))
    ok = optimum_gap < 1e-4 and props and set(calls) == {150}
    record(8, "optimizer properties", ok,
           f"distance to optimum {optimum_gap:.1e}; monotone, freeze and reproducibility "
           f"{'hold' if props else 'violated'}; noisy calls per phase {sorted(set(calls))}")


@pytest.mark.slow
def test_criterion_9_training_improvement():
    table = by_schedule(data.training_records())
    roa = ratio_of_averages(table["trained11"], table["L(10,1,1)"])
    start = ratio_of_averages(table[next(k for k in table if k not in ("trained11", "L(10,1,1)"))],
                              table["L(10,1,1)"])
    record(9, "trained from key 11 on 13 hard instances", roa >= 2.0,
           f"ratio of averages vs L(10,1,1) on {len(table['trained11'])} hard instances: "
           f"{roa:.3g} (initial schedule {start:.3g})")


def test_criterion_10_external_instances_import(tmp_path):
    (tmp_path / "a.cnf").write_text("p cnf 3 5\n1 2 0\n-1 3 0\n-2 -3 0\n1 -3 0\n1 -2 0\n")
    (tmp_path / "b.cnf").write_text("p cnf 2 1\n1 2 0\n")
    out = tmp_path / "imported"
    code = main(["gen", "--import", str(tmp_path / "a.cnf"), str(tmp_path / "b.cnf"), "--out", str(out)])
    got = {i.id: i for i in import_instances([tmp_path / "a.cnf", tmp_path / "b.cnf"])}
    oracle = brute_energies([c.literals for c in got["a"].sat.clauses], 3)
    ok = (code == 0 and got["a"].meta["unique"] and got["a"].ground_index == int(np.argmin(oracle))
          and not got["b"].meta["unique"])
    record(10, "externally supplied instances", ok,
           "published per-instance values need unpublished instance files; "
           "those comparisons are declared non-reproducible and the DIMACS import path is checked instead")
