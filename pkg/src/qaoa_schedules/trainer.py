"""Schedule learning: greedy noisy search alternated with Powell's method.

The objective is maximized. Any callable ``schedule -> float`` can be
optimized; :class:`Objective` is the mean ground-state squared overlap over a
training set.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .problems import check_same_size
from .schedules import FreezeMask, Schedule
from .simulator import DEFAULT_TROTTER, TrotterConfig, run_schedule, squared_overlap

GOLD = 1.618033988749895
CGOLD = 0.3819660112501051


class Objective:
    """Mean squared overlap with the ground state over a training set."""

    def __init__(self, training_set, trotter: TrotterConfig = DEFAULT_TROTTER, threads: int = 1):
        self.training_set = list(training_set)
        if not self.training_set:
            raise ValueError("training set is empty")
        check_same_size(d for d, _ in self.training_set)
        self.trotter = trotter
        self.threads = threads

    def overlaps(self, schedule: Schedule) -> list:
        def one(item):
            diag, gs = item
            return squared_overlap(run_schedule(diag, schedule, self.trotter), gs)

        if self.threads > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                return list(pool.map(one, self.training_set))
        return [one(item) for item in self.training_set]

    def __call__(self, schedule: Schedule) -> float:
        # summed in instance order whatever the thread count
        vals = self.overlaps(schedule)
        return float(sum(vals) / len(vals))


def objective_value(schedule: Schedule, obj) -> float:
    return float(obj(schedule))


@dataclass
class OptimizerConfig:
    noisy_evals: int = 150
    adapt_window: int = 50
    accept_hi: int = 25
    accept_lo: int = 10
    step_grow: float = 1.5
    step_shrink: float = 0.5
    initial_step: float = 0.1
    bracket_step: float = 0.1
    powell_tol: float = 1e-4
    max_powell_rounds: int = 50
    outer_tol: float = 1e-4
    max_outer_rounds: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.adapt_window < 1 or self.noisy_evals < self.adapt_window:
            raise ValueError("need noisy_evals >= adapt_window >= 1")
        if not 0 < self.step_shrink < 1 < self.step_grow:
            raise ValueError("need 0 < step_shrink < 1 < step_grow")
        if self.accept_lo > self.accept_hi:
            raise ValueError("accept_lo must not exceed accept_hi")
        if min(self.powell_tol, self.outer_tol, self.initial_step, self.bracket_step) <= 0:
            raise ValueError("tolerances and step sizes must be positive")
        if self.max_outer_rounds < 1 or self.max_powell_rounds < 1:
            raise ValueError("round limits must be >= 1")


@dataclass
class Evaluation:
    index: int
    phase: str
    round: int
    step: float | None
    objective: float
    accepted: bool


@dataclass
class TrainingRun:
    initial: Schedule
    mask: FreezeMask
    config: OptimizerConfig
    trajectory: list = field(default_factory=list)
    final: Schedule | None = None
    initial_objective: float = float("nan")
    final_objective: float = float("nan")
    rounds: int = 0

    def accepted_values(self) -> list:
        return [e.objective for e in self.trajectory if e.accepted]

    def write_log(self, path) -> None:
        """One JSON record per objective evaluation."""
        with open(path, "w") as fh:
            for e in self.trajectory:
                fh.write(json.dumps(asdict(e)) + "\n")


class _Search:
    """Shared state of one optimization: free coordinates, best point, log."""

    def __init__(self, start: Schedule, mask: FreezeMask | None, obj, cfg: OptimizerConfig, trajectory=None):
        mask = mask if mask is not None else FreezeMask.none(start.steps)
        if mask.steps != start.steps:
            raise ValueError("freeze mask length differs from schedule length")
        self.base = start.as_vector()
        self.free = ~mask.as_vector()
        self.label = start.label
        self.obj = obj
        self.cfg = cfg
        self.trajectory = trajectory if trajectory is not None else []
        self.phase = "init"
        self.round = 0
        self.step = cfg.initial_step
        self.best_y = self.base[self.free].copy()
        self.best_f = -np.inf

    def schedule(self, y) -> Schedule:
        v = self.base.copy()
        v[self.free] = y
        return Schedule.from_vector(v, self.label)

    def __call__(self, y) -> float:
        f = float(self.obj(self.schedule(y)))
        accepted = f > self.best_f
        if accepted:
            self.best_f = f
            self.best_y = np.array(y, dtype=float)
        step = self.step if self.phase == "noisy" else None
        self.trajectory.append(Evaluation(len(self.trajectory), self.phase, self.round, step, f, accepted))
        return f

    def evaluate_start(self, start_value=None) -> float:
        if start_value is None:
            return self(self.best_y)
        self.best_f = float(start_value)
        return self.best_f

    # --- noisy greedy search ---------------------------------------------

    def noisy(self, rng: np.random.Generator) -> None:
        cfg = self.cfg
        self.phase = "noisy"
        y, fy = self.best_y.copy(), self.best_f
        accepts = 0
        for trial in range(1, cfg.noisy_evals + 1):
            cand = y + rng.uniform(-self.step, self.step, size=y.size)
            f = self(cand)
            if f > fy:
                y, fy = cand, f
                accepts += 1
            if trial % cfg.adapt_window == 0:
                if accepts >= cfg.accept_hi:
                    self.step *= cfg.step_grow
                elif accepts <= cfg.accept_lo:
                    self.step *= cfg.step_shrink
                accepts = 0

    # --- Powell's direction set -------------------------------------------

    def powell(self) -> None:
        cfg = self.cfg
        self.phase = "powell"
        n = self.best_y.size
        if n == 0:
            return
        g = lambda y: -self(y)  # noqa: E731
        x, fx = self.best_y.copy(), -self.best_f
        dirs = np.eye(n)
        tol = cfg.powell_tol
        for _ in range(cfg.max_powell_rounds):
            x_start, f_start = x.copy(), fx
            big_i, big_drop = 0, 0.0
            for i in range(n):
                f_prev = fx
                x, fx = _line_minimize(g, x, dirs[i], fx, tol, cfg.bracket_step)
                if f_prev - fx > big_drop:
                    big_i, big_drop = i, f_prev - fx
            if 2.0 * (f_start - fx) <= tol * (abs(f_start) + abs(fx)) + 1e-25:
                break
            x_ext = 2.0 * x - x_start
            d = x - x_start
            f_ext = g(x_ext)
            if f_ext < f_start:
                t = 2.0 * (f_start - 2.0 * fx + f_ext) * (f_start - fx - big_drop) ** 2
                t -= big_drop * (f_start - f_ext) ** 2
                if t < 0.0:
                    x, fx = _line_minimize(g, x, d, fx, tol, cfg.bracket_step)
                    dirs[big_i] = dirs[-1]
                    dirs[-1] = d

    def result(self) -> Schedule:
        return self.schedule(self.best_y)


def _line_minimize(g, x, d, fx, tol, step):
    """Minimize g(x + t d) over t; returns (new x, value). fx is g(x)."""
    f1 = lambda t: g(x + t * d)  # noqa: E731
    a, b, c, fa, fb, fc = _bracket(f1, 0.0, step, fx)
    t, ft = _brent(f1, a, b, c, fb, tol)
    if ft < fx:
        return x + t * d, ft
    return x, fx


def _bracket(f, a, b, fa, grow_limit=100.0, max_iter=60):
    """Golden-ratio expansion with parabolic extrapolation until fa > fb < fc.

    Gives up after ``max_iter`` expansions or on a flat stretch, returning the
    last triple, which need not bracket a minimum.
    """
    fb = f(b)
    if fb > fa:
        a, b, fa, fb = b, a, fb, fa
    c = b + GOLD * (b - a)
    fc = f(c)
    for _ in range(max_iter):
        if fb < fc or fa == fb == fc:
            break
        r = (b - a) * (fb - fc)
        q = (b - c) * (fb - fa)
        denom = 2.0 * np.copysign(max(abs(q - r), 1e-20), q - r)
        u = b - ((b - c) * q - (b - a) * r) / denom
        ulim = b + grow_limit * (c - b)
        if (b - u) * (u - c) > 0.0:
            fu = f(u)
            if fu < fc:
                return b, u, c, fb, fu, fc
            if fu > fb:
                return a, b, u, fa, fb, fu
            u = c + GOLD * (c - b)
            fu = f(u)
        elif (c - u) * (u - ulim) > 0.0:
            fu = f(u)
            if fu < fc:
                b, c, u = c, u, u + GOLD * (u - c)
                fb, fc, fu = fc, fu, f(u)
        elif (u - ulim) * (ulim - c) >= 0.0:
            u = ulim
            fu = f(u)
        else:
            u = c + GOLD * (c - b)
            fu = f(u)
        a, b, c = b, c, u
        fa, fb, fc = fb, fc, fu
    return a, b, c, fa, fb, fc


def _brent(f, ax, bx, cx, fbx, tol, max_iter=100):
    """Brent's parabolic/golden-section minimization inside a bracket."""
    a, b = min(ax, cx), max(ax, cx)
    x = w = v = bx
    fx = fw = fv = fbx
    d = e = 0.0
    for _ in range(max_iter):
        xm = 0.5 * (a + b)
        tol1 = tol * abs(x) + 1e-10
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            break
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            etemp = e
            e = d
            if abs(p) >= abs(0.5 * q * etemp) or p <= q * (a - x) or p >= q * (b - x):
                e = (a - x) if x >= xm else (b - x)
                d = CGOLD * e
            else:
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = np.copysign(tol1, xm - x)
        else:
            e = (a - x) if x >= xm else (b - x)
            d = CGOLD * e
        u = x + d if abs(d) >= tol1 else x + np.copysign(tol1, d)
        fu = f(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx


def noisy_search(start: Schedule, mask, obj, cfg: OptimizerConfig, rng=None, start_value=None, trajectory=None) -> Schedule:
    """Greedy random perturbation search using exactly ``cfg.noisy_evals`` trials.

    If ``start_value`` is not given the start is evaluated first, which costs
    one extra objective call.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    s = _Search(start, mask, obj, cfg, trajectory)
    s.evaluate_start(start_value)
    s.noisy(rng)
    return s.result()


def powell_minimize(start: Schedule, mask, obj, cfg: OptimizerConfig, start_value=None, trajectory=None) -> Schedule:
    """Powell's conjugate-direction method on the unfrozen angles (maximizing obj)."""
    s = _Search(start, mask, obj, cfg, trajectory)
    s.evaluate_start(start_value)
    s.powell()
    return s.result()


def train(initial: Schedule, mask, obj, cfg: OptimizerConfig = None) -> TrainingRun:
    """Alternate noisy search and Powell until an outer round stops paying off."""
    cfg = cfg if cfg is not None else OptimizerConfig()
    mask = mask if mask is not None else FreezeMask.none(initial.steps)
    rng = np.random.default_rng(cfg.seed)
    run = TrainingRun(initial, mask, cfg)
    s = _Search(initial, mask, obj, cfg, run.trajectory)
    run.initial_objective = s.evaluate_start()
    for rnd in range(1, cfg.max_outer_rounds + 1):
        before = s.best_f
        s.round = rnd
        s.noisy(rng)
        s.powell()
        run.rounds = rnd
        if s.best_f - before < cfg.outer_tol * max(abs(before), 1e-300):
            break
    run.final = s.result()
    run.final_objective = s.best_f
    return run
