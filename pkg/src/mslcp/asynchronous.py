"""Asynchronous relaxed nonstationary multisplitting.

Two execution models share the synchronous module's inner loops and
combination arithmetic:

* ``solve_async_sim`` replays asynchrony deterministically in one thread: a
  bounded-staleness schedule decides which past iterate each processor reads
  (s_i(k), at most ``staleness_bound`` steps old) and which components
  update at step k (the set J(k)); two runs with equal inputs produce
  bit-identical iterate sequences.
* ``solve_async_threaded`` runs one OS thread per processor against a shared
  published iterate; reads may be stale but always see a complete published
  version.  Run-to-run iterate sequences are not reproducible, the limit is.

Staleness 0 with the all-components policy makes the simulator coincide,
bit for bit, with the synchronous solver.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .sparse import as_vector
from .sublcp import LcpProblem, natural_residual
from .splitting import MultisplittingSet
from .sync import (IterationReport, SolverConfig, _accumulate, _blend,
                   _omega_bound, _run_processor_inner, schedule_inner_count)

READ_RULES = ("latest", "stalest", "uniform")


@dataclass(frozen=True)
class AllEveryStep:
    """Every component updates at every step."""

    def fairness_window(self, m: int) -> int:
        return 1

    def update_set(self, k: int, m: int, rng) -> list:
        return list(range(m))


@dataclass(frozen=True)
class RoundRobin:
    """One component at a time, holding each for ``period`` consecutive steps."""

    period: int = 1

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("round-robin period must be at least 1")

    def fairness_window(self, m: int) -> int:
        return m * self.period

    def update_set(self, k: int, m: int, rng) -> list:
        return [(k // self.period) % m]


@dataclass(frozen=True)
class RandomFair:
    """Random nonempty component subsets, with a forced full update every
    ``full_round_every`` steps so no component starves."""

    seed: int = 0
    full_round_every: int = 8

    def __post_init__(self):
        if self.full_round_every < 1:
            raise ValueError("full_round_every must be at least 1")

    def fairness_window(self, m: int) -> int:
        return self.full_round_every

    def update_set(self, k: int, m: int, rng) -> list:
        if k % self.full_round_every == 0:
            return list(range(m))
        mask = int(rng.integers(1, 1 << m))
        return [l for l in range(m) if (mask >> l) & 1]


@dataclass(frozen=True)
class AsyncSchedule:
    """Bounded-staleness read/update plan for the simulator.

    ``staleness_bound`` d caps how old a read may be: s_i(k) always lies in
    [max(0, k - d), k].  ``reads`` picks within that window: ``latest`` (k),
    ``stalest`` (k - d), or ``uniform`` (seeded draw per processor).  The
    update policy generates J(k); all three built-ins hit every component
    within a bounded window, so every component updates infinitely often.
    """

    staleness_bound: int = 0
    policy: object = field(default_factory=AllEveryStep)
    reads: str = "stalest"
    reads_seed: int = 0

    def __post_init__(self):
        if self.staleness_bound < 0:
            raise ValueError("staleness bound must be nonnegative")
        if self.reads not in READ_RULES:
            raise ValueError(f"unknown read rule {self.reads!r}")


@dataclass
class AsyncState:
    """Simulator state: per-processor iterates plus the ring of recent steps.

    ``ring[j]`` is the tuple of stream vectors at global step
    ``global_step - len(ring) + 1 + j``; its depth is staleness_bound + 1 so
    any admissible stale read is available.
    """

    local_iterates: list
    global_step: int
    ring: deque

    def read(self, step: int, processor: int) -> np.ndarray:
        offset = step - (self.global_step - (len(self.ring) - 1))
        if not 0 <= offset < len(self.ring):
            raise ValueError(f"step {step} is outside the retained window")
        return self.ring[offset][processor]


def _pick_reads(sched: AsyncSchedule, k: int, m: int, rng) -> list:
    lo = max(0, k - sched.staleness_bound)
    if sched.reads == "latest":
        return [k] * m
    if sched.reads == "stalest":
        return [lo] * m
    return [int(rng.integers(lo, k + 1)) for _ in range(m)]


def solve_async_sim(prob: LcpProblem, ms: MultisplittingSet, cfg: SolverConfig,
                    sched: AsyncSchedule, x0: np.ndarray | None = None,
                    on_step=None):
    """Deterministic single-threaded replay of the asynchronous iteration.

    At step k every processor i reads its own stream at step s_i(k), runs its
    scheduled subproblem solves, and the components in J(k) blend the
    weighted combination into their stream; the rest copy forward.  Stops
    once every update over a trailing window of fairness_window + d steps
    moved less than ``cfg.outer_tol`` (the window covers one full fairness
    round of every stream, and the extra d steps ensure the quiet stretch
    cannot be an artifact of reads older than the window), or at
    ``cfg.max_outer``.

    Returns (x, IterationReport) where x is the stream with the smallest
    natural residual (ties to the lowest index).
    """
    if ms.n != prob.n:
        raise ValueError("multisplitting size does not match the problem")
    start = time.perf_counter()
    m = ms.m
    bound = _omega_bound(prob, ms)
    report = IterationReport(omega_bound=bound,
                             omega_in_range=0.0 < cfg.omega < bound)
    if cfg.record_history:
        report.read_steps = []
        report.update_sets = []

    x_init = np.zeros(prob.n) if x0 is None \
        else as_vector(x0, prob.n, name="x0").copy()
    x_init.setflags(write=False)
    state = AsyncState(local_iterates=[x_init] * m, global_step=0,
                       ring=deque([tuple([x_init] * m)],
                                  maxlen=sched.staleness_bound + 1))
    policy_rng = np.random.default_rng(getattr(sched.policy, "seed", 0))
    reads_rng = np.random.default_rng(sched.reads_seed)
    resolved = [schedule_inner_count(cfg.schedule, i, ms) for i in range(m)]
    window = sched.policy.fairness_window(m) + sched.staleness_bound
    recent_changes = deque(maxlen=window)
    ys = [None] * m

    for k in range(cfg.max_outer):
        reads = _pick_reads(sched, k, m, reads_rng)
        counts = [0] * m
        for i in range(m):
            y0 = state.read(reads[i], i)
            try:
                ys[i], counts[i] = _run_processor_inner(
                    prob, ms.splittings[i], y0, resolved[i], cfg.sub_iter_tol,
                    cfg.sub_max_iters)
            except ConvergenceError as exc:
                raise ConvergenceError(
                    f"subproblem solve failed at step {k}, processor {i}: "
                    f"{exc}") from exc
        acc = _accumulate(ys, ms.weighting)
        updated = sched.policy.update_set(k, m, policy_rng)
        step_delta = 0.0
        for l in updated:
            new_l = _blend(acc, cfg.omega, state.local_iterates[l])
            change = float(np.max(np.abs(new_l - state.local_iterates[l]))) \
                if prob.n else 0.0
            new_l.setflags(write=False)
            state.local_iterates[l] = new_l
            step_delta = max(step_delta, change)
        recent_changes.append(step_delta)
        state.global_step = k + 1
        state.ring.append(tuple(state.local_iterates))
        report.outer_iterations = k + 1
        report.total_inner_iterations += sum(counts)
        if cfg.record_history:
            report.update_norms.append(step_delta)
            report.natural_residuals.append(
                natural_residual(prob, state.local_iterates[min(updated)]))
            report.inner_counts.append(list(counts))
            report.read_steps.append(list(reads))
            report.update_sets.append(sorted(updated))
        if on_step is not None:
            on_step(k, tuple(state.local_iterates))
        if len(recent_changes) == window and max(recent_changes) < cfg.outer_tol:
            report.converged = True
            break

    residuals = [natural_residual(prob, xl) for xl in state.local_iterates]
    best = int(np.argmin(residuals))
    report.final_residual = residuals[best]
    report.wall_time_seconds = time.perf_counter() - start
    return state.local_iterates[best], report


class _SharedIterate:
    """Lock-guarded published iterate; readers take the current reference,
    writers publish a fresh immutable array, so a read never sees a torn
    vector."""

    def __init__(self, x: np.ndarray):
        x = x.copy()
        x.setflags(write=False)
        self.x = x
        self.lock = threading.Lock()


def solve_async_threaded(prob: LcpProblem, ms: MultisplittingSet,
                         cfg: SolverConfig, workers: int,
                         x0: np.ndarray | None = None):
    """Genuinely concurrent asynchronous solve with one thread per processor.

    Each worker loops: snapshot the shared iterate (possibly stale), run its
    inner solves, atomically publish its weighted block.  Requires the
    indicator weighting (block ownership is what makes publication local)
    and ``workers == m``.  A monitor declares convergence when no worker's
    last sweep moved its block by ``cfg.outer_tol`` and the shared iterate's
    natural residual is below ``cfg.outer_tol * (1 + ||f||_inf)``; it gives
    up after ``cfg.max_outer * m`` total publications.
    """
    if workers != ms.m:
        raise ValueError("workers must equal the number of splittings")
    if not ms.weighting.is_indicator:
        raise ValueError("threaded execution requires an indicator weighting "
                         "(each worker must own a block to publish)")
    if ms.n != prob.n:
        raise ValueError("multisplitting size does not match the problem")
    start = time.perf_counter()
    m = ms.m
    bound = _omega_bound(prob, ms)
    report = IterationReport(omega_bound=bound,
                             omega_in_range=0.0 < cfg.omega < bound)
    owners = ms.weighting.indicator_owners
    resolved = [schedule_inner_count(cfg.schedule, i, ms) for i in range(m)]
    cell = _SharedIterate(np.zeros(prob.n) if x0 is None else
                          as_vector(x0, prob.n, name="x0"))
    stop = threading.Event()
    last_change = np.full(m, np.inf)
    sweeps = np.zeros(m, dtype=np.int64)
    inner_total = np.zeros(m, dtype=np.int64)
    failures: list = []
    history_lock = threading.Lock()

    def worker(i: int):
        idx = owners[i]
        split = ms.splittings[i]
        try:
            while not stop.is_set():
                snap = cell.x
                y, count = _run_processor_inner(prob, split, snap,
                                                resolved[i], cfg.sub_iter_tol,
                                                cfg.sub_max_iters)
                with cell.lock:
                    cur = cell.x
                    new = cur.copy()
                    if cfg.omega == 1.0:
                        new[idx] = y[idx]
                    else:
                        new[idx] = cfg.omega * y[idx] + (1.0 - cfg.omega) * cur[idx]
                    change = float(np.max(np.abs(new[idx] - cur[idx])))
                    new.setflags(write=False)
                    cell.x = new
                    last_change[i] = change
                    sweeps[i] += 1
                    inner_total[i] += count
                    if cfg.record_history:
                        with history_lock:
                            report.update_norms.append(change)
        except Exception as exc:  # surfaced by the monitor with context
            failures.append((i, exc))
            stop.set()

    threads = [threading.Thread(target=worker, args=(i,), daemon=True)
               for i in range(m)]
    for t in threads:
        t.start()

    scale = 1.0 + (float(np.max(np.abs(prob.f))) if prob.n else 0.0)
    budget = cfg.max_outer * m
    converged = False
    while True:
        time.sleep(0.0002)
        if failures:
            break
        if np.all(sweeps >= 1) and bool(np.all(last_change < cfg.outer_tol)):
            if natural_residual(prob, cell.x) < cfg.outer_tol * scale:
                converged = True
                break
        if int(sweeps.sum()) >= budget:
            break
    stop.set()
    for t in threads:
        t.join()
    if failures:
        i, exc = failures[0]
        raise RuntimeError(f"async worker for processor {i} failed: {exc}") from exc

    report.converged = converged
    report.outer_iterations = int(sweeps.sum())
    report.total_inner_iterations = int(inner_total.sum())
    report.final_residual = natural_residual(prob, cell.x)
    report.wall_time_seconds = time.perf_counter() - start
    return cell.x, report
