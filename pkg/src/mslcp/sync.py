"""Synchronous relaxed nonstationary multisplitting iteration.

One outer step: every processor i starts from the current iterate, performs
its scheduled number of subproblem solves (refreshing the forcing vector
with its newest local iterate each time), and the weighted combination

    x_next = omega * sum_i E_i y_i + (1 - omega) * x

closes the step.  With indicator weights the combination only reads block i
of processor i's result, which is implemented as masked accumulation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .hmatrix import classify
from .splitting import MultisplittingSet, min_inner_count
from .sublcp import LcpProblem, natural_residual, solve_sub_lcp
from .sparse import as_vector, spmv

SCHEDULE_KINDS = ("fixed", "adaptive", "inner_tolerance")


@dataclass(frozen=True)
class InnerSchedule:
    """How many subproblem solves each processor performs per outer step.

    * ``fixed``: exactly ``q`` solves.
    * ``adaptive``: the smallest count s with ||(<M_i>^-1 |N_i|)^s||_inf <= eta,
      floored at ``min_count``; computed once per processor and cached.
    * ``inner_tolerance``: keep solving until the local iterate's
      complementarity gap |y . (A y - f)| falls below ``theta`` (the gap is
      the subproblem measure with the forcing vector refreshed from y
      itself), or ``max_count`` is hit.  At least ``min_count`` solves run.
    """

    kind: str
    q: int | None = None
    eta: float | None = None
    theta: float | None = None
    min_count: int = 1
    max_count: int = 100000

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.min_count < 1 or self.max_count < self.min_count:
            raise ValueError("need 1 <= min_count <= max_count")
        if self.kind == "fixed" and (self.q is None or self.q < 1):
            raise ValueError("fixed schedule needs q >= 1")
        if self.kind == "adaptive" and not (self.eta is not None and 0.0 < self.eta < 1.0):
            raise ValueError("adaptive schedule needs 0 < eta < 1")
        if self.kind == "inner_tolerance" and (self.theta is None or self.theta <= 0.0):
            raise ValueError("inner_tolerance schedule needs theta > 0")

    @staticmethod
    def fixed(q: int, **kw) -> "InnerSchedule":
        return InnerSchedule("fixed", q=q, **kw)

    @staticmethod
    def adaptive(eta: float, **kw) -> "InnerSchedule":
        return InnerSchedule("adaptive", eta=eta, **kw)

    @staticmethod
    def inner_tolerance(theta: float, **kw) -> "InnerSchedule":
        return InnerSchedule("inner_tolerance", theta=theta, **kw)

    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{self.q}"
        if self.kind == "adaptive":
            return f"adaptive:{self.eta:g}"
        return f"innertol:{self.theta:g}"


@dataclass(frozen=True)
class SolverConfig:
    """Outer-iteration controls shared by the solvers."""

    omega: float = 1.0
    schedule: InnerSchedule = field(default_factory=lambda: InnerSchedule.fixed(1))
    outer_tol: float = 1e-6
    max_outer: int = 200000
    record_history: bool = False
    sub_iter_tol: float = 1e-12
    sub_max_iters: int = 200000

    def __post_init__(self):
        if self.omega <= 0.0:
            raise ValueError("relaxation parameter must be positive")
        if self.outer_tol <= 0.0:
            raise ValueError("outer tolerance must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")


@dataclass
class IterationReport:
    """Per-run outcome and, when requested, per-step history.

    ``omega_bound`` is 2 / (1 + gamma) for the estimated Jacobi radius gamma
    of the problem matrix; ``omega_in_range`` records whether the configured
    relaxation lies inside (0, omega_bound), the range the convergence
    theory covers.  History lists are filled only when ``record_history``.
    """

    outer_iterations: int = 0
    converged: bool = False
    final_residual: float = float("nan")
    total_inner_iterations: int = 0
    omega_bound: float = float("nan")
    omega_in_range: bool = True
    wall_time_seconds: float = 0.0
    update_norms: list = field(default_factory=list)
    natural_residuals: list = field(default_factory=list)
    inner_counts: list = field(default_factory=list)
    read_steps: list | None = None
    update_sets: list | None = None


def schedule_inner_count(schedule: InnerSchedule, splitting_index: int,
                         ms: MultisplittingSet, k: int = 0):
    """Resolve the inner-solve count for one processor at one outer step.

    Returns an int for ``fixed``/``adaptive`` (the adaptive count is cached
    on the multisplitting set), or a stop predicate ``(count, gap) -> bool``
    for ``inner_tolerance``.
    """
    if schedule.kind == "fixed":
        return schedule.q
    if schedule.kind == "adaptive":
        cache = ms._caches.setdefault("adaptive_counts", {})
        key = (splitting_index, schedule.eta, schedule.min_count, schedule.max_count)
        if key not in cache:
            s = min_inner_count(ms.splittings[splitting_index], schedule.eta,
                                max_s=schedule.max_count,
                                operator=ms.contraction_operator(splitting_index))
            cache[key] = max(schedule.min_count, s)
        return cache[key]

    theta, lo, hi = schedule.theta, schedule.min_count, schedule.max_count

    def stop(count: int, gap: float) -> bool:
        return count >= lo and (gap < theta or count >= hi)

    return stop


def _run_processor_inner(prob: LcpProblem, splitting, y0: np.ndarray,
                         resolved, sub_iter_tol: float,
                         sub_max_iters: int = 200000):
    """Run one processor's inner loop from y0; returns (y, solve count).

    ``resolved`` is either an int count or a stop predicate from
    ``schedule_inner_count``.  Each solve refreshes the forcing vector from
    the newest local iterate: F = f + N y.
    """
    y = y0
    count = 0
    if isinstance(resolved, int):
        for _ in range(resolved):
            f_vec = prob.f + spmv(splitting.N, y)
            y = solve_sub_lcp(splitting.M, splitting.structure, f_vec,
                              iter_tol=sub_iter_tol, max_iters=sub_max_iters)
            count += 1
        return y, count
    while True:
        f_vec = prob.f + spmv(splitting.N, y)
        y = solve_sub_lcp(splitting.M, splitting.structure, f_vec,
                          iter_tol=sub_iter_tol, max_iters=sub_max_iters)
        count += 1
        gap = abs(float(y @ (spmv(prob.A, y) - prob.f)))
        if resolved(count, gap):
            return y, count


def _accumulate(ys, weighting) -> np.ndarray:
    """sum_i E_i y_i with a fixed accumulation order over i, so serial and
    concurrent inner loops produce identical results.  Indicator weightings
    copy block i from y_i (masked accumulation)."""
    owners = weighting.indicator_owners
    if owners is not None:
        acc = np.empty(weighting.n)
        for i, idx in enumerate(owners):
            acc[idx] = ys[i][idx]
    else:
        acc = np.zeros(weighting.n)
        for i, w in enumerate(weighting.weights):
            acc += w * ys[i]
    return acc


def _blend(acc: np.ndarray, omega: float, x_prev: np.ndarray) -> np.ndarray:
    """omega * acc + (1 - omega) * x_prev, skipping the no-op blend at omega=1."""
    if omega == 1.0:
        return acc
    return omega * acc + (1.0 - omega) * x_prev


def _combine(ys, weighting, omega: float, x_prev: np.ndarray) -> np.ndarray:
    """Weighted combination omega * sum_i E_i y_i + (1 - omega) * x_prev."""
    return _blend(_accumulate(ys, weighting), omega, x_prev)


def _omega_bound(prob: LcpProblem, ms: MultisplittingSet) -> float:
    cls = ms.matrix_class
    if cls is None:
        cls = classify(prob.A)
    return 2.0 / (1.0 + cls.jacobi_radius_estimate)


def solve_sync(prob: LcpProblem, ms: MultisplittingSet, cfg: SolverConfig,
               x0: np.ndarray | None = None, on_step=None):
    """Synchronous multisplitting solve; returns (x, IterationReport).

    Starts from zero (feasible and reproducible) unless ``x0`` is given.
    Stops when ``||x_next - x||_inf < cfg.outer_tol`` or ``cfg.max_outer``
    outer steps have run; the report carries the final natural residual
    either way.  ``on_step(k, x, ys, x_next)`` is called after every
    combination when provided (observability hook; no effect on iterates).
    """
    if ms.n != prob.n:
        raise ValueError("multisplitting size does not match the problem")
    start = time.perf_counter()
    bound = _omega_bound(prob, ms)
    report = IterationReport(omega_bound=bound,
                             omega_in_range=0.0 < cfg.omega < bound)
    x = np.zeros(prob.n) if x0 is None \
        else as_vector(x0, prob.n, name="x0").copy()
    m = ms.m
    resolved = [schedule_inner_count(cfg.schedule, i, ms) for i in range(m)]
    ys = [None] * m
    for k in range(cfg.max_outer):
        counts = [0] * m
        for i in range(m):
            try:
                ys[i], counts[i] = _run_processor_inner(
                    prob, ms.splittings[i], x, resolved[i], cfg.sub_iter_tol,
                    cfg.sub_max_iters)
            except ConvergenceError as exc:
                raise ConvergenceError(
                    f"subproblem solve failed at outer step {k}, "
                    f"processor {i}: {exc}") from exc
        x_next = _combine(ys, ms.weighting, cfg.omega, x)
        delta = float(np.max(np.abs(x_next - x))) if prob.n else 0.0
        report.total_inner_iterations += sum(counts)
        report.outer_iterations = k + 1
        if cfg.record_history:
            report.update_norms.append(delta)
            report.natural_residuals.append(natural_residual(prob, x_next))
            report.inner_counts.append(list(counts))
        if on_step is not None:
            on_step(k, x, tuple(ys), x_next)
        x = x_next
        if delta < cfg.outer_tol:
            report.converged = True
            break
    report.final_residual = natural_residual(prob, x)
    report.wall_time_seconds = time.perf_counter() - start
    return x, report
