"""Benchmark harness: run one solver configuration, emit machine-readable
reports, and compare runs.

Usage (one run)::

    mslcp-bench --grid 8 --m 2 --omega 1.0 --schedule fixed:4 --mode sync \
                --output report.json

Modes: ``sync`` (synchronous), ``async-sim`` (deterministic staleness
simulator), ``async-threaded`` (one thread per processor), ``smm`` (the
standard-multisplitting baseline: synchronous with inner tolerance 1e-8).

Reports are byte-identical for identical configs and seeds; wall-clock time
is printed to stdout always but embedded in report files only with
``--timing``, since timing is never reproducible.  Exit codes: 0 converged,
2 did not converge (partial report still written), 64 usage error.

Comparison::

    mslcp-bench --compare report_a.json report_b.json
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass

from .asynchronous import AllEveryStep, AsyncSchedule, RandomFair, RoundRobin, \
    solve_async_sim, solve_async_threaded
from .errors import ConvergenceError
from .hmatrix import classify
from .io import read_matrix_market, read_partition, read_vector, \
    write_matrix_market, write_vector
from .problems import GridLcpSpec, make_grid_lcp
from .splitting import Partition, build_block_splitting
from .sublcp import LcpProblem
from .sync import InnerSchedule, SolverConfig, solve_sync

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_USAGE = 64

MODES = ("sync", "async-sim", "async-threaded", "smm")
SUMMARY_COLUMNS = (
    "problem", "n", "m", "variant", "mode", "omega", "schedule", "outer_tol",
    "seed", "staleness", "policy", "reads", "out_iterations", "converged",
    "final_residual", "omega_bound", "omega_in_range", "total_inner_iterations",
)
HISTORY_HEADER = "k,update_norm,natural_residual,inner_counts"


class UsageError(ValueError):
    """Configuration problem; maps to exit code 64."""


@dataclass
class BenchConfig:
    """Fully resolved benchmark configuration."""

    grid: int | None = None
    shift: float = 0.0
    matrix: str | None = None
    rhs: str | None = None
    m: int = 2
    variant: str = "jacobi"
    partition: str = "contiguous"
    omega: float = 1.0
    schedule: str = "fixed:1"
    mode: str = "sync"
    staleness: int = 0
    policy: str = "all"
    reads: str = "stalest"
    outer_tol: float = 1e-6
    max_outer: int = 200000
    seed: int = 0
    output: str | None = None
    format: str = "json"
    history: bool = False
    timing: bool = False
    max_power_iters: int = 200000
    export_problem: str | None = None

    def validate(self) -> None:
        if (self.grid is None) == (self.matrix is None):
            raise UsageError("specify exactly one of --grid or --matrix")
        if self.matrix is not None and self.rhs is None:
            raise UsageError("--matrix requires --rhs")
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.variant not in ("jacobi", "block_lower_triangular"):
            raise UsageError(f"unknown variant {self.variant!r}")
        if self.m < 1:
            raise UsageError("--m must be at least 1")
        if self.omega <= 0.0:
            raise UsageError("--omega must be positive")
        if self.outer_tol <= 0.0:
            raise UsageError("--outer-tol must be positive")
        if self.staleness < 0:
            raise UsageError("--staleness must be nonnegative")
        if self.format not in ("json", "csv"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.reads not in ("latest", "stalest", "uniform"):
            raise UsageError(f"unknown reads rule {self.reads!r}")
        if self.mode != "async-sim" and (self.staleness != 0
                                         or self.policy != "all"
                                         or self.reads != "stalest"):
            raise UsageError("--staleness, --policy and --reads apply only "
                             "to --mode async-sim")
        parse_schedule(self.schedule)
        parse_policy(self.policy, self.seed)

    def resolved(self) -> dict:
        """Solver-relevant configuration; output locations are excluded so the
        report bytes depend only on what was computed."""
        skip = ("output", "export_problem")
        return {k: getattr(self, k) for k in self.__dataclass_fields__
                if k not in skip}


def parse_schedule(text: str) -> InnerSchedule:
    kind, _, arg = text.partition(":")
    try:
        if kind == "fixed":
            return InnerSchedule.fixed(int(arg))
        if kind == "adaptive":
            return InnerSchedule.adaptive(float(arg))
        if kind == "innertol":
            return InnerSchedule.inner_tolerance(float(arg))
    except ValueError as exc:
        raise UsageError(f"bad schedule {text!r}: {exc}") from exc
    raise UsageError(f"bad schedule {text!r} (want fixed:q, adaptive:eta, "
                     "or innertol:theta)")


def parse_policy(text: str, seed: int):
    kind, _, arg = text.partition(":")
    try:
        if kind == "all":
            return AllEveryStep()
        if kind == "roundrobin":
            return RoundRobin(int(arg) if arg else 1)
        if kind == "random":
            return RandomFair(seed=int(arg) if arg else seed)
    except ValueError as exc:
        raise UsageError(f"bad policy {text!r}: {exc}") from exc
    raise UsageError(f"bad policy {text!r} (want all, roundrobin:period, "
                     "or random:seed)")


def load_problem(cfg: BenchConfig):
    """Returns (LcpProblem, identity string)."""
    if cfg.grid is not None:
        if cfg.grid < 2:
            raise UsageError("--grid must be at least 2")
        prob = make_grid_lcp(GridLcpSpec(p=cfg.grid, shift=cfg.shift))
        ident = f"grid:p={cfg.grid}"
        if cfg.shift:
            ident += f";shift={cfg.shift:g}"
    else:
        try:
            a = read_matrix_market(cfg.matrix)
            f = read_vector(cfg.rhs)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load problem: {exc}") from exc
        if a.n_rows != len(f):
            raise UsageError("matrix and right-hand side sizes disagree")
        prob = LcpProblem(a, f)
        ident = f"file:{os.path.basename(cfg.matrix)}:n={a.n_rows}"
    return prob, ident


def load_partition(cfg: BenchConfig, n: int) -> Partition:
    if cfg.partition == "contiguous" or cfg.partition.startswith("contiguous:"):
        _, _, arg = cfg.partition.partition(":")
        m = int(arg) if arg else cfg.m
        if m != cfg.m:
            raise UsageError("partition block count disagrees with --m")
        return Partition.contiguous(n, m)
    if cfg.partition.startswith("file:"):
        part = read_partition(cfg.partition[5:], n)
        if part.m != cfg.m:
            raise UsageError("partition file block count disagrees with --m")
        return part
    raise UsageError(f"bad partition {cfg.partition!r} (want contiguous[:m] "
                     "or file:PATH)")


def _float_cell(v) -> str:
    return repr(float(v))


def summary_record(cfg: BenchConfig, ident: str, n: int, report,
                   schedule: InnerSchedule) -> dict:
    rec = {
        "problem": ident,
        "n": n,
        "m": cfg.m,
        "variant": cfg.variant,
        "mode": cfg.mode,
        "omega": cfg.omega,
        "schedule": schedule.label(),
        "outer_tol": cfg.outer_tol,
        "seed": cfg.seed,
        "staleness": cfg.staleness if cfg.mode.startswith("async") else 0,
        "policy": cfg.policy if cfg.mode == "async-sim" else "-",
        "reads": cfg.reads if cfg.mode == "async-sim" else "-",
        "out_iterations": report.outer_iterations,
        "converged": report.converged,
        "final_residual": report.final_residual,
        "omega_bound": report.omega_bound,
        "omega_in_range": report.omega_in_range,
        "total_inner_iterations": report.total_inner_iterations,
    }
    if cfg.timing:
        rec["wall_time_seconds"] = report.wall_time_seconds
    return rec


def write_summary(path: str, fmt: str, rec: dict, resolved_config: dict) -> None:
    if fmt == "json":
        payload = dict(rec)
        payload["config"] = resolved_config
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return
    cols = list(SUMMARY_COLUMNS) + (["wall_time_seconds"] if "wall_time_seconds"
                                    in rec else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        writer.writerow([_float_cell(rec[c]) if isinstance(rec[c], float)
                         else str(rec[c]) for c in cols])


def write_history(path: str, report) -> None:
    with open(path, "w") as fh:
        fh.write(HISTORY_HEADER + "\n")
        for k in range(len(report.update_norms)):
            inner = ";".join(str(c) for c in report.inner_counts[k])
            fh.write(f"{k},{_float_cell(report.update_norms[k])},"
                     f"{_float_cell(report.natural_residuals[k])},{inner}\n")


def run_bench(cfg: BenchConfig) -> int:
    """Run one configuration; writes report files and prints a summary line.

    Returns the process exit code (0 converged, 2 not converged).  All
    configuration validation happens before any output file is opened.
    """
    cfg.validate()
    prob, ident = load_problem(cfg)
    partition = load_partition(cfg, prob.n)
    if cfg.export_problem:
        write_matrix_market(cfg.export_problem + ".mtx", prob.A)
        write_vector(cfg.export_problem + ".rhs.txt", prob.f)

    try:
        cls = classify(prob.A, max_power_iters=cfg.max_power_iters)
    except ConvergenceError as exc:
        raise UsageError(f"classification failed: {exc}") from exc
    if not cls.is_h_plus:
        raise UsageError("problem matrix is not H+ (positive-diagonal H-matrix)")
    ms = build_block_splitting(prob.A, partition, cfg.variant, matrix_class=cls,
                               max_power_iters=cfg.max_power_iters)

    schedule = (InnerSchedule.inner_tolerance(1e-8) if cfg.mode == "smm"
                else parse_schedule(cfg.schedule))
    solver_cfg = SolverConfig(omega=cfg.omega, schedule=schedule,
                              outer_tol=cfg.outer_tol, max_outer=cfg.max_outer,
                              record_history=cfg.history)

    try:
        if cfg.mode in ("sync", "smm"):
            x, report = solve_sync(prob, ms, solver_cfg)
        elif cfg.mode == "async-sim":
            sched = AsyncSchedule(staleness_bound=cfg.staleness,
                                  policy=parse_policy(cfg.policy, cfg.seed),
                                  reads=cfg.reads, reads_seed=cfg.seed)
            x, report = solve_async_sim(prob, ms, solver_cfg, sched)
        else:
            x, report = solve_async_threaded(prob, ms, solver_cfg, workers=ms.m)
    except (ConvergenceError, RuntimeError) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED

    rec = summary_record(cfg, ident, prob.n, report, schedule)
    if cfg.output:
        write_summary(cfg.output, cfg.format, rec, cfg.resolved())
        if cfg.history:
            write_history(cfg.output + ".history.csv", report)
    print(f"{ident} mode={cfg.mode} m={cfg.m} omega={cfg.omega:g} "
          f"schedule={rec['schedule']} -> converged={report.converged} "
          f"out_iter={report.outer_iterations} "
          f"inner_total={report.total_inner_iterations} "
          f"residual={report.final_residual:.3e} "
          f"omega_bound={report.omega_bound:.4f} "
          f"time={report.wall_time_seconds:.3f}s")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def compare_runs(paths) -> int:
    """Aligned comparison of saved JSON reports for one problem.

    Ranks by wall time when every report carries it, otherwise by total
    inner iterations; ties go to the first report.
    """
    if len(paths) < 2:
        raise UsageError("--compare needs at least two report files")
    recs = []
    for p in paths:
        try:
            with open(p) as fh:
                recs.append(json.load(fh))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read report {p}: {exc}") from exc
    ident = {(r.get("problem"), r.get("n")) for r in recs}
    if len(ident) != 1:
        raise UsageError("reports describe different problems: "
                         + ", ".join(sorted(str(i) for i in ident)))

    timed = all("wall_time_seconds" in r for r in recs)
    key = (lambda r: r["wall_time_seconds"]) if timed \
        else (lambda r: r["total_inner_iterations"])
    best = min(range(len(recs)), key=lambda i: key(recs[i]))

    header = f"{'config':40s} {'out_iter':>9s} {'inner':>9s} {'time[s]':>10s} fastest"
    print(header)
    print("-" * len(header))
    for i, (p, r) in enumerate(zip(paths, recs)):
        label = f"{r['mode']}/{r['schedule']}/m={r['m']}/omega={r['omega']:g}"
        t = f"{r['wall_time_seconds']:.4f}" if "wall_time_seconds" in r else "-"
        mark = "*" if i == best else ""
        print(f"{label:40s} {r['out_iterations']:9d} "
              f"{r['total_inner_iterations']:9d} {t:>10s} {mark}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    p = _Parser(prog="mslcp-bench", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--grid", type=int, help="grid side p of the built-in family (n=p^2)")
    p.add_argument("--shift", type=float, help="diagonal shift for the grid family")
    p.add_argument("--matrix", help="MatrixMarket coefficient matrix")
    p.add_argument("--rhs", help="right-hand-side vector file (one value per line)")
    p.add_argument("--m", type=int, help="number of processors/splittings")
    p.add_argument("--variant", choices=["jacobi", "block_lower_triangular"],
                   help="splitting family")
    p.add_argument("--partition", help="contiguous[:m] or file:PATH")
    p.add_argument("--omega", type=float, help="relaxation parameter")
    p.add_argument("--schedule", help="fixed:q | adaptive:eta | innertol:theta")
    p.add_argument("--mode", choices=list(MODES))
    p.add_argument("--staleness", type=int, help="staleness bound d (async-sim)")
    p.add_argument("--policy", help="all | roundrobin:period | random:seed")
    p.add_argument("--reads", choices=["latest", "stalest", "uniform"],
                   help="stale-read rule (async-sim)")
    p.add_argument("--outer-tol", type=float, dest="outer_tol")
    p.add_argument("--max-outer", type=int, dest="max_outer")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="report file path")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--history", action="store_true", default=None,
                   help="also write per-iteration CSV next to the report")
    p.add_argument("--timing", action="store_true", default=None,
                   help="embed wall time in report files (breaks byte-identity)")
    p.add_argument("--max-power-iters", type=int, dest="max_power_iters")
    p.add_argument("--export-problem", dest="export_problem",
                   help="write the problem as PREFIX.mtx and PREFIX.rhs.txt")
    p.add_argument("--compare", nargs="+", metavar="REPORT",
                   help="compare saved JSON reports instead of running")
    return p


_BOOL_KEYS = ("history", "timing")
_INT_KEYS = ("grid", "m", "staleness", "max_outer", "seed", "max_power_iters")
_FLOAT_KEYS = ("shift", "omega", "outer_tol")


def read_config_file(path: str) -> dict:
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in BenchConfig.__dataclass_fields__:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                if key in _BOOL_KEYS:
                    out[key] = value.lower() in ("1", "true", "yes", "on")
                elif key in _INT_KEYS:
                    out[key] = int(value)
                elif key in _FLOAT_KEYS:
                    out[key] = float(value)
                else:
                    out[key] = value
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from exc
    return out


def config_from_args(args: argparse.Namespace) -> BenchConfig:
    cfg = BenchConfig()
    if args.config:
        for key, value in read_config_file(args.config).items():
            setattr(cfg, key, value)
    for key in BenchConfig.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        if args.compare:
            return compare_runs(args.compare)
        cfg = config_from_args(args)
        return run_bench(cfg)
    except UsageError as exc:
        print(f"mslcp-bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
