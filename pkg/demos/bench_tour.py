#!/usr/bin/env python3
"""Drive the benchmark command line end to end: single runs, history CSVs,
problem export/reload, and report comparison.

    PYTHONPATH=src python3 demos/bench_tour.py
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent
SRC = str(HERE.parent / "src")


def bench(*args):
    cmd = [sys.executable, "-m", "mslcp.bench", *args]
    print(f"$ mslcp-bench {' '.join(args)}")
    proc = subprocess.run(cmd, capture_output=True, text=True,
                          env={"PYTHONPATH": SRC, "PATH": "/usr/bin:/bin"})
    sys.stdout.write(proc.stdout)
    if proc.returncode not in (0, 2):
        sys.stderr.write(proc.stderr)
        raise SystemExit(f"bench failed with {proc.returncode}")
    return proc


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)

    print("=== one synchronous run, JSON report + per-iteration history ===")
    bench("--grid", "16", "--m", "2", "--omega", "1.0", "--schedule", "fixed:4",
          "--mode", "sync", "--output", str(tmp / "fixed4.json"), "--history")
    rec = json.loads((tmp / "fixed4.json").read_text())
    print(f"report keys: {sorted(rec)[:8]} ...")
    history = (tmp / "fixed4.json.history.csv").read_text().splitlines()
    print(f"history: {history[0]}")
    print(f"         {history[1]}")
    print(f"         ... {len(history) - 1} rows")

    print()
    print("=== sweep fixed inner counts and the standard baseline ===")
    reports = []
    for q in (1, 2, 4, 8):
        out = tmp / f"fixed{q}.json"
        bench("--grid", "16", "--m", "2", "--schedule", f"fixed:{q}",
              "--mode", "sync", "--output", str(out))
        reports.append(out)
    smm = tmp / "smm.json"
    bench("--grid", "16", "--m", "2", "--mode", "smm", "--output", str(smm))
    reports.append(smm)

    print()
    print("=== compare the saved reports ===")
    bench("--compare", *map(str, reports))

    print()
    print("=== asynchronous modes ===")
    bench("--grid", "16", "--m", "2", "--schedule", "fixed:2",
          "--mode", "async-sim", "--staleness", "3", "--policy", "roundrobin:2",
          "--output", str(tmp / "async.json"))
    bench("--grid", "16", "--m", "2", "--schedule", "fixed:4",
          "--mode", "async-threaded", "--output", str(tmp / "thr.json"))

    print()
    print("=== export the problem, then solve it from files ===")
    bench("--grid", "8", "--m", "2", "--schedule", "fixed:2", "--mode", "sync",
          "--export-problem", str(tmp / "grid8"),
          "--output", str(tmp / "direct.json"))
    bench("--matrix", str(tmp / "grid8.mtx"), "--rhs", str(tmp / "grid8.rhs.txt"),
          "--m", "2", "--schedule", "fixed:2", "--mode", "sync",
          "--output", str(tmp / "fromfile.json"))
    direct = json.loads((tmp / "direct.json").read_text())
    fromfile = json.loads((tmp / "fromfile.json").read_text())
    print(f"same iteration count from files: "
          f"{direct['out_iterations'] == fromfile['out_iterations']}")
