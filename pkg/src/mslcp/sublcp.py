"""Per-processor complementarity subproblems and the brute-force test oracle.

The subproblem for a factor M and forcing vector F is: find y with

    y >= 0,    M y - F >= 0,    y . (M y - F) = 0.

For diagonal M this is a componentwise clamp; for lower-triangular M a
single projected forward sweep produces the exact solution row by row; for
general M projected Gauss-Seidel is iterated to a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .sparse import SparseMatrix, as_vector, spmv


@dataclass(frozen=True)
class LcpProblem:
    """Data (A, f) of the complementarity problem
    x >= 0, A x - f >= 0, x . (A x - f) = 0."""

    A: SparseMatrix
    f: np.ndarray

    def __post_init__(self):
        if not self.A.is_square:
            raise ValueError("coefficient matrix must be square")
        f = as_vector(self.f, self.A.n_rows, name="f").copy()
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def n(self) -> int:
        return self.A.n_rows


@dataclass(frozen=True)
class LcpSolution:
    """A computed solution with its accuracy measures."""

    x: np.ndarray
    residual: float
    complementarity_gap: float


def natural_residual(prob: LcpProblem, x) -> float:
    """||min(x, A x - f)||_inf; zero exactly at solutions."""
    x = as_vector(x, prob.n, name="x")
    slack = spmv(prob.A, x) - prob.f
    if prob.n == 0:
        return 0.0
    return float(np.max(np.abs(np.minimum(x, slack))))


def _projected_forward_sweep(m: SparseMatrix, f_vec: np.ndarray) -> np.ndarray:
    """Exact solution for lower-triangular M with positive diagonal: row j's
    conditions involve only y_1..y_j, so clamping row by row settles them."""
    rows = m.row_entries()
    diag = m.diagonal()
    y = np.zeros(m.n_rows)
    for j in range(m.n_rows):
        cols, vals = rows[j]
        s = f_vec[j]
        for t in range(len(cols)):
            c = cols[t]
            if c >= j:
                break
            s -= vals[t] * y[c]
        v = s / diag[j]
        y[j] = v if v > 0.0 else 0.0
    return y


def projected_gauss_seidel(a: SparseMatrix, f_vec: np.ndarray,
                           x0: np.ndarray | None = None,
                           tol: float = 1e-12,
                           max_sweeps: int = 200000):
    """Projected Gauss-Seidel sweeps until the iterate moves less than ``tol``
    in the max norm.  Returns (x, sweeps, last_change)."""
    n = a.n_rows
    diag = a.diagonal()
    if np.any(diag <= 0.0):
        raise ValueError("projected Gauss-Seidel needs a positive diagonal")
    rows = a.row_entries()
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    delta = np.inf
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for j in range(n):
            cols, vals = rows[j]
            s = f_vec[j]
            for t in range(len(cols)):
                c = cols[t]
                if c != j:
                    s -= vals[t] * x[c]
            new = s / diag[j]
            if new < 0.0:
                new = 0.0
            d = new - x[j]
            if d < 0.0:
                d = -d
            if d > delta:
                delta = d
            x[j] = new
        if delta < tol:
            return x, sweep, delta
    raise ConvergenceError(
        f"projected Gauss-Seidel: change {delta:.3g} still above {tol:.3g} "
        f"after {max_sweeps} sweeps")


def solve_sub_lcp(m: SparseMatrix, structure: str, f_vec,
                  iter_tol: float = 1e-12, max_iters: int = 200000) -> np.ndarray:
    """Solve the subproblem for the factor M with the given structure tag.

    ``diagonal`` and ``lower_triangular`` (with nonpositive strict-lower
    entries) are solved exactly; anything else runs projected Gauss-Seidel
    to ``iter_tol``.  The forward sweep is only trusted when the strict-lower
    entries are nonpositive, where earlier components can only relax later
    constraints; positive strict-lower entries fall back to the general path.
    """
    f_vec = as_vector(f_vec, m.n_rows, name="forcing vector")
    diag = m.diagonal()
    if np.any(diag <= 0.0):
        raise ValueError("subproblem factor must have a positive diagonal")
    if structure == "diagonal":
        return np.maximum(0.0, f_vec / diag)
    if structure == "lower_triangular":
        strict_lower = m.col_indices < m.entry_rows()
        if np.all(m.values[strict_lower] <= 0.0):
            return _projected_forward_sweep(m, f_vec)
    x, _, _ = projected_gauss_seidel(m, f_vec, tol=iter_tol, max_sweeps=max_iters)
    return x


def brute_force_lcp(prob: LcpProblem) -> np.ndarray:
    """Reference solution by enumerating every candidate support set.

    For each subset P of indices, solve A[P, P] x_P = f_P with x = 0 off P
    and accept when x_P > -1e-12 and the off-P slacks are >= -1e-12.  Only
    usable for n <= 20.
    """
    n = prob.n
    if n > 20:
        raise ValueError("brute force limited to n <= 20")
    a = prob.A.to_dense()
    f = prob.f
    idx = np.arange(n)
    for mask in range(1 << n):
        p = idx[[(mask >> j) & 1 == 1 for j in range(n)]]
        x = np.zeros(n)
        if len(p):
            sub = a[np.ix_(p, p)]
            try:
                xp = np.linalg.solve(sub, f[p])
            except np.linalg.LinAlgError:
                continue
            if np.any(xp <= -1e-12):
                continue
            x[p] = xp
        slack = a @ x - f
        off = np.ones(n, dtype=bool)
        off[p] = False
        if np.all(slack[off] >= -1e-12):
            return x
    raise ConvergenceError("no support set yields a feasible solution; "
                           "the matrix is likely not H+ (or the solve failed)")
