"""Canonical CSR sparse matrices and the entrywise primitives built on them.

Matrices are stored in canonical compressed-sparse-row form: row offsets are
nondecreasing, column indices are strictly increasing inside every row, and
no explicitly stored zero values are admitted.  Canonical form makes
entrywise comparisons between matrices a merged-pattern traversal and pins a
deterministic (ascending-column) summation order for matrix-vector products.

All values are immutable after construction; instances are safe to share
between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def require_finite(name: str, arr: np.ndarray) -> None:
    """Reject NaN/Inf at public operation boundaries."""
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")


def as_vector(x, n: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-d float64 array, optionally checking its length."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    require_finite(name, v)
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    return v


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable CSR matrix over float64.

    Attributes
    ----------
    n_rows, n_cols : int
        Matrix shape.
    row_offsets : (n_rows+1,) int64 array
        Nondecreasing; ``row_offsets[-1] == len(values)``.
    col_indices : int64 array
        Strictly increasing within each row, all ``< n_cols``.
    values : float64 array
        Finite and nonzero (canonical form stores no explicit zeros).
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    _caches: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        offs = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        cols = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if offs.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        if offs[0] != 0 or np.any(np.diff(offs) < 0) or offs[-1] != len(vals):
            raise ValueError("row_offsets must be nondecreasing from 0 to len(values)")
        if cols.shape != vals.shape:
            raise ValueError("col_indices and values must have equal length")
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n_cols):
            raise ValueError("column index out of range")
        # strictly increasing inside each row: the only allowed decreases in the
        # concatenated index stream are at row boundaries
        if len(cols) > 1:
            nondecr = np.diff(cols) > 0
            row_starts = offs[1:-1]
            interior = np.ones(len(cols) - 1, dtype=bool)
            interior[row_starts[(row_starts > 0) & (row_starts < len(cols))] - 1] = False
            if not np.all(nondecr | ~interior):
                raise ValueError("column indices must be strictly increasing within each row")
        require_finite("values", vals)
        if np.any(vals == 0.0):
            raise ValueError("canonical form admits no explicitly stored zeros")
        for a in (offs, cols, vals):
            a.setflags(write=False)
        object.__setattr__(self, "row_offsets", offs)
        object.__setattr__(self, "col_indices", cols)
        object.__setattr__(self, "values", vals)

    # -- constructors -----------------------------------------------------

    @staticmethod
    def from_dense(a) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("dense input must be two-dimensional")
        require_finite("matrix", a)
        rows, cols = np.nonzero(a)
        offsets = np.zeros(a.shape[0] + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        offsets = np.cumsum(offsets)
        return SparseMatrix(a.shape[0], a.shape[1], offsets, cols, a[rows, cols])

    @staticmethod
    def from_coo(n_rows: int, n_cols: int, rows, cols, vals) -> "SparseMatrix":
        """Build from coordinate triplets; duplicates are summed, zeros dropped."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("coordinate arrays must have equal length")
        require_finite("values", vals)
        if len(rows):
            if rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols:
                raise ValueError("coordinate index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            key_change = np.empty(len(rows), dtype=bool)
            key_change[0] = True
            key_change[1:] = (np.diff(rows) != 0) | (np.diff(cols) != 0)
            group = np.cumsum(key_change) - 1
            summed = np.zeros(group[-1] + 1)
            np.add.at(summed, group, vals)
            rows, cols, vals = rows[key_change], cols[key_change], summed
            keep = vals != 0.0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        offsets = np.cumsum(offsets)
        return SparseMatrix(n_rows, n_cols, offsets, cols, vals)

    @staticmethod
    def identity(n: int) -> "SparseMatrix":
        idx = np.arange(n, dtype=np.int64)
        return SparseMatrix(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    @staticmethod
    def from_diagonal(d) -> "SparseMatrix":
        d = as_vector(d, name="diagonal")
        n = len(d)
        keep = d != 0.0
        cols = np.arange(n, dtype=np.int64)[keep]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(offsets, cols + 1, 1)
        return SparseMatrix(n, n, np.cumsum(offsets), cols, d[keep])

    # -- basic queries -----------------------------------------------------

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def is_square(self) -> bool:
        return self.n_rows == self.n_cols

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n_rows, self.n_cols))
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))
        a[rows, self.col_indices] = self.values
        return a

    def to_scipy(self):
        """Zero-copy view as a scipy CSR array (for entrywise arithmetic glue)."""
        from scipy.sparse import csr_array

        return csr_array(
            (self.values, self.col_indices, self.row_offsets),
            shape=(self.n_rows, self.n_cols),
        )

    @staticmethod
    def from_scipy(a) -> "SparseMatrix":
        a = a.tocsr().copy()
        a.sum_duplicates()
        a.sort_indices()
        a.eliminate_zeros()
        return SparseMatrix(a.shape[0], a.shape[1], a.indptr, a.indices, a.data)

    def row_entries(self):
        """Per-row ``(columns, values)`` lists, cached (for sequential kernels)."""
        cached = self._caches.get("rows")
        if cached is None:
            cols = self.col_indices.tolist()
            vals = self.values.tolist()
            offs = self.row_offsets.tolist()
            cached = [
                (cols[offs[j]:offs[j + 1]], vals[offs[j]:offs[j + 1]])
                for j in range(self.n_rows)
            ]
            self._caches["rows"] = cached
        return cached

    def diagonal(self) -> np.ndarray:
        """Main-diagonal entries as a dense vector (0 where structurally absent)."""
        cached = self._caches.get("diag")
        if cached is None:
            if not self.is_square:
                raise ValueError("diagonal requires a square matrix")
            d = np.zeros(self.n_rows)
            rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))
            on_diag = rows == self.col_indices
            d[rows[on_diag]] = self.values[on_diag]
            d.setflags(write=False)
            cached = d
            self._caches["diag"] = cached
        return cached

    def entry_rows(self) -> np.ndarray:
        """Row index of every stored entry (cached)."""
        cached = self._caches.get("entry_rows")
        if cached is None:
            cached = np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))
            cached.setflags(write=False)
            self._caches["entry_rows"] = cached
        return cached

    def same_pattern(self, values: np.ndarray) -> "SparseMatrix":
        """New matrix with this sparsity pattern and the given entry values."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise ValueError("replacement values must match the stored pattern")
        keep = values != 0.0
        if np.all(keep):
            return SparseMatrix(self.n_rows, self.n_cols, self.row_offsets,
                                self.col_indices, values)
        offsets = np.zeros(self.n_rows + 1, dtype=np.int64)
        rows = self.entry_rows()[keep]
        np.add.at(offsets, rows + 1, 1)
        return SparseMatrix(self.n_rows, self.n_cols, np.cumsum(offsets),
                            self.col_indices[keep], values[keep])

    def equal_entries(self, other: "SparseMatrix") -> bool:
        return (
            self.n_rows == other.n_rows
            and self.n_cols == other.n_cols
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )


def spmv(a: SparseMatrix, x) -> np.ndarray:
    """Matrix-vector product ``a @ x``.

    Each output entry is accumulated over the row's stored entries in
    ascending column order, so two calls with identical inputs are
    bit-identical.
    """
    x = as_vector(x, a.n_cols, name="x")
    out = np.zeros(a.n_rows)
    if a.nnz == 0:
        return out
    prod = a.values * x[a.col_indices]
    starts = a.row_offsets[:-1]
    ends = a.row_offsets[1:]
    nonempty = starts < ends
    # reduceat sums each segment sequentially in storage order; empty rows are
    # excluded (they would otherwise alias the next segment's first element)
    out[nonempty] = np.add.reduceat(prod, starts[nonempty])
    return out


def comparison_matrix(a: SparseMatrix) -> SparseMatrix:
    """Comparison matrix: absolute values on the diagonal, negated absolute
    values off it.  Pattern is unchanged."""
    if not a.is_square:
        raise ValueError("comparison matrix requires a square matrix")
    on_diag = a.entry_rows() == a.col_indices
    vals = np.where(on_diag, np.abs(a.values), -np.abs(a.values))
    return a.same_pattern(vals)


def abs_matrix(a: SparseMatrix) -> SparseMatrix:
    """Entrywise absolute value, same pattern."""
    return a.same_pattern(np.abs(a.values))


def solve_lower_triangular(l: SparseMatrix, b) -> np.ndarray:
    """Forward substitution for a lower-triangular matrix with nonzero diagonal."""
    b = as_vector(b, l.n_rows, name="b")
    if not l.is_square:
        raise ValueError("triangular solve requires a square matrix")
    diag = l.diagonal()
    if np.any(diag == 0.0):
        raise ValueError("triangular solve requires a nonzero diagonal")
    rows = l.row_entries()
    x = np.empty(l.n_rows)
    for j in range(l.n_rows):
        cols, vals = rows[j]
        s = b[j]
        for t in range(len(cols)):
            c = cols[t]
            if c >= j:
                break
            s -= vals[t] * x[c]
        x[j] = s / diag[j]
    return x
