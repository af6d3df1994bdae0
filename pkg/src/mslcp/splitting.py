"""Multisplitting construction, hypothesis validation, and inner-count bounds.

A multisplitting of a square matrix A is a family of splittings
A = M_i - N_i (i = 1..m) together with nonnegative diagonal weighting
matrices E_i that sum to the identity.  Two built-in families are provided:

* ``jacobi``: every M_i is the diagonal of A;
* ``block_lower_triangular``: M_i keeps the diagonal everywhere plus the
  strictly-lower entries whose row and column both lie in block i.

Both are built by masking A's entries, so M_i - N_i = A holds exactly in
floating point, and both dominate the comparison matrix for H+ inputs.
Arbitrary user splittings are accepted but should be checked with
``validate_multisplitting``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .hmatrix import MatrixClass, classify, solve_m_matrix, spectral_radius_nonneg
from .sparse import SparseMatrix, abs_matrix, as_vector, comparison_matrix, \
    solve_lower_triangular, spmv

VARIANTS = ("jacobi", "block_lower_triangular")
STRUCTURES = ("diagonal", "lower_triangular", "general")


@dataclass(frozen=True)
class Partition:
    """Disjoint ownership of the index set {0..n-1} by m blocks."""

    n: int
    m: int
    owner_sets: tuple

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("partition needs at least one block")
        if len(self.owner_sets) != self.m:
            raise ValueError("owner_sets length must equal m")
        sets = []
        seen = np.zeros(self.n, dtype=bool)
        for s in self.owner_sets:
            idx = np.unique(np.asarray(s, dtype=np.int64))
            if len(idx) == 0:
                raise ValueError("partition blocks must be nonempty")
            if len(idx) != len(np.asarray(s)):
                raise ValueError("partition block contains repeated indices")
            if idx[0] < 0 or idx[-1] >= self.n:
                raise ValueError("partition index out of range")
            if np.any(seen[idx]):
                raise ValueError("partition blocks must be disjoint")
            seen[idx] = True
            idx.setflags(write=False)
            sets.append(idx)
        if not np.all(seen):
            raise ValueError("partition blocks must cover every index")
        object.__setattr__(self, "owner_sets", tuple(sets))

    @staticmethod
    def contiguous(n: int, m: int) -> "Partition":
        """Contiguous blocks of near-equal size; the remainder goes to the
        first blocks."""
        if not 1 <= m <= n:
            raise ValueError("need 1 <= m <= n")
        base, rem = divmod(n, m)
        sets = []
        start = 0
        for i in range(m):
            size = base + (1 if i < rem else 0)
            sets.append(np.arange(start, start + size, dtype=np.int64))
            start += size
        return Partition(n, m, tuple(sets))


@dataclass(frozen=True)
class WeightingScheme:
    """Diagonals of the weighting matrices E_i.

    Entries are nonnegative, the diagonals sum to one entrywise (within
    1e-15), and every E_i carries at least one strictly positive entry.
    Indicator weightings (exact 0/1 diagonals from a partition) are detected
    and enable masked accumulation in the solvers.
    """

    weights: tuple

    def __post_init__(self):
        if len(self.weights) == 0:
            raise ValueError("weighting needs at least one diagonal")
        ws = tuple(as_vector(w, name="weight diagonal") for w in self.weights)
        n = len(ws[0])
        total = np.zeros(n)
        for w in ws:
            if len(w) != n:
                raise ValueError("weight diagonals must share one length")
            if np.any(w < 0.0):
                raise ValueError("weight entries must be nonnegative")
            if not np.any(w > 0.0):
                raise ValueError("each weighting matrix needs a positive entry")
            w.setflags(write=False)
            total += w
        if np.max(np.abs(total - 1.0)) > 1e-15:
            raise ValueError("weight diagonals must sum to the identity")
        object.__setattr__(self, "weights", ws)
        indicator = all(np.all((w == 0.0) | (w == 1.0)) for w in ws)
        owners = tuple(np.flatnonzero(w == 1.0) for w in ws) if indicator else None
        object.__setattr__(self, "_indicator_owners", owners)

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def n(self) -> int:
        return len(self.weights[0])

    @property
    def is_indicator(self) -> bool:
        return self._indicator_owners is not None

    @property
    def indicator_owners(self):
        return self._indicator_owners

    @staticmethod
    def indicator(partition: Partition) -> "WeightingScheme":
        """0/1 weights: E_i is the identity on block i, zero elsewhere."""
        ws = []
        for idx in partition.owner_sets:
            w = np.zeros(partition.n)
            w[idx] = 1.0
            ws.append(w)
        return WeightingScheme(tuple(ws))


@dataclass(frozen=True)
class Splitting:
    """One splitting pair (M, N), with a tag describing M's pattern.

    The tag tells the sub-problem solvers how M can be solved exactly:
    ``diagonal`` and ``lower_triangular`` admit direct sweeps, ``general``
    falls back to iteration.  Tags are checked against the actual pattern.
    """

    M: SparseMatrix
    N: SparseMatrix
    structure: str

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure tag {self.structure!r}")
        if not self.M.is_square or self.M.n_rows != self.N.n_rows \
                or self.N.n_rows != self.N.n_cols:
            raise ValueError("splitting factors must be square and same-sized")
        rows = self.M.entry_rows()
        if self.structure == "diagonal" and np.any(rows != self.M.col_indices):
            raise ValueError("structure tag 'diagonal' but M has off-diagonal entries")
        if self.structure == "lower_triangular" and np.any(self.M.col_indices > rows):
            raise ValueError("structure tag 'lower_triangular' but M has upper entries")

    @property
    def n(self) -> int:
        return self.M.n_rows


class ContractionOperator:
    """Application v -> <M>^-1 (|N| v) without forming the product matrix."""

    def __init__(self, splitting: Splitting, solve_tol: float = 1e-13):
        self.comp_m = comparison_matrix(splitting.M)
        self.abs_n = abs_matrix(splitting.N)
        self.structure = splitting.structure
        self.n = splitting.n
        self.solve_tol = solve_tol
        self._diag = None
        self._cls = None
        if self.structure == "diagonal":
            self._diag = self.comp_m.diagonal()
            if np.any(self._diag == 0.0):
                raise ValueError("diagonal splitting factor has a zero entry")
        elif self.structure == "general":
            self._cls = classify(self.comp_m)
            if not self._cls.is_m_matrix:
                raise ValueError("comparison matrix of M is not an M-matrix; "
                                 "contraction operator undefined")

    def __call__(self, v: np.ndarray) -> np.ndarray:
        w = spmv(self.abs_n, v)
        if self.structure == "diagonal":
            return w / self._diag
        if self.structure == "lower_triangular":
            return solve_lower_triangular(self.comp_m, w)
        return solve_m_matrix(self.comp_m, w, tol=self.solve_tol,
                              matrix_class=self._cls)


@dataclass(frozen=True)
class MultisplittingSet:
    """A validated family of splittings plus its weighting and partition.

    ``contraction_estimates[i]`` caches the estimated spectral radius of
    <M_i>^-1 |N_i| so solvers do not re-run power iteration per outer step.
    ``matrix_class`` carries the classification of the matrix the set was
    built from, when known.
    """

    splittings: tuple
    weighting: WeightingScheme
    partition: Partition
    contraction_estimates: tuple
    matrix_class: MatrixClass | None = None
    _caches: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        m = len(self.splittings)
        if m == 0:
            raise ValueError("multisplitting needs at least one splitting")
        if self.weighting.m != m or len(self.contraction_estimates) != m:
            raise ValueError("splittings, weighting and estimates must agree on m")
        if self.partition.m != m or self.partition.n != self.splittings[0].n:
            raise ValueError("partition shape does not match the splittings")

    @property
    def m(self) -> int:
        return len(self.splittings)

    @property
    def n(self) -> int:
        return self.splittings[0].n

    def contraction_operator(self, i: int) -> ContractionOperator:
        ops = self._caches.setdefault("ops", {})
        if i not in ops:
            ops[i] = ContractionOperator(self.splittings[i])
        return ops[i]


def build_block_splitting(a: SparseMatrix, partition: Partition,
                          variant: str = "jacobi",
                          matrix_class: MatrixClass | None = None,
                          radius_tol: float = 1e-8,
                          max_power_iters: int = 50000) -> MultisplittingSet:
    """Build a Jacobi or block-lower-triangular multisplitting of an H+ matrix.

    Factors are produced by masking A's entry array, so M_i - N_i = A holds
    bit-exactly.  The weighting is the indicator scheme of the partition.
    Contraction radii are estimated once here and cached on the result.

    Raises
    ------
    ValueError
        If A fails the H+ classification or the partition does not match.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown splitting variant {variant!r}")
    if partition.n != a.n_rows:
        raise ValueError("partition size does not match the matrix")
    cls = matrix_class if matrix_class is not None else classify(a)
    if not cls.is_h_plus:
        raise ValueError("matrix is not classified H+ (positive diagonal H-matrix); "
                         "refusing to build a multisplitting")

    rows = a.entry_rows()
    cols = a.col_indices
    on_diag = rows == cols

    splittings = []
    if variant == "jacobi":
        m_mat = a.same_pattern(np.where(on_diag, a.values, 0.0))
        n_mat = a.same_pattern(np.where(on_diag, 0.0, -a.values))
        shared = Splitting(m_mat, n_mat, "diagonal")
        splittings = [shared] * partition.m
    else:
        for idx in partition.owner_sets:
            member = np.zeros(a.n_rows, dtype=bool)
            member[idx] = True
            keep = on_diag | (member[rows] & member[cols] & (cols < rows))
            m_mat = a.same_pattern(np.where(keep, a.values, 0.0))
            n_mat = a.same_pattern(np.where(keep, 0.0, -a.values))
            tag = "lower_triangular" if np.any(keep & ~on_diag) else "diagonal"
            splittings.append(Splitting(m_mat, n_mat, tag))

    weighting = WeightingScheme.indicator(partition)
    estimates = []
    shared_estimate = None
    for i, s in enumerate(splittings):
        if variant == "jacobi" and shared_estimate is not None:
            estimates.append(shared_estimate)
            continue
        op = ContractionOperator(s)
        est = spectral_radius_nonneg(op, s.n, tol=radius_tol,
                                     max_iters=max_power_iters)
        estimates.append(est.value)
        if variant == "jacobi":
            shared_estimate = est.value
    return MultisplittingSet(tuple(splittings), weighting, partition,
                             tuple(estimates), matrix_class=cls)


@dataclass(frozen=True)
class MultisplittingValidation:
    """Outcome of the convergence-hypothesis checks, one entry per splitting.

    ``violations`` lists (splitting index, check code, message); empty means
    every hypothesis held.  Check codes: ``sum`` (M_i - N_i = A),
    ``domination`` (<A> <= <M_i> - |N_i| entrywise), ``contraction``
    (estimated rho(<M_i>^-1 |N_i|) < 1).
    """

    contraction_estimates: tuple
    reconstruction_errors: tuple
    domination_margins: tuple
    violations: tuple

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0


def validate_multisplitting(a: SparseMatrix, ms: MultisplittingSet,
                            tol: float = 1e-12) -> MultisplittingValidation:
    """Check the multisplitting hypotheses against A.

    Per splitting: (a) M_i - N_i reconstructs A within ``tol`` relative to
    A's largest entry, (b) <A> <= <M_i> - |N_i| entrywise with slack ``tol``,
    (c) the estimated contraction radius is below one.  Violations are
    reported, never raised.
    """
    comp_a = comparison_matrix(a).to_scipy()
    a_sp = a.to_scipy()
    scale = float(np.max(np.abs(a.values))) if a.nnz else 1.0
    estimates = []
    recon_errors = []
    margins = []
    violations = []
    for i, s in enumerate(ms.splittings):
        diff = (s.M.to_scipy() - s.N.to_scipy()) - a_sp
        err = float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
        recon_errors.append(err)
        if err > tol * scale:
            violations.append((i, "sum", f"max |M - N - A| = {err:.3g}"))

        dom = (comparison_matrix(s.M).to_scipy()
               - abs_matrix(s.N).to_scipy()) - comp_a
        margin = float(np.min(dom.data)) if dom.nnz else 0.0
        margins.append(margin)
        if margin < -tol * scale:
            violations.append(
                (i, "domination",
                 f"<M> - |N| falls below <A> by {-margin:.3g}"))

        est = spectral_radius_nonneg(ms.contraction_operator(i), s.n, tol=1e-8)
        estimates.append(est.value)
        if not est.converged or est.value >= 1.0:
            violations.append(
                (i, "contraction",
                 f"estimated radius {est.value:.6g}"
                 + ("" if est.converged else " (unconverged)")))
    return MultisplittingValidation(tuple(estimates), tuple(recon_errors),
                                    tuple(margins), tuple(violations))


def min_inner_count(splitting: Splitting, eta: float, max_s: int = 10000,
                    operator: ContractionOperator | None = None) -> int:
    """Smallest s with ||T^s||_inf <= eta for T = <M>^-1 |N|.

    T is nonnegative, so ||T^s||_inf = ||T^s e||_inf; the powers are obtained
    by repeated operator application without forming T.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie strictly between 0 and 1")
    op = operator if operator is not None else ContractionOperator(splitting)
    v = np.ones(splitting.n)
    for s in range(1, max_s + 1):
        v = op(v)
        if float(np.max(v)) <= eta:
            return s
    raise ConvergenceError(
        f"||T^s||_inf stayed above {eta:.3g} for all s <= {max_s}; "
        "contraction too weak for the requested eta")


def compute_eta(gamma: float, weighting: WeightingScheme) -> float:
    """Inner-contraction target gamma / sum_i ||E_i||_inf."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly between 0 and 1")
    denom = sum(float(np.max(w)) for w in weighting.weights)
    return gamma / denom
