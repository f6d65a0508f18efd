"""Matrix-free linear operators with exact or deliberately mismatched transposes.

A ``LinearMap`` is a pair of closures (forward, transpose).  For an exact
operator the transpose closure is the true adjoint; a surrogate may
deliberately disagree, which is the whole point of a ``MismatchedPair``.
"""

import warnings

import numpy as np

from .errors import InvalidParameter

__all__ = [
    "LinearMap",
    "DenseMap",
    "StackedMap",
    "MismatchedPair",
    "PowerIterationWarning",
    "difference_map",
    "scaled_identity",
    "estimate_operator_norm",
    "mismatch_norm",
    "adjointness_defect",
    "dense_from_map",
    "save_dense_text",
    "load_dense_text",
]


class PowerIterationWarning(UserWarning):
    """Power iteration hit max_iter before the requested tolerance."""


class LinearMap:
    """Matrix-free linear operator: ``apply`` maps R^cols -> R^rows and
    ``apply_transpose`` maps R^rows -> R^cols."""

    def __init__(self, rows, cols, apply_fn, apply_transpose_fn):
        if rows < 1 or cols < 1:
            raise InvalidParameter("operator dimensions must be >= 1")
        self.rows = int(rows)
        self.cols = int(cols)
        self._apply = apply_fn
        self._apply_t = apply_transpose_fn

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.cols,):
            raise InvalidParameter(
                f"apply expects shape ({self.cols},), got {x.shape}"
            )
        return self._apply(x)

    def apply_transpose(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.rows,):
            raise InvalidParameter(
                f"apply_transpose expects shape ({self.rows},), got {y.shape}"
            )
        return self._apply_t(y)

    @property
    def shape(self):
        return (self.rows, self.cols)


class DenseMap(LinearMap):
    """Linear operator backed by an explicit matrix; transpose is exact."""

    def __init__(self, matrix):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.matrix = matrix
        super().__init__(
            matrix.shape[0],
            matrix.shape[1],
            lambda x: matrix @ x,
            lambda y: matrix.T @ y,
        )


class StackedMap(LinearMap):
    """Vertical concatenation of maps sharing the same domain.

    The transpose is the sum of the blockwise transposes, accumulated in
    block order (fixed iteration order, so results are bit-stable).
    """

    def __init__(self, blocks):
        blocks = list(blocks)
        if not blocks:
            raise InvalidParameter("StackedMap needs at least one block")
        cols = blocks[0].cols
        for b in blocks:
            if b.cols != cols:
                raise InvalidParameter("stacked blocks must share cols")
        self.blocks = blocks
        rows = sum(b.rows for b in blocks)
        super().__init__(rows, cols, self._stack_apply, self._stack_apply_t)

    def _stack_apply(self, x):
        return np.concatenate([b.apply(x) for b in self.blocks])

    def _stack_apply_t(self, y):
        out = None
        offset = 0
        for b in self.blocks:
            part = b.apply_transpose(y[offset:offset + b.rows])
            out = part if out is None else out + part
            offset += b.rows
        return out

    def split(self, y):
        """Split a range-space vector into per-block pieces."""
        pieces = []
        offset = 0
        for b in self.blocks:
            pieces.append(y[offset:offset + b.rows])
            offset += b.rows
        return pieces


class MismatchedPair:
    """A forward operator together with the surrogate whose transpose
    replaces the true adjoint in the iteration.

    ``mismatch_norm`` is a write-once cache of ||forward - surrogate||.
    """

    def __init__(self, forward, surrogate):
        if forward.shape != surrogate.shape:
            raise InvalidParameter("forward and surrogate must share dimensions")
        self.forward = forward
        self.surrogate = surrogate
        self.mismatch_norm = None


def difference_map(a, b):
    """The map x -> a(x) - b(x) with the matching transpose."""
    if a.shape != b.shape:
        raise InvalidParameter("difference requires equal shapes")
    return LinearMap(
        a.rows,
        a.cols,
        lambda x: a.apply(x) - b.apply(x),
        lambda y: a.apply_transpose(y) - b.apply_transpose(y),
    )


def scaled_identity(n, c):
    """c times the identity on R^n, without materializing a matrix."""
    return LinearMap(n, n, lambda x: c * x, lambda y: c * y)


def estimate_operator_norm(op, tol=1e-9, max_iter=500, seed=0):
    """Spectral norm via power iteration on transpose(apply(.)).

    Starts from a seeded random vector and stops when the estimate's
    relative change drops below ``tol``.  If max_iter is exhausted first,
    the best estimate is returned with a PowerIterationWarning.
    """
    if tol <= 0:
        raise InvalidParameter("tol must be positive")
    if max_iter < 1:
        raise InvalidParameter("max_iter must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.cols)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = op.apply_transpose(op.apply(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # v is (numerically) in the kernel of A^T A; for a random start
            # this identifies the zero operator.
            return 0.0
        lam_new = np.sqrt(nw)
        v = w / nw
        if abs(lam_new - lam) <= tol * lam_new:
            return lam_new
        lam = lam_new
    warnings.warn(
        f"operator norm estimate did not converge in {max_iter} iterations "
        f"(last value {lam:.6e})",
        PowerIterationWarning,
    )
    return lam


def mismatch_norm(pair, tol=1e-9, seed=0):
    """||forward - surrogate|| via power iteration on the difference map.

    The result is cached on the pair (write-once).
    """
    if pair.mismatch_norm is None:
        pair.mismatch_norm = estimate_operator_norm(
            difference_map(pair.forward, pair.surrogate), tol=tol, seed=seed
        )
    return pair.mismatch_norm


def adjointness_defect(op, trials=20, seed=0):
    """max over random probes of |<Ax, y> - <x, A^T y>| / (||x|| ||y||).

    Zero (to rounding) for an exact adjoint pair; clearly positive when the
    transpose closure is a different discretization.
    """
    if trials < 1:
        raise InvalidParameter("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(op.cols)
        y = rng.standard_normal(op.rows)
        lhs = float(np.dot(op.apply(x), y))
        rhs = float(np.dot(x, op.apply_transpose(y)))
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(x) * np.linalg.norm(y)))
    return worst


def dense_from_map(op):
    """Materialize an operator column by column (test/oracle helper)."""
    cols = []
    e = np.zeros(op.cols)
    for j in range(op.cols):
        e[j] = 1.0
        cols.append(op.apply(e))
        e[j] = 0.0
    return np.stack(cols, axis=1)


def save_dense_text(path, dense):
    """Plain-text matrix format: 'rows cols' header, then row-major values."""
    m = dense.matrix
    with open(path, "w") as fh:
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_dense_text(path):
    with open(path) as fh:
        first = fh.readline().split()
        if len(first) != 2:
            raise InvalidParameter(f"bad matrix header in {path}")
        rows, cols = int(first[0]), int(first[1])
        values = []
        for line in fh:
            values.extend(float(tok) for tok in line.split())
    if len(values) != rows * cols:
        raise InvalidParameter(
            f"expected {rows * cols} values in {path}, got {len(values)}"
        )
    return DenseMap(np.asarray(values).reshape(rows, cols))
