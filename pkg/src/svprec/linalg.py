"""Matrix representations and rank-k projection primitives.

Dense matrices are plain 2-D float ndarrays. Low-rank iterates are kept in
factored (U, sigma, V) form, and the gradient-step operand of the completion
solver is represented as (low-rank + sparse) so that matvecs cost
O((m+n)k + nnz) instead of O(mn).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

FULL_SVD_MAX_DIM = 512


class OracleScaleError(ValueError):
    """Dense SVD requested above the small-scale oracle limit."""


class TruncatedSvdError(RuntimeError):
    """Subspace iteration failed to reach the residual tolerance."""


def check_matrix(X, name="matrix"):
    """Validate a dense matrix: 2-D, float, all entries finite."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def frobenius_norm(X):
    """Frobenius norm sqrt(sum of squared entries)."""
    return float(np.linalg.norm(np.asarray(X, dtype=float), "fro"))


@dataclass(frozen=True)
class LowRankFactorization:
    """Rank-k factorization U @ diag(sigma) @ V.T.

    U is m-by-k and V is n-by-k with orthonormal columns; sigma is
    nonnegative and nonincreasing. Trailing zero singular values are
    permitted (the factorization always carries exactly k triplets).
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "U", np.asarray(self.U, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        object.__setattr__(self, "V", np.asarray(self.V, dtype=float))
        k = self.sigma.shape[0]
        if self.U.shape[1] != k or self.V.shape[1] != k:
            raise ValueError("factor widths must match len(sigma)")
        if np.any(self.sigma < -1e-12):
            raise ValueError("singular values must be nonnegative")
        if np.any(np.diff(self.sigma) > 1e-12):
            raise ValueError("singular values must be nonincreasing")

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[0])

    @property
    def k(self):
        return self.sigma.shape[0]

    def numerical_rank(self, rtol=1e-10):
        """Number of singular values above rtol * sigma_max."""
        if self.sigma.size == 0 or self.sigma[0] <= 0.0:
            return 0
        return int(np.sum(self.sigma > rtol * self.sigma[0]))

    def materialize(self):
        return (self.U * self.sigma) @ self.V.T

    def matvec(self, x):
        return self.U @ (self.sigma * (self.V.T @ x))

    def rmatvec(self, y):
        return self.V @ (self.sigma * (self.U.T @ y))


def zero_factorization(m, n, k):
    """Rank-k factorization of the zero matrix (identity-column factors)."""
    if k > min(m, n):
        raise ValueError("k must be at most min(m, n)")
    return LowRankFactorization(np.eye(m, k), np.zeros(k), np.eye(n, k))


@dataclass(frozen=True)
class EntrySet:
    """Observed entries (i, j, v) of an m-by-n matrix, in coordinate form.

    Entries are stored in canonical row-major order with no duplicate
    (i, j) pairs, so apply/serialization order is reproducible.
    """

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        vals = np.asarray(self.vals, dtype=float)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows, cols, vals must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.m:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= self.n:
                raise ValueError("column index out of range")
        if not np.all(np.isfinite(vals)):
            raise ValueError("observed values must be finite")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        flat = rows * self.n + cols
        if np.any(np.diff(flat) == 0):
            raise ValueError("duplicate (i, j) entries")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "vals", vals)

    @property
    def nnz(self):
        return self.rows.size

    @property
    def density(self):
        return self.nnz / (self.m * self.n)

    def to_dense(self):
        X = np.zeros((self.m, self.n))
        X[self.rows, self.cols] = self.vals
        return X

    def to_csr(self):
        return sp.csr_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.m, self.n)
        )

    def with_values(self, vals):
        return EntrySet(self.m, self.n, self.rows, self.cols, vals)


@dataclass
class StructuredOperand:
    """Linear operator scale_lr * (U diag(s) V.T) + scale_sp * S.

    At least one part must be present; parts share ambient dimensions.
    Matvec cost is O((m+n)k + nnz).
    """

    lowrank: LowRankFactorization | None = None
    sparse: EntrySet | None = None
    scale_lowrank: float = 1.0
    scale_sparse: float = 1.0
    _csr: sp.csr_matrix = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.lowrank is None and self.sparse is None:
            raise ValueError("at least one part required")
        if self.lowrank is not None and self.sparse is not None:
            if self.lowrank.shape != (self.sparse.m, self.sparse.n):
                raise ValueError("parts must share ambient dimensions")
        if self.sparse is not None:
            self._csr = self.sparse.to_csr()

    @property
    def shape(self):
        if self.lowrank is not None:
            return self.lowrank.shape
        return (self.sparse.m, self.sparse.n)

    def matmat(self, X):
        """Apply the operator to an n-by-l block."""
        out = 0.0
        if self.lowrank is not None:
            f = self.lowrank
            out = self.scale_lowrank * (f.U @ ((f.sigma[:, None]) * (f.V.T @ X)))
        if self.sparse is not None:
            out = out + self.scale_sparse * (self._csr @ X)
        return out

    def rmatmat(self, Y):
        """Apply the adjoint to an m-by-l block."""
        out = 0.0
        if self.lowrank is not None:
            f = self.lowrank
            out = self.scale_lowrank * (f.V @ ((f.sigma[:, None]) * (f.U.T @ Y)))
        if self.sparse is not None:
            out = out + self.scale_sparse * (self._csr.T @ Y)
        return out

    def matvec(self, x):
        return self.matmat(np.asarray(x, dtype=float)[:, None])[:, 0]

    def rmatvec(self, y):
        return self.rmatmat(np.asarray(y, dtype=float)[:, None])[:, 0]

    def materialize(self):
        out = np.zeros(self.shape)
        if self.lowrank is not None:
            out += self.scale_lowrank * self.lowrank.materialize()
        if self.sparse is not None:
            out += self.scale_sparse * self.sparse.to_dense()
        return out


def as_operand(Y):
    """Wrap a dense matrix or factorization as a StructuredOperand."""
    if isinstance(Y, StructuredOperand):
        return Y
    if isinstance(Y, LowRankFactorization):
        return StructuredOperand(lowrank=Y)
    X = check_matrix(Y)
    m, n = X.shape
    rows, cols = np.nonzero(np.ones_like(X, dtype=bool))
    entries = EntrySet(m, n, rows, cols, X.ravel())
    return StructuredOperand(sparse=entries)


def full_svd(X):
    """Full SVD of a small dense matrix, as a factorization with k = min(m, n).

    Small-scale oracle: both dimensions must be at most FULL_SVD_MAX_DIM.
    """
    X = check_matrix(X)
    m, n = X.shape
    if max(m, n) > FULL_SVD_MAX_DIM:
        raise OracleScaleError(
            f"full_svd limited to {FULL_SVD_MAX_DIM}, got {m}x{n}"
        )
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    return LowRankFactorization(U, s, Vt.T)


def truncated_svd(Y, k, tol=1e-10, max_inner=300, initial=None, seed=0):
    """Top-k singular triplets of a structured operand via subspace iteration.

    Block power iteration with QR re-orthonormalization and Rayleigh-Ritz
    extraction, oversampled by a few extra columns. Converged when every
    retained triplet satisfies ||Y v_i - s_i u_i|| <= tol * s_1.

    Parameters
    ----------
    Y : StructuredOperand, LowRankFactorization or ndarray
    k : number of triplets to return
    tol : residual tolerance, relative to the leading singular value
    max_inner : iteration budget; TruncatedSvdError beyond it
    initial : optional n-by-r starting subspace (warm start)
    seed : seed for the random starting block when no initial is given
    """
    op = as_operand(Y)
    m, n = op.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > min(m, n):
        raise ValueError(f"k={k} exceeds min(m, n)={min(m, n)}")
    if k == min(m, n):
        if max(m, n) > FULL_SVD_MAX_DIM:
            raise OracleScaleError(
                "full-rank truncation requested above dense-oracle scale"
            )
        return full_svd(op.materialize())

    ell = min(k + 5, min(m, n))
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((n, ell))
    if initial is not None:
        r = min(initial.shape[1], ell)
        V[:, :r] = initial[:, :r]
    V, _ = np.linalg.qr(V)

    for _ in range(max_inner):
        Q, _ = np.linalg.qr(op.matmat(V))
        W = op.rmatmat(Q)  # W.T equals Q.T @ Y
        Us, s, Vt = np.linalg.svd(W.T, full_matrices=False)
        U = Q @ Us
        V = Vt.T
        if s[0] <= 0.0:
            # zero operand: any orthonormal basis will do
            return LowRankFactorization(U[:, :k], np.zeros(k), V[:, :k])
        res = op.matmat(V[:, :k]) - U[:, :k] * s[:k]
        if np.linalg.norm(res, axis=0).max() <= tol * s[0]:
            return LowRankFactorization(U[:, :k], s[:k], V[:, :k])
    raise TruncatedSvdError(
        f"subspace iteration did not converge in {max_inner} iterations "
        f"(tol={tol:g}); spectral gap at k={k} may be too small"
    )


def project_rank_k(X, k, tol=1e-10, max_inner=300, initial=None):
    """Best rank-k approximation in Frobenius norm (SVD truncation).

    Dense inputs at oracle scale go through the exact dense SVD;
    structured or large operands use subspace iteration.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(X, np.ndarray) and max(X.shape) <= FULL_SVD_MAX_DIM:
        f = full_svd(X)
        kk = min(k, f.k)
        return LowRankFactorization(f.U[:, :kk], f.sigma[:kk], f.V[:, :kk])
    return truncated_svd(X, k, tol=tol, max_inner=max_inner, initial=initial)
