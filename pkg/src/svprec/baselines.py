"""Comparison solvers: singular value thresholding and alternating least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import EntrySet, LowRankFactorization, check_matrix
from .operators import AffineMap
from .solver import DivergenceError, SolveTrace


class SingularSystemError(RuntimeError):
    """Unregularized least-squares subproblem has no observations."""


@dataclass
class SvtConfig:
    """Singular value thresholding parameters.

    tau is the soft-threshold on singular values, step the dual ascent
    step size. Common completion defaults: tau = 5*sqrt(mn), step = 1.2/p.
    """

    tau: float
    step: float
    tol: float = 1e-10
    max_iters: int = 500

    def __post_init__(self):
        if min(self.tau, self.step, self.tol) <= 0 or self.max_iters <= 0:
            raise ValueError("all SVT parameters must be positive")


@dataclass
class AlsConfig:
    """Alternating least squares parameters (ridge-regularized)."""

    k: int
    lam: float = 0.1
    sweeps: int = 50
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("rank k must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")


def shrink_singular_values(X, tau):
    """Soft-threshold the singular values of a dense matrix at tau."""
    X = check_matrix(X)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    return (U * np.maximum(s - tau, 0.0)) @ Vt


def svt_solve(A, b, cfg):
    """Singular value thresholding for trace-norm regularized recovery.

    Dual iteration: X^t = shrink(Y^t, tau), Y^{t+1} = Y^t + step * A^T(b - A(X^t)).
    Stops when ||A(X) - b||^2 <= tol; raises DivergenceError if the
    objective grows 10x above its initial value.
    """
    if not isinstance(A, AffineMap):
        raise TypeError("A must be an AffineMap")
    b = np.asarray(b, dtype=float)
    trace = SolveTrace()
    Y = np.zeros((A.m, A.n))
    X = np.zeros((A.m, A.n))
    obj0 = 0.5 * float(b @ b)
    trace.objective.append(obj0)
    trace.rank.append(0)
    if 2.0 * obj0 <= cfg.tol:
        trace.status = "converged"
        return X, trace
    for _ in range(cfg.max_iters):
        Y = Y + cfg.step * A.adjoint(b - A.apply(X))
        X = shrink_singular_values(Y, cfg.tau)
        r = A.apply(X) - b
        res_sq = float(r @ r)
        trace.objective.append(0.5 * res_sq)
        trace.rank.append(int(np.linalg.matrix_rank(X, tol=1e-9 * max(1.0, np.abs(X).max()))))
        if 0.5 * res_sq > 10.0 * obj0:
            raise DivergenceError("SVT objective grew 10x above initial")
        if res_sq <= cfg.tol:
            trace.status = "converged"
            return X, trace
    trace.status = "max_iter"
    return X, trace


def _solve_factor(F, idx_lists, val_lists, lam, k):
    """One ALS half-sweep: per-row ridge solves against the fixed factor F."""
    out = np.zeros((len(idx_lists), k))
    eye = np.eye(k)
    for i, (idx, vals) in enumerate(zip(idx_lists, val_lists)):
        if idx.size == 0:
            if lam == 0.0:
                raise SingularSystemError(
                    f"row/column {i} has no observations and lambda = 0"
                )
            continue  # ridge shrinks an unobserved factor to zero
        Fi = F[idx]
        G = Fi.T @ Fi + lam * eye
        rhs = Fi.T @ vals
        try:
            out[i] = np.linalg.solve(G, rhs)
        except np.linalg.LinAlgError:
            out[i] = np.linalg.lstsq(G, rhs, rcond=None)[0]
    return out


def als_solve(observed, cfg):
    """Regularized alternating least squares on observed entries.

    Minimizes sum over Omega of (U V^T - v)^2 + lam (||U||^2 + ||V||^2) by
    alternating exact ridge solves for the row and column factors. The
    objective is nonincreasing across half-sweeps.
    """
    if not isinstance(observed, EntrySet):
        raise TypeError("observed must be an EntrySet")
    m, n, k = observed.m, observed.n, cfg.k
    if k > min(m, n):
        raise ValueError("rank k exceeds min(m, n)")
    rng = np.random.default_rng(cfg.seed)
    U = rng.standard_normal((m, k)) / np.sqrt(k)
    V = rng.standard_normal((n, k)) / np.sqrt(k)

    by_row = [np.flatnonzero(observed.rows == i) for i in range(m)]
    by_col = [np.flatnonzero(observed.cols == j) for j in range(n)]
    row_idx = [observed.cols[s] for s in by_row]
    row_val = [observed.vals[s] for s in by_row]
    col_idx = [observed.rows[s] for s in by_col]
    col_val = [observed.vals[s] for s in by_col]

    def objective():
        pred = np.einsum("ij,ij->i", U[observed.rows], V[observed.cols])
        err = pred - observed.vals
        return float(err @ err + cfg.lam * (np.sum(U**2) + np.sum(V**2)))

    trace = SolveTrace()
    trace.objective.append(objective())
    for _ in range(cfg.sweeps):
        U = _solve_factor(V, row_idx, row_val, cfg.lam, k)
        trace.objective.append(objective())
        V = _solve_factor(U, col_idx, col_val, cfg.lam, k)
        trace.objective.append(objective())
        prev, cur = trace.objective[-3], trace.objective[-1]
        if prev - cur <= cfg.tol * max(prev, 1e-30):
            trace.status = "converged"
            break
    else:
        trace.status = "max_iter"

    # compact SVD of U V^T via thin QR of both factors
    Qu, Ru = np.linalg.qr(U)
    Qv, Rv = np.linalg.qr(V)
    Us, s, Vst = np.linalg.svd(Ru @ Rv.T, full_matrices=False)
    return LowRankFactorization(Qu @ Us, s, Qv @ Vst.T), trace


def default_svt_config(m, n, p, tol=1e-10, max_iters=500):
    """Conventional SVT settings for completion instances."""
    return SvtConfig(tau=5.0 * np.sqrt(m * n), step=1.2 / p, tol=tol, max_iters=max_iters)
