"""Singular value projection: projected gradient descent onto the rank-k set.

The iteration is X^{t+1} = P_k(X^t - eta_t * A^T(A(X^t) - b)) starting from
X^0 = 0. For entry-sampling measurements the gradient-step operand is kept
as (low-rank + sparse), so each iteration costs O((m+n)k^2 + |Omega| k)
instead of a dense SVD.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from .analysis import factor_mu
from .linalg import (
    EntrySet,
    LowRankFactorization,
    StructuredOperand,
    TruncatedSvdError,
    full_svd,
    project_rank_k,
    zero_factorization,
)
from .operators import AffineMap, EntrySamplingMap


class StepPolicyError(ValueError):
    """Step policy incompatible with the measurement operator or config."""


class DivergenceError(RuntimeError):
    """Iteration diverged (objective grew far beyond its initial value)."""


class RankBudgetError(RuntimeError):
    """Rank search exhausted its budget without finding a plateau."""


class NoSpectralGapError(RuntimeError):
    """No significant singular value gap; rank is ambiguous."""


STEP_POLICIES = ("constant", "rip", "completion", "decay")


@dataclass
class SolverConfig:
    """Configuration of a single SVP solve.

    step selects the step-size policy:
      "constant"   eta_t = step_param
      "rip"        eta_t = 1/(1 + delta) with delta = step_param
      "completion" eta_t = 1/((1 + delta) p), p the sampling density
      "decay"      eta_t = step_param / sqrt(t+1)
    tol is the stopping tolerance on the squared residual ||A(X) - b||^2.
    backtrack halves the step of any iteration that would increase the
    residual (the density-calibrated steps overshoot when the sampled
    operator is far from an isometry, e.g. near the recovery threshold).
    """

    k: int
    step: str = "rip"
    step_param: float = 1.0 / 3.0
    tol: float = 1e-10
    max_iters: int = 500
    seed: int = 0
    record_iterates: bool = False
    backtrack: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("rank k must be >= 1")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.step not in STEP_POLICIES:
            raise StepPolicyError(f"unknown step policy {self.step!r}")
        if self.step == "completion" and not 0.0 <= self.step_param < 1.0 / 3.0:
            raise StepPolicyError("completion step needs 0 <= delta < 1/3")

    def step_size(self, t, density=None):
        if self.step == "constant":
            return self.step_param
        if self.step == "rip":
            return 1.0 / (1.0 + self.step_param)
        if self.step == "completion":
            if density is None:
                raise StepPolicyError(
                    "completion step policy requires an entry-sampling operator"
                )
            return 1.0 / ((1.0 + self.step_param) * density)
        return self.step_param / math.sqrt(t + 1.0)


@dataclass
class SolveTrace:
    """Per-iteration solver diagnostics.

    Index 0 describes the zero initial iterate; entry t > 0 describes the
    iterate after t projection steps.
    """

    objective: list = field(default_factory=list)
    rank: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    mu_left: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    status: str = "max_iter"
    iterates: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.objective) - 1

    @property
    def final_objective(self):
        return self.objective[-1]


def _entry_values(fact, rows, cols):
    """X[rows, cols] for X = U diag(s) V.T, in O(|Omega| k)."""
    return np.einsum(
        "ij,ij->i", (fact.U * fact.sigma)[rows], fact.V[cols]
    )


def _mu_left_scaled(fact):
    """sqrt(n) * max|U_ij| over numerically nonzero columns."""
    if fact.sigma.size == 0 or fact.sigma[0] <= 0.0:
        return 0.0
    keep = fact.sigma > 1e-10 * fact.sigma[0]
    n = fact.V.shape[0]
    return float(np.sqrt(n) * np.abs(fact.U[:, keep]).max())


def svp_solve(A, b, cfg, noise_norm=None, plateau=False):
    """Run the SVP iteration for a general affine measurement map.

    Parameters
    ----------
    A : AffineMap
    b : measurement vector of length A.d
    cfg : SolverConfig
    noise_norm : optional ||e||; when given, cfg.tol is the target excess of
        the squared residual over the noise floor ||e||^2
    plateau : also stop when the relative objective decrease over a window
        of 5 iterations falls below 1e-6 (noise-floor detector)

    Returns (LowRankFactorization, SolveTrace).
    """
    if not isinstance(A, AffineMap):
        raise TypeError("A must be an AffineMap")
    b = np.asarray(b, dtype=float)
    if b.shape != (A.d,):
        raise ValueError(f"b must have length d={A.d}")
    m, n = A.m, A.n
    k = cfg.k
    if k > min(m, n):
        raise ValueError("rank k exceeds min(m, n)")
    sampling = isinstance(A, EntrySamplingMap)
    density = A.density if sampling else None
    if cfg.step == "completion" and not sampling:
        raise StepPolicyError(
            "completion step policy requires an entry-sampling operator"
        )
    target = cfg.tol if noise_norm is None else noise_norm**2 + cfg.tol

    trace = SolveTrace()
    X = zero_factorization(m, n, k)
    r = -b
    t0 = time.perf_counter()

    def record(res_sq):
        trace.objective.append(0.5 * res_sq)
        trace.rank.append(X.numerical_rank())
        trace.mu.append(factor_mu(X.U, X.V, X.sigma))
        trace.mu_left.append(_mu_left_scaled(X))
        trace.wall_ms.append((time.perf_counter() - t0) * 1e3)
        if cfg.record_iterates:
            trace.iterates.append(X)

    res_sq = float(r @ r)
    record(res_sq)

    for t in range(cfg.max_iters):
        if res_sq <= target:
            trace.status = "converged"
            return X, trace
        if plateau and len(trace.objective) >= 6:
            prev = trace.objective[-6]
            if prev > 0 and (prev - trace.objective[-1]) / prev < 1e-6:
                trace.status = "stalled"
                return X, trace
        def attempt(eta):
            if sampling:
                grad = EntrySet(m, n, A.rows, A.cols, -eta * r)
                operand = StructuredOperand(lowrank=X, sparse=grad)
                try:
                    Xn = project_rank_k(operand, k, initial=X.V)
                except TruncatedSvdError:
                    # small spectral gap: a looser inner tolerance is still
                    # far below the solver's own stopping tolerance
                    try:
                        Xn = project_rank_k(operand, k, tol=1e-7,
                                            max_inner=600, initial=X.V)
                    except TruncatedSvdError:
                        if max(m, n) > 4096:
                            raise
                        Xn = project_rank_k(operand.materialize(), k)
                rn = _entry_values(Xn, A.rows, A.cols) - b
            else:
                Y = X.materialize() - eta * A.adjoint(r)
                Xn = project_rank_k(Y, k)
                rn = A.apply(Xn.materialize()) - b
            return Xn, rn, float(rn @ rn)

        eta = cfg.step_size(t, density=density)
        X_new, r_new, new_sq = attempt(eta)
        if cfg.backtrack:
            for _ in range(30):
                if new_sq <= res_sq:
                    break
                eta *= 0.5
                X_new, r_new, new_sq = attempt(eta)
        X, r, res_sq = X_new, r_new, new_sq
        if not math.isfinite(res_sq) or res_sq > 1e6 * max(trace.objective[0], 1e-30):
            raise DivergenceError(
                f"squared residual {res_sq:.3e} after {t + 1} steps; "
                "step size too large for this instance"
            )
        record(res_sq)

    trace.status = "converged" if res_sq <= target else "max_iter"
    return X, trace


def svp_complete(observed, cfg, p=None):
    """SVP specialized to matrix completion from observed entries.

    observed is an EntrySet of sampled values of the unknown matrix.
    p is the Bernoulli sampling density when known; otherwise the
    empirical density |Omega|/mn is used for the completion step size.
    """
    if not isinstance(observed, EntrySet):
        raise TypeError("observed must be an EntrySet")
    A = EntrySamplingMap(
        observed.m,
        observed.n,
        observed.rows,
        observed.cols,
        model="bernoulli" if p is not None else "fixed",
        p=p,
    )
    return svp_solve(A, observed.vals, cfg)


def svp_solve_noisy(A, b, cfg, noise_norm=None):
    """SVP with noisy measurements b = A(X*) + e.

    Identical iteration to svp_solve; stopping additionally triggers on an
    objective plateau (relative decrease below 1e-6 over 5 iterations),
    since the residual cannot descend below the noise floor.
    """
    return svp_solve(A, b, cfg, noise_norm=noise_norm, plateau=True)


def theorem_iteration_bound(b_norm_sq, eps, delta):
    """Iteration count sufficient for a squared residual below eps, given a
    rank-2k isometry constant delta < 1/3: each step contracts the
    objective by at least 2*delta/(1-delta)."""
    if not 0.0 < delta < 1.0 / 3.0:
        raise ValueError("bound requires 0 < delta < 1/3")
    ratio = (1.0 - delta) / (2.0 * delta)
    return math.ceil(math.log(b_norm_sq / eps) / math.log(ratio))


def noisy_contraction_factor(delta, C):
    """Per-iteration factor D = 1/C^2 + (2 delta/(1-delta)) (1 + 1/C)^2
    valid while the objective sits above C^2 ||e||^2 / 2."""
    return 1.0 / C**2 + (2.0 * delta / (1.0 - delta)) * (1.0 + 1.0 / C) ** 2


def select_rank_armp(A, b, k0, k_step, cfg, k_max=None):
    """Increment the rank until the final objective plateaus.

    Runs SVP at k0, k0 + k_step, ...; returns the smallest k whose final
    squared residual is within 1% relative of the next increment's (or
    already below cfg.tol). Raises RankBudgetError past k_max.
    """
    if k0 < 1 or k_step < 1:
        raise ValueError("k0 and k_step must be >= 1")
    if k_max is None:
        k_max = min(A.m, A.n)

    def final_res(k):
        c = SolverConfig(
            k=k,
            step=cfg.step,
            step_param=cfg.step_param,
            tol=cfg.tol,
            max_iters=cfg.max_iters,
            seed=cfg.seed,
        )
        _, trace = svp_solve(A, b, c)
        return 2.0 * trace.final_objective

    k = k0
    res_k = final_res(k)
    while k <= k_max:
        if res_k <= cfg.tol:
            return k
        k_next = k + k_step
        if k_next > min(A.m, A.n):
            break
        res_next = final_res(k_next)
        if res_k - res_next <= 0.01 * res_k:
            return k
        k, res_k = k_next, res_next
    raise RankBudgetError(f"no objective plateau for k <= {k_max}")


def select_rank_completion(observed, k_max=50, min_ratio=3.0):
    """Pick the rank from the spectrum of the zero-filled observed matrix.

    Returns the k <= k_max maximizing sigma_k / sigma_{k+1}, requiring the
    best ratio to reach min_ratio; raises NoSpectralGapError otherwise.
    """
    if observed.nnz < 1:
        raise ValueError("need at least one observed entry")
    m, n = observed.m, observed.n
    if min(m, n) <= 512:
        s = full_svd(observed.to_dense()).sigma
    else:
        kk = min(k_max + 1, min(m, n) - 1)
        s = np.sort(
            scipy.sparse.linalg.svds(observed.to_csr(), k=kk, return_singular_vectors=False)
        )[::-1]
    limit = min(k_max, s.size - 1)
    if s[0] <= 0.0 or limit < 1:
        raise NoSpectralGapError("spectrum too short or identically zero")
    floor = s[0] * 1e-12
    ratios = s[:limit] / np.maximum(s[1 : limit + 1], floor)
    best = int(np.argmax(ratios))
    if ratios[best] < min_ratio:
        raise NoSpectralGapError(
            f"largest spectral-gap ratio {ratios[best]:.2f} below {min_ratio}"
        )
    return best + 1
