"""Incoherence and regularity measures, plus Monte Carlo checks of the
sampled-projection isometry property for entry sampling.

Conventions: a rank-k matrix with SVD U diag(s) V.T is mu-incoherent when
max|U_ij| <= sqrt(mu/m) and max|V_ij| <= sqrt(mu/n); it is alpha-regular
when max|X_ij| <= alpha/sqrt(mn) * ||X||_F. Incoherent rank-k matrices are
mu*sqrt(k)-regular, which drives the Bernstein-type concentration of
||P_Omega(X)||^2 around p*||X||_F^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import LowRankFactorization, check_matrix
from .operators import sample_entries


class IncoherentSamplingError(RuntimeError):
    """Rejection sampling could not produce a mu-incoherent matrix."""


@dataclass(frozen=True)
class IncoherenceReport:
    """Incoherence of a factorization.

    mu is the smallest constant for which both factor bounds hold:
    mu = max(m * max|U_ij|^2, n * max|V_ij|^2). mu_left / mu_right are
    the unsquared per-side magnitudes sqrt(m)*max|U_ij|, sqrt(n)*max|V_ij|
    (the left one is the quantity plotted in iterate-incoherence traces).
    """

    mu: float
    mu_left: float
    mu_right: float


@dataclass(frozen=True)
class RipCheckReport:
    """Outcome of a Monte Carlo isometry check for entry sampling."""

    trials: int
    violations: dict
    worst_ratio: float
    mean_ratio: float
    params: dict = field(default_factory=dict)
    violations_low: dict = field(default_factory=dict)


def factor_mu(U, V, sigma=None, rtol=1e-10):
    """Two-sided incoherence constant from factor matrices.

    Columns whose singular value is numerically zero are excluded; their
    directions are arbitrary and do not belong to the matrix's SVD.
    """
    if sigma is not None and sigma.size and sigma[0] > 0.0:
        keep = sigma > rtol * sigma[0]
        U = U[:, keep]
        V = V[:, keep]
    if U.shape[1] == 0:
        return 0.0
    m, n = U.shape[0], V.shape[0]
    return float(max(m * np.abs(U).max() ** 2, n * np.abs(V).max() ** 2))


def incoherence(fact, m=None, n=None, orth_tol=1e-6):
    """Incoherence report for a low-rank factorization.

    Factors must be column-orthonormal (checked to orth_tol); the reported
    mu is the smallest value satisfying both incoherence bounds.
    """
    if not isinstance(fact, LowRankFactorization):
        raise TypeError("incoherence expects a LowRankFactorization")
    U, V = fact.U, fact.V
    m = U.shape[0] if m is None else m
    n = V.shape[0] if n is None else n
    k = fact.k
    if (
        np.linalg.norm(U.T @ U - np.eye(k)) > orth_tol
        or np.linalg.norm(V.T @ V - np.eye(k)) > orth_tol
    ):
        raise ValueError("factors are not column-orthonormal")
    mu_left = float(np.sqrt(m) * np.abs(U).max())
    mu_right = float(np.sqrt(n) * np.abs(V).max())
    return IncoherenceReport(
        mu=max(mu_left**2, mu_right**2), mu_left=mu_left, mu_right=mu_right
    )


def regularity(X):
    """Smallest alpha with max|X_ij| <= alpha/sqrt(mn) * ||X||_F."""
    X = check_matrix(X)
    fro = np.linalg.norm(X, "fro")
    if fro == 0.0:
        raise ValueError("regularity undefined for the zero matrix")
    m, n = X.shape
    return float(np.abs(X).max() * np.sqrt(m * n) / fro)


def sample_incoherent(m, n, k, mu, rng, max_attempts=10000):
    """Random mu-incoherent rank-k factorization.

    Draws factors with signed magnitudes bounded away from zero (so no
    entry dominates after orthonormalization), orthonormalizes by QR, and
    rejects any draw whose factor entries exceed the incoherence caps.
    Singular values are random in [1, 2], sorted nonincreasing.
    """
    cap_u = np.sqrt(mu / m)
    cap_v = np.sqrt(mu / n)
    for _ in range(max_attempts):
        Gu = rng.choice([-1.0, 1.0], size=(m, k)) * rng.uniform(0.5, 1.0, (m, k))
        Gv = rng.choice([-1.0, 1.0], size=(n, k)) * rng.uniform(0.5, 1.0, (n, k))
        U, _ = np.linalg.qr(Gu)
        V, _ = np.linalg.qr(Gv)
        if np.abs(U).max() <= cap_u and np.abs(V).max() <= cap_v:
            sigma = np.sort(rng.uniform(1.0, 2.0, k))[::-1]
            return LowRankFactorization(U, sigma, V)
    raise IncoherentSamplingError(
        f"no mu={mu}-incoherent draw in {max_attempts} attempts "
        f"for m={m}, n={n}, k={k}"
    )


def bernstein_tail_bound(alpha, p, m, n, delta):
    """Concentration tail bound 2*exp(-delta^2 * p * mn / (3 * alpha^2))."""
    return 2.0 * np.exp(-(delta**2) * p * m * n / (3.0 * alpha**2))


def check_concentration(X, p, trials, seed=0, deltas=(0.1, 0.2, 0.3)):
    """Empirical concentration of ||P_Omega(X)||^2 around p*||X||_F^2.

    Samples `trials` independent Bernoulli index sets and counts, per
    deviation level delta, how often | ||P_Omega(X)||^2 - p||X||^2 |
    exceeds delta * p * ||X||^2.
    """
    X = check_matrix(X)
    if not 0.0 < p <= 1.0:
        raise ValueError("need 0 < p <= 1")
    m, n = X.shape
    sq = X.ravel() ** 2
    total = sq.sum()
    violations = {float(d): 0 for d in deltas}
    violations_low = {float(d): 0 for d in deltas}
    ratios = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        mask = rng.random(m * n) < p
        s = float(sq[mask].sum())
        ratios[t] = s / (p * total)
        for d in violations:
            if abs(s - p * total) > d * p * total:
                violations[d] += 1
            if p * total - s > d * p * total:
                violations_low[d] += 1
    return RipCheckReport(
        trials=trials,
        violations=violations,
        worst_ratio=float(np.abs(ratios - 1.0).max() + 1.0),
        mean_ratio=float(ratios.mean()),
        params={"m": m, "n": n, "p": p, "alpha": regularity(X)},
        violations_low=violations_low,
    )


def check_rip_incoherent(m, n, k, mu, p, delta, trials, seed=0):
    """Monte Carlo check of the two-sided sampled-projection isometry
    (1-delta) p ||X||^2 <= ||P_Omega(X)||^2 <= (1+delta) p ||X||^2
    over random mu-incoherent rank-k matrices with fresh Bernoulli Omega
    per trial.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("need 0 < p <= 1")
    violations = 0
    worst = 1.0
    ratios = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        fact = sample_incoherent(m, n, k, mu, rng)
        X = fact.materialize()
        total = float(np.sum(X**2))
        if p == 1.0:
            s = total
        else:
            omega = sample_entries(
                m, n, model="bernoulli", p=p, seed=int(rng.integers(2**31))
            )
            s = float(np.sum(omega.apply(X) ** 2))
        ratio = s / (p * total)
        ratios[t] = ratio
        if abs(ratio - 1.0) > delta:
            violations += 1
        if abs(ratio - 1.0) > abs(worst - 1.0):
            worst = ratio
    return RipCheckReport(
        trials=trials,
        violations={float(delta): violations},
        worst_ratio=float(worst),
        mean_ratio=float(ratios.mean()),
        params={"m": m, "n": n, "k": k, "mu": mu, "p": p, "delta": delta},
    )
