"""Affine measurement operators: Gaussian ensembles and entry sampling.

Every operator maps an m-by-n matrix to a d-vector and carries an exact
adjoint, so projected gradient steps can be written as
X - eta * adjoint(apply(X) - b).
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .linalg import EntrySet, check_matrix


class AffineMap(ABC):
    """Linear measurement map R^{m x n} -> R^d with adjoint."""

    m: int
    n: int
    d: int

    @abstractmethod
    def apply(self, X):
        """Measure a dense m-by-n matrix, returning a d-vector."""

    @abstractmethod
    def adjoint(self, y):
        """Adjoint map of a d-vector back to a dense m-by-n matrix."""


class GaussianEnsemble(AffineMap):
    """d random Gaussian measurement matrices A_i with entries N(0, 1/d).

    apply(X)_i = <A_i, X>_F, adjoint(y) = sum_i y_i A_i. The 1/d variance
    makes E[||apply(X)||^2] = ||X||_F^2, so isometry constants concentrate
    around small values for d large enough.
    """

    def __init__(self, m, n, d, seed=0):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.m, self.n, self.d = m, n, d
        self.seed = seed
        rng = np.random.default_rng(seed)
        # row i of M is vec(A_i)
        self._M = rng.standard_normal((d, m * n)) / np.sqrt(d)

    def apply(self, X):
        X = check_matrix(X)
        return self._M @ X.ravel()

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        return (self._M.T @ y).reshape(self.m, self.n)


class EntrySamplingMap(AffineMap):
    """Projection onto a sampled index set: apply(X) lists X_ij for (i,j) in Omega.

    The index set is kept in canonical row-major order. As a matrix map
    P_Omega is self-adjoint; adjoint(y) scatters the measurements back.
    """

    def __init__(self, m, n, rows, cols, model="bernoulli", p=None, seed=None):
        self.m, self.n = m, n
        # EntrySet canonicalizes ordering and checks bounds/duplicates
        self._support = EntrySet(m, n, rows, cols, np.zeros(len(rows)))
        self.rows = self._support.rows
        self.cols = self._support.cols
        self.d = self.rows.size
        self.model = model
        self.p = p
        self.seed = seed

    @property
    def density(self):
        """Bernoulli p when known, else the empirical density |Omega|/mn."""
        if self.model == "bernoulli" and self.p is not None:
            return self.p
        return self.d / (self.m * self.n)

    def apply(self, X):
        X = check_matrix(X)
        return X[self.rows, self.cols]

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        X = np.zeros((self.m, self.n))
        X[self.rows, self.cols] = y
        return X

    def observe(self, X):
        """Sample ground truth X into an EntrySet of observed values."""
        return EntrySet(self.m, self.n, self.rows, self.cols, self.apply(X))


def gaussian_ensemble(m, n, d, seed=0):
    """Deterministic Gaussian measurement ensemble (see GaussianEnsemble)."""
    return GaussianEnsemble(m, n, d, seed=seed)


def sample_entries(m, n, model="bernoulli", p=None, count=None, seed=0):
    """Sample an index set Omega and return its EntrySamplingMap.

    model="bernoulli": each (i, j) included independently with probability p.
    model="fixed": exactly `count` entries uniform without replacement.
    """
    rng = np.random.default_rng(seed)
    if model == "bernoulli":
        if p is None or not (0.0 < p < 1.0):
            raise ValueError("bernoulli model needs 0 < p < 1")
        mask = rng.random((m, n)) < p
        rows, cols = np.nonzero(mask)
        return EntrySamplingMap(m, n, rows, cols, model="bernoulli", p=p, seed=seed)
    if model == "fixed":
        if count is None or not (0 < count <= m * n):
            raise ValueError("fixed model needs 0 < count <= m*n")
        flat = rng.choice(m * n, size=count, replace=False)
        rows, cols = np.divmod(flat, n)
        return EntrySamplingMap(m, n, rows, cols, model="fixed", seed=seed)
    raise ValueError(f"unknown sampling model: {model!r}")


def random_low_rank(m, n, k, rng, unit_norm=False):
    """Random rank-k matrix from a product of two Gaussian factors."""
    X = rng.standard_normal((m, k)) @ rng.standard_normal((k, n))
    if unit_norm:
        X = X / np.linalg.norm(X, "fro")
    return X


def estimate_isometry_constant(A, k, trials=100, seed=0):
    """Monte Carlo lower bound on the rank-k isometry constant of A.

    Maximum of | ||A(X)||^2 - 1 | over random unit-Frobenius rank-k
    matrices. Nondecreasing in `trials` under a shared seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    chunk = 512
    done = 0
    while done < trials:
        batch = min(chunk, trials - done)
        probes = np.empty((batch, A.m * A.n))
        for i in range(batch):
            probes[i] = random_low_rank(A.m, A.n, k, rng, unit_norm=True).ravel()
        if isinstance(A, GaussianEnsemble):
            sq = np.sum((A._M @ probes.T) ** 2, axis=0)
        else:
            sq = np.array([
                np.sum(A.apply(p.reshape(A.m, A.n)) ** 2) for p in probes
            ])
        worst = max(worst, float(np.abs(sq - 1.0).max()))
        done += batch
    return worst
