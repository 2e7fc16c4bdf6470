import numpy as np
import pytest

from svprec.analysis import (
    IncoherentSamplingError,
    bernstein_tail_bound,
    check_concentration,
    check_rip_incoherent,
    factor_mu,
    incoherence,
    regularity,
    sample_incoherent,
)
from svprec.linalg import LowRankFactorization, full_svd


class TestIncoherence:
    def test_flat_vector_is_mu_one(self):
        m = 16
        U = np.full((m, 1), 1.0 / np.sqrt(m))
        fact = LowRankFactorization(U, np.array([1.0]), np.full((m, 1), 1.0 / np.sqrt(m)))
        rep = incoherence(fact)
        assert rep.mu_left**2 == pytest.approx(1.0)

    def test_spike_is_maximally_coherent(self):
        m = 12
        U = np.zeros((m, 1))
        U[0, 0] = 1.0
        fact = LowRankFactorization(U, np.array([1.0]), np.full((m, 1), 1.0 / np.sqrt(m)))
        rep = incoherence(fact)
        assert rep.mu_left**2 == pytest.approx(m)
        assert rep.mu == pytest.approx(m)

    def test_rejects_non_orthonormal(self):
        U = np.ones((4, 2))
        with pytest.raises(ValueError):
            incoherence(LowRankFactorization(U, np.array([1.0, 1.0]), np.eye(4, 2)))

    def test_scale_invariant(self):
        rng = np.random.default_rng(0)
        f = full_svd(rng.standard_normal((20, 15)))
        fact = LowRankFactorization(f.U[:, :3], f.sigma[:3], f.V[:, :3])
        scaled = LowRankFactorization(f.U[:, :3], 7.5 * f.sigma[:3], f.V[:, :3])
        assert incoherence(fact).mu == incoherence(scaled).mu

    def test_random_factors_logarithmic_report(self):
        # informational scale: orthonormalized Gaussian factors stay within
        # a modest multiple of log n
        rng = np.random.default_rng(1)
        n = 400
        Q, _ = np.linalg.qr(rng.standard_normal((n, 2)))
        fact = LowRankFactorization(Q, np.array([2.0, 1.0]), np.linalg.qr(rng.standard_normal((n, 2)))[0])
        assert incoherence(fact).mu <= 4.0 * np.log(n)


class TestRegularity:
    def test_all_ones(self):
        assert regularity(np.ones((6, 9))) == pytest.approx(1.0)

    def test_single_spike(self):
        X = np.zeros((5, 7))
        X[2, 3] = 4.0
        assert regularity(X) == pytest.approx(np.sqrt(35))

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError):
            regularity(np.zeros((3, 3)))

    def test_incoherent_implies_regular(self):
        # mu-incoherent rank-k matrices are mu*sqrt(k)-regular
        rng = np.random.default_rng(2)
        for trial in range(500):
            m = int(rng.integers(8, 129))
            n = int(rng.integers(8, 129))
            k = int(rng.integers(1, min(6, m, n)))
            fact = sample_incoherent(m, n, k, 4.0, rng)
            mu = factor_mu(fact.U, fact.V, fact.sigma)
            assert regularity(fact.materialize()) <= mu * np.sqrt(k) + 1e-9


class TestSampleIncoherent:
    def test_respects_caps(self):
        rng = np.random.default_rng(3)
        fact = sample_incoherent(64, 48, 3, 3.0, rng)
        assert np.abs(fact.U).max() <= np.sqrt(3.0 / 64)
        assert np.abs(fact.V).max() <= np.sqrt(3.0 / 48)
        assert np.linalg.norm(fact.U.T @ fact.U - np.eye(3)) <= 1e-10

    def test_impossible_mu_raises(self):
        rng = np.random.default_rng(4)
        with pytest.raises(IncoherentSamplingError):
            sample_incoherent(16, 16, 3, 1.0001, rng, max_attempts=50)


class TestConcentration:
    def test_full_sampling_exact(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((20, 20))
        rep = check_concentration(X, p=1.0, trials=10, seed=0)
        assert all(v == 0 for v in rep.violations.values())
        assert rep.worst_ratio == pytest.approx(1.0)

    def test_all_ones_has_no_violations(self):
        X = np.ones((100, 100))
        rep = check_concentration(X, p=0.2, trials=300, seed=1)
        # tail bound is ~2e-26 at delta=0.3; nothing should trip even at 0.1
        assert rep.violations[0.3] == 0
        bound = bernstein_tail_bound(1.0, 0.2, 100, 100, 0.3)
        assert bound < 1e-20

    def test_spike_matrix_downward_violations(self):
        # one-entry matrix: sampled w.p. p, so the downward deviation at
        # delta=0.3 occurs exactly when the spike is unsampled
        X = np.zeros((10, 10))
        X[3, 4] = 2.0
        trials = 2000
        rep = check_concentration(X, p=0.2, trials=trials, seed=2)
        freq_low = rep.violations_low[0.3] / trials
        assert freq_low == pytest.approx(0.8, abs=0.04)
        assert rep.params["alpha"] == pytest.approx(10.0)

    def test_unbiased_mean(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((30, 30))
        p, trials = 0.3, 400
        rep = check_concentration(X, p=p, trials=trials, seed=3)
        # standard error of the mean ratio
        sq = X.ravel() ** 2
        var = np.sum(sq**2) * p * (1 - p) / (p * sq.sum()) ** 2
        se = np.sqrt(var / trials)
        assert abs(rep.mean_ratio - 1.0) <= 4 * se

    def test_reproducible(self):
        X = np.ones((25, 25))
        r1 = check_concentration(X, p=0.2, trials=50, seed=7)
        r2 = check_concentration(X, p=0.2, trials=50, seed=7)
        assert r1 == r2


class TestRipIncoherent:
    def test_full_sampling_no_violations(self):
        rep = check_rip_incoherent(32, 32, 2, 3.0, p=1.0, delta=0.3, trials=20, seed=0)
        assert rep.violations[0.3] == 0

    def test_undersampling_violates(self):
        rep = check_rip_incoherent(64, 64, 2, 3.0, p=2 / 640, delta=0.3, trials=50, seed=1)
        assert rep.violations[0.3] > 0

    def test_reproducible(self):
        r1 = check_rip_incoherent(32, 32, 2, 3.0, p=0.3, delta=0.3, trials=20, seed=2)
        r2 = check_rip_incoherent(32, 32, 2, 3.0, p=0.3, delta=0.3, trials=20, seed=2)
        assert r1 == r2
