import numpy as np
import pytest

from svprec.operators import (
    EntrySamplingMap,
    estimate_isometry_constant,
    gaussian_ensemble,
    random_low_rank,
    sample_entries,
)


def adjoint_identity_holds(A, rng, probes=100, rtol=1e-10):
    for _ in range(probes):
        X = rng.standard_normal((A.m, A.n))
        y = rng.standard_normal(A.d)
        lhs = float(A.apply(X) @ y)
        rhs = float(np.sum(X * A.adjoint(y)))
        if abs(lhs - rhs) > rtol * max(abs(lhs), abs(rhs), 1.0):
            return False
    return True


class TestGaussianEnsemble:
    def test_apply_zero(self):
        A = gaussian_ensemble(6, 5, 20, seed=0)
        assert np.all(A.apply(np.zeros((6, 5))) == 0.0)

    def test_deterministic_under_seed(self):
        A1 = gaussian_ensemble(8, 8, 30, seed=42)
        A2 = gaussian_ensemble(8, 8, 30, seed=42)
        X = np.random.default_rng(0).standard_normal((8, 8))
        assert np.array_equal(A1.apply(X), A2.apply(X))

    def test_linearity(self):
        rng = np.random.default_rng(1)
        A = gaussian_ensemble(7, 6, 25, seed=1)
        X, Y = rng.standard_normal((7, 6)), rng.standard_normal((7, 6))
        lhs = A.apply(1.5 * X - 2.0 * Y)
        rhs = 1.5 * A.apply(X) - 2.0 * A.apply(Y)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)

    def test_adjoint_identity(self):
        A = gaussian_ensemble(10, 9, 40, seed=2)
        assert adjoint_identity_holds(A, np.random.default_rng(3))

    def test_energy_normalization(self):
        # E[||A(X)||^2] = ||X||_F^2 by the 1/d variance scaling
        rng = np.random.default_rng(4)
        A = gaussian_ensemble(40, 40, 1200, seed=5)
        ratios = []
        for _ in range(200):
            X = random_low_rank(40, 40, 2, rng, unit_norm=True)
            ratios.append(float(np.sum(A.apply(X) ** 2)))
        assert 0.85 <= np.mean(ratios) <= 1.15

    def test_normalization_band_tightens_with_d(self):
        rng = np.random.default_rng(6)
        spread = {}
        for d in (100, 1000):
            A = gaussian_ensemble(20, 20, d, seed=d)
            vals = [
                float(np.sum(A.apply(random_low_rank(20, 20, 2, rng, unit_norm=True)) ** 2))
                for _ in range(100)
            ]
            spread[d] = np.std(vals)
            assert 0.7 <= np.mean(vals) <= 1.3
        assert spread[1000] < spread[100]

    def test_requires_positive_d(self):
        with pytest.raises(ValueError):
            gaussian_ensemble(5, 5, 0)


class TestEntrySampling:
    def test_bernoulli_count_concentrates(self):
        A = sample_entries(200, 200, model="bernoulli", p=0.1, seed=7)
        mean, std = 4000.0, np.sqrt(200 * 200 * 0.1 * 0.9)
        assert abs(A.d - mean) <= 4 * std

    def test_full_observation_is_vectorization(self):
        A = sample_entries(4, 3, model="fixed", count=12, seed=8)
        X = np.arange(12, dtype=float).reshape(4, 3)
        assert np.array_equal(A.apply(X), X.ravel())

    def test_deterministic_under_seed(self):
        A1 = sample_entries(50, 50, model="bernoulli", p=0.2, seed=9)
        A2 = sample_entries(50, 50, model="bernoulli", p=0.2, seed=9)
        assert np.array_equal(A1.rows, A2.rows)
        assert np.array_equal(A1.cols, A2.cols)

    def test_adjoint_identity(self):
        A = sample_entries(12, 10, model="bernoulli", p=0.3, seed=10)
        assert adjoint_identity_holds(A, np.random.default_rng(11))

    def test_projection_idempotent(self):
        A = sample_entries(15, 15, model="bernoulli", p=0.25, seed=12)
        rng = np.random.default_rng(13)
        X = rng.standard_normal((15, 15))
        once = A.adjoint(A.apply(X))
        twice = A.adjoint(A.apply(once))
        assert np.linalg.norm(once - twice) <= 1e-12

    def test_canonical_order_row_major(self):
        A = sample_entries(30, 30, model="fixed", count=50, seed=14)
        flat = A.rows * 30 + A.cols
        assert np.all(np.diff(flat) > 0)

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            sample_entries(5, 5, model="bernoulli", p=1.5)
        with pytest.raises(ValueError):
            sample_entries(5, 5, model="fixed", count=0)

    def test_density_fallback(self):
        A = EntrySamplingMap(10, 10, [0, 1], [0, 1], model="fixed")
        assert A.density == pytest.approx(0.02)


class TestIsometryEstimate:
    def test_exact_isometry_gives_zero(self):
        A = sample_entries(8, 8, model="fixed", count=64, seed=0)
        assert estimate_isometry_constant(A, 2, trials=20, seed=1) <= 1e-10

    def test_gaussian_regime_below_one_third(self):
        A = gaussian_ensemble(30, 30, 6 * 2 * 30, seed=15)
        assert estimate_isometry_constant(A, 2, trials=500, seed=2) < 1.0 / 3.0

    def test_monotone_in_trials(self):
        A = gaussian_ensemble(20, 20, 200, seed=16)
        one = estimate_isometry_constant(A, 2, trials=1, seed=3)
        many = estimate_isometry_constant(A, 2, trials=100, seed=3)
        assert one <= many
