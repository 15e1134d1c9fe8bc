"""Feature-map assembly, signature rescaling, alignment, and metrics."""

import math

import numpy as np
import pytest

from manifoldrf.errors import AlignmentError
from manifoldrf.features import (
    assemble_mrf,
    frobenius_align,
    grid_rescale_constant,
    kernel_metrics,
    relative_mse,
    rescale_signatures,
)


def toy_g_values(num_points=12, num_anchors=50, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, size=(num_points, num_anchors))


class TestAssembleMrf:
    def test_full_variant_reproduces_anchor_sum(self):
        """Dot products equal sum_w g(x, w) g(y, w) exactly."""
        g = toy_g_values(num_points=20, num_anchors=200)
        fmap = assemble_mrf(g, variant="full")
        np.testing.assert_allclose(fmap.gram(), g @ g.T, atol=1e-12)

    def test_sampled_variant_unbiased(self):
        """Mean over seeds converges to the full-variant value (3 SE)."""
        g = toy_g_values(num_points=6, num_anchors=50, seed=1)
        truth = (g @ g.T)[0, 1]
        draws = np.array([
            assemble_mrf(g, variant="sampled", num_features=8,
                         seed=s).gram()[0, 1]
            for s in range(2000)
        ])
        se = draws.std(ddof=1) / math.sqrt(len(draws))
        assert abs(draws.mean() - truth) < 3.0 * se

    def test_sampled_variance_scales_inversely(self):
        g = toy_g_values(num_points=4, num_anchors=60, seed=2)

        def var_at(m, seed0):
            vals = [assemble_mrf(g, variant="sampled", num_features=m,
                                 seed=seed0 + s).gram()[0, 1]
                    for s in range(3000)]
            return np.var(vals, ddof=1)

        ratio = var_at(4, 0) / var_at(16, 50_000)
        assert 3.0 < ratio < 5.0

    def test_single_anchor_column(self):
        g = toy_g_values(seed=3)
        fmap = assemble_mrf(g, variant="sampled", num_features=1, seed=11)
        anchor = fmap.anchors[0]
        p = fmap.density[anchor]
        np.testing.assert_allclose(fmap.features[:, 0],
                                   g[:, anchor] / np.sqrt(p), rtol=1e-12)

    def test_non_uniform_density(self):
        g = toy_g_values(seed=4)
        density = np.linspace(1.0, 2.0, g.shape[1])
        fmap = assemble_mrf(g, variant="sampled", num_features=30,
                            density=density, seed=5)
        assert fmap.features.shape == (g.shape[0], 30)
        assert np.all(fmap.features >= 0)

    def test_rejects_negative_values(self):
        with pytest.raises(ValueError, match="non-negative"):
            assemble_mrf(-toy_g_values(), variant="full")


class TestRescaleSignatures:
    def test_constant_formula(self):
        """c = (2 pi sigma^2)^{d/4} n^{d/2}, evaluated independently."""
        d, sigma, n = 2, 0.2, 5
        expected = math.sqrt(2.0 * math.pi * sigma * sigma) * n
        assert grid_rescale_constant(d, sigma, n) == pytest.approx(expected,
                                                                   rel=1e-14)

    def test_monotone_in_n(self):
        values = [grid_rescale_constant(2, 0.2, n) for n in (5, 15, 25, 55)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_bilinearity_of_dot_products(self):
        rng = np.random.default_rng(6)
        phi = rng.uniform(size=(4, 25))
        c = grid_rescale_constant(2, 0.2, 5)
        psi = rescale_signatures(phi, 2, 0.2, 5)
        np.testing.assert_allclose(psi @ psi.T, c**2 * (phi @ phi.T), rtol=1e-12)


class TestFrobeniusAlign:
    def test_recovers_scalar_multiple(self):
        rng = np.random.default_rng(7)
        K = rng.normal(size=(6, 6))
        alpha, aligned = frobenius_align(2.0 * K, K)
        assert alpha == pytest.approx(0.5, rel=1e-14)
        np.testing.assert_allclose(aligned, K, atol=1e-12)

    def test_identity_alignment(self):
        K = np.random.default_rng(8).normal(size=(5, 5))
        alpha, _ = frobenius_align(K, K)
        assert alpha == pytest.approx(1.0, rel=1e-14)

    def test_idempotent(self):
        rng = np.random.default_rng(9)
        K_est = rng.normal(size=(7, 7))
        K_gt = rng.normal(size=(7, 7))
        _, once = frobenius_align(K_est, K_gt)
        alpha2, _ = frobenius_align(once, K_gt)
        assert alpha2 == pytest.approx(1.0, abs=1e-12)

    def test_argmax_preserved(self):
        rng = np.random.default_rng(10)
        K_est = np.abs(rng.normal(size=(8, 8)))
        K_gt = np.abs(rng.normal(size=(8, 8)))
        _, aligned = frobenius_align(K_est, K_gt)
        assert np.argmax(aligned) == np.argmax(K_est)

    def test_zero_estimate_rejected(self):
        with pytest.raises(AlignmentError):
            frobenius_align(np.zeros((3, 3)), np.eye(3))


class TestRelativeMse:
    def test_exact_match_is_zero(self):
        K = np.random.default_rng(11).normal(size=(4, 4))
        assert relative_mse(K, K) == 0.0

    def test_double_is_one(self):
        K = np.random.default_rng(12).normal(size=(5, 5))
        assert relative_mse(2.0 * K, K) == pytest.approx(1.0, rel=1e-12)

    def test_mean_over_repetitions(self):
        truth = np.ones(10)
        reps = np.stack([truth, 2.0 * truth, truth])
        assert relative_mse(reps, truth) == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_zero_truth_rejected(self):
        with pytest.raises(ValueError):
            relative_mse(np.ones(3), np.zeros(3))


class TestKernelMetrics:
    def test_perfect_match(self):
        K = np.random.default_rng(13).normal(size=(6, 6))
        m = kernel_metrics(K, K)
        assert m["r2"] == pytest.approx(1.0)
        assert m["mean_re"] == 0.0
        assert m["mse"] == 0.0

    def test_constant_shift_closed_form(self):
        """Adding c everywhere gives MSE = c^2 and R^2 = 1 - c^2 N^2 / SS_tot."""
        rng = np.random.default_rng(14)
        K = rng.normal(size=(10, 10))
        c = 0.05
        m = kernel_metrics(K + c, K)
        assert m["mse"] == pytest.approx(c * c, rel=1e-12)
        ss_tot = np.sum((K - K.mean()) ** 2)
        expect_r2 = 1.0 - (c * c * K.size) / ss_tot
        assert m["r2"] == pytest.approx(expect_r2, rel=1e-10)

    def test_clamped_relative_error(self):
        """|0.15 - 0.05| / max(0.05, 0.1) = 1; |0.9 - 1| / max(1, 0.1) = 0.1."""
        K_gt = np.array([[0.05, 1.0]])
        K_est = np.array([[0.15, 0.9]])
        m = kernel_metrics(K_est, K_gt, eps=0.1)
        assert m["mean_re"] == pytest.approx(0.5 * (1.0 + 0.1))
        assert m["median_re"] == pytest.approx(0.5 * (1.0 + 0.1))

    def test_constant_truth_rejected(self):
        with pytest.raises(ValueError, match="constant"):
            kernel_metrics(np.ones((3, 3)), np.ones((3, 3)))
