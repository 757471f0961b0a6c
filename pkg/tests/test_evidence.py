"""Core evidence machinery: decomposition, evaluation, maximization."""

import math

import numpy as np
import pytest

from hubrank import evidence as ev
from hubrank.errors import DegenerateLabelsError, DomainError, InputError

from conftest import dense_log_evidence, linear_model_instance


class TestTypes:
    def test_feature_matrix_rejects_nan(self):
        bad = np.ones((3, 2))
        bad[1, 1] = np.nan
        with pytest.raises(InputError):
            ev.FeatureMatrix(bad)

    def test_feature_matrix_rejects_single_row(self):
        with pytest.raises(InputError):
            ev.FeatureMatrix(np.ones((1, 4)))

    def test_label_vector_rejects_inf(self):
        with pytest.raises(InputError):
            ev.LabelVector([1.0, np.inf])

    def test_grid_spec_rejects_sparse_grid(self):
        with pytest.raises(InputError):
            ev.GridSpec(num_alpha=10)

    def test_grid_spec_rejects_nonpositive_bounds(self):
        with pytest.raises(InputError):
            ev.GridSpec(alpha_min=0.0)


class TestDecompose:
    def test_identity(self):
        factors = ev.decompose(ev.FeatureMatrix(np.eye(3)))
        assert factors.rank == 3
        np.testing.assert_allclose(factors.singular_values, [1.0, 1.0, 1.0])

    def test_all_zeros_has_rank_zero(self):
        factors = ev.decompose(ev.FeatureMatrix(np.zeros((4, 2))))
        assert factors.rank == 0
        assert factors.left_vectors.shape == (4, 0)
        assert factors.right_vectors.shape == (2, 0)

    def test_permuted_diagonal(self):
        f = np.array([[3.0, 0.0], [0.0, 0.0], [0.0, 4.0], [0.0, 0.0]])
        factors = ev.decompose(ev.FeatureMatrix(f))
        np.testing.assert_allclose(factors.singular_values, [4.0, 3.0])
        assert factors.rank == 2

    @pytest.mark.parametrize("n,dim", [(30, 7), (7, 30), (50, 50)])
    def test_factor_invariants(self, n, dim, rng):
        f = rng.normal(size=(n, dim))
        factors = ev.decompose(ev.FeatureMatrix(f))
        r = factors.rank
        assert r <= min(n, dim)
        s = factors.singular_values
        assert np.all(s > 0) and np.all(np.diff(s) <= 0)
        np.testing.assert_allclose(
            factors.left_vectors.T @ factors.left_vectors, np.eye(r), atol=1e-8
        )
        np.testing.assert_allclose(
            factors.right_vectors.T @ factors.right_vectors, np.eye(r), atol=1e-8
        )
        rebuilt = factors.left_vectors @ (s[:, None] * factors.right_vectors.T)
        assert np.linalg.norm(rebuilt - f) <= 1e-8 * np.linalg.norm(f)

    def test_rank_deficiency_detected(self, rng):
        base = rng.normal(size=(40, 3))
        f = np.hstack([base, base @ rng.normal(size=(3, 5))])
        factors = ev.decompose(ev.FeatureMatrix(f))
        assert factors.rank == 3


class TestProjectLabels:
    def test_orthonormal_complete_basis_preserves_energy(self):
        factors = ev.decompose(ev.FeatureMatrix(np.eye(3)))
        projected = ev.project_labels(factors, ev.LabelVector([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(np.sort(np.abs(projected.z_head)), [1.0, 2.0, 3.0])
        assert projected.residual_energy == 0.0

    def test_zero_features_leave_all_energy_residual(self):
        factors = ev.decompose(ev.FeatureMatrix(np.zeros((4, 2))))
        projected = ev.project_labels(factors, ev.LabelVector(np.ones(4)))
        assert projected.z_head.shape == (0,)
        assert projected.residual_energy == pytest.approx(4.0)

    def test_energy_identity_random(self, rng):
        f = rng.normal(size=(50, 8))
        y = rng.normal(size=50)
        factors = ev.decompose(ev.FeatureMatrix(f))
        projected = ev.project_labels(factors, ev.LabelVector(y))
        assert projected.residual_energy >= 0.0
        total = float(projected.z_head @ projected.z_head) + projected.residual_energy
        assert total == pytest.approx(float(y @ y), abs=1e-10)

    def test_length_mismatch(self, rng):
        factors = ev.decompose(ev.FeatureMatrix(rng.normal(size=(10, 3))))
        with pytest.raises(InputError):
            ev.project_labels(factors, ev.LabelVector(np.ones(9)))


class TestEvaluateEvidence:
    def test_zero_features_hand_value(self):
        factors = ev.decompose(ev.FeatureMatrix(np.zeros((4, 2))))
        value, m = ev.evaluate_evidence(factors, ev.LabelVector(np.ones(4)), 1.0, 1.0)
        assert value == pytest.approx(-2.0 * math.log(2.0 * math.pi) - 2.0, abs=1e-12)
        np.testing.assert_array_equal(m, np.zeros(2))

    def test_single_point_hand_value(self):
        factors = ev.SvdFactors(np.array([[1.0]]), np.array([1.0]), np.array([[1.0]]))
        value, m = ev.evaluate_evidence(factors, ev.LabelVector([1.0]), 1.0, 1.0)
        expected = -0.5 * math.log(2.0 * math.pi) - 0.125 - 0.125 - 0.5 * math.log(2.0)
        assert value == pytest.approx(expected, abs=1e-12)
        assert value == pytest.approx(-1.51551, abs=5e-6)
        np.testing.assert_allclose(m, [0.5])

    @pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (2.7, 0.9), (140.0, 0.02), (1e-3, 30.0)])
    def test_matches_dense_oracle(self, alpha, beta):
        features, y = linear_model_instance(7, 100, 10)
        factors = ev.decompose(features)
        value, m = ev.evaluate_evidence(factors, y, alpha, beta)
        expected, m_dense = dense_log_evidence(features.data, y.values, alpha, beta)
        assert value == pytest.approx(expected, abs=1e-9)
        np.testing.assert_allclose(m, m_dense, atol=1e-9)

    def test_rejects_nonpositive_hyperparameters(self):
        features, y = linear_model_instance(0, 20, 4)
        factors = ev.decompose(features)
        with pytest.raises(DomainError):
            ev.evaluate_evidence(factors, y, -1.0, 1.0)
        with pytest.raises(DomainError):
            ev.evaluate_evidence(factors, y, 1.0, 0.0)


class TestFixedPointMap:
    def test_hand_value(self):
        factors = ev.SvdFactors(np.array([[1.0], [0.0]]), np.array([1.0]), np.array([[1.0]]))
        projected = ev.ProjectedLabels(np.array([1.0]), 1.0)
        assert ev.fixed_point_map(factors, projected, 2, 1.0) == pytest.approx(5.0 / 3.0)

    def test_asymptotic_slope(self):
        factors = ev.SvdFactors(np.eye(3)[:, :2], np.array([2.0, 1.0]), np.eye(2))
        projected = ev.ProjectedLabels(np.array([10.0, 1.0]), 0.0)
        t = 1e6
        slope = ev.fixed_point_map(factors, projected, 3, t) / t
        expected = (5.0 / 3.0) * (101.0 / 401.0)
        assert slope == pytest.approx(expected, rel=1e-2)

    def test_residual_vanishes_at_solution(self):
        features, y = linear_model_instance(3, 80, 6)
        factors = ev.decompose(features)
        solution = ev.maximize_evidence_fixed_point(factors, y)
        projected = ev.project_labels(factors, y)
        residual = abs(ev.fixed_point_map(factors, projected, 80, solution.t) - solution.t)
        assert residual <= 1e-5 * solution.t

    def test_domain_errors(self):
        factors = ev.SvdFactors(np.array([[1.0], [0.0]]), np.array([1.0]), np.array([[1.0]]))
        projected = ev.ProjectedLabels(np.array([1.0]), 1.0)
        with pytest.raises(DomainError):
            ev.fixed_point_map(factors, projected, 2, 0.0)
        orthogonal = ev.ProjectedLabels(np.array([0.0]), 1.0)
        with pytest.raises(DegenerateLabelsError):
            ev.fixed_point_map(factors, orthogonal, 2, 1.0)


class TestCheckConvergence:
    def _factors(self):
        return ev.SvdFactors(np.eye(3)[:, :2], np.array([2.0, 1.0]), np.eye(2))

    def test_aligned_labels_guaranteed(self):
        projected = ev.ProjectedLabels(np.array([10.0, 1.0]), 0.0)
        report = ev.check_convergence(self._factors(), projected, 3)
        assert report.ordering_statistic == pytest.approx(1396.0)
        assert report.guaranteed and report.rank_condition
        assert report.slope_at_infinity < 1.0

    def test_anti_aligned_labels_not_guaranteed(self):
        projected = ev.ProjectedLabels(np.array([0.0, 1.0]), 100.0)
        report = ev.check_convergence(self._factors(), projected, 3)
        assert report.ordering_statistic == pytest.approx(-1004.0)
        assert not report.guaranteed
        assert report.slope_at_infinity > 1.0

    def test_full_rank_square_never_guaranteed(self, rng):
        f = rng.normal(size=(6, 6))
        factors = ev.decompose(ev.FeatureMatrix(f))
        assert factors.rank == 6
        y = ev.LabelVector(f @ rng.normal(size=6))
        projected = ev.project_labels(factors, y)
        report = ev.check_convergence(factors, projected, 6)
        assert not report.rank_condition
        assert not report.guaranteed

    def test_cross_check_of_statistic_and_slope(self):
        for seed in range(12):
            gen = np.random.default_rng(seed)
            factors = ev.decompose(ev.FeatureMatrix(gen.normal(size=(25, 5))))
            projected = ev.project_labels(factors, ev.LabelVector(gen.normal(size=25)))
            report = ev.check_convergence(factors, projected, 25)
            assert (report.ordering_statistic > 0) == (report.slope_at_infinity < 1.0)


class TestMaximization:
    @pytest.mark.parametrize("backend", ev.BACKENDS)
    def test_self_consistency_at_convergence(self, backend):
        features, y = linear_model_instance(11, 120, 9)
        solution = ev.maximize_evidence(features, y, backend=backend)
        assert solution.converged
        factors = ev.decompose(features)
        beta_sig = solution.beta * factors.singular_values**2
        gamma = float(np.sum(beta_sig / (solution.alpha + beta_sig)))
        mtm = float(solution.m @ solution.m)
        residual = float(np.sum((features.data @ solution.m - y.values) ** 2))
        assert solution.alpha == pytest.approx(gamma / mtm, rel=1e-5)
        assert solution.beta == pytest.approx((features.n - gamma) / residual, rel=1e-5)
        assert solution.t == pytest.approx(solution.alpha / solution.beta, rel=1e-12)

    def test_gamma_within_bounds(self):
        features, y = linear_model_instance(5, 60, 8)
        solution = ev.maximize_evidence(features, y)
        assert 0.0 < solution.gamma < min(ev.decompose(features).rank + 1, features.n)

    def test_log_evidence_matches_dense_evaluation(self):
        features, y = linear_model_instance(23, 90, 12)
        for backend in ev.BACKENDS:
            solution = ev.maximize_evidence(features, y, backend=backend)
            expected, _ = dense_log_evidence(features.data, y.values, solution.alpha, solution.beta)
            assert solution.log_evidence == pytest.approx(expected, abs=1e-8)

    def test_constant_labels_rejected(self):
        features, _ = linear_model_instance(2, 30, 4)
        with pytest.raises(DegenerateLabelsError):
            ev.maximize_evidence(features, ev.LabelVector(np.full(30, 3.3)))

    def test_orthogonal_labels_rejected(self):
        f = np.zeros((6, 2))
        f[:3, 0] = [1.0, 2.0, 1.0]
        f[:3, 1] = [-1.0, 1.0, 0.5]
        y = np.array([0.0, 0.0, 0.0, 1.0, -1.0, 2.0])  # supported off the column space
        features = ev.FeatureMatrix(f)
        factors = ev.decompose(features)
        with pytest.raises(DegenerateLabelsError):
            ev.maximize_evidence_fixed_point(factors, ev.LabelVector(y))
        with pytest.raises(DegenerateLabelsError):
            ev.maximize_evidence_mackay(features, ev.LabelVector(y), "naive")

    def test_rank_zero_rejected(self):
        features = ev.FeatureMatrix(np.zeros((5, 3)))
        with pytest.raises(DegenerateLabelsError):
            ev.maximize_evidence(features, ev.LabelVector([1.0, 2.0, 0.5, 1.5, 0.0]))

    def test_unknown_backend(self):
        features, y = linear_model_instance(1, 20, 3)
        with pytest.raises(InputError):
            ev.maximize_evidence(features, y, backend="newton")

    def test_weak_signal_returns_unconverged_instead_of_raising(self):
        gen = np.random.default_rng(3)
        features = ev.FeatureMatrix(gen.normal(size=(10, 4)))
        y = ev.LabelVector((gen.random(10) > 0.5).astype(float) - 0.0)
        factors = ev.decompose(features)
        solution = ev.maximize_evidence_fixed_point(factors, y)
        assert math.isfinite(solution.log_evidence)
        assert math.isfinite(solution.t) and solution.t > 0

    def test_interpolation_regime_terminates_finite(self):
        # far more feature dimensions than samples: the linear model can fit
        # the labels exactly, the noise precision runs to the boundary, and
        # the solver must stop at a finite, well-scaled iterate
        gen = np.random.default_rng(8)
        features = ev.FeatureMatrix(20.0 * gen.normal(size=(18, 512)))
        y = ev.LabelVector((gen.random(18) > 0.5).astype(float))
        for backend in ev.BACKENDS:
            solution = ev.maximize_evidence(features, y, backend=backend)
            assert math.isfinite(solution.log_evidence)
            assert math.isfinite(solution.beta) and solution.beta > 0
            assert 0.0 < solution.gamma < 18.0

    def test_exactly_fitted_labels_terminate_finite(self):
        gen = np.random.default_rng(9)
        f = gen.normal(size=(20, 4))
        y = ev.LabelVector(f @ gen.normal(size=4))  # zero-noise planted relation
        features = ev.FeatureMatrix(f)
        solution = ev.maximize_evidence_fixed_point(ev.decompose(features), y)
        assert math.isfinite(solution.log_evidence)
        assert solution.beta > 1e6  # effectively noiseless


class TestOracle:
    def test_iterative_dominates_grid(self):
        for seed in (2, 9, 31):
            features, y = linear_model_instance(seed, 100, 8)
            factors = ev.decompose(features)
            solution = ev.maximize_evidence_fixed_point(factors, y)
            oracle = ev.oracle_maximize(factors, y)
            assert solution.log_evidence >= oracle.log_evidence - 1e-9

    def test_oracle_lands_within_one_cell(self):
        features, y = linear_model_instance(13, 100, 8)
        factors = ev.decompose(features)
        solution = ev.maximize_evidence_fixed_point(factors, y)
        oracle = ev.oracle_maximize(factors, y)
        grid = oracle.grid
        step_alpha = math.log(grid.alpha_max / grid.alpha_min) / (grid.num_alpha - 1)
        step_beta = math.log(grid.beta_max / grid.beta_min) / (grid.num_beta - 1)
        assert abs(math.log(oracle.alpha / solution.alpha)) <= step_alpha
        assert abs(math.log(oracle.beta / solution.beta)) <= step_beta

    def test_zero_features_closed_form_maximum(self):
        factors = ev.decompose(ev.FeatureMatrix(np.zeros((4, 2))))
        grid = ev.GridSpec(num_alpha=201, num_beta=201)
        oracle = ev.oracle_maximize(factors, ev.LabelVector(np.ones(4)), grid)
        assert oracle.beta == pytest.approx(1.0, rel=1e-12)
        expected = -0.5 * math.log(2.0 * math.pi) - 0.5
        assert oracle.log_evidence / 4.0 == pytest.approx(expected, abs=1e-9)
        assert oracle.log_evidence / 4.0 == pytest.approx(-1.41894, abs=5e-6)


class TestOracleProximity:
    def test_planted_instance_matches_dense_grid_both_ways(self):
        features, y = linear_model_instance(77, 200, 16)
        factors = ev.decompose(features)
        dense_grid = ev.GridSpec(1e-3, 1e3, 1e-3, 1e3, 400, 400)
        oracle = ev.oracle_maximize(factors, y, dense_grid)
        for backend in ev.BACKENDS:
            solution = ev.maximize_evidence(features, y, backend=backend)
            assert solution.normalized_evidence == pytest.approx(
                oracle.log_evidence / 200, abs=1e-4
            )


class TestIterationCostScaling:
    def test_map_application_cost_is_rank_bound_not_dimension_bound(self):
        import time

        n = 256
        costs = {}
        for dim in (128, 1024):
            gen = np.random.default_rng(1)
            features = ev.FeatureMatrix(gen.normal(size=(n, dim)))
            y = ev.LabelVector(features.data @ gen.normal(size=dim) + gen.normal(size=n))
            factors = ev.decompose(features)
            projected = ev.project_labels(factors, y)
            repeats = 2000
            best = math.inf
            for _ in range(3):
                start = time.perf_counter()
                for k in range(repeats):
                    ev.fixed_point_map(factors, projected, n, 0.1 + (k % 7))
                best = min(best, (time.perf_counter() - start) / repeats)
            costs[dim] = best
        # dimension grew 8x but the loop is O(rank) with rank <= n = 256:
        # anything clearly below linear growth passes
        assert costs[1024] <= 5.0 * costs[128]
