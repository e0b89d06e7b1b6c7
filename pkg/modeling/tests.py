"""
Tests for modeling app ridge and meta-learning code.
LAMeL Toolkit - Unit Tests

This module contains unit tests for the modeling app including:
- Ridge fits (primal and dual paths, intercepts, prior origins)
- Lambda selection by leave-one-out and k-fold CV
- The three LAMeL phases and their structural identities
- Coefficient text files and meta-model documents
"""

import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from scipy import sparse

from core.exceptions import FormatError, MetaLearningError, RankDeficientError, RidgeError
from molecules.graphlets import FeatureMatrix, FingerprintVocabulary
from .io import (
    coefficients_from_text, coefficients_to_text, model_from_document, model_to_document,
    read_coefficients, read_model, write_coefficients, write_model,
)
from .lamel import (
    LambdaPolicy, SupportEnsemble, SupportModel, Task, anchored_loo_mse, fit, fit_parallel, fit_perpendicular,
    fit_support, in_span_fraction, meta_features, predict_meta, span_residual,
)
from .linmodel import (
    DEFAULT_LAMBDA_GRID, Coefficients, RidgeConfig, loo_mse, normal_equation_residual, predict,
    ridge_fit, ridge_fit_with_origin, select_lambda,
)


def make_task(task_id, counts, y, forms=None):
    """Task over an integer count matrix with placeholder column names."""
    counts = np.asarray(counts, dtype=np.int64)
    forms = forms or [f'f{i:03d}' for i in range(counts.shape[1])]
    vocabulary = FingerprintVocabulary.from_forms(forms, 1)
    row_ids = tuple(f'{task_id}#{i}' for i in range(counts.shape[0]))
    return Task(task_id, FeatureMatrix(sparse.csr_matrix(counts), row_ids, vocabulary), y)


def random_ensemble(rng, n_features, n_tasks):
    models = tuple(
        SupportModel(f's{t}', Coefficients(rng.normal(size=n_features), rng.normal()), 1.0)
        for t in range(n_tasks)
    )
    return SupportEnsemble(models)


class RidgeFitTest(SimpleTestCase):
    """Test cases for ridge_fit."""

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_identity_unregularized(self):
        coef = ridge_fit(np.eye(2), [1.0, 0.0], RidgeConfig(0.0, fit_intercept=False))
        np.testing.assert_allclose(coef.beta, [1.0, 0.0], atol=1e-12)
        self.assertFalse(coef.rank_deficient)

    def test_scalar_closed_form(self):
        coef = ridge_fit([[1.0]], [1.0], RidgeConfig(1.0, fit_intercept=False))
        self.assertAlmostEqual(coef.beta[0], 0.5, places=12)

    def test_matches_independent_normal_equation_solve(self):
        X = self.rng.normal(size=(30, 10))
        y = self.rng.normal(size=30)
        coef = ridge_fit(X, y, RidgeConfig(0.3, fit_intercept=False))
        expected = np.linalg.solve(X.T @ X + 0.3 * np.eye(10), X.T @ y)
        np.testing.assert_allclose(coef.beta, expected, rtol=1e-8, atol=1e-10)

    def test_normal_equation_residual_both_paths(self):
        for trial in range(50):
            n, n_features = ((30, 10), (8, 60))[trial % 2]
            X = self.rng.normal(size=(n, n_features))
            y = self.rng.normal(size=n)
            lam = float(10 ** self.rng.uniform(-2, 2))
            coef = ridge_fit(X, y, RidgeConfig(lam, fit_intercept=False))
            self.assertLessEqual(normal_equation_residual(X, y, coef, lam), 1e-8)

    def test_sparse_and_dense_agree(self):
        for n, n_features in ((40, 6), (6, 40)):
            counts = self.rng.poisson(1.0, size=(n, n_features)).astype(float)
            y = self.rng.normal(size=n)
            dense = ridge_fit(counts, y, RidgeConfig(0.5))
            sparse_fit = ridge_fit(sparse.csr_matrix(counts), y, RidgeConfig(0.5))
            np.testing.assert_allclose(sparse_fit.beta, dense.beta, atol=1e-10)
            self.assertAlmostEqual(sparse_fit.intercept, dense.intercept, places=10)

    def test_intercept_recovers_offset(self):
        X = self.rng.normal(size=(50, 3))
        beta = np.array([1.0, -2.0, 0.5])
        coef = ridge_fit(X, X @ beta + 3.0, RidgeConfig(1e-8))
        np.testing.assert_allclose(coef.beta, beta, atol=1e-6)
        self.assertAlmostEqual(coef.intercept, 3.0, places=6)

    def test_dual_path_centering_matches_explicit_centering(self):
        X = self.rng.normal(size=(5, 30)) + 2.0
        y = self.rng.normal(size=5)
        implicit = ridge_fit(X, y, RidgeConfig(0.7))
        centered = ridge_fit(X - X.mean(axis=0), y - y.mean(), RidgeConfig(0.7, fit_intercept=False))
        np.testing.assert_allclose(implicit.beta, centered.beta, atol=1e-10)

    def test_standardize_is_scale_invariant(self):
        X = self.rng.normal(size=(40, 4))
        y = self.rng.normal(size=40)
        config = RidgeConfig(2.0, standardize=True)
        base = predict(X, ridge_fit(X, y, config))
        rescaled = X * np.array([10.0, 0.1, 1.0, 3.0])
        np.testing.assert_allclose(predict(rescaled, ridge_fit(rescaled, y, config)), base, atol=1e-10)

    def test_rank_deficient_unregularized(self):
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([1.0, 2.0, 3.0])
        coef = ridge_fit(X, y, RidgeConfig(0.0, fit_intercept=False))
        self.assertTrue(coef.rank_deficient)
        np.testing.assert_allclose(coef.beta, [0.5, 0.5], atol=1e-10)
        with self.assertRaises(RankDeficientError):
            ridge_fit(X, y, RidgeConfig(0.0, fit_intercept=False, min_norm_fallback=False))

    def test_invalid_inputs(self):
        with self.assertRaises(RidgeError):
            ridge_fit(np.ones((3, 2)), np.ones(2))
        with self.assertRaises(RidgeError):
            ridge_fit(np.array([[np.nan]]), [1.0])
        with self.assertRaises(RidgeError):
            RidgeConfig(-1.0)

    def test_monotone_shrinkage(self):
        X = self.rng.normal(size=(20, 8))
        y = self.rng.normal(size=20)
        norms = [ridge_fit(X, y, RidgeConfig(lam, fit_intercept=False)).norm() for lam in DEFAULT_LAMBDA_GRID]
        for larger, smaller in zip(norms, norms[1:]):
            self.assertGreaterEqual(larger + 1e-12, smaller)


class RidgeOriginTest(SimpleTestCase):
    """Test cases for ridge_fit_with_origin."""

    def setUp(self):
        self.rng = np.random.default_rng(1)
        self.X = self.rng.normal(size=(15, 6))
        self.y = self.rng.normal(size=15)
        self.origin = Coefficients(self.rng.normal(size=6))

    def test_zero_residual(self):
        for lam in (0.0, 1.0, 1e6):
            coef = ridge_fit_with_origin([[1.0]], [1.0], Coefficients([1.0]), RidgeConfig(lam, fit_intercept=False))
            self.assertAlmostEqual(coef.beta[0], 1.0, places=12)

    def test_zero_origin_reduces_to_ridge(self):
        config = RidgeConfig(0.5)
        np.testing.assert_allclose(
            ridge_fit_with_origin(self.X, self.y, Coefficients.zeros(6), config).beta,
            ridge_fit(self.X, self.y, config).beta,
            atol=1e-14,
        )

    def test_large_lambda_returns_origin(self):
        coef = ridge_fit_with_origin(self.X, self.y, self.origin, RidgeConfig(1e12, fit_intercept=False))
        np.testing.assert_allclose(coef.beta, self.origin.beta, atol=1e-6)

    def test_shift_identity(self):
        config = RidgeConfig(0.8, fit_intercept=False)
        shifted = ridge_fit(self.X, self.y - self.X @ self.origin.beta, config)
        fitted = ridge_fit_with_origin(self.X, self.y, self.origin, config)
        np.testing.assert_allclose(fitted.beta - self.origin.beta, shifted.beta, atol=1e-10)

    def test_origin_length_checked(self):
        with self.assertRaises(RidgeError):
            ridge_fit_with_origin(self.X, self.y, Coefficients.zeros(3))


class PredictTest(SimpleTestCase):
    """Test cases for predict."""

    def test_zero_matrix_gives_intercept(self):
        np.testing.assert_array_equal(predict(np.zeros((3, 2)), Coefficients([1.0, 2.0], 4.0)), [4.0, 4.0, 4.0])

    def test_identity_gives_beta(self):
        np.testing.assert_array_equal(predict(np.eye(3), Coefficients([1.0, -2.0, 3.0])), [1.0, -2.0, 3.0])

    def test_square_invertible_interpolates(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        y = rng.normal(size=4)
        coef = ridge_fit(X, y, RidgeConfig(0.0, fit_intercept=False))
        np.testing.assert_allclose(predict(X, coef), y, atol=1e-10)

    def test_linearity(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(7, 4))
        first = Coefficients(rng.normal(size=4), 1.5)
        second = Coefficients(rng.normal(size=4), -0.5)
        combined = first.scaled(2.0) + second.scaled(-3.0)
        np.testing.assert_allclose(
            predict(X, combined),
            2.0 * predict(X, first) - 3.0 * predict(X, second),
            atol=1e-12,
        )

    def test_dimension_mismatch(self):
        with self.assertRaises(RidgeError):
            predict(np.ones((2, 3)), Coefficients.zeros(2))


class SelectLambdaTest(SimpleTestCase):
    """Test cases for select_lambda."""

    def test_single_value_grid(self):
        selection = select_lambda(np.ones((1, 2)), [1.0], grid=[0.25])
        self.assertEqual(selection.lam, 0.25)

    def test_pure_noise_prefers_grid_maximum(self):
        grid = np.logspace(-3, 2, 6)
        picks = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            picks.append(select_lambda(rng.normal(size=(25, 10)), rng.normal(size=25), grid=grid).lam)
        self.assertGreater(sum(1 for lam in picks if lam == grid[-1]), 10)

    def test_noiseless_linear_prefers_grid_minimum(self):
        picks = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(60, 5))
            selection = select_lambda(X, X @ rng.normal(size=5) + 2.0)
            self.assertEqual(selection.method, '5-fold')
            picks.append(selection.lam)
        self.assertGreater(sum(1 for lam in picks if lam == DEFAULT_LAMBDA_GRID[0]), 10)

    def test_loo_matches_explicit_refits(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(12, 4))
        y = rng.normal(size=12)
        grid = [0.1, 1.0, 10.0]
        selection = select_lambda(X, y, grid=grid, folds='loo')
        for lam, score in selection.scores:
            errors = []
            for i in range(12):
                keep = np.arange(12) != i
                coef = ridge_fit(X[keep], y[keep], RidgeConfig(lam))
                errors.append(y[i] - predict(X[i:i + 1], coef)[0])
            self.assertAlmostEqual(score, float(np.mean(np.square(errors))), places=10)

    def test_loo_mse_matches_explicit_refits(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(9, 3))
        y = rng.normal(size=9)
        errors = []
        for i in range(9):
            keep = np.arange(9) != i
            coef = ridge_fit(X[keep], y[keep], RidgeConfig(0.5))
            errors.append(y[i] - predict(X[i:i + 1], coef)[0])
        self.assertAlmostEqual(loo_mse(X, y, 0.5), float(np.mean(np.square(errors))), places=10)
        with self.assertRaises(RidgeError):
            loo_mse(np.ones((1, 2)), [1.0], 0.5)

    def test_ties_go_to_larger_lambda(self):
        X = np.random.default_rng(5).normal(size=(10, 3))
        self.assertEqual(select_lambda(X, np.full(10, 2.0), grid=[0.1, 1.0, 10.0]).lam, 10.0)

    def test_kfold_is_seed_deterministic(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(40, 5))
        y = rng.normal(size=40)
        self.assertEqual(select_lambda(X, y, seed=3).scores, select_lambda(X, y, seed=3).scores)

    def test_errors(self):
        with self.assertRaises(RidgeError):
            select_lambda(np.ones((3, 1)), [1.0, 2.0, 3.0], grid=[1.0, 2.0], folds=5)
        with self.assertRaises(RidgeError):
            select_lambda(np.ones((3, 1)), [1.0, 2.0, 3.0], grid=[])
        with self.assertRaises(RidgeError):
            select_lambda(np.ones((3, 1)), [1.0, 2.0, 3.0], grid=[1.0, 2.0], folds=1)


class SupportTest(SimpleTestCase):
    """Test cases for fit_support."""

    def setUp(self):
        self.rng = np.random.default_rng(10)

    def test_recovers_exact_linear_task(self):
        counts = self.rng.poisson(2.0, size=(200, 5))
        beta = np.array([0.5, -1.0, 2.0, 0.0, 1.5])
        ensemble = fit_support([make_task('a', counts, counts @ beta)], LambdaPolicy.fixed(support=1e-8))
        np.testing.assert_allclose(ensemble.mean_model.beta, beta, atol=1e-4)

    def test_identical_tasks_mean_equals_member(self):
        counts = self.rng.poisson(1.0, size=(40, 4))
        y = self.rng.normal(size=40)
        ensemble = fit_support([make_task('a', counts, y), make_task('b', counts, y)])
        np.testing.assert_allclose(ensemble.mean_model.beta, ensemble.models[0].coefficients.beta, atol=1e-12)

    def test_mean_model_is_elementwise_average(self):
        tasks = [
            make_task(f't{t}', self.rng.poisson(1.0, size=(30, 6)), self.rng.normal(size=30))
            for t in range(5)
        ]
        ensemble = fit_support(tasks, LambdaPolicy.fixed(support=0.5))
        self.assertEqual(ensemble.T, 5)
        expected = sum(model.coefficients.beta for model in ensemble.models) / 5
        np.testing.assert_allclose(ensemble.mean_model.beta, expected, atol=1e-12)

    def test_errors(self):
        with self.assertRaises(MetaLearningError):
            fit_support([])
        first = make_task('a', self.rng.poisson(1.0, size=(10, 3)), self.rng.normal(size=10))
        second = make_task('b', self.rng.poisson(1.0, size=(10, 3)), self.rng.normal(size=10),
                           forms=['x', 'y', 'z'])
        with self.assertRaises(MetaLearningError):
            fit_support([first, second])


class MetaFeaturesTest(SimpleTestCase):
    """Test cases for meta_features."""

    def setUp(self):
        self.rng = np.random.default_rng(20)

    def test_single_task_gives_zero_column(self):
        ensemble = random_ensemble(self.rng, 5, 1)
        features = meta_features(ensemble, self.rng.normal(size=(4, 5)))
        np.testing.assert_array_equal(features.chi, np.zeros((4, 1)))

    def test_rows_sum_to_zero(self):
        for _ in range(10):
            ensemble = random_ensemble(self.rng, 8, 6)
            chi = meta_features(ensemble, self.rng.normal(size=(12, 8))).chi
            self.assertLessEqual(np.abs(chi.sum(axis=1)).max(), 1e-10)

    def test_opposite_pair(self):
        beta = self.rng.normal(size=4)
        ensemble = SupportEnsemble((
            SupportModel('a', Coefficients(beta), 1.0),
            SupportModel('b', Coefficients(-beta), 1.0),
        ))
        X = self.rng.normal(size=(6, 4))
        chi = meta_features(ensemble, X).chi
        np.testing.assert_allclose(chi[:, 0], X @ beta, atol=1e-12)
        np.testing.assert_allclose(chi[:, 1], -(X @ beta), atol=1e-12)

    def test_mean_prediction_includes_intercepts(self):
        ensemble = random_ensemble(self.rng, 3, 4)
        X = self.rng.normal(size=(5, 3))
        expected = np.mean([predict(X, model.coefficients) for model in ensemble.models], axis=0)
        np.testing.assert_allclose(meta_features(ensemble, X).mean_prediction, expected, atol=1e-12)

    def test_dimension_mismatch(self):
        with self.assertRaises(MetaLearningError):
            meta_features(random_ensemble(self.rng, 3, 2), np.ones((2, 4)))


class PhaseTest(SimpleTestCase):
    """Test cases for the parallel and perpendicular phases."""

    def setUp(self):
        self.rng = np.random.default_rng(30)
        self.ensemble = random_ensemble(self.rng, 6, 4)
        self.X = self.rng.normal(size=(15, 6))

    def test_target_equal_to_mean_prediction(self):
        features = meta_features(self.ensemble, self.X)
        for lam in (1e-3, 1.0, 1e6):
            c, beta_parallel = fit_parallel(self.ensemble, features, features.mean_prediction, lam)
            np.testing.assert_allclose(c, 0.0, atol=1e-10)
            np.testing.assert_allclose(beta_parallel.beta, self.ensemble.mean_model.beta, atol=1e-10)

    def test_single_task_parallel_is_mean(self):
        ensemble = random_ensemble(self.rng, 6, 1)
        features = meta_features(ensemble, self.X)
        _, beta_parallel = fit_parallel(ensemble, features, self.rng.normal(size=15), 0.1)
        np.testing.assert_array_equal(beta_parallel.beta, ensemble.mean_model.beta)

    def test_target_from_support_model_beats_mean(self):
        models = tuple(SupportModel(f's{t}', Coefficients(self.rng.normal(size=6)), 1.0) for t in range(4))
        ensemble = SupportEnsemble(models)
        y = self.X @ models[0].coefficients.beta
        _, beta_parallel = fit_parallel(ensemble, meta_features(ensemble, self.X), y, 1e-8)
        mse = lambda coef: float(np.mean((predict(self.X, coef) - y) ** 2))
        self.assertLessEqual(mse(beta_parallel), mse(ensemble.mean_model))

    def test_zero_lambda_rejected(self):
        features = meta_features(self.ensemble, self.X)
        with self.assertRaises(MetaLearningError):
            fit_parallel(self.ensemble, features, np.zeros(15), 0.0)

    def test_perpendicular(self):
        zero = fit_perpendicular(self.X, np.zeros(15), 1.0)
        np.testing.assert_array_equal(zero.beta, np.zeros(6))

        y = self.rng.normal(size=15)
        np.testing.assert_allclose(fit_perpendicular(self.X, y, 0.5).beta, ridge_fit(self.X, y, RidgeConfig(0.5)).beta)

        before = np.linalg.norm(y)
        after = np.linalg.norm(y - predict(self.X, fit_perpendicular(self.X, y, 1e-6)))
        self.assertLessEqual(after, before)


class MetaFitTest(SimpleTestCase):
    """Test cases for fit and predict_meta."""

    def setUp(self):
        self.rng = np.random.default_rng(40)

    def test_structural_invariants_on_random_ensembles(self):
        for _ in range(10):
            ensemble = random_ensemble(self.rng, 10, 5)
            X = self.rng.normal(size=(12, 10))
            y = self.rng.normal(size=12)
            model = fit(ensemble, X, y, LambdaPolicy.fixed(1.0, 0.1, 0.5))
            np.testing.assert_array_equal(model.beta_star.beta, model.beta_parallel.beta + model.beta_perp.beta)
            self.assertEqual(model.beta_star.intercept, model.beta_perp.intercept)
            self.assertLessEqual(
                span_residual(ensemble, model.beta_parallel.beta - ensemble.mean_model.beta), 1e-8
            )
            self.assertEqual(model.lambdas, (0.1, 0.5))

    def test_single_task_collapses_to_origin_fit(self):
        ensemble = random_ensemble(self.rng, 7, 1)
        X = self.rng.normal(size=(20, 7))
        y = self.rng.normal(size=20)
        model = fit(ensemble, X, y, LambdaPolicy.fixed(1.0, 0.3, 0.7))
        expected = ridge_fit_with_origin(X, y, ensemble.mean_model, RidgeConfig(0.7))
        np.testing.assert_allclose(model.beta_star.beta, expected.beta, atol=1e-8)
        self.assertAlmostEqual(model.beta_star.intercept, expected.intercept, places=8)

    def test_predict_meta(self):
        ensemble = random_ensemble(self.rng, 4, 3)
        X = self.rng.normal(size=(10, 4))
        model = fit(ensemble, X, self.rng.normal(size=10))
        np.testing.assert_allclose(
            predict_meta(model, X),
            X @ (model.beta_parallel.beta + model.beta_perp.beta) + model.beta_perp.intercept,
            atol=1e-12,
        )
        np.testing.assert_allclose(
            predict_meta(model, X),
            predict(X, model.beta_parallel) + predict(X, model.beta_perp),
            atol=1e-12,
        )
        self.assertEqual(predict_meta(model, np.zeros((1, 4)))[0], model.beta_perp.intercept)

    def test_shared_target_beats_scratch_ridge(self):
        beta = self.rng.normal(size=20)
        counts = self.rng.poisson(1.0, size=(400, 20))
        support = make_task('support', counts, counts @ beta + self.rng.normal(scale=0.1, size=400))
        ensemble = fit_support([support])

        target_counts = self.rng.poisson(1.0, size=(120, 20))
        y = target_counts @ beta + self.rng.normal(scale=0.1, size=120)
        shots, held_out = np.arange(20), np.arange(20, 120)
        model = fit(ensemble, target_counts[shots], y[shots])

        scratch_lam = select_lambda(target_counts[shots], y[shots]).lam
        scratch = ridge_fit(target_counts[shots], y[shots], RidgeConfig(scratch_lam))
        mae_meta = np.mean(np.abs(predict_meta(model, target_counts[held_out]) - y[held_out]))
        mae_scratch = np.mean(np.abs(predict(target_counts[held_out], scratch) - y[held_out]))
        self.assertLessEqual(mae_meta, mae_scratch)

    def test_in_span_fraction(self):
        ensemble = random_ensemble(self.rng, 6, 3)
        inside = Coefficients(ensemble.deviations().T @ np.array([1.0, -2.0, 0.5]))
        self.assertAlmostEqual(in_span_fraction(ensemble, inside), 1.0, places=8)
        self.assertEqual(in_span_fraction(ensemble, Coefficients.zeros(6)), 0.0)

    def test_rejects_empty_target(self):
        with self.assertRaises(MetaLearningError):
            fit(random_ensemble(self.rng, 3, 2), np.zeros((0, 3)), [])


def offset_ensemble(rng, n_features, n_tasks, scale=100.0):
    """Support models whose mean is ``scale`` on the first half of the features and 0 elsewhere."""
    half = n_features // 2
    mean = np.zeros(n_features)
    mean[:half] = scale
    deviations = np.zeros((n_tasks, n_features))
    deviations[:, :half] = rng.normal(size=(n_tasks, half))
    deviations -= deviations.mean(axis=0)
    models = tuple(
        SupportModel(f's{t}', Coefficients(mean + deviations[t], 0.0), 1.0) for t in range(n_tasks)
    )
    return SupportEnsemble(models)


class RidgeComparisonTest(SimpleTestCase):
    """Test cases for the choice between the anchored model and plain ridge."""

    def setUp(self):
        self.rng = np.random.default_rng(60)
        self.ensemble = offset_ensemble(self.rng, 30, 3)

    def test_policy_searches_meta_phases_by_loo_at_any_size(self):
        policy = LambdaPolicy()
        for n in (5, 29, 30, 50, 500):
            self.assertEqual(policy.cv_method('parallel', n), 'loo')
            self.assertEqual(policy.cv_method('perpendicular', n), 'loo')
        self.assertEqual(policy.cv_method('support', 29), 'loo')
        self.assertEqual(policy.cv_method('support', 50), 5)
        self.assertEqual(LambdaPolicy(support_folds=10).cv_method('support', 50), 10)

    def test_fit_on_fifty_shots_uses_loo_lambdas(self):
        X = self.rng.normal(size=(50, 30))
        y = X @ self.rng.normal(size=30) + self.rng.normal(size=50)
        model = fit(self.ensemble, X, y, LambdaPolicy(compare_to_ridge=False))

        features = meta_features(self.ensemble, X)
        policy = LambdaPolicy()
        expected_parallel = select_lambda(
            features.chi, y - features.mean_prediction, grid=policy.values('parallel'),
            folds='loo', fit_intercept=False,
        ).lam
        _, beta_parallel = fit_parallel(self.ensemble, features, y, expected_parallel)
        expected_perp = select_lambda(X, y - predict(X, beta_parallel), grid=DEFAULT_LAMBDA_GRID, folds='loo').lam
        self.assertEqual(model.lambdas, (expected_parallel, expected_perp))

    def test_target_orthogonal_to_support_keeps_plain_ridge(self):
        beta = np.zeros(30)
        beta[15:] = self.rng.normal(size=15)
        X = self.rng.normal(size=(10, 30))
        y = X @ beta
        model = fit(self.ensemble, X, y)

        lam = select_lambda(X, y, grid=DEFAULT_LAMBDA_GRID, folds='loo').lam
        plain = ridge_fit(X, y, RidgeConfig(lam))
        self.assertFalse(model.anchored)
        self.assertEqual(model.lambdas, (0.0, lam))
        np.testing.assert_array_equal(model.c, np.zeros(3))
        np.testing.assert_array_equal(model.beta_parallel.beta, np.zeros(30))
        np.testing.assert_array_equal(model.beta_star.beta, plain.beta)
        X_new = self.rng.normal(size=(5, 30))
        np.testing.assert_array_equal(predict_meta(model, X_new), predict(X_new, plain))

    def test_target_inside_support_span_stays_anchored(self):
        X = self.rng.normal(size=(12, 30))
        y = X @ self.ensemble.models[1].coefficients.beta
        model = fit(self.ensemble, X, y)
        self.assertTrue(model.anchored)
        self.assertGreater(model.lambdas[0], 0.0)

    def test_comparison_skipped_below_three_shots(self):
        beta = np.zeros(30)
        beta[15:] = 1.0
        X = self.rng.normal(size=(2, 30))
        self.assertTrue(fit(self.ensemble, X, X @ beta, LambdaPolicy(parallel=0.1, perpendicular=0.5)).anchored)

    def test_anchored_loo_matches_refits_of_fixed_policy(self):
        ensemble = random_ensemble(self.rng, 6, 3)
        X = self.rng.normal(size=(8, 6))
        y = self.rng.normal(size=8)
        errors = []
        for i in range(8):
            keep = np.arange(8) != i
            model = fit(ensemble, X[keep], y[keep], LambdaPolicy.fixed(1.0, 0.2, 0.4))
            errors.append(y[i] - predict_meta(model, X[i:i + 1])[0])
        self.assertAlmostEqual(
            anchored_loo_mse(ensemble, X, y, (0.2, 0.4)), float(np.mean(np.square(errors))), places=10
        )


class ModelFileTest(SimpleTestCase):
    """Test cases for coefficient and model files."""

    def setUp(self):
        rng = np.random.default_rng(50)
        self.ensemble = random_ensemble(rng, 8, 3)
        self.X = rng.normal(size=(9, 8))
        self.model = fit(
            self.ensemble, self.X, rng.normal(size=9), LambdaPolicy(compare_to_ridge=False), target_id='water',
        )
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_coefficient_text_layout(self):
        coef = Coefficients([0.0, 0.1, 0.0, -2.5], 1 / 3)
        text = coefficients_to_text(coef)
        self.assertEqual(text.splitlines(), [f'intercept {1 / 3!r}', 'size 4', '1 0.1', '3 -2.5'])
        loaded = coefficients_from_text(text)
        np.testing.assert_array_equal(loaded.beta, coef.beta)
        self.assertEqual(loaded.intercept, coef.intercept)

    def test_coefficient_file_round_trip(self):
        path = write_coefficients(Path(self.tmp.name) / 'coef.txt', self.model.beta_star)
        np.testing.assert_array_equal(read_coefficients(path).beta, self.model.beta_star.beta)

    def test_coefficient_text_rejects_garbage(self):
        with self.assertRaises(FormatError):
            coefficients_from_text('size 3\n')
        with self.assertRaises(FormatError):
            coefficients_from_text('intercept 0\nsize 2\n5 1.0\n')

    def test_model_round_trip_predicts_bit_exactly(self):
        path = write_model(Path(self.tmp.name) / 'model.json', self.model)
        loaded = read_model(path)
        np.testing.assert_array_equal(predict_meta(loaded, self.X), predict_meta(self.model, self.X))
        self.assertEqual(loaded.support_ids, self.ensemble.task_ids)
        self.assertEqual(loaded.target_id, 'water')
        np.testing.assert_array_equal(loaded.c, self.model.c)

    def test_document_validation(self):
        document = model_to_document(self.model)
        document['c'] = document['c'][:-1]
        with self.assertRaises(FormatError):
            model_from_document(document)

        document = model_to_document(self.model)
        document['beta_star']['entries'][0][1] += 1.0
        with self.assertRaises(FormatError):
            model_from_document(document)

        document = model_to_document(self.model)
        document['version'] = 'lamel-model-v0'
        with self.assertRaises(FormatError):
            model_from_document(document)

    def test_plain_ridge_model_round_trip(self):
        rng = np.random.default_rng(51)
        ensemble = offset_ensemble(rng, 30, 3)
        beta = np.zeros(30)
        beta[15:] = rng.normal(size=15)
        X = rng.normal(size=(10, 30))
        model = fit(ensemble, X, X @ beta, target_id='ethanol')
        self.assertFalse(model.anchored)

        loaded = read_model(write_model(Path(self.tmp.name) / 'plain.json', model))
        self.assertFalse(loaded.anchored)
        self.assertEqual(loaded.lambdas, model.lambdas)
        np.testing.assert_array_equal(predict_meta(loaded, X), predict_meta(model, X))

        document = model_to_document(model)
        document['c'][0] = 0.5
        with self.assertRaises(FormatError):
            model_from_document(document)

    def test_anchored_document_needs_positive_parallel_lambda(self):
        document = model_to_document(self.model)
        self.assertTrue(document['anchored'])
        document['lambdas']['parallel'] = 0.0
        with self.assertRaises(FormatError):
            model_from_document(document)
