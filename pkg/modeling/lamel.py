"""
Three-phase linear meta-learning.
LAMeL Toolkit - Meta-Learning Module

Phases, run strictly in order:
1. Support models: one ridge fit per support task, then their mean
2. Parallel component: ridge on centered meta-features, mapped back into the
   affine span of the support coefficients around their mean
3. Perpendicular component: ridge on the residuals of phase 2

The final coefficients are the sum of the parallel and perpendicular parts.
The intercept lives in phase 3 only. By default fit() also checks the result
against plain ridge on the same shots by leave-one-out error and keeps the
plain fit when the support anchor does not help.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from core.exceptions import MetaLearningError
from .linmodel import (
    Coefficients, RidgeConfig, as_design, loo_mse, predict, ridge_fit, select_lambda, validate_grid,
    DEFAULT_LAMBDA_GRID, DEFAULT_FOLDS, LOO_THRESHOLD, LEAVE_ONE_OUT,
)

logger = logging.getLogger(__name__)

PHASES = ('support', 'parallel', 'perpendicular')
MIN_COMPARISON_SHOTS = 3


@dataclass(frozen=True, eq=False)
class Task:
    """
    One regression task over the shared feature space.

    Attributes:
        id: Task identifier (solvent name, DFT method label, ...)
        X: FeatureMatrix whose row_ids are the sample identifiers
        y: Label vector
    """
    id: str
    X: object
    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=np.float64).ravel()
        if y.shape[0] < 1:
            raise MetaLearningError(f"Task {self.id!r} has no rows")
        if y.shape[0] != self.X.rows:
            raise MetaLearningError(f"Task {self.id!r}: {self.X.rows} feature rows vs {y.shape[0]} labels")
        if not np.all(np.isfinite(y)):
            raise MetaLearningError(f"Task {self.id!r} has non-finite labels")
        y.setflags(write=False)
        object.__setattr__(self, 'y', y)

    @property
    def rows(self):
        return self.y.shape[0]

    @property
    def n_features(self):
        return self.X.cols

    @property
    def sample_ids(self):
        return self.X.row_ids

    def subset(self, indices):
        """Task restricted to the given row positions, in that order."""
        indices = np.asarray(indices, dtype=np.int64)
        return Task(self.id, self.X.subset(indices), self.y[indices])


@dataclass(frozen=True)
class LambdaPolicy:
    """
    Regularization per phase: a fixed float or a grid searched by select_lambda.

    The parallel and perpendicular grids are always searched by leave-one-out
    CV over the target shots. ``support_folds`` applies to support models only;
    None means leave-one-out below 30 rows and 5-fold above. ``fallback`` is
    used when a grid cannot be searched because there are too few rows.

    With ``compare_to_ridge`` set, fit() keeps the anchored model only when its
    leave-one-out error over the shots is no worse than plain ridge's.
    """
    support: object = DEFAULT_LAMBDA_GRID
    parallel: object = tuple(lam for lam in DEFAULT_LAMBDA_GRID if lam > 0)
    perpendicular: object = DEFAULT_LAMBDA_GRID
    support_folds: object = None
    seed: int = 0
    fallback: float = 1.0
    compare_to_ridge: bool = True

    @classmethod
    def fixed(cls, support=1.0, parallel=1.0, perpendicular=1.0):
        """Pinned lambdas and no data-driven choice between anchored and plain models."""
        return cls(float(support), float(parallel), float(perpendicular), compare_to_ridge=False)

    def values(self, phase):
        if phase not in PHASES:
            raise MetaLearningError(f"Unknown phase {phase!r}")
        value = getattr(self, phase)
        if isinstance(value, (int, float, np.floating, np.integer)):
            return (float(value),)
        return validate_grid(value)

    def cv_method(self, phase, n):
        """Fold setting used to search ``phase`` on n rows."""
        if phase != 'support':
            return LEAVE_ONE_OUT
        if self.support_folds is not None:
            return self.support_folds
        return LEAVE_ONE_OUT if n < LOO_THRESHOLD else DEFAULT_FOLDS

    def choose(self, phase, X, y, fit_intercept=True):
        """Lambda for ``phase`` on design X and target y."""
        grid = self.values(phase)
        if len(grid) == 1:
            return grid[0]
        n = len(y)
        folds = self.cv_method(phase, n)
        minimum = 2 if folds == LEAVE_ONE_OUT else folds
        if n < minimum:
            logger.debug("Too few rows (%d) to search the %s grid; using lambda=%g", n, phase, self.fallback)
            return self.fallback
        selection = select_lambda(X, y, grid, folds=folds, seed=self.seed, fit_intercept=fit_intercept)
        return selection.lam


@dataclass(frozen=True, eq=False)
class SupportModel:
    task_id: str
    coefficients: Coefficients
    lam: float


@dataclass(frozen=True, eq=False)
class SupportEnsemble:
    """
    Fitted support models and their mean.

    Attributes:
        models: One SupportModel per support task
        mean_model: Elementwise mean of betas and of intercepts
    """
    models: tuple[SupportModel, ...]
    mean_model: Coefficients = field(default=None)

    def __post_init__(self):
        models = tuple(self.models)
        if not models:
            raise MetaLearningError("Support ensemble needs at least one model")
        sizes = {model.coefficients.size for model in models}
        if len(sizes) > 1:
            raise MetaLearningError(f"Support models disagree on feature count: {sorted(sizes)}")
        object.__setattr__(self, 'models', models)
        if self.mean_model is None:
            betas = np.vstack([model.coefficients.beta for model in models])
            intercepts = [model.coefficients.intercept for model in models]
            object.__setattr__(self, 'mean_model', Coefficients(betas.mean(axis=0), float(np.mean(intercepts))))

    @property
    def T(self):
        return len(self.models)

    @property
    def n_features(self):
        return self.mean_model.size

    @property
    def task_ids(self):
        return tuple(model.task_id for model in self.models)

    @property
    def betas(self):
        """T x V matrix of support coefficient vectors."""
        return np.vstack([model.coefficients.beta for model in self.models])

    @property
    def intercepts(self):
        return np.array([model.coefficients.intercept for model in self.models])

    def deviations(self):
        """T x V matrix of beta_t - mean beta."""
        return self.betas - self.mean_model.beta


@dataclass(frozen=True, eq=False)
class MetaFeatures:
    """Centered support predictions (n x T) and the across-task mean prediction (n,)."""
    chi: np.ndarray
    mean_prediction: np.ndarray


@dataclass(frozen=True, eq=False)
class MetaModel:
    """
    Target-task model.

    Attributes:
        c: Subspace mixing weights, one per support task
        beta_parallel: Mean support model plus the weighted deviations (intercept 0)
        beta_perp: Ridge fit on the residuals of beta_parallel (carries the intercept)
        beta_star: beta_parallel + beta_perp
        lambdas: (lambda_parallel, lambda_perp)
        support_ids: Support task ids in the order of ``c``
        target_id: Target task id, when known
        anchored: False when plain ridge on the shots was kept instead; then c and
            beta_parallel are zero, lambda_parallel is 0 and beta_perp is that ridge fit
    """
    c: np.ndarray
    beta_parallel: Coefficients
    beta_perp: Coefficients
    beta_star: Coefficients
    lambdas: tuple[float, float]
    support_ids: tuple[str, ...]
    target_id: str = ''
    anchored: bool = True

    @property
    def T(self):
        return len(self.support_ids)


def fit_support_model(task, policy=None):
    """Phase 1 for one task: lambda by the policy, then a ridge fit with intercept."""
    policy = policy or LambdaPolicy()
    X = as_design(task.X)
    lam = policy.choose('support', X, task.y, fit_intercept=True)
    coefficients = ridge_fit(X, task.y, RidgeConfig(lam))
    logger.debug("Support model %s: lambda=%g, rows=%d", task.id, lam, task.rows)
    return SupportModel(task.id, coefficients, lam)


def fit_support(tasks, policy=None):
    """
    Phase 1: fit every support task and average.

    Raises:
        MetaLearningError: No tasks, or tasks over different vocabularies
    """
    tasks = list(tasks)
    if not tasks:
        raise MetaLearningError("fit_support needs at least one task")
    check_shared_vocabulary(tasks)
    return SupportEnsemble(tuple(fit_support_model(task, policy) for task in tasks))


def check_shared_vocabulary(tasks):
    reference = tasks[0].X.vocabulary.forms()
    for task in tasks[1:]:
        if task.X.vocabulary.forms() != reference:
            raise MetaLearningError(f"Task {task.id!r} uses a different vocabulary than {tasks[0].id!r}")


def meta_features(ensemble, X_star):
    """
    chi[i, t] = (beta_t - mean beta) . x_i and the mean support prediction per row.

    Raises:
        MetaLearningError: Feature count mismatch
    """
    X = as_design(X_star)
    if X.shape[1] != ensemble.n_features:
        raise MetaLearningError(f"Target has {X.shape[1]} features, ensemble has {ensemble.n_features}")
    predictions = np.asarray(X @ ensemble.betas.T, dtype=np.float64).reshape(X.shape[0], ensemble.T)
    centered = predictions.mean(axis=1, keepdims=True)
    chi = predictions - centered
    mean_prediction = centered.ravel() + ensemble.intercepts.mean()
    return MetaFeatures(chi, mean_prediction)


def fit_parallel(ensemble, features, y_star, lam):
    """
    Phase 2: c = argmin ||chi c - (y - mean prediction)||^2 + lam ||c||^2.

    Returns (c, beta_parallel) with beta_parallel = mean beta + deviations' c.

    Raises:
        MetaLearningError: lam <= 0 or length mismatch
    """
    if not lam > 0:
        raise MetaLearningError(f"lambda_parallel must be > 0, got {lam!r}")
    y_star = np.asarray(y_star, dtype=np.float64).ravel()
    if not (features.chi.shape[0] == y_star.shape[0] == features.mean_prediction.shape[0]):
        raise MetaLearningError("Meta-features, labels and mean predictions differ in length")

    fit = ridge_fit(features.chi, y_star - features.mean_prediction, RidgeConfig(lam, fit_intercept=False))
    c = np.array(fit.beta)
    beta = ensemble.mean_model.beta + ensemble.deviations().T @ c
    return c, Coefficients(beta, 0.0)


def fit_perpendicular(X_star, residuals, lam, fit_intercept=True):
    """Phase 3: plain ridge on the phase-2 residuals."""
    return ridge_fit(X_star, residuals, RidgeConfig(lam, fit_intercept=fit_intercept))


def fit(ensemble, X_star, y_star, policy=None, target_id=''):
    """
    Run phases 2 and 3 on the target shots against a fitted ensemble.

    When the policy compares against plain ridge and the shots predict
    themselves better without the support anchor (leave-one-out MSE), the
    returned model is that ridge fit with ``anchored=False``.

    Raises:
        MetaLearningError: No shots or mismatched inputs
    """
    policy = policy or LambdaPolicy()
    X = as_design(X_star)
    y = np.asarray(y_star, dtype=np.float64).ravel()
    if y.shape[0] < 1:
        raise MetaLearningError("fit needs at least one target shot")
    if X.shape[0] != y.shape[0]:
        raise MetaLearningError(f"Target has {X.shape[0]} rows but {y.shape[0]} labels")

    features = meta_features(ensemble, X)
    lam_parallel = policy.choose('parallel', features.chi, y - features.mean_prediction, fit_intercept=False)
    c, beta_parallel = fit_parallel(ensemble, features, y, lam_parallel)

    residuals = y - predict(X, beta_parallel)
    lam_perp = policy.choose('perpendicular', X, residuals, fit_intercept=True)
    beta_perp = fit_perpendicular(X, residuals, lam_perp)

    if policy.compare_to_ridge and y.shape[0] >= MIN_COMPARISON_SHOTS:
        lam_plain = policy.choose('perpendicular', X, y, fit_intercept=True)
        plain_error = loo_mse(X, y, lam_plain)
        anchored_error = anchored_loo_mse(ensemble, X, y, (lam_parallel, lam_perp))
        if plain_error < anchored_error:
            logger.debug("Meta model %s: plain ridge LOO MSE %.4g beats anchored %.4g; keeping plain ridge",
                         target_id or '<target>', plain_error, anchored_error)
            plain = ridge_fit(X, y, RidgeConfig(lam_plain))
            return MetaModel(np.zeros(ensemble.T), Coefficients.zeros(ensemble.n_features), plain, plain,
                             (0.0, lam_plain), ensemble.task_ids, target_id, anchored=False)

    beta_star = Coefficients(
        beta_parallel.beta + beta_perp.beta,
        beta_perp.intercept,
        beta_perp.rank_deficient,
    )
    logger.debug("Meta model %s: T=%d, lambda_parallel=%g, lambda_perp=%g",
                 target_id or '<target>', ensemble.T, lam_parallel, lam_perp)
    return MetaModel(c, beta_parallel, beta_perp, beta_star, (lam_parallel, lam_perp),
                     ensemble.task_ids, target_id)


def anchored_loo_mse(ensemble, X, y, lambdas):
    """Leave-one-out MSE of phases 2 and 3 refitted without each shot, lambdas held fixed."""
    X = as_design(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    rows = np.arange(y.shape[0])
    errors = np.empty(y.shape[0])
    for i in rows:
        train = rows[rows != i]
        features = meta_features(ensemble, X[train])
        _, beta_parallel = fit_parallel(ensemble, features, y[train], lambdas[0])
        beta_perp = fit_perpendicular(X[train], y[train] - predict(X[train], beta_parallel), lambdas[1])
        held_out = X[i:i + 1]
        errors[i] = y[i] - predict(held_out, beta_parallel)[0] - predict(held_out, beta_perp)[0]
    return float(np.mean(errors ** 2))


def predict_meta(model, X):
    return predict(X, model.beta_star)


def span_residual(ensemble, vector):
    """
    Relative residual of projecting ``vector`` onto span{beta_t - mean beta}.

    0 means fully inside the span; 1 means orthogonal to it.
    """
    vector = np.asarray(vector, dtype=np.float64).ravel()
    norm = np.linalg.norm(vector)
    if norm == 0:
        return 0.0
    basis = ensemble.deviations().T
    if not np.any(basis):
        return 1.0
    weights, *_ = linalg.lstsq(basis, vector)
    return float(np.linalg.norm(vector - basis @ weights) / norm)


def in_span_fraction(ensemble, coefficients):
    """Squared-norm share of beta_perp that falls inside the support deviation span."""
    if not np.any(coefficients.beta):
        return 0.0
    residual = span_residual(ensemble, coefficients.beta)
    return 1.0 - residual ** 2
