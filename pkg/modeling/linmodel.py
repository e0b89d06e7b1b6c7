"""
Ridge regression core.
LAMeL Toolkit - Linear Model Module

This module contains the closed-form ridge machinery including:
- Primal (V x V) and dual (n x n) Cholesky solves, chosen by shape
- Unpenalized intercept via implicit centering (sparse inputs stay sparse)
- Fits toward a prior coefficient vector (shifted regularization center)
- Regularization strength selection by leave-one-out or k-fold CV

Nothing here touches Django settings, so the functions are safe to ship to
worker processes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse

from core.exceptions import RankDeficientError, RidgeError

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = tuple(float(value) for value in np.logspace(-6, 6, 13))
LOO_THRESHOLD = 30
DEFAULT_FOLDS = 5
PRIMAL_RATIO = 4
LEAVE_ONE_OUT = 'loo'

_TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class Coefficients:
    """
    Fitted linear model.

    Attributes:
        beta: Read-only float64 weight vector, one entry per feature
        intercept: Scalar offset
        rank_deficient: Set when an unregularized fit fell back to the minimum-norm solution
    """
    beta: np.ndarray
    intercept: float = 0.0
    rank_deficient: bool = False

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64).ravel()
        intercept = float(self.intercept)
        if not np.all(np.isfinite(beta)) or not np.isfinite(intercept):
            raise RidgeError("Coefficients must be finite")
        beta.setflags(write=False)
        object.__setattr__(self, 'beta', beta)
        object.__setattr__(self, 'intercept', intercept)

    @classmethod
    def zeros(cls, size):
        return cls(np.zeros(size))

    @property
    def size(self):
        return self.beta.shape[0]

    def __add__(self, other):
        if other.size != self.size:
            raise RidgeError(f"Cannot add coefficient vectors of length {self.size} and {other.size}")
        return Coefficients(
            self.beta + other.beta,
            self.intercept + other.intercept,
            self.rank_deficient or other.rank_deficient,
        )

    def scaled(self, factor):
        return Coefficients(self.beta * factor, self.intercept * factor, self.rank_deficient)

    def norm(self):
        """Euclidean norm of beta (intercept excluded)."""
        return float(np.linalg.norm(self.beta))


@dataclass(frozen=True)
class RidgeConfig:
    """
    Ridge fit settings.

    Attributes:
        lam: Regularization strength, >= 0
        fit_intercept: Center X and y and recover an unpenalized intercept
        standardize: Scale columns to unit variance before fitting
        min_norm_fallback: On lam == 0 with a rank-deficient design, return
            the minimum-norm solution instead of raising
    """
    lam: float = 1.0
    fit_intercept: bool = True
    standardize: bool = False
    min_norm_fallback: bool = True

    def __post_init__(self):
        lam = float(self.lam)
        if not np.isfinite(lam) or lam < 0:
            raise RidgeError(f"lambda must be a finite non-negative number, got {self.lam!r}")
        object.__setattr__(self, 'lam', lam)


@dataclass(frozen=True)
class LambdaSelection:
    """Outcome of select_lambda: chosen value plus (lambda, mean CV MSE) pairs."""
    lam: float
    scores: tuple[tuple[float, float], ...]
    method: str


def as_design(X):
    """
    Float64 design matrix from a FeatureMatrix, scipy sparse matrix or array.

    Sparse inputs come back as CSR, everything else as a 2-D ndarray.
    """
    matrix = getattr(X, 'matrix', X)
    if sparse.issparse(matrix):
        matrix = sparse.csr_matrix(matrix, dtype=np.float64)
        values = matrix.data
    else:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise RidgeError(f"Design matrix must be 2-D, got shape {matrix.shape}")
        values = matrix
    if not np.all(np.isfinite(values)):
        raise RidgeError("Design matrix contains non-finite entries")
    return matrix


def ridge_fit(X, y, config=None):
    """
    Minimize ||y - X beta - b||^2 + lam ||beta||^2.

    Raises:
        RidgeError: Shape mismatch or non-finite input
        RankDeficientError: lam == 0, rank-deficient X and min_norm_fallback off
    """
    config = config or RidgeConfig()
    X = as_design(X)
    n, n_features = X.shape
    if n < 1:
        raise RidgeError("Cannot fit on zero rows")
    y = _as_target(y, n)

    means = _column_means(X) if config.fit_intercept else np.zeros(n_features)
    y_mean = float(y.mean()) if config.fit_intercept else 0.0

    scales = np.ones(n_features)
    design, design_means = X, means
    if config.standardize:
        scales = _column_scales(X, means)
        design = X @ sparse.diags(1.0 / scales) if sparse.issparse(X) else X / scales
        design_means = means / scales

    beta, deficient = _solve(design, y - y_mean, design_means, config.lam, config.min_norm_fallback)
    beta = beta / scales
    intercept = y_mean - float(means @ beta) if config.fit_intercept else 0.0
    return Coefficients(beta, intercept, deficient)


def ridge_fit_with_origin(X, y, origin, config=None):
    """
    Ridge fit that shrinks toward ``origin`` instead of zero.

    Returns origin + ridge_fit(X, y - predict(X, origin)); intercepts add.
    """
    X = as_design(X)
    if origin.size != X.shape[1]:
        raise RidgeError(f"Origin has length {origin.size}, design has {X.shape[1]} columns")
    shift = ridge_fit(X, _as_target(y, X.shape[0]) - predict(X, origin), config)
    return origin + shift


def predict(X, coef):
    """X @ beta + intercept."""
    X = as_design(X)
    if X.shape[1] != coef.size:
        raise RidgeError(f"Design has {X.shape[1]} columns, coefficients have {coef.size}")
    return np.asarray(X @ coef.beta, dtype=np.float64).ravel() + coef.intercept


def normal_equation_residual(X, y, coef, lam):
    """Relative residual ||(X'X + lam I) beta - X'y|| / ||X'y|| of a no-intercept fit."""
    X = as_design(X)
    y = _as_target(y, X.shape[0])
    rhs = np.asarray(X.T @ y).ravel()
    lhs = np.asarray(X.T @ (X @ coef.beta)).ravel() + lam * coef.beta
    scale = np.linalg.norm(rhs)
    return float(np.linalg.norm(lhs - rhs) / scale) if scale else float(np.linalg.norm(lhs))


def select_lambda(X, y, grid=None, folds=None, seed=0, fit_intercept=True, standardize=False):
    """
    Choose lambda by minimum mean cross-validated squared error.

    ``folds`` is an integer >= 2, ``'loo'``, or None for leave-one-out below
    30 samples and 5-fold above. Ties within a relative 1e-9 go to the larger
    lambda. A single-value grid is returned without any fitting.

    Raises:
        RidgeError: Empty or invalid grid, bad fold setting, fewer samples than folds
    """
    grid = validate_grid(DEFAULT_LAMBDA_GRID if grid is None else grid)
    X = as_design(X)
    n = X.shape[0]
    y = _as_target(y, n)

    if len(grid) == 1:
        return LambdaSelection(grid[0], ((grid[0], float('nan')),), 'fixed')

    if folds is None:
        folds = LEAVE_ONE_OUT if n < LOO_THRESHOLD else DEFAULT_FOLDS

    if folds == LEAVE_ONE_OUT:
        if n < 2:
            raise RidgeError("Leave-one-out needs at least 2 samples")
        scores = _loo_scores(X, y, grid, fit_intercept, standardize)
        method = LEAVE_ONE_OUT
    else:
        if isinstance(folds, bool) or not isinstance(folds, (int, np.integer)) or folds < 2:
            raise RidgeError(f"folds must be an integer >= 2 or 'loo', got {folds!r}")
        if n < folds:
            raise RidgeError(f"{n} samples is fewer than {folds} folds")
        scores = _kfold_scores(X, y, grid, int(folds), seed, fit_intercept, standardize)
        method = f'{folds}-fold'

    lam = _pick_lambda(grid, scores)
    logger.debug("Selected lambda=%g by %s over %d candidates (n=%d)", lam, method, len(grid), n)
    return LambdaSelection(lam, tuple(zip(grid, scores)), method)


def loo_mse(X, y, lam, fit_intercept=True):
    """Exact leave-one-out mean squared error of ridge at one lambda; inf when a row has leverage 1."""
    X = as_design(X)
    y = _as_target(y, X.shape[0])
    if X.shape[0] < 2:
        raise RidgeError("Leave-one-out needs at least 2 samples")
    return _loo_scores(X, y, (float(lam),), fit_intercept, False)[0]


def validate_grid(grid):
    """Sorted, de-duplicated tuple of finite non-negative lambdas."""
    try:
        values = sorted({float(value) for value in grid})
    except (TypeError, ValueError) as exc:
        raise RidgeError(f"Invalid lambda grid {grid!r}") from exc
    if not values:
        raise RidgeError("lambda grid is empty")
    if any(not np.isfinite(value) or value < 0 for value in values):
        raise RidgeError("lambda grid values must be finite and non-negative")
    return tuple(values)


def _as_target(y, n):
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n:
        raise RidgeError(f"Design has {n} rows but target has {y.shape[0]} values")
    if not np.all(np.isfinite(y)):
        raise RidgeError("Target contains non-finite values")
    return y


def _dense(matrix):
    return matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)


def _column_means(X):
    return np.asarray(X.mean(axis=0), dtype=np.float64).ravel()


def _column_scales(X, means):
    squares = X.multiply(X) if sparse.issparse(X) else X * X
    variance = np.asarray(squares.mean(axis=0)).ravel() - means ** 2
    scales = np.sqrt(np.clip(variance, 0.0, None))
    scales[scales == 0] = 1.0
    return scales


def _centered_gram(X, means):
    """(X - 1 m')(X - 1 m')' without densifying X."""
    gram = _dense(X @ X.T)
    shift = np.asarray(X @ means).ravel()
    return gram - shift[:, None] - shift[None, :] + float(means @ means)


def _solve(X, y_centered, means, lam, min_norm_fallback):
    n, n_features = X.shape
    if n_features == 0:
        return np.zeros(0), False
    if lam == 0:
        return _min_norm_solve(X, y_centered, means, min_norm_fallback)

    if n_features <= PRIMAL_RATIO * n:
        gram = _dense(X.T @ X) - n * np.outer(means, means)
        rhs = np.asarray(X.T @ y_centered).ravel() - means * y_centered.sum()
        gram[np.diag_indices_from(gram)] += lam
        return _spd_solve(gram, rhs), False

    kernel = _centered_gram(X, means)
    kernel[np.diag_indices_from(kernel)] += lam
    alpha = _spd_solve(kernel, y_centered)
    return np.asarray(X.T @ alpha).ravel() - means * alpha.sum(), False


def _spd_solve(matrix, rhs):
    try:
        factor = linalg.cho_factor(matrix, lower=True, check_finite=False)
        return linalg.cho_solve(factor, rhs, check_finite=False)
    except linalg.LinAlgError:
        logger.warning("Cholesky factorization failed on a %dx%d system; using a symmetric solve", *matrix.shape)
        return linalg.solve(matrix, rhs, assume_a='sym')


def _min_norm_solve(X, y_centered, means, min_norm_fallback):
    centered = _dense(X) - means
    beta, _, rank, _ = linalg.lstsq(centered, y_centered)
    deficient = rank < X.shape[1]
    if deficient:
        if not min_norm_fallback:
            raise RankDeficientError(
                f"Unregularized fit on a rank-{rank} design with {X.shape[1]} columns"
            )
        logger.warning("Rank-deficient design (rank %d < %d) at lambda=0; returning minimum-norm solution",
                       rank, X.shape[1])
    return np.asarray(beta).ravel(), deficient


def _loo_scores(X, y, grid, fit_intercept, standardize):
    """Exact leave-one-out MSE per lambda from one eigendecomposition of the centered Gram matrix."""
    n = X.shape[0]
    means = _column_means(X) if fit_intercept else np.zeros(X.shape[1])
    if standardize:
        scales = _column_scales(X, means)
        X = X @ sparse.diags(1.0 / scales) if sparse.issparse(X) else X / scales
        means = means / scales

    eigenvalues, basis = linalg.eigh(_centered_gram(X, means))
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    offset = float(y.mean()) if fit_intercept else 0.0
    projected = basis.T @ (y - offset)
    squared_basis = basis ** 2
    base_leverage = 1.0 / n if fit_intercept else 0.0
    cutoff = (eigenvalues.max() if eigenvalues.size else 0.0) * n * np.finfo(float).eps

    scores = []
    for lam in grid:
        if lam == 0:
            shrink = (eigenvalues > cutoff).astype(float)
        else:
            shrink = eigenvalues / (eigenvalues + lam)
        fitted = basis @ (shrink * projected) + offset
        leverage = squared_basis @ shrink + base_leverage
        slack = 1.0 - leverage
        if np.any(slack <= 1e-12):
            scores.append(float('inf'))
            continue
        scores.append(float(np.mean(((y - fitted) / slack) ** 2)))
    return scores


def _kfold_scores(X, y, grid, folds, seed, fit_intercept, standardize):
    n = X.shape[0]
    order = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(order, folds)
    scores = []
    for lam in grid:
        config = RidgeConfig(lam, fit_intercept, standardize, min_norm_fallback=True)
        errors = np.empty(n)
        for held_out in parts:
            train = np.setdiff1d(order, held_out)
            coef = ridge_fit(X[train], y[train], config)
            errors[held_out] = y[held_out] - predict(X[held_out], coef)
        scores.append(float(np.mean(errors ** 2)))
    return scores


def _pick_lambda(grid, scores):
    scores = np.where(np.isfinite(scores), scores, np.inf)
    best = scores.min()
    if not np.isfinite(best):
        return grid[-1]
    tolerance = _TIE_RTOL * abs(best)
    return max(lam for lam, score in zip(grid, scores) if score <= best + tolerance)
