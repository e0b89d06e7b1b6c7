"""
Metrics and task-similarity analysis.
LAMeL Toolkit - Analysis Module

This module provides:
- MAE, R² and relative improvement of meta over regular models
- Cosine similarity and pairwise similarity matrices
- The fingerprint vs regression-vector similarity study
- Support-model quality on 80/20 splits
- Mean ± standard-error summaries over seeds and plot-ready curve series
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from scipy import stats

from core.exceptions import TaskDataError, UndefinedMetricError
from modeling.lamel import LambdaPolicy, fit_support_model
from modeling.linmodel import predict
from .taskdata import train_test_split

logger = logging.getLogger(__name__)

SIMILARITY_KINDS = ('fingerprint', 'regression-vector')

SUMMARY_KEYS = ['target', 'max_size', 'support_subsample', 'n_shots']
SUMMARY_METRICS = ['mae_meta', 'mae_regular', 'r2_meta', 'r2_regular', 'relative_improvement']


@dataclass(frozen=True)
class MetricRecord:
    """
    Paired evaluation of one (target, n_shots, seed) cell.

    Attributes:
        target: Target task id
        n_shots: Training rows drawn from the target
        seed: Shot sampling seed
        mae_meta: Test MAE of the meta model
        mae_regular: Test MAE of plain ridge on the same shots
        r2_meta: Test R² of the meta model (None when the test labels are constant)
        r2_regular: Test R² of plain ridge
        n_test: Size of the shared test set
        n_support: Number of support tasks
        support_subsample: Rows per support task, 0 for all rows
        max_size: Graphlet size the features were built with
        lambda_parallel: Chosen parallel regularization (0 when degenerate or not anchored)
        lambda_perp: Chosen perpendicular regularization
        lambda_regular: Chosen baseline regularization
        degenerate: True when no support task existed and the meta model fell back to the baseline
        anchored: False when the meta model kept plain ridge because it cross-validated better
        span_fraction: Share of beta_perp inside the support deviation span (anchored models only)
    """
    target: str
    n_shots: int
    seed: int
    mae_meta: float
    mae_regular: float
    r2_meta: float | None
    r2_regular: float | None
    n_test: int = 0
    n_support: int = 0
    support_subsample: int = 0
    max_size: int = 0
    lambda_parallel: float = 0.0
    lambda_perp: float = 0.0
    lambda_regular: float = 0.0
    degenerate: bool = False
    anchored: bool = True
    span_fraction: float | None = None

    def __post_init__(self):
        if self.mae_meta < 0 or self.mae_regular < 0:
            raise ValueError("MAE must be non-negative")
        for value in (self.r2_meta, self.r2_regular):
            if value is not None and value > 1 + 1e-12:
                raise ValueError("R² cannot exceed 1")

    @property
    def relative_improvement(self):
        """Percent, or None when mae_meta is 0."""
        try:
            return relative_improvement(self.mae_regular, self.mae_meta)
        except UndefinedMetricError:
            return None

    def as_row(self):
        row = asdict(self)
        row['relative_improvement'] = self.relative_improvement
        return row


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Symmetric cosine-similarity matrix over task ids."""
    ids: tuple[str, ...]
    values: np.ndarray
    kind: str

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        n = len(self.ids)
        if self.kind not in SIMILARITY_KINDS:
            raise ValueError(f"Unknown similarity kind {self.kind!r}")
        if values.shape != (n, n):
            raise ValueError(f"Expected a {n}x{n} matrix, got {values.shape}")
        if not np.allclose(values, values.T, rtol=0, atol=1e-12):
            raise ValueError("Similarity matrix must be symmetric")
        if not np.allclose(np.diag(values), 1.0, rtol=0, atol=1e-12):
            raise ValueError("Similarity matrix must have a unit diagonal")
        if np.any(np.abs(values) > 1.0):
            raise ValueError("Similarity entries must lie in [-1, 1]")
        values.setflags(write=False)
        object.__setattr__(self, 'ids', tuple(self.ids))
        object.__setattr__(self, 'values', values)

    def pairs(self):
        """Upper-triangle (id_a, id_b, value) triples, no self-pairs."""
        rows, cols = np.triu_indices(len(self.ids), k=1)
        return [(self.ids[i], self.ids[j], float(self.values[i, j])) for i, j in zip(rows, cols)]

    def mean_off_diagonal(self):
        """{id: mean similarity to every other id}."""
        n = len(self.ids)
        if n < 2:
            return {task_id: None for task_id in self.ids}
        sums = self.values.sum(axis=1) - 1.0
        return {task_id: float(total / (n - 1)) for task_id, total in zip(self.ids, sums)}

    def to_frame(self):
        return pd.DataFrame(self.values, index=list(self.ids), columns=list(self.ids))


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True, eq=False)
class SimilarityStudy:
    """
    Both similarity matrices and their correlation over task pairs.

    ``pearson`` and ``fit`` are None when either axis is constant.
    """
    fingerprint: SimilarityMatrix
    regression: SimilarityMatrix
    pearson: float | None
    fit: LinearFit | None = None

    def pairs_frame(self):
        regression = {(a, b): value for a, b, value in self.regression.pairs()}
        return pd.DataFrame(
            [
                {'task_a': a, 'task_b': b, 'fingerprint_similarity': value,
                 'regression_similarity': regression[(a, b)]}
                for a, b, value in self.fingerprint.pairs()
            ],
            columns=['task_a', 'task_b', 'fingerprint_similarity', 'regression_similarity'],
        )


@dataclass(frozen=True, eq=False)
class SupportQuality:
    """Held-out quality of one independently fitted task model."""
    task_id: str
    n_train: int
    n_test: int
    lam: float
    mae: float
    r2: float | None
    coefficients: object = field(repr=False, default=None)

    def as_row(self):
        return {'task': self.task_id, 'n_train': self.n_train, 'n_test': self.n_test,
                'lambda': self.lam, 'mae': self.mae, 'r2': self.r2}


def _paired(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"Length mismatch: {y_true.shape[0]} vs {y_pred.shape[0]}")
    if y_true.shape[0] < 1:
        raise ValueError("Metrics need at least one value")
    return y_true, y_pred


def mae(y_true, y_pred):
    y_true, y_pred = _paired(y_true, y_pred)
    return float(np.mean(np.abs(y_true - y_pred)))


def r2(y_true, y_pred):
    """
    Raises:
        UndefinedMetricError: y_true has zero variance
    """
    y_true, y_pred = _paired(y_true, y_pred)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0:
        raise UndefinedMetricError("R² is undefined for constant targets")
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot


def r2_or_none(y_true, y_pred):
    try:
        return r2(y_true, y_pred)
    except UndefinedMetricError:
        return None


def relative_improvement(mae_regular, mae_meta):
    """100 * (mae_regular - mae_meta) / mae_meta; negative means negative transfer."""
    if mae_meta == 0:
        raise UndefinedMetricError("Relative improvement is undefined when the meta MAE is 0")
    return 100.0 * (mae_regular - mae_meta) / mae_meta


def cosine_similarity(u, v):
    """
    Raises:
        UndefinedMetricError: Either vector has zero norm
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError(f"Length mismatch: {u.shape[0]} vs {v.shape[0]}")
    norm_u, norm_v = np.linalg.norm(u), np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        raise UndefinedMetricError("Cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (norm_u * norm_v), -1.0, 1.0))


def similarity_matrix(vectors, kind):
    """
    SimilarityMatrix over a {task_id: vector} mapping, ids sorted.

    Coefficients objects contribute their beta only; the intercept is left out.
    """
    ids = sorted(vectors)
    rows = np.vstack([_as_vector(vectors[task_id]) for task_id in ids])
    norms = np.linalg.norm(rows, axis=1)
    zero = [task_id for task_id, norm in zip(ids, norms) if norm == 0]
    if zero:
        raise UndefinedMetricError(f"Zero {kind} vector for {', '.join(zero)}")
    unit = rows / norms[:, None]
    values = np.clip(unit @ unit.T, -1.0, 1.0)
    values = (values + values.T) / 2
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(tuple(ids), values, kind)


def _as_vector(value):
    return np.asarray(getattr(value, 'beta', value), dtype=np.float64).ravel()


def pearson(x, y):
    """
    Raises:
        UndefinedMetricError: Fewer than 2 points or a constant axis
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] < 2:
        raise UndefinedMetricError("Pearson correlation needs at least 2 points")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedMetricError("Pearson correlation is undefined for a constant axis")
    return float(stats.pearsonr(x, y)[0])


def similarity_study(fingerprint_vectors, regression_vectors):
    """
    Correlate fingerprint similarity with regression-vector similarity.

    Both mappings must cover the same task ids (at least 3).
    """
    if set(fingerprint_vectors) != set(regression_vectors):
        missing = set(fingerprint_vectors) ^ set(regression_vectors)
        raise TaskDataError(f"Similarity inputs disagree on tasks: {sorted(missing)}")
    if len(fingerprint_vectors) < 3:
        raise TaskDataError("Similarity study needs at least 3 tasks")

    fingerprint = similarity_matrix(fingerprint_vectors, 'fingerprint')
    regression = similarity_matrix(regression_vectors, 'regression-vector')
    x = np.array([value for _, _, value in fingerprint.pairs()])
    y = np.array([value for _, _, value in regression.pairs()])
    try:
        r = pearson(x, y)
    except UndefinedMetricError as exc:
        logger.warning("Similarity study: %s", exc)
        return SimilarityStudy(fingerprint, regression, None, None)

    line = stats.linregress(x, y)
    logger.info("Similarity study over %d pairs: Pearson R = %.3f", x.shape[0], r)
    return SimilarityStudy(fingerprint, regression, r, LinearFit(line.slope, line.intercept, line.rvalue ** 2))


def support_quality(tasks, policy=None, split_seed=0, test_fraction=0.2):
    """Independent ridge per task on an 80/20 split; returns SupportQuality per task."""
    policy = policy or LambdaPolicy()
    report = []
    for task in tasks:
        split = train_test_split(task, test_fraction, split_seed)
        train, test = task.subset(split.train_indices), task.subset(split.test_indices)
        model = fit_support_model(train, policy)
        predicted = predict(test.X, model.coefficients)
        report.append(SupportQuality(
            task.id, train.rows, test.rows, model.lam,
            mae(test.y, predicted), r2_or_none(test.y, predicted), model.coefficients,
        ))
    return report


def records_frame(records):
    columns = list(MetricRecord.__dataclass_fields__) + ['relative_improvement']
    return pd.DataFrame([record.as_row() for record in records], columns=columns)


def summarize(records):
    """
    Mean and standard error over seeds per (target, max_size, subsample, n_shots).

    Accepts MetricRecords or a raw frame; SE is NaN for a single seed.
    """
    frame = records if isinstance(records, pd.DataFrame) else records_frame(records)
    if frame.empty:
        return pd.DataFrame(columns=SUMMARY_KEYS + ['n_seeds'] + [
            f"{metric}_{stat}" for metric in SUMMARY_METRICS for stat in ('mean', 'se')
        ])
    values = frame[SUMMARY_KEYS + SUMMARY_METRICS].copy()
    values[SUMMARY_METRICS] = values[SUMMARY_METRICS].apply(pd.to_numeric, errors='coerce')
    grouped = values.groupby(SUMMARY_KEYS, sort=True)
    means = grouped[SUMMARY_METRICS].mean().add_suffix('_mean')
    errors = grouped[SUMMARY_METRICS].sem(ddof=1).add_suffix('_se')
    counts = grouped.size().rename('n_seeds')
    summary = pd.concat([counts, means, errors], axis=1).reset_index()
    ordered = SUMMARY_KEYS + ['n_seeds'] + [
        f"{metric}_{stat}" for metric in SUMMARY_METRICS for stat in ('mean', 'se')
    ]
    return summary[ordered]


def curves(summary):
    """Plot series: one row per (target, max_size, subsample, n_shots) point."""
    columns = SUMMARY_KEYS + [
        'relative_improvement_mean', 'relative_improvement_se',
        'mae_meta_mean', 'mae_meta_se', 'mae_regular_mean', 'mae_regular_se',
    ]
    return summary[columns].sort_values(SUMMARY_KEYS, kind='mergesort').reset_index(drop=True)
