"""
Leave-one-task-out experiment and similarity harness.
LAMeL Toolkit - Experiment Harness

For every (target, support subsample, seed) cell the harness draws the shots,
fits the meta model against the other tasks and a plain ridge baseline on the
same shots, and scores both on the same held-out rows. Cells run in a thread
pool; results are sorted before a single writer emits them, so worker count
never changes the output bytes.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings
from django.db import DatabaseError, transaction
from django.utils import timezone

import lamel_toolkit
from core.exceptions import ConfigError, LeakageError, TaskDataError
from molecules.graphlets import build_vocabulary, featurize, fingerprint_smiles
from modeling.lamel import LambdaPolicy, SupportEnsemble, fit, fit_support_model, in_span_fraction, predict_meta
from modeling.linmodel import RidgeConfig, predict, ridge_fit
from .analysis import (
    MetricRecord, curves, mae, r2_or_none, records_frame, similarity_study, summarize, support_quality,
)
from .config import ALL_TARGETS
from .taskdata import (
    assemble_tasks, filter_temperature_window, generate_synthetic_tasks, load_records,
    sample_shots, select_tasks, subsample_task, train_test_split,
)

logger = logging.getLogger(__name__)

RAW_FILE = 'raw.csv'
SUMMARY_FILE = 'summary.csv'
CURVES_FILE = 'curves.csv'
REJECTS_FILE = 'rejects.csv'
CONFIG_ECHO_FILE = 'config-echo'


@dataclass(frozen=True, eq=False)
class LoadedTasks:
    """
    Tasks ready for an experiment.

    Attributes:
        tasks: Every task, sorted by id
        rejects: Rows lost during loading or assembly
        solvent_smiles: {task_id: solvent SMILES} when the dataset provides one
        ground_truth: {task_id: coefficient vector} for synthetic data
        dropped: {task_id: rows} for tasks under min_rows_per_task
    """
    tasks: tuple
    rejects: tuple = ()
    solvent_smiles: dict = field(default_factory=dict)
    ground_truth: dict = field(default_factory=dict)
    dropped: dict = field(default_factory=dict)

    def by_id(self):
        return {task.id: task for task in self.tasks}


@dataclass(frozen=True, eq=False)
class RunResult:
    """Records and bookkeeping of one finished run."""
    config: object
    records: tuple
    run_dir: Path
    skipped: int
    n_tasks: int
    elapsed: float
    started_at: object
    finished_at: object


def load_tasks(config):
    """
    Build tasks for ``config``: generated for the synthetic layout, read otherwise.

    Raises:
        TaskDataError: Unreadable data or nothing left after filtering
    """
    if config.is_synthetic:
        target = None if config.synthetic_target == 'none' else config.synthetic_target
        synthetic = generate_synthetic_tasks(
            config.synthetic_features, config.synthetic_tasks, config.synthetic_rank,
            config.synthetic_noise, config.synthetic_rows, seed=config.split_seed, target=target,
        )
        return LoadedTasks(synthetic.all_tasks(), ground_truth=dict(synthetic.coefficients))

    loaded = load_records(config.data_path, config.schema())
    records = list(loaded.records)
    if config.temperature_filter:
        records = filter_temperature_window(records, **settings.LAMEL['TEMPERATURE_WINDOW'])
    assembled = assemble_tasks(records, config.max_size, config.min_rows_per_task, workers=config.workers)

    kept = {task.id for task in assembled.tasks}
    solvents = dict(config.solvent_smiles)
    for record in records:
        if record.solvent_smiles and record.task_key in kept:
            solvents.setdefault(record.task_key, record.solvent_smiles)
    solvents = {key: value for key, value in solvents.items() if key in kept}
    logger.info("Assembled %d tasks over %d graphlets (max size %d)",
                len(assembled.tasks), assembled.vocabulary.size, config.max_size)
    return LoadedTasks(
        assembled.tasks,
        rejects=loaded.rejects + assembled.rejects,
        solvent_smiles=solvents,
        dropped=dict(assembled.dropped),
    )


def lambda_policy(config):
    return LambdaPolicy(
        support=config.support_grid,
        parallel=config.parallel_grid,
        perpendicular=config.perp_grid,
        seed=config.split_seed,
    )


def check_leakage(target, support_tasks):
    """
    Raises:
        LeakageError: A target sample id appears in a support task
    """
    target_ids = set(target.sample_ids)
    for task in support_tasks:
        if task.id == target.id:
            raise LeakageError(f"Target task {target.id!r} is among its own support tasks")
        shared = target_ids.intersection(task.sample_ids)
        if shared:
            example = sorted(shared)[0]
            raise LeakageError(f"{len(shared)} target samples of {target.id!r} found in {task.id!r}, e.g. {example}")


def fit_baseline(shots, policy):
    """Plain ridge on the shots; lambda from the perpendicular grid."""
    lam = policy.choose('perpendicular', shots.X, shots.y, fit_intercept=True)
    return ridge_fit(shots.X, shots.y, RidgeConfig(lam)), lam


class ExperimentRunner:
    """
    Runs the leave-one-task-out protocol for one ExperimentConfig.

    Usage:
        runner = ExperimentRunner(config)
        result = runner.run()
    """

    def __init__(self, config, loaded=None):
        self.config = config
        self.policy = lambda_policy(config)
        self.loaded = loaded
        self._support_models = {}

    def targets(self):
        ids = [task.id for task in self.loaded.tasks]
        if self.config.target == ALL_TARGETS:
            return ids
        if self.config.target not in ids:
            raise ConfigError(f"Unknown target task {self.config.target!r}; available: {', '.join(ids)}")
        return [self.config.target]

    def support_ids(self, target_id):
        candidates = [task.id for task in self.loaded.tasks if task.id != target_id]
        if not (self.config.support_pattern or self.config.support_count):
            return candidates
        return select_tasks(
            candidates, self.config.support_pattern, self.config.support_count, seed=self.config.split_seed,
        )

    def _fit_support(self, key):
        """Support model on the task's train split, subsampled when requested."""
        task_id, subsample = key
        task = self.loaded.by_id()[task_id]
        if task.rows > 1:
            split = train_test_split(task, self.config.test_fraction, self.config.split_seed)
            task = task.subset(split.train_indices)
        if subsample:
            task = subsample_task(task, subsample, seed=self.config.split_seed)
        return key, fit_support_model(task, self.policy)

    def prepare_support(self, targets):
        """Fit every support model the cells will need, once."""
        keys = sorted({
            (task_id, subsample)
            for target_id in targets
            for task_id in self.support_ids(target_id)
            for subsample in self.config.support_subsample
        })
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            self._support_models.update(pool.map(self._fit_support, keys))
        logger.info("Fitted %d support models", len(keys))

    def ensemble(self, target_id, subsample):
        models = [self._support_models[(task_id, subsample)] for task_id in self.support_ids(target_id)]
        return SupportEnsemble(tuple(models)) if models else None

    def run_cell(self, cell):
        """All shot counts of one (target, subsample, seed) cell; returns (records, skipped)."""
        target_id, subsample, seed = cell
        tasks = self.loaded.by_id()
        target = tasks[target_id]
        support = [tasks[task_id] for task_id in self.support_ids(target_id)]
        check_leakage(target, support)
        ensemble = self.ensemble(target_id, subsample)

        records, skipped = [], 0
        for n_shots in self.config.shots:
            if n_shots >= target.rows:
                logger.warning("Skipping %s NS=%d seed=%d: task has %d rows", target_id, n_shots, seed, target.rows)
                skipped += 1
                continue
            split = sample_shots(target, n_shots, seed)
            shots, test = target.subset(split.train_indices), target.subset(split.test_indices)

            baseline, lam_regular = fit_baseline(shots, self.policy)
            regular_pred = predict(test.X, baseline)
            degenerate, anchored, span_fraction = ensemble is None, False, None
            if degenerate:
                meta_pred, lambdas = regular_pred, (0.0, lam_regular)
            else:
                model = fit(ensemble, shots.X, shots.y, self.policy, target_id=target_id)
                meta_pred, lambdas, anchored = predict_meta(model, test.X), model.lambdas, model.anchored
                if anchored:
                    span_fraction = in_span_fraction(ensemble, model.beta_perp)

            records.append(MetricRecord(
                target=target_id,
                n_shots=n_shots,
                seed=seed,
                mae_meta=mae(test.y, meta_pred),
                mae_regular=mae(test.y, regular_pred),
                r2_meta=r2_or_none(test.y, meta_pred),
                r2_regular=r2_or_none(test.y, regular_pred),
                n_test=test.rows,
                n_support=len(support),
                support_subsample=subsample,
                max_size=self.config.max_size,
                lambda_parallel=lambdas[0],
                lambda_perp=lambdas[1],
                lambda_regular=lam_regular,
                degenerate=degenerate,
                anchored=anchored,
                span_fraction=span_fraction,
            ))
        return records, skipped

    def run(self):
        started_at, clock = timezone.now(), time.perf_counter()
        if self.loaded is None:
            self.loaded = load_tasks(self.config)
        targets = self.targets()
        logger.info("Experiment %s: %d targets, shots %s, %d seeds",
                    self.config.digest()[:12], len(targets), list(self.config.shots), len(self.config.seeds))

        self.prepare_support(targets)
        cells = [
            (target_id, subsample, seed)
            for target_id in targets
            for subsample in self.config.support_subsample
            for seed in self.config.seeds
        ]
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            outcomes = list(pool.map(self.run_cell, cells))

        records = sorted(
            (record for cell_records, _ in outcomes for record in cell_records),
            key=lambda r: (r.target, r.max_size, r.support_subsample, r.n_shots, r.seed),
        )
        skipped = sum(count for _, count in outcomes)
        elapsed = time.perf_counter() - clock
        logger.info("Experiment %s finished: %d rows, %d skipped, %.1fs",
                    self.config.digest()[:12], len(records), skipped, elapsed)
        return RunResult(self.config, tuple(records), self.config.run_dir(), skipped,
                         len(self.loaded.tasks), elapsed, started_at, timezone.now())


def rejects_frame(rejects):
    return pd.DataFrame(
        [{'source_row': reject.source_row, 'task': reject.task_key, 'reason': reject.reason} for reject in rejects],
        columns=['source_row', 'task', 'reason'],
    ).sort_values(['source_row', 'task'], kind='mergesort')


def config_echo(config, **extra):
    return {
        'digest': config.digest(),
        'code_version': lamel_toolkit.__version__,
        'config': config.to_dict(),
        **extra,
    }


def write_experiment_outputs(result, rejects=()):
    """Write raw, summary, curves, rejects and config echo; returns the run directory."""
    run_dir = Path(result.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    raw = records_frame(result.records)
    summary = summarize(raw)
    raw.to_csv(run_dir / RAW_FILE, index=False)
    summary.to_csv(run_dir / SUMMARY_FILE, index=False)
    curves(summary).to_csv(run_dir / CURVES_FILE, index=False)
    rejects_frame(rejects).to_csv(run_dir / REJECTS_FILE, index=False)
    echo = config_echo(
        result.config,
        n_tasks=result.n_tasks,
        n_rows=len(result.records),
        n_skipped=result.skipped,
        started_at=result.started_at.isoformat(),
        finished_at=result.finished_at.isoformat(),
        elapsed_seconds=round(result.elapsed, 3),
    )
    (run_dir / CONFIG_ECHO_FILE).write_text(json.dumps(echo, indent=2) + '\n', encoding='utf-8')
    logger.info("Wrote experiment outputs to %s", run_dir)
    return run_dir


def record_run(result, kind='experiment', pearson=None):
    """
    Store a finished run in the results registry.

    Database failures are logged and swallowed; files on disk stay the
    source of truth.
    """
    from .models import ExperimentRun, MetricResult

    config = result.config
    try:
        with transaction.atomic():
            run = ExperimentRun.objects.create(
                digest=config.digest(),
                kind=kind,
                dataset=config.dataset,
                max_size=config.max_size,
                config=config.to_dict(),
                code_version=lamel_toolkit.__version__,
                output_dir=str(result.run_dir),
                n_tasks=result.n_tasks,
                n_skipped=result.skipped,
                started_at=result.started_at,
                finished_at=result.finished_at,
                elapsed_seconds=result.elapsed,
                pearson=pearson,
            )
            MetricResult.objects.bulk_create([
                MetricResult(run=run, relative_improvement=record.relative_improvement, **{
                    name: getattr(record, name) for name in (
                        'target', 'n_shots', 'seed', 'support_subsample', 'max_size', 'n_test',
                        'n_support', 'mae_meta', 'mae_regular', 'r2_meta', 'r2_regular',
                        'lambda_parallel', 'lambda_perp', 'lambda_regular', 'degenerate', 'anchored',
                        'span_fraction',
                    )
                })
                for record in result.records
            ])
    except DatabaseError as exc:
        logger.warning("Could not record run %s: %s", config.digest()[:12], exc)
        return None
    return run


def record_failure(config, kind, started_at, error):
    """Store a run that raised, with status 'failed' and the exception text."""
    from .models import ExperimentRun

    try:
        return ExperimentRun.objects.create(
            digest=config.digest(),
            kind=kind,
            dataset=config.dataset,
            max_size=config.max_size,
            config=config.to_dict(),
            status='failed',
            error=f"{type(error).__name__}: {error}",
            code_version=lamel_toolkit.__version__,
            output_dir=str(config.run_dir()),
            started_at=started_at,
            finished_at=timezone.now(),
        )
    except DatabaseError as exc:
        logger.warning("Could not record failed run %s: %s", config.digest()[:12], exc)
        return None


def run_experiment(config, record=None):
    """Load, run, write and optionally record one experiment config."""
    recording = config.record if record is None else record
    started_at = timezone.now()
    try:
        loaded = load_tasks(config)
        result = ExperimentRunner(config, loaded).run()
        write_experiment_outputs(result, loaded.rejects)
    except Exception as exc:
        if recording:
            record_failure(config, 'experiment', started_at, exc)
        raise
    if recording:
        record_run(result)
    return result


@dataclass(frozen=True, eq=False)
class SimilarityResult:
    config: object
    study: object
    quality: tuple
    run_dir: Path
    excluded: tuple = ()


def fingerprint_vectors(smiles_by_task, max_size, workers=1):
    """
    Dense graphlet count vectors of each task's solvent over a shared vocabulary.

    Tasks whose solvent fails to parse are left out with a warning.
    """
    ids = sorted(smiles_by_task)
    outcomes = fingerprint_smiles([smiles_by_task[task_id] for task_id in ids], max_size, workers=workers)
    parsed = {}
    for task_id, outcome in zip(ids, outcomes):
        if isinstance(outcome, str):
            logger.warning("Solvent of task %s not usable: %s", task_id, outcome)
            continue
        parsed[task_id] = outcome
    if not parsed:
        return {}
    vocabulary = build_vocabulary(list(parsed.values()), max_size=max_size)
    matrix = featurize(list(parsed.values()), vocabulary, row_ids=list(parsed)).to_dense().astype(np.float64)
    return {task_id: matrix[i] for i, task_id in enumerate(parsed)}


def run_similarity(config, record=None):
    """
    Fingerprint vs regression-vector similarity over every task with a solvent.

    Synthetic data uses the generating coefficient vectors as the fingerprint
    axis. Writes into ``<run dir>/similarity``.

    Raises:
        TaskDataError: Fewer than 3 usable tasks
    """
    recording = config.record if record is None else record
    started_at = timezone.now()
    try:
        return _similarity(config, recording, started_at)
    except Exception as exc:
        if recording:
            record_failure(config, 'similarity', started_at, exc)
        raise


def _similarity(config, recording, started_at):
    clock = time.perf_counter()
    loaded = load_tasks(config)
    if loaded.ground_truth:
        fingerprints = {task_id: np.asarray(vector) for task_id, vector in loaded.ground_truth.items()}
    else:
        fingerprints = fingerprint_vectors(loaded.solvent_smiles, config.similarity_max_size, config.workers)

    tasks = [task for task in loaded.tasks if task.id in fingerprints]
    excluded = tuple(sorted(task.id for task in loaded.tasks if task.id not in fingerprints))
    if excluded:
        logger.warning("No solvent structure for %d task(s): %s", len(excluded), ', '.join(excluded))
    if len(tasks) < 3:
        raise TaskDataError(f"Similarity study needs 3 tasks with solvent structures, found {len(tasks)}")

    quality = tuple(support_quality(tasks, lambda_policy(config), config.split_seed, config.test_fraction))
    study = similarity_study(
        {task.id: fingerprints[task.id] for task in tasks},
        {entry.task_id: entry.coefficients for entry in quality},
    )

    run_dir = config.run_dir() / 'similarity'
    run_dir.mkdir(parents=True, exist_ok=True)
    study.fingerprint.to_frame().to_csv(run_dir / 'fingerprint_similarity.csv', index_label='task')
    study.regression.to_frame().to_csv(run_dir / 'regression_similarity.csv', index_label='task')
    study.pairs_frame().to_csv(run_dir / 'pairs.csv', index=False)
    pd.DataFrame([entry.as_row() for entry in quality]).to_csv(run_dir / 'support_quality.csv', index=False)

    fp_means, reg_means = study.fingerprint.mean_off_diagonal(), study.regression.mean_off_diagonal()
    pd.DataFrame(
        [{'task': task_id, 'fingerprint_mean': fp_means[task_id], 'regression_mean': reg_means[task_id]}
         for task_id in study.fingerprint.ids],
    ).to_csv(run_dir / 'mean_similarity.csv', index=False)

    fit_row = {'n_pairs': len(study.fingerprint.pairs()), 'pearson': study.pearson,
               'slope': None, 'intercept': None, 'r_squared': None}
    if study.fit is not None:
        fit_row.update(slope=study.fit.slope, intercept=study.fit.intercept, r_squared=study.fit.r_squared)
    pd.DataFrame([fit_row]).to_csv(run_dir / 'fit.csv', index=False)

    elapsed = time.perf_counter() - clock
    echo = config_echo(config, kind='similarity', excluded=list(excluded),
                       started_at=started_at.isoformat(), elapsed_seconds=round(elapsed, 3))
    (run_dir / CONFIG_ECHO_FILE).write_text(json.dumps(echo, indent=2) + '\n', encoding='utf-8')

    if recording:
        record_run(
            RunResult(config, (), run_dir, 0, len(tasks), elapsed, started_at, timezone.now()),
            kind='similarity', pearson=study.pearson,
        )
    return SimilarityResult(config, study, quality, run_dir, excluded)
