"""
Task data ingestion and sampling.
LAMeL Toolkit - Task Data Module

This module turns dataset files into regression tasks including:
- CSV ingestion for long (one row per measurement) and wide (one column per
  task) layouts, with a rejects report instead of silent drops
- The single-entry temperature window rule for multi-temperature data
- Task assembly over one shared graphlet vocabulary
- Few-shot splits, 80/20 splits, support subsampling and task selection
- Synthetic low-rank task families with known ground truth
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import sparse

from core.exceptions import TaskDataError
from molecules.graphlets import (
    FeatureMatrix, FingerprintVocabulary, build_vocabulary, featurize, fingerprint_smiles,
)
from modeling.lamel import Task

logger = logging.getLogger(__name__)

LAYOUTS = ('long', 'wide')


@dataclass(frozen=True)
class RawRecord:
    """
    One labeled measurement.

    Attributes:
        solute_smiles: Molecule the value belongs to
        task_key: Solvent name or method label
        value: Label in dataset units
        temperature: Kelvin, when the dataset has a temperature column
        source_row: 1-based data row in the input file (header excluded)
        solvent_smiles: Solvent structure when the dataset provides it
        value_column: Input column the value was read from
    """
    solute_smiles: str
    task_key: str
    value: float
    temperature: float | None = None
    source_row: int = 0
    solvent_smiles: str = ''
    value_column: str = ''

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise TaskDataError(f"Row {self.source_row}: value must be finite")
        if self.temperature is not None and not 0 < self.temperature < 1000:
            raise TaskDataError(f"Row {self.source_row}: temperature {self.temperature} K outside (0, 1000)")

    @property
    def sample_id(self):
        """
        Identity of the measurement: value column and source row.

        Independent of the task the record is grouped into, so one input cell
        assigned to two tasks yields the same id in both.
        """
        return f"{self.value_column or self.task_key}#{self.source_row}"


@dataclass(frozen=True)
class Reject:
    source_row: int
    reason: str
    task_key: str = ''


@dataclass(frozen=True)
class DatasetSchema:
    """Column roles of an input CSV."""
    layout: str = 'long'
    smiles_col: str = 'SMILES'
    task_col: str = ''
    value_col: str = ''
    temperature_col: str = ''
    solvent_smiles_col: str = ''
    task_pattern: str = ''

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise TaskDataError(f"Unknown layout {self.layout!r}; expected one of {LAYOUTS}")
        if self.layout == 'long' and not (self.task_col and self.value_col):
            raise TaskDataError("Long layout needs task_col and value_col")
        if self.layout == 'wide' and not self.task_pattern:
            raise TaskDataError("Wide layout needs task_pattern")

    @classmethod
    def from_mapping(cls, mapping):
        names = cls.__dataclass_fields__
        return cls(**{key: value for key, value in mapping.items() if key in names and value is not None})

    def required_columns(self):
        columns = [self.smiles_col]
        if self.layout == 'long':
            columns += [self.task_col, self.value_col]
        columns += [col for col in (self.temperature_col, self.solvent_smiles_col) if col]
        return columns


@dataclass(frozen=True)
class LoadResult:
    records: tuple[RawRecord, ...]
    rejects: tuple[Reject, ...]


@dataclass(frozen=True)
class ShotSplit:
    """Disjoint train (shots) and test row positions of one task."""
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    n_shots: int
    seed: int

    def __post_init__(self):
        if len(self.train_indices) != self.n_shots:
            raise TaskDataError("train_indices length differs from n_shots")
        if set(self.train_indices) & set(self.test_indices):
            raise TaskDataError("train and test indices overlap")


@dataclass(frozen=True, eq=False)
class AssembledTasks:
    """
    Tasks over one shared vocabulary.

    Attributes:
        tasks: One Task per kept task key, sorted by id
        vocabulary: Union of graphlets over every kept molecule
        rejects: Rows lost to parse failures
        dropped: {task_key: valid rows} for tasks under min_rows_per_task
    """
    tasks: tuple[Task, ...]
    vocabulary: FingerprintVocabulary
    rejects: tuple[Reject, ...] = ()
    dropped: dict = field(default_factory=dict)

    def by_id(self):
        return {task.id: task for task in self.tasks}

    def sizes(self):
        return {task.id: task.rows for task in self.tasks}


@dataclass(frozen=True, eq=False)
class SyntheticTasks:
    """Synthetic task family plus the coefficients that generated it."""
    tasks: tuple[Task, ...]
    coefficients: dict
    basis: np.ndarray
    target: Task | None = None

    def all_tasks(self):
        return self.tasks + ((self.target,) if self.target is not None else ())


def load_records(path, schema):
    """
    Read a CSV into RawRecords.

    Malformed rows go to ``rejects`` with their source_row and a reason.

    Raises:
        TaskDataError: Unreadable file or a mapped column is missing
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError as exc:
        raise TaskDataError(f"{path}: file has no header") from exc
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as exc:
        raise TaskDataError(f"Cannot read {path}: {exc}") from exc

    missing = [col for col in schema.required_columns() if col not in frame.columns]
    if missing:
        raise TaskDataError(f"{path}: missing column(s) {', '.join(missing)}")

    if schema.layout == 'wide':
        records, rejects = _wide_records(frame, schema)
    else:
        records, rejects = _long_records(frame, schema)

    if rejects:
        logger.warning("%s: rejected %d of %d rows", path.name, len(rejects), len(frame))
    logger.info("Loaded %d records from %s", len(records), path)
    return LoadResult(tuple(records), tuple(rejects))


def _parse_float(text):
    try:
        value = float(text)
    except (TypeError, ValueError):
        return None
    return value if math.isfinite(value) else None


def _common_fields(row, schema, source_row):
    smiles = row[schema.smiles_col].strip()
    if not smiles:
        return None, "empty SMILES"
    temperature = None
    if schema.temperature_col:
        text = row[schema.temperature_col].strip()
        if text:
            temperature = _parse_float(text)
            if temperature is None or not 0 < temperature < 1000:
                return None, f"invalid temperature {text!r}"
    solvent = row[schema.solvent_smiles_col].strip() if schema.solvent_smiles_col else ''
    return (smiles, temperature, solvent), None


def _long_records(frame, schema):
    records, rejects = [], []
    for source_row, row in enumerate(frame.to_dict('records'), start=1):
        task_key = row[schema.task_col].strip()
        common, reason = _common_fields(row, schema, source_row)
        if common is None:
            rejects.append(Reject(source_row, reason, task_key))
            continue
        if not task_key:
            rejects.append(Reject(source_row, "empty task key"))
            continue
        value = _parse_float(row[schema.value_col].strip())
        if value is None:
            rejects.append(Reject(source_row, f"non-numeric value {row[schema.value_col]!r}", task_key))
            continue
        smiles, temperature, solvent = common
        records.append(RawRecord(smiles, task_key, value, temperature, source_row, solvent, schema.value_col))
    return records, rejects


def _wide_records(frame, schema):
    pattern = re.compile(schema.task_pattern)
    task_columns = sorted(col for col in frame.columns if pattern.search(col))
    if not task_columns:
        raise TaskDataError(f"No column matches task pattern {schema.task_pattern!r}")

    records, rejects = [], []
    for source_row, row in enumerate(frame.to_dict('records'), start=1):
        common, reason = _common_fields(row, schema, source_row)
        if common is None:
            rejects.append(Reject(source_row, reason))
            continue
        smiles, temperature, solvent = common
        for column in task_columns:
            text = row[column].strip()
            if not text:
                continue
            value = _parse_float(text)
            if value is None:
                rejects.append(Reject(source_row, f"non-numeric value {text!r}", column))
                continue
            records.append(RawRecord(smiles, column, value, temperature, source_row, solvent, column))
    return records, rejects


def filter_temperature_window(records, low=290.0, high=300.0, target=298.0):
    """
    Keep one in-window record per (solute, task) pair.

    The kept record is the one nearest ``target``; exact ties go to the lowest
    source_row. Pairs without an in-window record are dropped.
    """
    best = {}
    for record in records:
        if record.temperature is None or not low <= record.temperature <= high:
            continue
        key = (record.solute_smiles, record.task_key)
        rank = (abs(record.temperature - target), record.source_row)
        if key not in best or rank < best[key][0]:
            best[key] = (rank, record)
    kept = sorted((entry[1] for entry in best.values()), key=lambda record: record.source_row)
    logger.info("Temperature window [%g, %g] K kept %d of %d records", low, high, len(kept), len(records))
    return kept


def task_sizes(records):
    """{task_key: record count}, sorted by key."""
    counts = {}
    for record in records:
        counts[record.task_key] = counts.get(record.task_key, 0) + 1
    return dict(sorted(counts.items()))


def task_count_curve(records, thresholds):
    """{threshold: number of tasks with at least that many records}."""
    sizes = list(task_sizes(records).values())
    return {int(threshold): sum(1 for size in sizes if size >= threshold) for threshold in thresholds}


def assemble_tasks(records, max_size, min_rows_per_task=1, workers=1, vocabulary=None):
    """
    Group records into Tasks over one shared vocabulary.

    SMILES that fail to parse become rejects. Tasks with fewer than
    ``min_rows_per_task`` valid rows are dropped before the vocabulary is
    built, so V only reflects molecules that are actually used.

    Raises:
        TaskDataError: No records, or nothing left after filtering
    """
    records = list(records)
    if not records:
        raise TaskDataError("No records to assemble")

    unique_smiles = sorted({record.solute_smiles for record in records})
    results = dict(zip(unique_smiles, fingerprint_smiles(unique_smiles, max_size, workers=workers)))

    rejects, grouped = [], {}
    for record in sorted(records, key=lambda record: (record.task_key, record.source_row)):
        outcome = results[record.solute_smiles]
        if isinstance(outcome, str):
            rejects.append(Reject(record.source_row, outcome, record.task_key))
            continue
        grouped.setdefault(record.task_key, []).append(record)
    if rejects:
        logger.warning("Dropped %d records whose SMILES failed to parse", len(rejects))

    dropped = {key: len(rows) for key, rows in grouped.items() if len(rows) < min_rows_per_task}
    kept = {key: rows for key, rows in grouped.items() if len(rows) >= min_rows_per_task}
    if dropped:
        logger.info("Dropped %d tasks under %d rows", len(dropped), min_rows_per_task)
    if not kept:
        raise TaskDataError(f"No task has at least {min_rows_per_task} valid rows")

    if vocabulary is None:
        molecules = sorted({record.solute_smiles for rows in kept.values() for record in rows})
        vocabulary = build_vocabulary([results[smiles] for smiles in molecules], max_size=max_size)

    tasks = []
    for key in sorted(kept):
        rows = kept[key]
        features = featurize(
            [results[record.solute_smiles] for record in rows],
            vocabulary,
            row_ids=[record.sample_id for record in rows],
        )
        tasks.append(Task(key, features, [record.value for record in rows]))
    return AssembledTasks(tuple(tasks), vocabulary, tuple(rejects), dropped)


def sample_shots(task, n_shots, seed):
    """
    Uniform n_shots-row training sample; the rest is the test set.

    Raises:
        TaskDataError: n_shots < 1 or n_shots >= task rows
    """
    if n_shots < 1 or n_shots >= task.rows:
        raise TaskDataError(f"Task {task.id!r} has {task.rows} rows; cannot draw {n_shots} shots")
    order = np.random.default_rng(seed).permutation(task.rows)
    return ShotSplit(
        tuple(sorted(int(i) for i in order[:n_shots])),
        tuple(sorted(int(i) for i in order[n_shots:])),
        n_shots,
        seed,
    )


def train_test_split(task, test_fraction=0.2, seed=0):
    """80/20-style split; the test side always gets at least one row."""
    if not 0 < test_fraction < 1:
        raise TaskDataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if task.rows < 2:
        raise TaskDataError(f"Task {task.id!r} has {task.rows} row(s); cannot split")
    n_test = min(task.rows - 1, max(1, int(round(task.rows * test_fraction))))
    return sample_shots(task, task.rows - n_test, seed)


def subsample_task(task, size, seed):
    """``size`` random rows of ``task`` (kept in original order); identity when size >= rows."""
    if size < 1:
        raise TaskDataError(f"Subsample size must be >= 1, got {size}")
    if size >= task.rows:
        return task
    order = np.random.default_rng(seed).permutation(task.rows)
    return task.subset(np.sort(order[:size]))


def select_tasks(task_ids, pattern='', count=None, seed=0):
    """
    Task ids matching ``pattern``; a seeded random ``count`` of them when given.

    Raises:
        TaskDataError: Fewer matches than ``count``
    """
    regex = re.compile(pattern) if pattern else None
    matches = sorted(task_id for task_id in task_ids if regex is None or regex.search(task_id))
    if count is None:
        return matches
    if count > len(matches):
        raise TaskDataError(f"Only {len(matches)} tasks match {pattern!r}; {count} requested")
    chosen = np.random.default_rng(seed).choice(len(matches), size=count, replace=False)
    return sorted(matches[i] for i in chosen)


def generate_synthetic_tasks(n_features, n_tasks, rank, noise, rows, seed, target=None,
                             shared_weights=False):
    """
    Tasks whose coefficients share a rank-``rank`` subspace.

    beta_t = B a_t with B of shape (n_features, rank); features are Poisson(1)
    counts and labels get Gaussian noise of scale ``noise``. ``target`` adds a
    separate task named 'target' whose coefficients lie inside span(B)
    ('inside') or orthogonal to it ('orthogonal').

    Raises:
        TaskDataError: Invalid sizes
    """
    if n_features < 1 or rows < 1 or n_tasks < 1:
        raise TaskDataError("n_features, n_tasks and rows must be >= 1")
    if not 1 <= rank <= n_tasks or rank > n_features:
        raise TaskDataError(f"rank must be in 1..min(n_tasks, n_features), got {rank}")
    if noise < 0:
        raise TaskDataError("noise must be non-negative")
    if target not in (None, 'none', 'inside', 'orthogonal'):
        raise TaskDataError(f"Unknown synthetic target {target!r}")
    if target == 'orthogonal' and rank >= n_features:
        raise TaskDataError("No orthogonal complement when rank equals n_features")

    rng = np.random.default_rng(seed)
    basis = rng.normal(size=(n_features, rank)) / math.sqrt(n_features)
    vocabulary = FingerprintVocabulary.from_forms([f"x{j:05d}" for j in range(n_features)], 0)

    def make_task(task_id, beta):
        counts = rng.poisson(1.0, size=(rows, n_features))
        y = counts @ beta + noise * rng.normal(size=rows)
        features = FeatureMatrix(
            sparse.csr_matrix(counts.astype(np.int64)),
            tuple(f"{task_id}#{i + 1}" for i in range(rows)),
            vocabulary,
        )
        return Task(task_id, features, y)

    shared = rng.normal(size=rank)
    coefficients, tasks = {}, []
    for t in range(n_tasks):
        weights = shared if shared_weights else rng.normal(size=rank)
        task_id = f"task{t:02d}"
        coefficients[task_id] = basis @ weights
        tasks.append(make_task(task_id, coefficients[task_id]))

    target_task = None
    if target in ('inside', 'orthogonal'):
        beta = basis @ rng.normal(size=rank)
        if target == 'orthogonal':
            q, _ = np.linalg.qr(basis)
            draw = rng.normal(size=n_features)
            draw -= q @ (q.T @ draw)
            beta = draw * (np.linalg.norm(beta) / np.linalg.norm(draw))
        coefficients['target'] = beta
        target_task = make_task('target', beta)

    return SyntheticTasks(tuple(tasks), coefficients, basis, target_task)
