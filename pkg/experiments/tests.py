"""
Tests for experiments app data handling, analysis and harness.
LAMeL Toolkit - Unit Tests

This module contains unit tests for the experiments app including:
- CSV ingestion, temperature filtering, task assembly and sampling
- Metrics, similarity matrices and the similarity study
- Experiment config resolution and validation
- The leave-one-task-out harness, its outputs and the results registry
- Synthetic benchmarks of few-shot benefit and support-data robustness
- Management commands
- Checks against the external datasets when they are configured
"""

import itertools
import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import skipUnless

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from core.exceptions import ConfigError, LeakageError, TaskDataError, UndefinedMetricError
from modeling.io import read_coefficients, read_model, write_coefficients
from modeling.lamel import LambdaPolicy, predict_meta
from modeling.linmodel import Coefficients, RidgeConfig, predict, ridge_fit, ridge_fit_with_origin
from molecules.io import read_feature_matrix
from molecules.molgraph import parse_smiles
from molecules.tests import brute_force_classes
from .analysis import (
    MetricRecord, SimilarityMatrix, cosine_similarity, mae, pearson, r2, records_frame,
    relative_improvement, similarity_matrix, similarity_study, summarize, support_quality,
)
from .config import ExperimentConfig, load_experiment_config, load_experiment_configs
from .harness import (
    CONFIG_ECHO_FILE, CURVES_FILE, RAW_FILE, REJECTS_FILE, SUMMARY_FILE,
    ExperimentRunner, check_leakage, load_tasks, record_run, run_experiment, run_similarity,
)
from .models import ExperimentRun, MetricResult
from .taskdata import (
    DatasetSchema, RawRecord, assemble_tasks, filter_temperature_window, generate_synthetic_tasks,
    load_records, sample_shots, select_tasks, subsample_task, task_count_curve, task_sizes,
    train_test_split,
)

SOLUTES = [
    'C', 'CC', 'CCC', 'CCCC', 'CCO', 'CCCO', 'CO', 'CN', 'CCN', 'CC(C)C',
    'C=C', 'C#C', 'CC=O', 'OCCO', 'CC(=O)C', 'c1ccccc1', 'Cc1ccccc1', 'CCl',
]

LONG_SCHEMA = DatasetSchema(layout='long', smiles_col='SMILES', task_col='solvent', value_col='LogS')


def write_csv(directory, name, text):
    path = Path(directory) / name
    path.write_text(text, encoding='utf-8')
    return path


def solubility_csv(directory, solvents=('water', 'ethanol'), name='data.csv'):
    """Long-layout CSV with every solute measured in every solvent."""
    rng = np.random.default_rng(7)
    lines = ['SMILES,solvent,LogS']
    for solvent in solvents:
        for smiles in SOLUTES:
            lines.append(f'{smiles},{solvent},{rng.normal():.4f}')
    return write_csv(directory, name, '\n'.join(lines) + '\n')


def synthetic_config(out, **changes):
    values = dict(
        dataset='synthetic', layout='synthetic', synthetic_features=20, synthetic_tasks=4,
        synthetic_rank=2, synthetic_noise=0.1, synthetic_rows=60, synthetic_target='inside',
        target='target', shots=(5, 10), seeds=(0, 1), out=str(out),
    )
    values.update(changes)
    return ExperimentConfig(**values)


def mean_by_shots(records, attribute):
    grouped = {}
    for record in records:
        grouped.setdefault(record.n_shots, []).append(getattr(record, attribute))
    return {shots: float(np.mean(values)) for shots, values in grouped.items()}


class LoadRecordsTest(SimpleTestCase):
    """Test cases for load_records."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_toy_csv(self):
        path = write_csv(self.tmp.name, 'toy.csv', 'SMILES,solvent,LogS\nCCO,water,-1.0\nCC,water,-2.5\nCO,ethanol,0.5\n')
        result = load_records(path, LONG_SCHEMA)
        self.assertEqual([r.value for r in result.records], [-1.0, -2.5, 0.5])
        self.assertEqual([r.source_row for r in result.records], [1, 2, 3])
        self.assertEqual(result.records[2].task_key, 'ethanol')
        self.assertEqual(result.rejects, ())

    def test_non_numeric_value_rejected(self):
        path = write_csv(self.tmp.name, 'bad.csv', 'SMILES,solvent,LogS\nCCO,water,-1.0\nCC,water,-2.5\nCO,water,abc\n')
        result = load_records(path, LONG_SCHEMA)
        self.assertEqual(len(result.records), 2)
        self.assertEqual(len(result.rejects), 1)
        self.assertEqual(result.rejects[0].source_row, 3)
        self.assertIn('non-numeric', result.rejects[0].reason)

    def test_header_only(self):
        path = write_csv(self.tmp.name, 'empty.csv', 'SMILES,solvent,LogS\n')
        result = load_records(path, LONG_SCHEMA)
        self.assertEqual(result.records, ())
        self.assertEqual(result.rejects, ())

    def test_missing_column_and_unreadable_file(self):
        path = write_csv(self.tmp.name, 'cols.csv', 'SMILES,LogS\nC,1\n')
        with self.assertRaises(TaskDataError):
            load_records(path, LONG_SCHEMA)
        with self.assertRaises(TaskDataError):
            load_records(Path(self.tmp.name) / 'absent.csv', LONG_SCHEMA)

    def test_quoted_fields(self):
        path = write_csv(self.tmp.name, 'quoted.csv', 'SMILES,solvent,LogS\n"CC(=O)C","ethyl acetate, dry",-0.25\n')
        record = load_records(path, LONG_SCHEMA).records[0]
        self.assertEqual(record.solute_smiles, 'CC(=O)C')
        self.assertEqual(record.task_key, 'ethyl acetate, dry')

    def test_temperature_and_solvent_columns(self):
        schema = DatasetSchema(
            layout='long', smiles_col='SMILES', task_col='solvent', value_col='LogS',
            temperature_col='T', solvent_smiles_col='solvent_smiles',
        )
        path = write_csv(
            self.tmp.name, 'temp.csv',
            'SMILES,solvent,LogS,T,solvent_smiles\nC,water,1,298.15,O\nCC,water,2,1500,O\n',
        )
        result = load_records(path, schema)
        self.assertEqual(result.records[0].temperature, 298.15)
        self.assertEqual(result.records[0].solvent_smiles, 'O')
        self.assertEqual(len(result.rejects), 1)

    def test_wide_layout(self):
        schema = DatasetSchema(layout='wide', smiles_col='smiles', task_pattern=r'_(SZ|DZP)$')
        path = write_csv(
            self.tmp.name, 'wide.csv',
            'smiles,PBE_SZ,B3LYP_DZP,note\nC,1.0,2.0,x\nCC,,3.0,y\n',
        )
        result = load_records(path, schema)
        self.assertEqual(
            [(r.solute_smiles, r.task_key, r.value) for r in result.records],
            [('C', 'B3LYP_DZP', 2.0), ('C', 'PBE_SZ', 1.0), ('CC', 'B3LYP_DZP', 3.0)],
        )
        self.assertEqual([r.sample_id for r in result.records], ['B3LYP_DZP#1', 'PBE_SZ#1', 'B3LYP_DZP#2'])

    def test_schema_validation(self):
        with self.assertRaises(TaskDataError):
            DatasetSchema(layout='long', smiles_col='SMILES')
        with self.assertRaises(TaskDataError):
            DatasetSchema(layout='wide')
        with self.assertRaises(TaskDataError):
            DatasetSchema(layout='matrix', task_col='a', value_col='b')

    def test_raw_record_invariants(self):
        with self.assertRaises(TaskDataError):
            RawRecord('C', 'water', float('nan'))
        with self.assertRaises(TaskDataError):
            RawRecord('C', 'water', 1.0, temperature=0.0)


class TemperatureWindowTest(SimpleTestCase):
    """Test cases for filter_temperature_window."""

    def test_window_rules(self):
        records = [
            RawRecord('A', 'water', 1.0, 285.0, 1),
            RawRecord('A', 'water', 2.0, 295.0, 2),
            RawRecord('A', 'water', 3.0, 310.0, 3),
            RawRecord('B', 'water', 4.0, 291.0, 4),
            RawRecord('B', 'water', 5.0, 299.0, 5),
            RawRecord('C', 'water', 6.0, 320.0, 6),
        ]
        kept = filter_temperature_window(records)
        self.assertEqual([(r.solute_smiles, r.temperature) for r in kept], [('A', 295.0), ('B', 299.0)])

    def test_exact_tie_keeps_lowest_source_row(self):
        records = [RawRecord('A', 'water', 1.0, 299.0, 8), RawRecord('A', 'water', 2.0, 297.0, 3)]
        self.assertEqual(filter_temperature_window(records)[0].source_row, 3)

    def test_pairs_are_per_task(self):
        records = [RawRecord('A', 'water', 1.0, 298.0, 1), RawRecord('A', 'ethanol', 2.0, 298.0, 2)]
        self.assertEqual(len(filter_temperature_window(records)), 2)

    def test_output_properties_on_random_records(self):
        rng = np.random.default_rng(1)
        records = [
            RawRecord(f'S{rng.integers(5)}', f'T{rng.integers(3)}', 0.0, float(rng.uniform(280, 320)), row)
            for row in range(1, 200)
        ]
        kept = filter_temperature_window(records)
        keys = [(r.solute_smiles, r.task_key) for r in kept]
        self.assertEqual(len(keys), len(set(keys)))
        self.assertTrue(all(290 <= r.temperature <= 300 for r in kept))

    def test_records_without_temperature_dropped(self):
        self.assertEqual(filter_temperature_window([RawRecord('A', 'water', 1.0, None, 1)]), [])


class AssembleTasksTest(SimpleTestCase):
    """Test cases for assemble_tasks and task bookkeeping."""

    def setUp(self):
        self.records = [
            RawRecord(smiles, solvent, float(i), source_row=i + 1)
            for i, (solvent, smiles) in enumerate(itertools.product(('water', 'ethanol'), SOLUTES[:6]))
        ]

    def test_two_solvents_share_vocabulary(self):
        assembled = assemble_tasks(self.records, max_size=3)
        self.assertEqual([task.id for task in assembled.tasks], ['ethanol', 'water'])
        self.assertEqual({task.n_features for task in assembled.tasks}, {assembled.vocabulary.size})
        self.assertEqual(assembled.sizes(), {'ethanol': 6, 'water': 6})

    def test_sample_ids_carry_task_and_row(self):
        water = assemble_tasks(self.records, max_size=2).by_id()['water']
        self.assertEqual(water.sample_ids[0], 'water#1')
        self.assertEqual(list(water.y), [0.0, 1.0, 2.0, 3.0, 4.0, 5.0])

    def test_loaded_ids_name_the_value_column_and_row(self):
        with tempfile.TemporaryDirectory() as tmp:
            records = load_records(solubility_csv(tmp), LONG_SCHEMA).records
        assembled = assemble_tasks(records, max_size=2).by_id()
        self.assertEqual(assembled['water'].sample_ids[0], 'LogS#1')
        self.assertEqual(assembled['ethanol'].sample_ids[0], f'LogS#{len(SOLUTES) + 1}')
        check_leakage(assembled['water'], [assembled['ethanol']])

    def test_one_measurement_in_two_tasks_is_leakage(self):
        records = [
            RawRecord(smiles, 'water', float(i), source_row=i + 1, value_column='LogS')
            for i, smiles in enumerate(SOLUTES[:5])
        ]
        copied = RawRecord(SOLUTES[2], 'ethanol', 2.0, source_row=3, value_column='LogS')
        others = [
            RawRecord(smiles, 'ethanol', float(i), source_row=i + 10, value_column='LogS')
            for i, smiles in enumerate(SOLUTES[5:9])
        ]
        assembled = assemble_tasks(records + others + [copied], max_size=2).by_id()
        with self.assertRaises(LeakageError) as ctx:
            check_leakage(assembled['water'], [assembled['ethanol']])
        self.assertIn('LogS#3', str(ctx.exception))
        separate = assemble_tasks(records + others, max_size=2).by_id()
        check_leakage(separate['water'], [separate['ethanol']])

    def test_parse_failures_become_rejects(self):
        records = self.records + [RawRecord('C1CC', 'water', 9.0, source_row=99)]
        assembled = assemble_tasks(records, max_size=2)
        self.assertEqual([r.source_row for r in assembled.rejects], [99])
        self.assertEqual(sum(task.rows for task in assembled.tasks), len(records) - 1)

    def test_min_rows_filter(self):
        records = self.records + [RawRecord('CO', 'benzene', 1.0, source_row=50)]
        assembled = assemble_tasks(records, max_size=2, min_rows_per_task=2)
        self.assertEqual([task.id for task in assembled.tasks], ['ethanol', 'water'])
        self.assertEqual(assembled.dropped, {'benzene': 1})
        with self.assertRaises(TaskDataError):
            assemble_tasks(records, max_size=2, min_rows_per_task=100)

    def test_empty_records(self):
        with self.assertRaises(TaskDataError):
            assemble_tasks([], max_size=3)

    def test_task_count_curve_and_sizes(self):
        records = [RawRecord('C', f't{k}', 1.0, source_row=i) for k in range(4) for i in range(k * 10 + 1)]
        self.assertEqual(task_sizes(records), {'t0': 1, 't1': 11, 't2': 21, 't3': 31})
        self.assertEqual(task_count_curve(records, [1, 11, 20, 31, 40]), {1: 4, 11: 3, 20: 2, 31: 1, 40: 0})


class SamplingTest(SimpleTestCase):
    """Test cases for shot sampling, splits, subsampling and task selection."""

    def setUp(self):
        synthetic = generate_synthetic_tasks(5, 1, 1, 0.0, 50, seed=0)
        self.task = synthetic.tasks[0]

    def test_all_but_one_shot(self):
        split = sample_shots(self.task, 49, seed=0)
        self.assertEqual(len(split.test_indices), 1)
        self.assertEqual(sorted(split.train_indices + split.test_indices), list(range(50)))

    def test_seed_determinism(self):
        self.assertEqual(sample_shots(self.task, 10, 3), sample_shots(self.task, 10, 3))

    def test_invalid_shot_counts(self):
        for n_shots in (0, 50, 60):
            with self.assertRaises(TaskDataError):
                sample_shots(self.task, n_shots, 0)

    def test_overlap_matches_hypergeometric_expectation(self):
        splits = [set(sample_shots(self.task, 10, seed).train_indices) for seed in range(10)]
        self.assertEqual(len({frozenset(split) for split in splits}), 10)
        reference = set(sample_shots(self.task, 10, 1000).train_indices)
        overlaps = [len(split & reference) for split in splits]
        n, k, N = 10, 10, 50
        expected = n * k / N
        variance = n * (k / N) * ((N - k) / N) * ((N - n) / (N - 1))
        self.assertLessEqual(abs(np.mean(overlaps) - expected), 3 * math.sqrt(variance / len(overlaps)))

    def test_train_test_split(self):
        split = train_test_split(self.task, 0.2, seed=4)
        self.assertEqual((len(split.train_indices), len(split.test_indices)), (40, 10))
        with self.assertRaises(TaskDataError):
            train_test_split(self.task, 1.5)

    def test_subsample_task(self):
        self.assertIs(subsample_task(self.task, 80, seed=0), self.task)
        small = subsample_task(self.task, 7, seed=0)
        self.assertEqual(small.rows, 7)
        positions = [self.task.sample_ids.index(sample) for sample in small.sample_ids]
        self.assertEqual(positions, sorted(positions))
        with self.assertRaises(TaskDataError):
            subsample_task(self.task, 0, seed=0)

    def test_select_tasks(self):
        ids = ['PBE_SZ', 'B3LYP_SZ', 'M06_SZ', 'TPSS_DZP', 'PBE_TZP']
        self.assertEqual(select_tasks(ids, '_SZ$'), ['B3LYP_SZ', 'M06_SZ', 'PBE_SZ'])
        chosen = select_tasks(ids, '_SZ$', count=2, seed=5)
        self.assertEqual(chosen, sorted(chosen))
        self.assertEqual(len(chosen), 2)
        self.assertEqual(chosen, select_tasks(ids, '_SZ$', count=2, seed=5))
        with self.assertRaises(TaskDataError):
            select_tasks(ids, '_SZ$', count=4)


class SyntheticTasksTest(SimpleTestCase):
    """Test cases for generate_synthetic_tasks."""

    def test_noiseless_recovery(self):
        synthetic = generate_synthetic_tasks(10, 3, 2, 0.0, 400, seed=2)
        for task in synthetic.tasks:
            coef = ridge_fit(task.X, task.y, RidgeConfig(1e-8))
            np.testing.assert_allclose(coef.beta, synthetic.coefficients[task.id], atol=1e-6)

    def test_rank_one_shared_weights_gives_identical_tasks(self):
        synthetic = generate_synthetic_tasks(8, 4, 1, 0.0, 10, seed=0, shared_weights=True)
        vectors = list(synthetic.coefficients.values())
        for vector in vectors[1:]:
            np.testing.assert_array_equal(vector, vectors[0])

    def test_target_placement(self):
        inside = generate_synthetic_tasks(30, 5, 2, 0.1, 20, seed=1, target='inside')
        q, _ = np.linalg.qr(inside.basis)
        beta = inside.coefficients['target']
        self.assertLess(np.linalg.norm(beta - q @ (q.T @ beta)), 1e-10)

        orthogonal = generate_synthetic_tasks(30, 5, 2, 0.1, 20, seed=1, target='orthogonal')
        self.assertLess(np.linalg.norm(orthogonal.basis.T @ orthogonal.coefficients['target']), 1e-10)
        self.assertEqual(orthogonal.target.id, 'target')
        self.assertEqual(len(orthogonal.all_tasks()), 6)

    def test_shared_vocabulary_and_shapes(self):
        synthetic = generate_synthetic_tasks(12, 3, 2, 0.1, 15, seed=0)
        self.assertEqual({task.X.vocabulary.forms()[0] for task in synthetic.tasks}, {'x00000'})
        self.assertEqual([task.rows for task in synthetic.tasks], [15, 15, 15])

    def test_invalid_shapes(self):
        with self.assertRaises(TaskDataError):
            generate_synthetic_tasks(10, 2, 3, 0.1, 10, seed=0)
        with self.assertRaises(TaskDataError):
            generate_synthetic_tasks(0, 2, 1, 0.1, 10, seed=0)
        with self.assertRaises(TaskDataError):
            generate_synthetic_tasks(10, 2, 1, -1.0, 10, seed=0)


class MetricsTest(SimpleTestCase):
    """Test cases for MAE, R², relative improvement and cosine similarity."""

    def test_mae_and_r2(self):
        y = [1.0, 2.0, 4.0]
        self.assertEqual(mae(y, y), 0.0)
        self.assertEqual(r2(y, y), 1.0)
        self.assertAlmostEqual(r2(y, [np.mean(y)] * 3), 0.0, places=12)
        self.assertEqual(mae([0.0, 2.0], [1.0, 1.0]), 1.0)

    def test_metric_errors(self):
        with self.assertRaises(ValueError):
            mae([1.0], [1.0, 2.0])
        with self.assertRaises(ValueError):
            mae([], [])
        with self.assertRaises(UndefinedMetricError):
            r2([3.0, 3.0], [1.0, 2.0])

    def test_relative_improvement(self):
        self.assertAlmostEqual(relative_improvement(1.2, 1.0), 20.0)
        self.assertEqual(relative_improvement(1.0, 1.0), 0.0)
        self.assertAlmostEqual(relative_improvement(0.9, 1.0), -10.0)
        with self.assertRaises(UndefinedMetricError):
            relative_improvement(1.0, 0.0)

    def test_relative_improvement_sign(self):
        rng = np.random.default_rng(3)
        for regular, meta in rng.uniform(0.01, 2.0, size=(50, 2)):
            self.assertEqual(np.sign(relative_improvement(regular, meta)), np.sign(regular - meta))

    def test_cosine_similarity(self):
        v = np.array([1.0, 2.0, -0.5])
        self.assertAlmostEqual(cosine_similarity(v, v), 1.0)
        self.assertEqual(cosine_similarity([1.0, 0.0], [0.0, 1.0]), 0.0)
        self.assertAlmostEqual(cosine_similarity(v, -v), -1.0)
        self.assertAlmostEqual(cosine_similarity(3.0 * v, [1.0, 0.0, 0.0]), cosine_similarity(v, [1.0, 0.0, 0.0]))
        with self.assertRaises(UndefinedMetricError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_metric_record(self):
        record = MetricRecord('water', 10, 0, 1.0, 1.2, 0.5, 0.4)
        self.assertAlmostEqual(record.relative_improvement, 20.0)
        self.assertIsNone(MetricRecord('water', 10, 0, 0.0, 1.2, None, None).relative_improvement)
        with self.assertRaises(ValueError):
            MetricRecord('water', 10, 0, -1.0, 1.2, None, None)


class SimilarityTest(SimpleTestCase):
    """Test cases for similarity matrices and the similarity study."""

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_matrix_properties(self):
        vectors = {f't{i}': self.rng.normal(size=6) for i in range(5)}
        matrix = similarity_matrix(vectors, 'fingerprint')
        np.testing.assert_array_equal(matrix.values, matrix.values.T)
        np.testing.assert_array_equal(np.diag(matrix.values), np.ones(5))
        self.assertTrue(np.all(np.abs(matrix.values) <= 1.0))
        self.assertEqual(len(matrix.pairs()), 10)
        self.assertAlmostEqual(matrix.values[0, 1], cosine_similarity(vectors['t0'], vectors['t1']))

    def test_intercept_excluded(self):
        a = Coefficients([1.0, 0.0], intercept=5.0)
        b = Coefficients([0.0, 1.0], intercept=5.0)
        c = Coefficients([1.0, 1.0], intercept=-3.0)
        matrix = similarity_matrix({'a': a, 'b': b, 'c': c}, 'regression-vector')
        self.assertEqual(matrix.values[0, 1], 0.0)

    def test_validation(self):
        with self.assertRaises(ValueError):
            SimilarityMatrix(('a', 'b'), [[1.0, 0.2], [0.3, 1.0]], 'fingerprint')
        with self.assertRaises(ValueError):
            SimilarityMatrix(('a', 'b'), [[1.0, 0.2], [0.2, 1.0]], 'euclidean')
        with self.assertRaises(UndefinedMetricError):
            similarity_matrix({'a': np.zeros(3), 'b': np.ones(3)}, 'fingerprint')

    def test_mean_off_diagonal(self):
        matrix = SimilarityMatrix(('a', 'b', 'c'), [[1, 0.5, 0.1], [0.5, 1, 0.3], [0.1, 0.3, 1]], 'fingerprint')
        means = matrix.mean_off_diagonal()
        self.assertAlmostEqual(means['a'], 0.3)
        self.assertAlmostEqual(means['c'], 0.2)

    def test_identical_tasks_have_undefined_correlation(self):
        v = self.rng.normal(size=5)
        study = similarity_study({k: v for k in 'abc'}, {k: 2 * v for k in 'abc'})
        np.testing.assert_allclose(study.fingerprint.values, 1.0, atol=1e-12)
        np.testing.assert_allclose(study.regression.values, 1.0, atol=1e-12)
        self.assertIsNone(study.pearson)
        self.assertIsNone(study.fit)

    def test_pearson_affine_invariance(self):
        x, y = self.rng.normal(size=20), self.rng.normal(size=20)
        base = pearson(x, y)
        for _ in range(10):
            a, b = self.rng.uniform(0.1, 5.0, size=2)
            shift = self.rng.normal(size=2)
            self.assertAlmostEqual(pearson(a * x + shift[0], b * y + shift[1]), base, places=10)
        with self.assertRaises(UndefinedMetricError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_study_reports_correlation_and_fit(self):
        fingerprints = {f't{i}': self.rng.normal(size=8) for i in range(5)}
        regression = {key: value + 0.1 * self.rng.normal(size=8) for key, value in fingerprints.items()}
        study = similarity_study(fingerprints, regression)
        self.assertGreater(study.pearson, 0.9)
        self.assertEqual(len(study.pairs_frame()), 10)
        self.assertAlmostEqual(study.fit.r_squared, study.pearson ** 2)

    def test_study_input_checks(self):
        with self.assertRaises(TaskDataError):
            similarity_study({'a': [1.0], 'b': [2.0]}, {'a': [1.0], 'b': [2.0]})
        with self.assertRaises(TaskDataError):
            similarity_study({'a': [1.0], 'b': [2.0], 'c': [1.0]}, {'a': [1.0], 'b': [2.0], 'd': [1.0]})

    def test_support_quality(self):
        synthetic = generate_synthetic_tasks(10, 3, 2, 0.05, 100, seed=0)
        report = support_quality(synthetic.tasks, LambdaPolicy(), split_seed=0)
        self.assertEqual([entry.task_id for entry in report], ['task00', 'task01', 'task02'])
        for entry in report:
            self.assertEqual((entry.n_train, entry.n_test), (80, 20))
            self.assertLess(entry.mae, 0.2)
            self.assertEqual(entry.coefficients.size, 10)


class SummaryTest(SimpleTestCase):
    """Test cases for summarize."""

    def test_mean_and_standard_error(self):
        records = [
            MetricRecord('water', 10, 0, 1.0, 2.0, 0.5, 0.1, max_size=5),
            MetricRecord('water', 10, 1, 3.0, 4.0, 0.7, 0.3, max_size=5),
            MetricRecord('water', 20, 0, 1.0, 1.0, 0.9, 0.9, max_size=5),
        ]
        summary = summarize(records)
        first = summary.iloc[0]
        self.assertEqual((first['target'], first['n_shots'], first['n_seeds']), ('water', 10, 2))
        self.assertAlmostEqual(first['mae_meta_mean'], 2.0)
        self.assertAlmostEqual(first['mae_meta_se'], 1.0)
        self.assertTrue(math.isnan(summary.iloc[1]['mae_meta_se']))

    def test_recomputable_from_raw_frame(self):
        records = [MetricRecord('t', 5, seed, float(seed + 1), 2.0, None, None) for seed in range(4)]
        pd.testing.assert_frame_equal(summarize(records), summarize(records_frame(records)))

    def test_empty(self):
        self.assertTrue(summarize([]).empty)


class ExperimentConfigTest(SimpleTestCase):
    """Test cases for experiment config resolution."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_preset_defaults(self):
        config = load_experiment_config(overrides={'dataset': 'synthetic'})
        self.assertTrue(config.is_synthetic)
        self.assertEqual(config.seeds, tuple(range(10)))
        self.assertEqual(config.shots, (10, 15, 20, 30, 50, 100))
        self.assertEqual(config.max_size, settings.LAMEL['DEFAULT_MAX_SIZE'])

    def test_precedence_file_then_overrides(self):
        path = write_csv(
            self.tmp.name, 'run.conf',
            '# few-shot sweep\ndataset=synthetic\nshots=10,20\nseeds=0,1\nsynthetic_rows=80\n',
        )
        config = load_experiment_config(path, {'seeds': [3]})
        self.assertEqual(config.shots, (10, 20))
        self.assertEqual(config.seeds, (3,))
        self.assertEqual(config.synthetic_rows, 80)
        self.assertEqual(config.synthetic_tasks, settings.LAMEL['PRESETS']['synthetic']['synthetic_tasks'])

    def test_max_size_sweep_gives_one_config_per_size(self):
        configs = load_experiment_configs(overrides={'dataset': 'synthetic', 'max_size': [7, 3, 5]})
        self.assertEqual([config.max_size for config in configs], [3, 5, 7])
        self.assertEqual(len({config.digest() for config in configs}), 3)

    def test_digest_ignores_output_location_and_workers(self):
        config = synthetic_config('a')
        self.assertEqual(config.digest(), synthetic_config('b', workers=4).digest())
        self.assertNotEqual(config.digest(), synthetic_config('a', seeds=(0,)).digest())

    def test_invalid_configs(self):
        invalid = [
            {'dataset': 'synthetic', 'shots': [0]},
            {'dataset': 'synthetic', 'seeds': []},
            {'dataset': 'synthetic', 'max_size': [13]},
            {'dataset': 'synthetic', 'parallel_grid': [0.0, 1.0]},
            {'dataset': 'synthetic', 'synthetic_rank': 9},
            {'layout': 'long', 'task_col': 'solvent', 'value_col': 'LogS'},
            {'dataset': 'nonexistent'},
        ]
        for overrides in invalid:
            with self.assertRaises(ConfigError, msg=str(overrides)):
                load_experiment_configs(overrides=overrides)

    def test_unknown_key_and_missing_file(self):
        path = write_csv(self.tmp.name, 'typo.conf', 'dataset=synthetic\nshotz=10\n')
        with self.assertRaises(ConfigError):
            load_experiment_configs(path)
        with self.assertRaises(ConfigError):
            load_experiment_configs(Path(self.tmp.name) / 'absent.conf')


class HarnessTest(SimpleTestCase):
    """Test cases for the experiment runner and its outputs."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_paired_rows(self):
        config = synthetic_config(self.tmp.name)
        result = ExperimentRunner(config).run()
        self.assertEqual(len(result.records), 4)
        for record in result.records:
            self.assertEqual(record.target, 'target')
            self.assertEqual(record.n_test, 60 - record.n_shots)
            self.assertEqual(record.n_support, 4)
            self.assertFalse(record.degenerate)
            self.assertEqual(record.lambda_parallel > 0, record.anchored)
        self.assertEqual(
            [(r.n_shots, r.seed) for r in result.records], [(5, 0), (5, 1), (10, 0), (10, 1)],
        )

    def test_each_task_in_turn(self):
        config = synthetic_config(self.tmp.name, target='all', shots=(5,), seeds=(0,), synthetic_target='none')
        result = ExperimentRunner(config).run()
        self.assertEqual([r.target for r in result.records], ['task00', 'task01', 'task02', 'task03'])
        self.assertTrue(all(r.n_support == 3 for r in result.records))

    def test_support_selection(self):
        config = synthetic_config(self.tmp.name, support_pattern='task0[0-2]', support_count=2, seeds=(0,))
        runner = ExperimentRunner(config, load_tasks(config))
        self.assertEqual(len(runner.support_ids('target')), 2)
        self.assertTrue(all(record.n_support == 2 for record in runner.run().records))

    def test_unknown_target(self):
        config = synthetic_config(self.tmp.name, target='missing')
        with self.assertRaises(ConfigError):
            ExperimentRunner(config).run()

    def test_too_few_rows_are_skipped(self):
        config = synthetic_config(self.tmp.name, shots=(10, 60), seeds=(0,))
        result = ExperimentRunner(config).run()
        self.assertEqual([r.n_shots for r in result.records], [10])
        self.assertEqual(result.skipped, 1)

    def test_single_task_dataset_is_degenerate(self):
        path = solubility_csv(self.tmp.name, solvents=('water',))
        config = ExperimentConfig(
            data_path=str(path), task_col='solvent', value_col='LogS', max_size=3,
            shots=(4,), seeds=(0, 1), out=self.tmp.name,
        )
        result = run_experiment(config)
        self.assertEqual(len(result.records), 2)
        for record in result.records:
            self.assertTrue(record.degenerate)
            self.assertEqual(record.mae_meta, record.mae_regular)
            self.assertEqual(record.n_support, 0)
            self.assertFalse(record.anchored)
            self.assertIsNone(record.span_fraction)

    def test_leakage_guard(self):
        synthetic = generate_synthetic_tasks(5, 2, 1, 0.1, 10, seed=0)
        first, second = synthetic.tasks
        check_leakage(first, [second])
        with self.assertRaises(LeakageError):
            check_leakage(first, [first])
        with self.assertRaises(LeakageError):
            check_leakage(first, [first.__class__('other', first.X, first.y)])

    def test_outputs_written(self):
        result = run_experiment(synthetic_config(self.tmp.name))
        run_dir = Path(self.tmp.name) / result.config.digest()[:12]
        self.assertEqual(result.run_dir, run_dir)
        for name in (RAW_FILE, SUMMARY_FILE, CURVES_FILE, REJECTS_FILE, CONFIG_ECHO_FILE):
            self.assertTrue((run_dir / name).exists(), name)
        raw = pd.read_csv(run_dir / RAW_FILE)
        self.assertEqual(len(raw), 4)
        self.assertEqual(raw['span_fraction'].notna().tolist(), raw['anchored'].tolist())
        self.assertTrue(raw['span_fraction'].dropna().between(0.0, 1.0).all())
        summary = pd.read_csv(run_dir / SUMMARY_FILE)
        pd.testing.assert_frame_equal(summarize(raw), summary, check_dtype=False, rtol=1e-12)

    def test_rerun_is_byte_identical(self):
        first = run_experiment(synthetic_config(Path(self.tmp.name) / 'one'))
        second = run_experiment(synthetic_config(Path(self.tmp.name) / 'two', workers=3))
        self.assertEqual(
            (first.run_dir / RAW_FILE).read_bytes(),
            (second.run_dir / RAW_FILE).read_bytes(),
        )
        self.assertEqual(
            (first.run_dir / SUMMARY_FILE).read_bytes(),
            (second.run_dir / SUMMARY_FILE).read_bytes(),
        )

    def test_rejects_report(self):
        path = Path(self.tmp.name) / 'data.csv'
        text = solubility_csv(self.tmp.name, solvents=('water', 'ethanol')).read_text()
        path.write_text(text + 'C1CC,water,1.0\nCC,water,oops\n', encoding='utf-8')
        config = ExperimentConfig(
            data_path=str(path), task_col='solvent', value_col='LogS', max_size=2,
            shots=(4,), seeds=(0,), out=self.tmp.name,
        )
        result = run_experiment(config)
        rejects = pd.read_csv(result.run_dir / REJECTS_FILE)
        self.assertEqual(sorted(rejects['source_row']), [2 * len(SOLUTES) + 1, 2 * len(SOLUTES) + 2])


class RecordRunTest(TestCase):
    """Test cases for storing runs in the results registry."""

    def test_record_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = ExperimentRunner(synthetic_config(tmp)).run()
        run = record_run(result)
        self.assertEqual(ExperimentRun.objects.count(), 1)
        self.assertEqual(run.digest, result.config.digest())
        self.assertEqual(run.metrics.count(), len(result.records))
        stored = MetricResult.objects.get(run=run, n_shots=5, seed=0)
        original = result.records[0]
        self.assertEqual(stored.mae_meta, original.mae_meta)
        self.assertAlmostEqual(stored.relative_improvement, original.relative_improvement)
        self.assertEqual(stored.anchored, original.anchored)
        self.assertEqual(stored.span_fraction, original.span_fraction)

    def test_failed_experiment_is_recorded(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = synthetic_config(tmp, target='missing')
            with self.assertRaises(ConfigError):
                run_experiment(config, record=True)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'failed')
        self.assertTrue(run.error.startswith('ConfigError: '))
        self.assertIn('missing', run.error)
        self.assertEqual(run.digest, config.digest())
        self.assertEqual(run.metrics.count(), 0)

    def test_failed_similarity_is_recorded(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = synthetic_config(tmp, synthetic_tasks=1, synthetic_rank=1)
            with self.assertRaises(TaskDataError):
                run_similarity(config, record=True)
        run = ExperimentRun.objects.get()
        self.assertEqual((run.kind, run.status), ('similarity', 'failed'))

    def test_failure_without_recording_leaves_registry_empty(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ConfigError):
                run_experiment(synthetic_config(tmp, target='missing'), record=False)
        self.assertFalse(ExperimentRun.objects.exists())


class SyntheticBenchmarkTest(SimpleTestCase):
    """Few-shot benefit, negative-transfer bound and support-data robustness on synthetic tasks."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def benchmark_config(self, **changes):
        values = dict(
            synthetic_features=50, synthetic_tasks=8, synthetic_rank=2, synthetic_noise=0.1,
            synthetic_rows=400, seeds=tuple(range(10)),
        )
        values.update(changes)
        return synthetic_config(self.tmp.name, **values)

    def test_meta_learning_helps_most_with_few_shots(self):
        result = ExperimentRunner(self.benchmark_config(shots=(10, 200))).run()
        improvement = mean_by_shots(result.records, 'relative_improvement')
        self.assertGreaterEqual(improvement[10], 20.0)
        self.assertLess(improvement[200], improvement[10])

    def test_orthogonal_target_degrades_boundedly(self):
        result = ExperimentRunner(self.benchmark_config(shots=(10,), synthetic_target='orthogonal')).run()
        meta = mean_by_shots(result.records, 'mae_meta')[10]
        regular = mean_by_shots(result.records, 'mae_regular')[10]
        self.assertLessEqual(meta, 1.15 * regular)

    def test_support_subsample_robustness(self):
        config = self.benchmark_config(synthetic_rows=10000, shots=(20,), support_subsample=(0, 10, 1000))
        result = ExperimentRunner(config).run()
        by_subsample = {}
        for record in result.records:
            by_subsample.setdefault(record.support_subsample, []).append(record.mae_meta)
        full, thousand, ten = (float(np.mean(by_subsample[size])) for size in (0, 1000, 10))
        self.assertLessEqual(abs(thousand - full), 0.1 * full)
        self.assertGreater(ten, thousand)


class CommandTest(SimpleTestCase):
    """Test cases for the management commands."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def call(self, *args, **options):
        return call_command(*args, stdout=StringIO(), **options)

    def fingerprint(self, smiles, max_size=3, name='features'):
        source = write_csv(self.dir, f'{name}.csv', 'SMILES\n' + '\n'.join(smiles) + '\n')
        self.call('fingerprint', str(source), out=str(self.dir / name), max_size=max_size)
        return self.dir / name / 'features.txt'

    def test_fingerprint_toy(self):
        features = read_feature_matrix(self.fingerprint(['C', 'CC', 'CCO']))
        self.assertEqual(features.rows, 3)
        self.assertEqual(pd.read_csv(self.dir / 'features' / 'ids.csv')['smiles'].tolist(), ['C', 'CC', 'CCO'])

    def test_fingerprint_acetone_vocabulary_matches_oracle(self):
        features = read_feature_matrix(self.fingerprint(['CC(=O)C'], max_size=5))
        _, class_count = brute_force_classes(parse_smiles('CC(=O)C'), 5)
        self.assertEqual(features.cols, class_count)

    def test_fingerprint_rejects_and_empty_input(self):
        self.fingerprint(['C', 'C1CC'], name='partial')
        rejects = pd.read_csv(self.dir / 'partial' / 'rejects.csv')
        self.assertEqual(rejects['source_row'].tolist(), [2])

        empty = write_csv(self.dir, 'empty.csv', '')
        with self.assertRaises(CommandError) as ctx:
            self.call('fingerprint', str(empty), out=str(self.dir / 'none'))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertFalse((self.dir / 'none').exists())

        header_only = write_csv(self.dir, 'header.csv', 'SMILES\n')
        with self.assertRaises(CommandError) as ctx:
            self.call('fingerprint', str(header_only), out=str(self.dir / 'none'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_fit_then_predict(self):
        features_path = self.fingerprint(SOLUTES[:8])
        y = np.linspace(-2.0, 1.0, 8)
        labels = write_csv(self.dir, 'labels.csv', 'y\n' + '\n'.join(repr(v) for v in y) + '\n')
        self.call('fit', str(features_path), str(labels), out=str(self.dir / 'coef.txt'), lam=0.5,
                  predictions=str(self.dir / 'pred.csv'))

        features = read_feature_matrix(features_path)
        expected = ridge_fit(features, y, RidgeConfig(0.5))
        coef = read_coefficients(self.dir / 'coef.txt')
        np.testing.assert_allclose(coef.beta, expected.beta, rtol=0, atol=1e-12)
        self.assertAlmostEqual(coef.intercept, expected.intercept, places=12)
        predictions = pd.read_csv(self.dir / 'pred.csv')['prediction'].to_numpy()
        np.testing.assert_allclose(predictions, predict(features, expected), rtol=0, atol=1e-12)
        ids = pd.read_csv(self.dir / 'pred.csv', dtype={'id': str})['id'].tolist()
        self.assertEqual(ids, [str(i) for i in range(1, 9)])

    def test_fit_label_mismatch(self):
        features_path = self.fingerprint(['C', 'CC'])
        labels = write_csv(self.dir, 'labels.csv', 'y\n1.0\n')
        with self.assertRaises(CommandError) as ctx:
            self.call('fit', str(features_path), str(labels), out=str(self.dir / 'coef.txt'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_meta_single_support_matches_origin_fit(self):
        features_path = self.fingerprint(SOLUTES[:10])
        features = read_feature_matrix(features_path)
        rng = np.random.default_rng(0)
        support = Coefficients(rng.normal(size=features.cols), 0.3)
        write_coefficients(self.dir / 'water.txt', support)
        y = rng.normal(size=features.rows)
        labels = write_csv(self.dir, 'labels.csv', 'y\n' + '\n'.join(repr(v) for v in y) + '\n')

        model_path = self.dir / 'model.json'
        self.call('meta', str(features_path), str(labels), support=[str(self.dir / 'water.txt')],
                  out=str(model_path), parallel_lambda=1.0, perpendicular_lambda=0.5, anchored_only=True)
        model = read_model(model_path)
        expected = ridge_fit_with_origin(features, y, support, RidgeConfig(0.5))
        np.testing.assert_allclose(model.beta_star.beta, expected.beta, atol=1e-8)
        self.assertAlmostEqual(model.beta_star.intercept, expected.intercept, places=8)
        self.assertEqual(model.support_ids, ('water',))

        self.call('meta', from_model=str(model_path), predict=str(features_path),
                  predictions=str(self.dir / 'pred.csv'))
        predictions = pd.read_csv(self.dir / 'pred.csv')['prediction'].to_numpy()
        np.testing.assert_allclose(predictions, predict_meta(model, features), rtol=0, atol=1e-12)

    def test_meta_predictions_keep_fingerprint_ids(self):
        features_path = self.fingerprint(['C', 'C1CC', 'CCO', 'CC'], name='mixed')
        features = read_feature_matrix(features_path)
        ids = pd.read_csv(self.dir / 'mixed' / 'ids.csv', dtype=str)['id'].tolist()
        self.assertEqual(ids, ['1', '3', '4'])
        self.assertEqual(list(features.row_ids), ids)

        write_coefficients(self.dir / 'water.txt', Coefficients(np.ones(features.cols), 0.0))
        labels = write_csv(self.dir, 'labels.csv', 'y\n1.0\n2.0\n3.0\n')
        self.call('meta', str(features_path), str(labels), support=[str(self.dir / 'water.txt')],
                  out=str(self.dir / 'model.json'), parallel_lambda=1.0, perpendicular_lambda=1.0)
        self.call('meta', from_model=str(self.dir / 'model.json'), predict=str(features_path),
                  predictions=str(self.dir / 'pred.csv'))
        self.assertEqual(pd.read_csv(self.dir / 'pred.csv', dtype={'id': str})['id'].tolist(), ids)

    def test_meta_requires_support(self):
        features_path = self.fingerprint(['C', 'CC'])
        labels = write_csv(self.dir, 'labels.csv', 'y\n1.0\n2.0\n')
        with self.assertRaises(CommandError) as ctx:
            self.call('meta', str(features_path), str(labels), out=str(self.dir / 'model.json'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_experiment_command(self):
        conf = write_csv(
            self.dir, 'run.conf',
            'dataset=synthetic\nsynthetic_features=15\nsynthetic_tasks=3\nsynthetic_rows=40\n'
            'target=target\nshots=5\nseeds=0,1\n',
        )
        self.call('experiment', config=str(conf), out=str(self.dir / 'results'))
        run_dirs = list((self.dir / 'results').iterdir())
        self.assertEqual(len(run_dirs), 1)
        self.assertEqual(len(pd.read_csv(run_dirs[0] / RAW_FILE)), 2)

    def test_experiment_max_size_sweep(self):
        path = solubility_csv(self.dir, solvents=('water', 'ethanol', 'benzene'))
        conf = write_csv(self.dir, 'cols.conf', 'task_col=solvent\nvalue_col=LogS\n')
        self.call('experiment', config=str(conf), data_path=str(path), max_size=[2, 3], shots=[4], seeds=[0],
                  support_grid=[1.0], parallel_grid=[1.0], perp_grid=[1.0], out=str(self.dir / 'results'))
        self.assertEqual(len(list((self.dir / 'results').iterdir())), 2)

    def test_experiment_invalid_config(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('experiment', dataset='synthetic', shots=[0], out=str(self.dir))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_similarity_command(self):
        conf = write_csv(
            self.dir, 'sim.conf',
            'dataset=synthetic\nsynthetic_features=15\nsynthetic_tasks=4\nsynthetic_rows=50\n',
        )
        self.call('similarity', config=str(conf), out=str(self.dir / 'results'))
        run_dir = next((self.dir / 'results').iterdir()) / 'similarity'
        pairs = pd.read_csv(run_dir / 'pairs.csv')
        self.assertEqual(len(pairs), 10)
        for name in ('fingerprint_similarity.csv', 'regression_similarity.csv', 'fit.csv',
                     'support_quality.csv', 'mean_similarity.csv', CONFIG_ECHO_FILE):
            self.assertTrue((run_dir / name).exists(), name)

    def test_similarity_uses_solvent_structures(self):
        path = solubility_csv(self.dir, solvents=('water', 'ethanol', 'benzene', 'acetone'))
        conf = write_csv(self.dir, 'sim.conf', f'dataset=boobier\ndata_path={path}\nmax_size=2\n')
        self.call('similarity', config=str(conf), out=str(self.dir / 'results'))
        run_dir = next((self.dir / 'results').iterdir()) / 'similarity'
        matrix = pd.read_csv(run_dir / 'fingerprint_similarity.csv', index_col='task')
        self.assertEqual(sorted(matrix.index), ['acetone', 'benzene', 'ethanol', 'water'])

    def test_similarity_needs_three_tasks(self):
        path = solubility_csv(self.dir, solvents=('water', 'ethanol'))
        conf = write_csv(self.dir, 'sim.conf', f'dataset=boobier\ndata_path={path}\nmax_size=2\n')
        with self.assertRaises(CommandError) as ctx:
            self.call('similarity', config=str(conf), out=str(self.dir / 'results'))
        self.assertEqual(ctx.exception.returncode, 2)


@skipUnless(settings.LAMEL['DATA']['boobier'], 'Boobier dataset not configured (LAMEL_BOOBIER_CSV)')
class BoobierDataTest(SimpleTestCase):
    """Checks against the Boobier solubility dataset."""

    def setUp(self):
        config = load_experiment_config(overrides={'dataset': 'boobier'})
        self.records = load_records(config.data_path, config.schema()).records

    def test_task_sizes(self):
        assembled = assemble_tasks(self.records, max_size=3)
        self.assertEqual(
            assembled.sizes(), {'acetone': 452, 'benzene': 464, 'ethanol': 695, 'water': 1432},
        )

    def test_vocabulary_sizes(self):
        for max_size, expected in ((3, 319), (5, 4992), (7, 57346)):
            self.assertEqual(assemble_tasks(self.records, max_size=max_size).vocabulary.size, expected)


@skipUnless(settings.LAMEL['DATA']['bigsoldb'], 'BigSolDB dataset not configured (LAMEL_BIGSOLDB_CSV)')
class BigSolDBDataTest(SimpleTestCase):
    """Checks against the BigSolDB 2.0 dataset."""

    def test_task_counts_by_minimum_rows(self):
        config = load_experiment_config(overrides={'dataset': 'bigsoldb'})
        records = filter_temperature_window(load_records(config.data_path, config.schema()).records)
        self.assertEqual(task_count_curve(records, [20, 100, 200, 500]), {20: 50, 100: 27, 200: 14, 500: 9})

    def test_similarity_correlation(self):
        from .harness import run_similarity

        with tempfile.TemporaryDirectory() as tmp:
            config = load_experiment_config(overrides={'dataset': 'bigsoldb', 'out': tmp})
            result = run_similarity(config, record=False)
        self.assertAlmostEqual(result.study.pearson, 0.60, delta=0.05)
