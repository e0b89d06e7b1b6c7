"""
Tests for API endpoints and functionality.
LAMeL Toolkit - API Tests

This module contains tests for the read-only results API including:
- Run and metric listings with filters
- Per-run summaries
- Raw CSV export
- Rejection of write requests
- Health check
"""

import io

import pandas as pd
from django.contrib.auth.models import User
from django.urls import reverse
from django.utils import timezone
from rest_framework import status
from rest_framework.test import APITestCase

from experiments.models import ExperimentRun, MetricResult


def make_run(digest='ab' * 16, dataset='synthetic', max_size=5, kind='experiment'):
    return ExperimentRun.objects.create(
        digest=digest, kind=kind, dataset=dataset, max_size=max_size,
        config={'dataset': dataset, 'max_size': max_size}, code_version='1.0.0',
        output_dir=f'results/{digest[:12]}', n_tasks=2, started_at=timezone.now(),
    )


def add_metric(run, target, n_shots, seed, mae_meta, mae_regular, **extra):
    return MetricResult.objects.create(
        run=run, target=target, n_shots=n_shots, seed=seed, max_size=run.max_size,
        mae_meta=mae_meta, mae_regular=mae_regular,
        relative_improvement=100.0 * (mae_regular - mae_meta) / mae_meta, **extra,
    )


class ExperimentRunAPITest(APITestCase):
    """Test ExperimentRun API endpoints."""

    def setUp(self):
        """Set up test data."""
        self.run = make_run()
        add_metric(self.run, 'water', 10, 0, 1.0, 2.0, r2_meta=0.5, r2_regular=0.1)
        add_metric(self.run, 'water', 10, 1, 3.0, 4.0, r2_meta=0.7, r2_regular=0.3)
        add_metric(self.run, 'water', 20, 0, 1.0, 1.0)
        self.other = make_run(digest='cd' * 16, dataset='boobier', max_size=3)

    def test_run_list(self):
        """Test run list endpoint."""
        response = self.client.get(reverse('api:run-list'))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(len(response.data['results']), 2)

    def test_run_filter_by_dataset(self):
        """Test filtering runs by dataset and max size."""
        response = self.client.get(reverse('api:run-list'), {'dataset': 'boobier'})
        self.assertEqual([row['id'] for row in response.data['results']], [self.other.pk])
        response = self.client.get(reverse('api:run-list'), {'max_size': 5})
        self.assertEqual([row['id'] for row in response.data['results']], [self.run.pk])

    def test_run_detail(self):
        """Test run detail endpoint."""
        response = self.client.get(reverse('api:run-detail', kwargs={'pk': self.run.pk}))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['short_digest'], 'ab' * 6)
        self.assertEqual(response.data['metric_count'], 3)
        self.assertEqual(response.data['config']['dataset'], 'synthetic')

    def test_run_summary(self):
        """Test mean and standard error per shot count."""
        response = self.client.get(reverse('api:run-summary', kwargs={'pk': self.run.pk}))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        rows = response.data['rows']
        self.assertEqual([(row['n_shots'], row['n_seeds']) for row in rows], [(10, 2), (20, 1)])
        self.assertAlmostEqual(rows[0]['mae_meta_mean'], 2.0)
        self.assertAlmostEqual(rows[0]['mae_meta_se'], 1.0)
        self.assertIsNone(rows[1]['mae_meta_se'])
        self.assertIsNone(rows[1]['r2_meta_mean'])

    def test_summary_of_run_without_metrics(self):
        """Test the summary of a similarity run is empty."""
        response = self.client.get(reverse('api:run-summary', kwargs={'pk': self.other.pk}))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['rows'], [])

    def test_failed_run_detail(self):
        """Test a failed run exposes its status and error."""
        failed = make_run(digest='ef' * 16)
        failed.status = 'failed'
        failed.error = "ConfigError: Target task 'missing' not found"
        failed.save()
        response = self.client.get(reverse('api:run-list'), {'status': 'failed'})
        self.assertEqual([row['id'] for row in response.data['results']], [failed.pk])
        self.assertTrue(response.data['results'][0]['error'].startswith('ConfigError'))

    def test_writes_rejected(self):
        """Test the registry cannot be modified through the API."""
        user = User.objects.create_user('analyst', 'analyst@example.com', 'pass')
        self.client.force_authenticate(user)
        response = self.client.post(reverse('api:run-list'), {'digest': 'x', 'max_size': 3}, format='json')
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
        response = self.client.delete(reverse('api:run-detail', kwargs={'pk': self.run.pk}))
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
        self.assertEqual(ExperimentRun.objects.count(), 2)


class MetricResultAPITest(APITestCase):
    """Test MetricResult API endpoints."""

    def setUp(self):
        """Set up test data."""
        self.run = make_run()
        add_metric(self.run, 'water', 10, 0, 1.0, 1.2)
        add_metric(self.run, 'ethanol', 10, 0, 0.5, 0.4)
        add_metric(self.run, 'ethanol', 20, 1, 0.4, 0.4)

    def test_metric_list(self):
        """Test metric list endpoint."""
        response = self.client.get(reverse('api:metric-list'))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(len(response.data['results']), 3)

    def test_metric_filters(self):
        """Test filtering metrics by target, shots and seed."""
        url = reverse('api:metric-list')
        self.assertEqual(len(self.client.get(url, {'target': 'ethanol'}).data['results']), 2)
        self.assertEqual(len(self.client.get(url, {'n_shots': 10}).data['results']), 2)
        response = self.client.get(url, {'target': 'ethanol', 'seed': 1})
        self.assertEqual(response.data['results'][0]['n_shots'], 20)
        self.assertEqual(response.data['results'][0]['run_digest'], self.run.short_digest)

    def test_filter_plain_ridge_rows(self):
        """Test filtering metric rows where plain ridge was kept."""
        add_metric(self.run, 'water', 20, 0, 0.9, 0.9, anchored=False, lambda_parallel=0.0)
        add_metric(self.run, 'water', 20, 1, 0.8, 0.9, span_fraction=0.25)
        url = reverse('api:metric-list')
        response = self.client.get(url, {'anchored': 'false'})
        self.assertEqual([(row['n_shots'], row['seed']) for row in response.data['results']], [(20, 0)])
        self.assertIsNone(response.data['results'][0]['span_fraction'])
        response = self.client.get(url, {'target': 'water', 'n_shots': 20, 'anchored': 'true'})
        self.assertEqual(response.data['results'][0]['span_fraction'], 0.25)

    def test_relative_improvement_sign(self):
        """Test stored improvement is negative when meta-learning hurt."""
        response = self.client.get(reverse('api:metric-list'), {'target': 'ethanol', 'n_shots': 10})
        self.assertAlmostEqual(response.data['results'][0]['relative_improvement'], -20.0)


class ExportRunAPITest(APITestCase):
    """Test raw CSV export."""

    def setUp(self):
        """Set up test data."""
        self.run = make_run()
        add_metric(self.run, 'water', 20, 0, 1.0, 1.5, n_test=30)
        add_metric(self.run, 'water', 10, 0, 1.0, 2.0, n_test=40)

    def test_export_csv(self):
        """Test export returns the raw rows in raw.csv order."""
        response = self.client.get(reverse('api:export_run'), {'run': self.run.pk})
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response['Content-Type'], 'text/csv')
        frame = pd.read_csv(io.StringIO(response.content.decode('utf-8')))
        self.assertEqual(list(frame['n_shots']), [10, 20])
        self.assertEqual(list(frame['n_test']), [40, 30])
        self.assertEqual(frame.columns[0], 'target')
        self.assertEqual(frame.columns[-1], 'relative_improvement')

    def test_export_errors(self):
        """Test missing or unknown run ids."""
        url = reverse('api:export_run')
        self.assertEqual(self.client.get(url).status_code, status.HTTP_400_BAD_REQUEST)
        self.assertEqual(self.client.get(url, {'run': 'abc'}).status_code, status.HTTP_400_BAD_REQUEST)
        self.assertEqual(self.client.get(url, {'run': 9999}).status_code, status.HTTP_404_NOT_FOUND)


class HealthCheckTest(APITestCase):
    """Test health check functionality."""

    def test_health_check_endpoint(self):
        """Test health check endpoint."""
        response = self.client.get(reverse('health:health_check'))
        self.assertIn(response.status_code, (status.HTTP_200_OK, status.HTTP_503_SERVICE_UNAVAILABLE))
        self.assertEqual(response.data['checks']['database']['status'], 'healthy')
        self.assertIn('results_dir', response.data['checks'])
        self.assertEqual(set(response.data['datasets']), {'boobier', 'bigsoldb', 'qm9multixc'})
