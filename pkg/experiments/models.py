"""
Models for the experiments application.
LAMeL Toolkit - Results Registry Models

This module contains the database models for recorded experiment runs:
- ExperimentRun: One harness run with its resolved configuration
- MetricResult: One paired (target, n_shots, seed) evaluation of a run
"""

from django.db import models


class ExperimentRun(models.Model):
    """
    One recorded run of the experiment or similarity harness.

    Attributes:
        digest: Config digest; also names the run directory
        kind: experiment or similarity
        dataset: Preset name, or empty for custom datasets
        max_size: Graphlet size the features were built with
        config: Resolved configuration as JSON
        status: Outcome of the run
        code_version: Toolkit version that produced it
        output_dir: Directory holding raw.csv and friends
    """

    KIND_CHOICES = [
        ('experiment', 'Few-shot experiment'),
        ('similarity', 'Similarity study'),
    ]

    STATUS_CHOICES = [
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    digest = models.CharField(max_length=32, db_index=True, help_text="Configuration digest")
    kind = models.CharField(max_length=20, choices=KIND_CHOICES, default='experiment')
    dataset = models.CharField(max_length=50, blank=True, help_text="Dataset preset name")
    max_size = models.PositiveSmallIntegerField(help_text="Maximum graphlet size")
    config = models.JSONField(default=dict, help_text="Resolved experiment configuration")
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='completed')
    code_version = models.CharField(max_length=20, blank=True)
    output_dir = models.CharField(max_length=500, blank=True)
    n_tasks = models.PositiveIntegerField(default=0)
    n_skipped = models.PositiveIntegerField(default=0, help_text="Cells skipped for too few rows")
    started_at = models.DateTimeField()
    finished_at = models.DateTimeField(null=True, blank=True)
    elapsed_seconds = models.FloatField(default=0.0)
    pearson = models.FloatField(null=True, blank=True, help_text="Similarity study correlation")
    error = models.TextField(blank=True, help_text="Exception that ended a failed run")

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-started_at', '-id']
        verbose_name = "Experiment Run"
        verbose_name_plural = "Experiment Runs"

    def __str__(self):
        label = self.dataset or 'custom'
        return f"{label} k={self.max_size} ({self.digest[:12]})"

    @property
    def short_digest(self):
        return self.digest[:12]


class MetricResult(models.Model):
    """One row of a run's raw.csv."""

    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='metrics')
    target = models.CharField(max_length=100, db_index=True)
    n_shots = models.PositiveIntegerField()
    seed = models.PositiveIntegerField()
    support_subsample = models.PositiveIntegerField(default=0, help_text="0 means all support rows")
    max_size = models.PositiveSmallIntegerField()
    n_test = models.PositiveIntegerField(default=0)
    n_support = models.PositiveIntegerField(default=0)
    mae_meta = models.FloatField()
    mae_regular = models.FloatField()
    r2_meta = models.FloatField(null=True, blank=True)
    r2_regular = models.FloatField(null=True, blank=True)
    relative_improvement = models.FloatField(null=True, blank=True)
    lambda_parallel = models.FloatField(default=0.0)
    lambda_perp = models.FloatField(default=0.0)
    lambda_regular = models.FloatField(default=0.0)
    degenerate = models.BooleanField(default=False)
    anchored = models.BooleanField(default=True, help_text="False when plain ridge was kept")
    span_fraction = models.FloatField(null=True, blank=True, help_text="Share of beta_perp in the support span")

    class Meta:
        ordering = ['run', 'target', 'max_size', 'support_subsample', 'n_shots', 'seed']
        verbose_name = "Metric Result"
        verbose_name_plural = "Metric Results"
        constraints = [
            models.UniqueConstraint(
                fields=['run', 'target', 'support_subsample', 'n_shots', 'seed'],
                name='unique_metric_cell',
            ),
        ]

    def __str__(self):
        return f"{self.target} NS={self.n_shots} seed={self.seed}"
