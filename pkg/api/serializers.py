"""
Serializers for API endpoints.
LAMeL Toolkit - API Serializers

Read-only representations of the results registry:
- ExperimentRunSerializer: run metadata with its metric row count
- MetricResultSerializer: one paired evaluation row
- SummaryRowSerializer: mean and standard error over seeds
"""

from rest_framework import serializers

from experiments.models import ExperimentRun, MetricResult


class ExperimentRunSerializer(serializers.ModelSerializer):
    """
    Serializer for ExperimentRun model.
    Includes the short digest naming the run directory and the row count.
    """
    short_digest = serializers.ReadOnlyField()
    metric_count = serializers.IntegerField(read_only=True)

    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'digest', 'short_digest', 'kind', 'dataset', 'max_size', 'status',
            'code_version', 'output_dir', 'n_tasks', 'n_skipped', 'metric_count', 'pearson', 'error',
            'started_at', 'finished_at', 'elapsed_seconds', 'config', 'created_at',
        ]
        read_only_fields = fields


class MetricResultSerializer(serializers.ModelSerializer):
    """Serializer for MetricResult model."""
    run_digest = serializers.CharField(source='run.short_digest', read_only=True)

    class Meta:
        model = MetricResult
        fields = [
            'id', 'run', 'run_digest', 'target', 'n_shots', 'seed', 'support_subsample', 'max_size',
            'n_test', 'n_support', 'mae_meta', 'mae_regular', 'r2_meta', 'r2_regular',
            'relative_improvement', 'lambda_parallel', 'lambda_perp', 'lambda_regular', 'degenerate',
            'anchored', 'span_fraction',
        ]
        read_only_fields = fields


class SummaryRowSerializer(serializers.Serializer):
    """
    One summary.csv row.
    Standard errors are null when only one seed contributed.
    """
    target = serializers.CharField()
    max_size = serializers.IntegerField()
    support_subsample = serializers.IntegerField()
    n_shots = serializers.IntegerField()
    n_seeds = serializers.IntegerField()
    mae_meta_mean = serializers.FloatField()
    mae_meta_se = serializers.FloatField(allow_null=True)
    mae_regular_mean = serializers.FloatField()
    mae_regular_se = serializers.FloatField(allow_null=True)
    r2_meta_mean = serializers.FloatField(allow_null=True)
    r2_meta_se = serializers.FloatField(allow_null=True)
    r2_regular_mean = serializers.FloatField(allow_null=True)
    r2_regular_se = serializers.FloatField(allow_null=True)
    relative_improvement_mean = serializers.FloatField(allow_null=True)
    relative_improvement_se = serializers.FloatField(allow_null=True)
