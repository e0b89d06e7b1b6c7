"""
API views for the results registry.
LAMeL Toolkit - REST API Views

This module contains the read-only REST API views including:
- ViewSets listing recorded runs and their metric rows
- Per-run summaries (mean and standard error over seeds)
- Raw CSV export of a run
"""

import logging

import pandas as pd
from django.db.models import Count
from django.http import HttpResponse
from rest_framework import permissions, status, viewsets
from rest_framework.decorators import action
from rest_framework.response import Response
from rest_framework.views import APIView

from experiments.analysis import MetricRecord, SUMMARY_KEYS, SUMMARY_METRICS, summarize
from experiments.models import ExperimentRun, MetricResult
from .serializers import ExperimentRunSerializer, MetricResultSerializer, SummaryRowSerializer

logger = logging.getLogger(__name__)

RAW_COLUMNS = list(MetricRecord.__dataclass_fields__) + ['relative_improvement']


def summary_rows(metrics):
    """Summary rows of a MetricResult queryset with NaN turned into None."""
    frame = pd.DataFrame.from_records(
        list(metrics.values(*SUMMARY_KEYS, *SUMMARY_METRICS)),
        columns=SUMMARY_KEYS + SUMMARY_METRICS,
    )
    summary = summarize(frame)
    return summary.astype(object).where(summary.notna(), None).to_dict('records')


class ExperimentRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    ViewSet for ExperimentRun model.
    Lists recorded runs; runs are created by the harness, never through the API.
    """
    queryset = ExperimentRun.objects.annotate(metric_count=Count('metrics'))
    serializer_class = ExperimentRunSerializer
    permission_classes = [permissions.IsAuthenticatedOrReadOnly]
    filterset_fields = ['dataset', 'status', 'max_size', 'kind', 'digest']
    ordering_fields = ['started_at', 'elapsed_seconds', 'max_size']
    ordering = ['-started_at', '-id']

    @action(detail=True, methods=['get'])
    def summary(self, request, pk=None):
        """Mean and standard error per target, subsample and shot count."""
        run = self.get_object()
        rows = summary_rows(run.metrics.all())
        return Response({
            'run': run.pk,
            'digest': run.digest,
            'rows': SummaryRowSerializer(rows, many=True).data,
        })


class MetricResultViewSet(viewsets.ReadOnlyModelViewSet):
    """ViewSet for MetricResult model."""
    queryset = MetricResult.objects.select_related('run').all()
    serializer_class = MetricResultSerializer
    permission_classes = [permissions.IsAuthenticatedOrReadOnly]
    filterset_fields = ['run', 'target', 'n_shots', 'seed', 'support_subsample', 'max_size', 'degenerate', 'anchored']
    ordering_fields = ['n_shots', 'seed', 'mae_meta', 'mae_regular', 'relative_improvement']
    ordering = ['run', 'target', 'support_subsample', 'n_shots', 'seed']


class ExportRunView(APIView):
    """
    Raw metric rows of one run as CSV, in the column order of raw.csv.

    Query parameters:
        run: ExperimentRun id (required)
    """
    permission_classes = [permissions.IsAuthenticatedOrReadOnly]

    def get(self, request):
        run_id = request.query_params.get('run', '')
        if not run_id.isdigit():
            return Response({"error": "Query parameter 'run' must be a run id"}, status=status.HTTP_400_BAD_REQUEST)

        run = ExperimentRun.objects.filter(pk=int(run_id)).first()
        if run is None:
            return Response({"error": f"Run {run_id} not found"}, status=status.HTTP_404_NOT_FOUND)

        frame = pd.DataFrame.from_records(
            list(run.metrics.order_by('target', 'max_size', 'support_subsample', 'n_shots', 'seed')
                 .values(*RAW_COLUMNS)),
            columns=RAW_COLUMNS,
        )
        response = HttpResponse(content_type='text/csv')
        response['Content-Disposition'] = f'attachment; filename=run_{run.short_digest}_raw.csv'
        frame.to_csv(response, index=False)
        logger.info("Exported %d rows of run %s", len(frame), run.short_digest)
        return response
