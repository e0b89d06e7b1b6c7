"""
Django admin configuration for the results registry.
LAMeL Toolkit - Admin Interface

Recorded runs are browsed read-only; the files in each run directory remain
the source of truth.
"""

from django.contrib import admin

from .models import ExperimentRun, MetricResult


class MetricResultInline(admin.TabularInline):
    """Inline listing of a run's metric rows."""
    model = MetricResult
    extra = 0
    can_delete = False
    fields = ['target', 'n_shots', 'seed', 'support_subsample', 'mae_meta', 'mae_regular',
              'relative_improvement', 'degenerate']
    readonly_fields = fields
    ordering = ['target', 'n_shots', 'seed']

    def has_add_permission(self, request, obj=None):
        return False


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    """Admin configuration for ExperimentRun model."""
    list_display = ['short_digest', 'kind', 'dataset', 'max_size', 'status', 'n_tasks',
                    'metric_count', 'elapsed_seconds', 'started_at']
    list_filter = ['kind', 'status', 'dataset', 'max_size']
    search_fields = ['digest', 'dataset', 'output_dir']
    ordering = ['-started_at']
    readonly_fields = ['digest', 'code_version', 'output_dir', 'config', 'started_at',
                       'finished_at', 'elapsed_seconds', 'pearson', 'error', 'created_at']
    inlines = [MetricResultInline]

    fieldsets = (
        ('Run', {
            'fields': ('digest', 'kind', 'dataset', 'max_size', 'status', 'error')
        }),
        ('Results', {
            'fields': ('n_tasks', 'n_skipped', 'pearson', 'output_dir')
        }),
        ('Provenance', {
            'fields': ('config', 'code_version'),
            'classes': ('collapse',)
        }),
        ('Timestamps', {
            'fields': ('started_at', 'finished_at', 'elapsed_seconds', 'created_at'),
            'classes': ('collapse',)
        }),
    )

    @admin.display(description='Rows')
    def metric_count(self, obj):
        return obj.metrics.count()


@admin.register(MetricResult)
class MetricResultAdmin(admin.ModelAdmin):
    """Admin configuration for MetricResult model."""
    list_display = ['run', 'target', 'n_shots', 'seed', 'support_subsample', 'mae_meta',
                    'mae_regular', 'relative_improvement', 'degenerate', 'anchored']
    list_filter = ['degenerate', 'anchored', 'n_shots', 'max_size', 'run__dataset']
    search_fields = ['target', 'run__digest']
    ordering = ['run', 'target', 'n_shots', 'seed']
    list_select_related = ['run']
