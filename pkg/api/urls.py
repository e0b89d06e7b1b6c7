"""
API URLs for the results registry.
LAMeL Toolkit - API URL Configuration

Read-only endpoints:
- runs/ and runs/{id}/summary/
- metrics/
- export/?run=<id>
"""

from django.urls import include, path
from rest_framework.routers import DefaultRouter

from .views import ExperimentRunViewSet, ExportRunView, MetricResultViewSet

router = DefaultRouter()
router.register(r'runs', ExperimentRunViewSet, basename='run')
router.register(r'metrics', MetricResultViewSet, basename='metric')

app_name = 'api'

urlpatterns = [
    path('', include(router.urls)),
    path('export/', ExportRunView.as_view(), name='export_run'),
]
