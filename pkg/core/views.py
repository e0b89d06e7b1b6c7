"""
Core views for system utilities.
LAMeL Toolkit - Core Views
"""

import logging
import os
from pathlib import Path

from django.conf import settings
from django.db import DatabaseError, connection
from django.utils import timezone
from rest_framework import status
from rest_framework.permissions import AllowAny
from rest_framework.response import Response
from rest_framework.views import APIView

import lamel_toolkit

logger = logging.getLogger(__name__)


def registry_check():
    try:
        with connection.cursor() as cursor:
            cursor.execute("SELECT 1")
    except DatabaseError as exc:
        logger.error("Results registry unreachable: %s", exc)
        return {"status": "unhealthy", "message": f"Registry database unreachable: {exc}"}
    return {"status": "healthy", "message": "Registry database reachable"}


def results_dir_check():
    """The results directory need not exist yet, but its nearest existing parent must be writable."""
    path = Path(settings.LAMEL['RESULTS_DIR'])
    existing = path
    while not existing.exists() and existing != existing.parent:
        existing = existing.parent
    if os.access(existing, os.W_OK):
        return {"status": "healthy", "path": str(path), "exists": path.exists()}
    logger.warning("Results directory %s is not writable", path)
    return {"status": "unhealthy", "path": str(path), "message": f"{existing} is not writable"}


class HealthCheckView(APIView):
    """
    Health check endpoint.

    Reports registry connectivity, whether runs can be written, and which
    external datasets are configured. Only the first two affect the status code.
    """
    permission_classes = [AllowAny]

    def get(self, request):
        checks = {
            "database": registry_check(),
            "results_dir": results_dir_check(),
        }
        healthy = all(check["status"] == "healthy" for check in checks.values())
        payload = {
            "status": "healthy" if healthy else "unhealthy",
            "timestamp": timezone.now().isoformat(),
            "version": lamel_toolkit.__version__,
            "datasets": {name: bool(path) for name, path in settings.LAMEL['DATA'].items()},
            "checks": checks,
        }
        code = status.HTTP_200_OK if healthy else status.HTTP_503_SERVICE_UNAVAILABLE
        return Response(payload, status=code)
