"""
App configuration for API application.
LAMeL Toolkit - API App Configuration
"""

from django.apps import AppConfig


class ApiConfig(AppConfig):
    """Configuration class for the read-only results API."""
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'api'
    verbose_name = 'Results API'
