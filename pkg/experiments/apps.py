"""
App configuration for experiments application.
LAMeL Toolkit - Experiments App Configuration
"""

from django.apps import AppConfig


class ExperimentsConfig(AppConfig):
    """Configuration class for the task data, experiment and analysis application."""
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'experiments'
    verbose_name = 'Experiments & Analysis'
