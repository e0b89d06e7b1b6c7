"""
App configuration for modeling application.
LAMeL Toolkit - Modeling App Configuration
"""

from django.apps import AppConfig


class ModelingConfig(AppConfig):
    """Configuration class for the ridge and meta-learning application."""
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'modeling'
    verbose_name = 'Ridge & Meta-Learning'
