"""
App configuration for molecules application.
LAMeL Toolkit - Molecules App Configuration
"""

from django.apps import AppConfig


class MoleculesConfig(AppConfig):
    """Configuration class for the molecular graph and graphlet application."""
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'molecules'
    verbose_name = 'Molecular Graphs & Graphlets'
