"""
URL configuration for lamel_toolkit project.
Main URL routing for the LAMeL Toolkit

This module defines the main URL patterns including:
- Admin interface (results registry)
- Read-only results API
- Health check
"""

from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    # Admin Interface
    path('admin/', admin.site.urls),

    # Results API
    path('api/v1/', include('api.urls')),

    # Health Check
    path('health/', include('core.health_urls')),
]
