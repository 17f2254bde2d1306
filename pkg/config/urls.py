"""
Main URL Configuration for SWE Entropy Lab
"""
from django.urls import path, include

urlpatterns = [
    # Scenario registry (read-only JSON)
    path('scenarios/', include('apps.scenarios.urls')),
]
