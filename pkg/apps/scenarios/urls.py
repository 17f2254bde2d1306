"""
Scenarios URLs
"""
from django.urls import path
from . import views

app_name = 'scenarios'

urlpatterns = [
    path('', views.scenario_list, name='list'),
    path('<str:name>/', views.scenario_detail, name='detail'),
]
