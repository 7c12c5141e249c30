from django.urls import path
from . import views

urlpatterns = [
    path('api/audits/', views.api_audits, name='api_audits'),
    path('api/audits/<int:audit_id>/', views.api_audit_detail, name='api_audit_detail'),
    path('api/stats/', views.api_stats, name='api_stats'),
    path('audits/<int:audit_id>/curve.svg', views.audit_curve_svg, name='audit_curve_svg'),
]
