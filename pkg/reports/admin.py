from django.contrib import admin

from .models import InstitutionAudit


@admin.register(InstitutionAudit)
class InstitutionAuditAdmin(admin.ModelAdmin):
    list_display = ('inst_id', 'level', 'score', 'h_index', 'papers', 'created_at')
    list_filter = ('level',)
    search_fields = ('inst_id',)
    readonly_fields = ('report_json', 'svg', 'created_at')
