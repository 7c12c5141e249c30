from django.db.models import Count
from django.http import HttpResponse, JsonResponse
from django.shortcuts import get_object_or_404
from django.views.decorators.http import require_GET
import json

from reports.models import InstitutionAudit


@require_GET
def api_audits(request):
    """API endpoint for the audit history, newest first"""
    try:
        limit = min(int(request.GET.get('limit', 50)), 500)
    except ValueError:
        return JsonResponse({'error': 'limit must be an integer'}, status=400)
    inst_id = request.GET.get('inst_id')
    level = request.GET.get('level')

    audits = InstitutionAudit.objects.all()

    if inst_id:
        audits = audits.filter(inst_id=inst_id)

    if level:
        audits = audits.filter(level=level)

    data = [audit.summary() for audit in audits[:limit]]

    return JsonResponse({
        'audits': data,
        'count': len(data),
    })


@require_GET
def api_audit_detail(request, audit_id):
    """Full JSON report of one stored audit"""
    audit = get_object_or_404(InstitutionAudit, pk=audit_id)
    return JsonResponse({
        'audit': audit.summary(),
        'report': json.loads(audit.report_json),
    })


@require_GET
def api_stats(request):
    """Audit counts per verdict level"""
    levels = dict(
        InstitutionAudit.objects.values_list('level').annotate(total=Count('id')).order_by('level')
    )
    return JsonResponse({
        'total_audits': InstitutionAudit.objects.count(),
        'institutions': InstitutionAudit.objects.values('inst_id').distinct().count(),
        'levels': levels,
    })


@require_GET
def audit_curve_svg(request, audit_id):
    audit = get_object_or_404(InstitutionAudit, pk=audit_id)
    if not audit.svg:
        return HttpResponse(status=404)
    return HttpResponse(audit.svg, content_type='image/svg+xml')
