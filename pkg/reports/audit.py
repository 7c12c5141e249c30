"""
File-level audit pipeline shared by the management commands.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings

from analytics.exceptions import AnalysisError
from analytics.verdict import run_assessment
from corpus.ingest import load_corpus

from .models import InstitutionAudit
from .report import AnalysisReport, build_report, emit_report, make_provenance
from .svg import render_curve_svg

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AuditOutput:
    report: AnalysisReport
    svg: bytes


def read_corpus(pubs, cites, config, strict=False, require_classification=False):
    corpus, ingest_report = load_corpus(
        pubs, cites,
        strict=strict,
        require_classification=require_classification,
        year_min=config.year_min,
        year_max=config.year_max,
    )
    return corpus, ingest_report


def audit_institution(corpus, inst_id, config, provenance=None, log_y=False) -> AuditOutput:
    assessment = run_assessment(corpus, inst_id, config)
    report = build_report(assessment, config, provenance or make_provenance())
    svg = render_curve_svg(
        assessment.curve,
        fit=assessment.fit,
        hump=assessment.verdict.hump,
        log_y=log_y,
        title=f'{inst_id}: {assessment.verdict.level.value}',
    )
    return AuditOutput(report, svg)


def audit_all(corpus, config, provenance=None, workers=None, log_y=False):
    """Audit every institution concurrently; returns ({inst_id: AuditOutput}, {inst_id: error})"""
    workers = workers or getattr(settings, 'AUDIT_BATCH_WORKERS', 4)
    institutions = corpus.institutions()
    outputs, failures = {}, {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            inst_id: pool.submit(audit_institution, corpus, inst_id, config, provenance, log_y)
            for inst_id in institutions
        }
        for inst_id, future in futures.items():
            try:
                outputs[inst_id] = future.result()
            except AnalysisError as e:
                logger.error(f"{inst_id}: {e.code}: {e}")
                failures[inst_id] = e
    logger.info(f"Audited {len(outputs)} of {len(institutions)} institutions with {workers} worker(s)")
    return outputs, failures


def write_bytes(path, payload: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    return path


def save_audit(output: AuditOutput) -> InstitutionAudit:
    report = output.report
    metrics = report.metrics
    audit = InstitutionAudit.objects.create(
        inst_id=report.inst_id,
        level=report.level,
        score=report.verdict['score'],
        h_index=metrics['h_index'],
        papers=metrics['papers'],
        total_citations=metrics['total_citations'],
        schema_version=report.schema_version,
        report_json=emit_report(report, 'json').decode('utf-8'),
        svg=output.svg.decode('utf-8'),
    )
    logger.info(f"Saved audit #{audit.id} for {report.inst_id}")
    return audit
