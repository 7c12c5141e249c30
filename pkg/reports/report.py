"""
Audit reports: the canonical JSON document and its Markdown rendering.

A report carries everything needed to reconstruct a verdict: the curve, the
fitted baseline, the effective detector config and digests of the input files.
Only `generated_at` differs between two runs over the same inputs.
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from django.utils import timezone

from analytics.baseline import BaselineFit
from analytics.hump import HumpRegion
from analytics.metrics import CurveEntry, RankCitationCurve, format_fwci, format_percent
from analytics.verdict import Assessment
from hindex_audit import __version__

from .exceptions import InvalidReport

logger = logging.getLogger(__name__)

SCHEMA_VERSION = '1.0'
REPORT_FORMATS = ('json', 'markdown')


@dataclass(frozen=True)
class AnalysisReport:
    inst_id: str
    metrics: dict
    verdict: dict
    config_echo: dict
    provenance: dict
    generated_at: str
    curve: tuple = ()
    baseline: Optional[dict] = None
    band_member_ids: tuple = ()
    schema_version: str = SCHEMA_VERSION

    def as_dict(self):
        return {
            'schema_version': self.schema_version,
            'inst_id': self.inst_id,
            'generated_at': self.generated_at,
            'metrics': self.metrics,
            'verdict': self.verdict,
            'band_member_ids': list(self.band_member_ids),
            'config': self.config_echo,
            'provenance': self.provenance,
            'curve': [list(point) for point in self.curve],
            'baseline': self.baseline,
        }

    @property
    def level(self):
        return self.verdict['level']


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as stream:
        for chunk in iter(lambda: stream.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()


def make_provenance(inputs=None, seed=None):
    """inputs: {label: path}; each file is recorded by name and sha256"""
    return {
        'tool_version': __version__,
        'seed': seed,
        'inputs': {
            label: {'file': Path(path).name, 'sha256': file_digest(path)}
            for label, path in sorted((inputs or {}).items())
        },
    }


def simulation_seed(pubs_path):
    """Seed from a ground_truth.json written next to simulated inputs, else None"""
    path = Path(pubs_path).parent / 'ground_truth.json'
    if not path.is_file():
        return None
    try:
        return int(json.loads(path.read_text(encoding='utf-8'))['params']['seed'])
    except (OSError, ValueError, KeyError, TypeError) as e:
        logger.warning(f"Ignoring unreadable {path}: {e!r}")
        return None


def build_report(assessment: Assessment, config, provenance=None, generated_at=None) -> AnalysisReport:
    return AnalysisReport(
        inst_id=assessment.inst_id,
        metrics=assessment.summary.as_dict(),
        verdict=assessment.verdict.as_dict(),
        config_echo=config.as_dict(),
        provenance=provenance or make_provenance(),
        generated_at=generated_at or timezone.now().replace(microsecond=0).isoformat(),
        curve=tuple((e.rank, e.pub_id, e.citations) for e in assessment.curve.entries),
        baseline=assessment.fit.as_dict() if assessment.fit else None,
        band_member_ids=tuple(sorted(assessment.band_member_ids)),
    )


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + '\n'


def emit_report(report: AnalysisReport, format='json') -> bytes:
    if format == 'json':
        return canonical_json(report.as_dict()).encode('utf-8')
    if format == 'markdown':
        return render_markdown(report).encode('utf-8')
    raise ValueError(f'Unknown report format {format!r}, expected one of {REPORT_FORMATS}')


def without_timestamp(payload) -> dict:
    """Parsed report minus `generated_at`, for comparing two runs"""
    data = json.loads(payload) if isinstance(payload, (bytes, str)) else dict(payload)
    data.pop('generated_at', None)
    return data


def _ratio(value):
    return 'n/a' if value is None else f'{value:.3f}'


def render_markdown(report: AnalysisReport) -> str:
    metrics = report.metrics
    verdict = report.verdict
    lines = [
        f'# Citation audit: {report.inst_id}',
        '',
        f'- level: {verdict["level"]}',
        f'- score: {verdict["score"]:.3f}',
        f'- generated: {report.generated_at}',
        f'- tool version: {report.provenance.get("tool_version")}',
        '',
        '## Indicators',
        '',
        '| papers | citations | h-index | h-core citations | tail citations | tail/core |',
        '|---:|---:|---:|---:|---:|---:|',
        f'| {metrics["papers"]} | {metrics["total_citations"]} | {metrics["h_index"]} '
        f'| {metrics["core_citations"]} | {metrics["tail_citations"]} | {_ratio(metrics["tail_core_ratio"])} |',
        '',
    ]

    hump = verdict.get('hump')
    if hump is None:
        lines += ['## Humpback', '', 'No humpback around the h-paper.', '']
    else:
        lo, hi = hump['rank_interval']
        band_lo, band_hi = hump['citation_band']
        lines += [
            '## Humpback',
            '',
            f'- ranks: {lo}-{hi} ({hump["members"]} publications)',
            f'- citation band: {band_lo}-{band_hi}',
            f'- publications in band: {len(report.band_member_ids)}',
            f'- peak z: {hump["peak_z"]:.2f}',
            f'- excess mass: {hump["excess_mass"]:.1f}',
            f'- contains h-paper: {"yes" if hump["contains_h"] else "no"}',
            '',
        ]

    self_cite = verdict.get('self_cite')
    fwci = verdict.get('fwci')
    if self_cite or fwci:
        lines += ['## Hump members', '']
        if self_cite:
            lines.append(
                f'- self-citations: {format_percent(self_cite["rate"])} '
                f'({self_cite["self_citing_docs"]} of {self_cite["citing_docs"]} citing documents, {self_cite["level"]} level)'
            )
            lines.append(
                f'- median self-citation rate of cited {report.inst_id} publications: '
                f'{format_percent(verdict.get("median_self_cite_rate"))}'
            )
        if fwci:
            lines.append(f'- FWCI: {format_fwci(fwci["set_mean"])}')
            if verdict.get('fwci_expected') is not None:
                lines.append(f'- FWCI expected at the same ranks: {format_fwci(verdict["fwci_expected"])}')
            if fwci['uncovered']:
                lines.append(f'- publications without a baseline cell: {len(fwci["uncovered"])}')
        lines.append('')

    lines += ['## Notes', '']
    lines += [f'- {note}' for note in verdict.get('notes', [])]
    return '\n'.join(lines) + '\n'


def summary_rows(entries):
    """Institutions ranked by h-index, ties by id; `entries` are (inst_id, metrics, level) triples"""
    ordered = sorted(entries, key=lambda entry: (-entry[1]['h_index'], entry[0]))
    return [
        {'rank': rank, 'inst_id': inst_id, 'level': level, **metrics}
        for rank, (inst_id, metrics, level) in enumerate(ordered, start=1)
    ]


def render_summary_markdown(rows) -> str:
    lines = [
        '# Citation audit summary',
        '',
        '| rank | institution | papers | citations | h-index | level |',
        '|---:|---|---:|---:|---:|---|',
    ]
    for row in rows:
        lines.append(
            f'| {row["rank"]} | {row["inst_id"]} | {row["papers"]} | {row["total_citations"]} '
            f'| {row["h_index"]} | {row["level"] or "n/a"} |'
        )
    return '\n'.join(lines) + '\n'


def emit_summary(rows, format='json') -> bytes:
    if format == 'json':
        return canonical_json({'schema_version': SCHEMA_VERSION, 'institutions': rows}).encode('utf-8')
    if format == 'markdown':
        return render_summary_markdown(rows).encode('utf-8')
    raise ValueError(f'Unknown summary format {format!r}, expected one of {REPORT_FORMATS}')


def load_report(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, ValueError) as e:
        raise InvalidReport(f'Cannot read report {path}: {e}') from None
    if not isinstance(data, dict) or 'curve' not in data or 'verdict' not in data:
        raise InvalidReport(f'{path} is not an audit report')
    if data.get('schema_version') != SCHEMA_VERSION:
        raise InvalidReport(f'Unsupported schema_version {data.get("schema_version")!r}', path=str(path))
    if not isinstance(data.get('metrics'), dict) or 'h_index' not in data['metrics']:
        raise InvalidReport(f'{path} has no metrics.h_index', path=str(path))
    return data


def figure_inputs(data: dict):
    """(curve, fit, hump, h) reconstructed from a parsed report"""
    try:
        curve = RankCitationCurve(tuple(CurveEntry(int(r), str(p), int(c)) for r, p, c in data['curve']))
        fit = BaselineFit.from_dict(data['baseline']) if data.get('baseline') else None
        hump_data = data['verdict'].get('hump')
        hump = None
        if hump_data:
            hump = HumpRegion(
                rank_interval=tuple(int(v) for v in hump_data['rank_interval']),
                citation_band=tuple(int(v) for v in hump_data['citation_band']),
                member_ids=frozenset(hump_data['member_ids']),
                excess_mass=float(hump_data['excess_mass']),
                peak_z=float(hump_data['peak_z']),
                contains_h=bool(hump_data['contains_h']),
            )
        h = int(data['metrics']['h_index'])
    except (KeyError, ValueError, TypeError, AttributeError) as e:
        raise InvalidReport(f'Malformed report content: {e!r}') from None
    return curve, fit, hump, h
