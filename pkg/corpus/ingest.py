"""
Readers and writers for the publications / citations exchange files.

Rejections are row-local: a bad row is reported with its line number and the
rest of the file is kept, unless the caller asks for strict mode.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .exceptions import CorpusError, Io, MalformedHeader, StrictRejection
from .records import CitationEdge, DocType, PublicationRecord, build_corpus

logger = logging.getLogger(__name__)

PUBLICATION_COLUMNS = ['pub_id', 'inst_id', 'year', 'doc_type', 'field_code', 'author_ids', 'external', 'title']
CITATION_COLUMNS = ['citing_id', 'cited_id']
AUTHOR_SEPARATOR = ';'

TRUE_VALUES = {'true', '1', 'yes'}
FALSE_VALUES = {'false', '0', 'no', ''}


@dataclass
class Rejection:
    line: int
    code: str
    message: str


@dataclass
class IngestReport:
    records_read: int = 0
    edges_read: int = 0
    rejected: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    edge_lines: dict = field(default_factory=dict)

    def reject(self, line, code, message):
        self.rejected.append(Rejection(line, code, message))

    def warn(self, line, message):
        self.warnings.append(f'line {line}: {message}')

    @property
    def ok(self):
        return not self.rejected

    def merge(self, other):
        return IngestReport(
            records_read=self.records_read + other.records_read,
            edges_read=self.edges_read + other.edges_read,
            rejected=self.rejected + other.rejected,
            warnings=self.warnings + other.warnings,
            edge_lines={**self.edge_lines, **other.edge_lines},
        )


class RowError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _text(value):
    if value is None:
        return ''
    return str(value).strip()


def _id(value):
    """Identifiers are kept verbatim; surrounding whitespace is rejected, not trimmed"""
    return '' if value is None else str(value)


def _parse_authors(value):
    if isinstance(value, (list, tuple, set, frozenset)):
        parts = [_text(v) for v in value]
    else:
        parts = [p.strip() for p in _text(value).split(AUTHOR_SEPARATOR)]
    return frozenset(p for p in parts if p)


def _parse_bool(value):
    if isinstance(value, bool):
        return value
    text = _text(value).lower()
    if text in TRUE_VALUES:
        return True
    if text in FALSE_VALUES:
        return False
    raise RowError('InvalidValue', f'external must be true/false, got {value!r}')


def _record_from_fields(fields, line, report, require_classification):
    pub_id = _id(fields.get('pub_id'))
    inst_id = _id(fields.get('inst_id'))
    if not pub_id.strip() or not inst_id.strip():
        raise RowError('MissingField', 'pub_id and inst_id are required')

    year_text = _text(fields.get('year'))
    try:
        year = int(year_text)
    except ValueError:
        raise RowError('InvalidYear', f'{pub_id}: year {year_text!r} is not an integer') from None

    doc_type_text = _text(fields.get('doc_type')).lower()
    field_code = _text(fields.get('field_code')) or None
    doc_type = None
    if doc_type_text:
        try:
            doc_type = DocType(doc_type_text)
        except ValueError:
            raise RowError('InvalidDocType', f'{pub_id}: unknown doc_type {doc_type_text!r}') from None
    if doc_type is None or field_code is None:
        if require_classification:
            raise RowError('MissingField', f'{pub_id}: doc_type and field_code are required for FWCI')
        report.warn(line, f'{pub_id} has no doc_type/field_code, FWCI will not cover it')

    record = PublicationRecord(
        pub_id=pub_id,
        inst_id=inst_id,
        year=year,
        doc_type=doc_type,
        field_code=field_code,
        author_ids=_parse_authors(fields.get('author_ids')),
        external=_parse_bool(fields.get('external')),
        title=_text(fields.get('title')) or None,
    )
    try:
        record.validate()
    except CorpusError as e:
        raise RowError(e.code, str(e)) from None
    return record


def _iter_rows(stream, fmt, columns):
    """Yield (line_number, dict) pairs; raise MalformedHeader/Io for whole-file problems"""
    try:
        if fmt == 'csv':
            reader = csv.reader(stream)
            header = next(reader, None)
            if header is None:
                return
            header = [h.strip() for h in header]
            if header != columns:
                raise MalformedHeader(f'Expected header {",".join(columns)}, got {",".join(header)}')
            for row in reader:
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != len(columns):
                    yield reader.line_num, RowError(
                        'MalformedRow', f'expected {len(columns)} fields, got {len(row)}'
                    )
                    continue
                yield reader.line_num, dict(zip(columns, row))
        elif fmt == 'jsonl':
            for line_number, line in enumerate(stream, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    yield line_number, RowError('MalformedRow', f'invalid JSON: {e.msg}')
                    continue
                if not isinstance(obj, dict):
                    yield line_number, RowError('MalformedRow', 'expected a JSON object')
                    continue
                yield line_number, obj
        else:
            raise ValueError(f'Unsupported format {fmt!r}')
    except UnicodeDecodeError as e:
        raise Io(f'Input is not valid UTF-8: {e}') from None
    except csv.Error as e:
        raise Io(f'Unreadable CSV: {e}') from None
    except OSError as e:
        raise Io(f'Read error: {e}') from None


def parse_publications(stream, format='csv', *, strict=False, require_classification=False,
                       year_min=None, year_max=None):
    """Parse publication rows into records; returns (records, IngestReport)"""
    report = IngestReport()
    records = []
    seen = set()
    for line, row in _iter_rows(stream, format, PUBLICATION_COLUMNS):
        report.records_read += 1
        try:
            if isinstance(row, RowError):
                raise row
            record = _record_from_fields(row, line, report, require_classification)
            if record.pub_id in seen:
                raise RowError('DuplicateId', f'duplicate pub_id {record.pub_id!r}')
        except RowError as e:
            report.reject(line, e.code, str(e))
            continue
        if not record.external and (
            (year_min is not None and record.year < year_min)
            or (year_max is not None and record.year > year_max)
        ):
            report.warn(line, f'{record.pub_id} ({record.year}) outside the {year_min}-{year_max} window, skipped')
            continue
        seen.add(record.pub_id)
        records.append(record)

    _finish('publications', report, strict, accepted=len(records))
    return records, report


def parse_citations(stream, format='csv', *, strict=False):
    """Parse citing->cited rows into edges; returns (edges, IngestReport)"""
    report = IngestReport()
    edges = []
    seen = set()
    for line, row in _iter_rows(stream, format, CITATION_COLUMNS):
        report.edges_read += 1
        if isinstance(row, RowError):
            report.reject(line, row.code, str(row))
            continue
        citing_id, cited_id = _id(row.get('citing_id')), _id(row.get('cited_id'))
        if not citing_id.strip() or not cited_id.strip():
            report.reject(line, 'MissingField', 'citing_id and cited_id are required')
            continue
        if citing_id != citing_id.strip() or cited_id != cited_id.strip():
            report.reject(
                line, 'InvalidValue', f'{citing_id!r} -> {cited_id!r}: ids must not carry surrounding whitespace'
            )
            continue
        edge = CitationEdge(citing_id, cited_id)
        if citing_id == cited_id:
            report.reject(line, 'SelfLoop', f'{citing_id} cites itself')
            continue
        if edge in seen:
            report.reject(line, 'DuplicateEdge', f'duplicate citation {citing_id} -> {cited_id}')
            continue
        seen.add(edge)
        edges.append(edge)
        report.edge_lines[edge] = line

    _finish('citations', report, strict, accepted=len(edges))
    return edges, report


def _finish(kind, report, strict, accepted):
    read = report.records_read or report.edges_read
    logger.info(f"Parsed {kind}: {read} read, {accepted} accepted, {len(report.rejected)} rejected")
    for rejection in report.rejected:
        logger.warning(f"{kind} line {rejection.line}: {rejection.code}: {rejection.message}")
    if strict and report.rejected:
        raise StrictRejection(f'{len(report.rejected)} {kind} row(s) rejected in strict mode', report=report)


def _format_for(path):
    return 'jsonl' if Path(path).suffix.lower() in ('.jsonl', '.ndjson') else 'csv'


def _open_text(path, mode='r'):
    try:
        return open(path, mode, encoding='utf-8', newline='')
    except OSError as e:
        raise Io(f'Cannot open {path}: {e}') from None


def load_corpus(pubs_path, cites_path, *, strict=False, require_classification=False,
                year_min=None, year_max=None):
    """Read both files and build the Corpus; returns (Corpus, IngestReport)"""
    with _open_text(pubs_path) as stream:
        records, pub_report = parse_publications(
            stream, _format_for(pubs_path), strict=strict,
            require_classification=require_classification, year_min=year_min, year_max=year_max,
        )
    with _open_text(cites_path) as stream:
        edges, cite_report = parse_citations(stream, _format_for(cites_path), strict=strict)

    # Citations whose endpoints were filtered or rejected cannot be indexed.
    known = {record.pub_id for record in records}
    kept = []
    for edge in edges:
        if edge.citing_id in known and edge.cited_id in known:
            kept.append(edge)
        else:
            cite_report.reject(
                cite_report.edge_lines.get(edge, 0),
                'DanglingEdge',
                f'{edge.citing_id} -> {edge.cited_id} references an unknown publication',
            )
    if strict and len(kept) != len(edges):
        raise StrictRejection('citations reference unknown publications', report=pub_report.merge(cite_report))

    return build_corpus(records, kept), pub_report.merge(cite_report)


def _record_row(record):
    return {
        'pub_id': record.pub_id,
        'inst_id': record.inst_id,
        'year': record.year,
        'doc_type': record.doc_type.value if record.doc_type else '',
        'field_code': record.field_code or '',
        'author_ids': AUTHOR_SEPARATOR.join(sorted(record.author_ids)),
        'external': 'true' if record.external else 'false',
        'title': record.title or '',
    }


def write_publications(records, stream, format='csv'):
    rows = [_record_row(r) for r in sorted(records, key=lambda r: r.pub_id)]
    if format == 'csv':
        writer = csv.DictWriter(stream, fieldnames=PUBLICATION_COLUMNS, lineterminator='\n')
        writer.writeheader()
        writer.writerows(rows)
    else:
        for row in rows:
            row['author_ids'] = sorted(row['author_ids'].split(AUTHOR_SEPARATOR))
            row['external'] = row['external'] == 'true'
            stream.write(json.dumps(row, sort_keys=True) + '\n')


def write_citations(edges, stream, format='csv'):
    ordered = sorted(edges)
    if format == 'csv':
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(CITATION_COLUMNS)
        writer.writerows((e.citing_id, e.cited_id) for e in ordered)
    else:
        for e in ordered:
            stream.write(json.dumps({'citing_id': e.citing_id, 'cited_id': e.cited_id}, sort_keys=True) + '\n')


def save_corpus(corpus, pubs_path, cites_path):
    with _open_text(pubs_path, 'w') as stream:
        write_publications(corpus.publications.values(), stream, _format_for(pubs_path))
    with _open_text(cites_path, 'w') as stream:
        write_citations(corpus.edges, stream, _format_for(cites_path))
