from django.core.management.base import BaseCommand, CommandError
from pathlib import Path
import logging

from analytics.config import load_config
from analytics.exceptions import AnalysisError
from corpus.exceptions import CorpusError, IngestError
from reports.audit import audit_all, audit_institution, read_corpus, save_audit, write_bytes
from reports.exceptions import ReportError
from reports.report import emit_report, emit_summary, make_provenance, simulation_seed, summary_rows

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Audit the rank-citation curve of one institution (or all of them) for a humpback around the h-paper'

    def add_arguments(self, parser):
        parser.add_argument('--pubs', required=True, help='Publications file (.csv or .jsonl)')
        parser.add_argument('--cites', required=True, help='Citations file (.csv or .jsonl)')
        target = parser.add_mutually_exclusive_group(required=True)
        target.add_argument('--institution', help='Institution id to audit')
        target.add_argument(
            '--all-institutions',
            action='store_true',
            help='Audit every institution in the corpus; --out is then a directory',
        )
        parser.add_argument('--config', default=None, help='key = value detector config file')
        parser.add_argument('--out', default=None, help='JSON report path (default: standard output)')
        parser.add_argument('--md', default=None, help='Markdown report path')
        parser.add_argument('--svg', default=None, help='Rank-citation curve SVG path')
        parser.add_argument('--log-y', action='store_true', help='Logarithmic citation axis in the SVG')
        parser.add_argument('--strict', action='store_true', help='Fail on the first rejected input row')
        parser.add_argument(
            '--require-classification',
            action='store_true',
            help='Reject institutional publications without doc_type and field_code',
        )
        parser.add_argument('--save', action='store_true', help='Store the report in the audit history database')
        parser.add_argument('--workers', type=int, default=None, help='Threads for --all-institutions')

    def handle(self, *args, **options):
        if options['all_institutions'] and not options['out']:
            raise CommandError('--all-institutions needs --out DIR', returncode=2)

        try:
            config = load_config(options['config'])
            corpus, ingest_report = read_corpus(
                options['pubs'], options['cites'], config,
                strict=options['strict'],
                require_classification=options['require_classification'],
            )
            provenance = make_provenance(
                {'publications': options['pubs'], 'citations': options['cites']},
                seed=simulation_seed(options['pubs']),
            )
            if ingest_report.warnings:
                self.stderr.write(self.style.WARNING(f'{len(ingest_report.warnings)} ingest warning(s), see log'))
            if ingest_report.rejected:
                self.stderr.write(self.style.WARNING(f'{len(ingest_report.rejected)} input row(s) rejected'))

            if options['all_institutions']:
                self.analyze_all(corpus, config, provenance, options)
            else:
                self.analyze_one(corpus, options['institution'], config, provenance, options)
        except (AnalysisError, CorpusError, IngestError, ReportError) as e:
            raise CommandError(f'{e.code}: {e}', returncode=1)
        except OSError as e:
            raise CommandError(f'Io: {e}', returncode=1)

    def analyze_one(self, corpus, inst_id, config, provenance, options):
        output = audit_institution(corpus, inst_id, config, provenance, log_y=options['log_y'])
        payload = emit_report(output.report, 'json')
        if options['out']:
            write_bytes(options['out'], payload)
        else:
            self.stdout.write(payload.decode('utf-8'), ending='')
        if options['md']:
            write_bytes(options['md'], emit_report(output.report, 'markdown'))
        if options['svg']:
            write_bytes(options['svg'], output.svg)
        if options['save']:
            audit = save_audit(output)
            self.stderr.write(f'Saved as audit #{audit.id}')

        verdict = output.report.verdict
        self.stderr.write(
            self.style.SUCCESS(f'{inst_id}: {verdict["level"]} (score {verdict["score"]:.3f})')
        )

    def analyze_all(self, corpus, config, provenance, options):
        out_dir = Path(options['out'])
        outputs, failures = audit_all(corpus, config, provenance, workers=options['workers'], log_y=options['log_y'])
        for inst_id, output in sorted(outputs.items()):
            stem = _safe_name(inst_id)
            write_bytes(out_dir / f'{stem}.json', emit_report(output.report, 'json'))
            write_bytes(out_dir / f'{stem}.md', emit_report(output.report, 'markdown'))
            write_bytes(out_dir / f'{stem}.svg', output.svg)
            if options['save']:
                save_audit(output)
            self.stderr.write(f'{inst_id}: {output.report.level}')

        rows = summary_rows(
            (inst_id, output.report.metrics, output.report.level) for inst_id, output in outputs.items()
        )
        write_bytes(out_dir / 'summary.json', emit_summary(rows, 'json'))
        write_bytes(out_dir / 'summary.md', emit_summary(rows, 'markdown'))

        for inst_id, error in sorted(failures.items()):
            self.stderr.write(self.style.ERROR(f'{inst_id}: {error.code}: {error}'))
        if failures:
            raise CommandError(f'{len(failures)} institution(s) could not be audited', returncode=1)
        self.stderr.write(self.style.SUCCESS(f'Audited {len(outputs)} institution(s) into {out_dir}'))


def _safe_name(inst_id):
    return ''.join(ch if ch.isalnum() or ch in '-_.' else '_' for ch in inst_id)
