from django.core.management.base import BaseCommand, CommandError
import logging

from analytics.config import load_config
from analytics.exceptions import AnalysisError
from analytics.metrics import rank_citation_curve, summarize
from corpus.exceptions import CorpusError, IngestError
from reports.audit import read_corpus
from reports.report import REPORT_FORMATS, emit_summary, summary_rows

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Rank institutions by h-index with papers, citations and the h-core/tail split, without the detector'

    def add_arguments(self, parser):
        parser.add_argument('--pubs', required=True, help='Publications file (.csv or .jsonl)')
        parser.add_argument('--cites', required=True, help='Citations file (.csv or .jsonl)')
        parser.add_argument(
            '--institution',
            default=None,
            help='Institution id (default: every institution in the corpus)',
        )
        parser.add_argument('--config', default=None, help='key = value config file (year window)')
        parser.add_argument('--strict', action='store_true', help='Fail on the first rejected input row')
        parser.add_argument('--format', default='json', choices=REPORT_FORMATS, help='Output format (default: json)')

    def handle(self, *args, **options):
        try:
            config = load_config(options['config'])
            corpus, _ = read_corpus(options['pubs'], options['cites'], config, strict=options['strict'])
            institutions = [options['institution']] if options['institution'] else corpus.institutions()
            rows = summary_rows(
                (inst_id, summarize(rank_citation_curve(corpus, inst_id)).as_dict(), None)
                for inst_id in institutions
            )
        except (AnalysisError, CorpusError, IngestError) as e:
            raise CommandError(f'{e.code}: {e}', returncode=1)

        logger.info(f"Summarised {len(rows)} institution(s)")
        self.stdout.write(emit_summary(rows, options['format']).decode('utf-8'), ending='')
