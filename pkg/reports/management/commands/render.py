from django.core.management.base import BaseCommand, CommandError
import logging

from reports.audit import write_bytes
from reports.exceptions import ReportError
from reports.report import figure_inputs, load_report
from reports.svg import render_curve_svg

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Redraw the rank-citation curve stored in a JSON audit report'

    def add_arguments(self, parser):
        parser.add_argument('--report', required=True, help='JSON report written by analyze')
        parser.add_argument('--svg', default=None, help='Output SVG path (default: standard output)')
        parser.add_argument('--log-y', action='store_true', help='Logarithmic citation axis')
        parser.add_argument('--no-baseline', action='store_true', help='Leave the fitted baseline out')

    def handle(self, *args, **options):
        try:
            data = load_report(options['report'])
            curve, fit, hump, _ = figure_inputs(data)
            svg = render_curve_svg(
                curve,
                fit=None if options['no_baseline'] else fit,
                hump=hump,
                log_y=options['log_y'],
                title=f'{data["inst_id"]}: {data["verdict"]["level"]}',
            )
            if options['svg']:
                write_bytes(options['svg'], svg)
            else:
                self.stdout.write(svg.decode('utf-8'), ending='')
        except ReportError as e:
            raise CommandError(f'{e.code}: {e}', returncode=1)
        except OSError as e:
            raise CommandError(f'Io: {e}', returncode=1)
