from django.core.management.base import BaseCommand, CommandError
from dataclasses import replace
import logging

from simulation.calibration import calibrate, parse_profile
from simulation.exceptions import SimulationError
from simulation.generator import Strategy, generate, write_simulation
from corpus.exceptions import CorpusError, IngestError

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Generate a synthetic institution corpus calibrated to a PAPERS,CITATIONS,H profile'

    def add_arguments(self, parser):
        parser.add_argument(
            '--strategy',
            default='fair',
            choices=['fair', 'random-self', 'strategic', 'strategic-self'],
            help='Self-citation behaviour of the simulated authors (default: fair)',
        )
        parser.add_argument('--profile', required=True, help='Target profile as PAPERS,CITATIONS,H')
        parser.add_argument('--seed', type=int, default=0, help='Random seed (default: 0)')
        parser.add_argument('--out', required=True, help='Output directory')
        parser.add_argument('--authors', type=int, default=300, help='Number of institutional authors (default: 300)')
        parser.add_argument(
            '--self-budget',
            type=int,
            default=3,
            help='Self-citing documents per author under random-self / strategic (default: 3)',
        )
        parser.add_argument(
            '--band-target',
            type=int,
            default=None,
            help='Strategic only: lift this many papers from below the band into it instead of author rounds',
        )
        parser.add_argument('--band-above', type=int, default=5, help='Strategic band upper offset from h (default: 5)')
        parser.add_argument('--band-below', type=int, default=2, help='Strategic band lower offset from h (default: 2)')
        parser.add_argument('--institution', default='SIM', help='Institution id of the simulated papers')

    def handle(self, *args, **options):
        strategy = Strategy.parse(options['strategy'])
        try:
            profile = parse_profile(options['profile'])
            params = calibrate(
                profile,
                seed=options['seed'],
                n_authors=options['authors'],
                inst_id=options['institution'],
            )
            if strategy is not Strategy.FAIR:
                params = replace(
                    params,
                    strategy=strategy,
                    self_budget=options['self_budget'],
                    band_target=options['band_target'],
                    band_above=options['band_above'],
                    band_below=options['band_below'],
                )
            corpus, truth = generate(params)
            out = write_simulation(options['out'], corpus, truth, params)
        except (SimulationError, CorpusError, IngestError) as e:
            raise CommandError(f'{e.code}: {e}', returncode=1)
        except OSError as e:
            raise CommandError(f'Io: {e}', returncode=1)

        self.stderr.write(
            self.style.SUCCESS(
                f'Wrote {strategy.value} corpus ({params.n_papers} papers, '
                f'{len(truth.injected_self_edges)} injected self-citations) to {out}'
            )
        )
