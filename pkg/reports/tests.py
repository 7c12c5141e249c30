import io
import json
import shutil
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from analytics.config import AuditConfig, load_config
from analytics.metrics import RankCitationCurve
from analytics.tests import corpus_from_counts, plateau_counts, power_law_counts, record
from analytics.verdict import run_assessment
from corpus.ingest import load_corpus, save_corpus
from corpus.records import CitationEdge, build_corpus
from reports.audit import audit_all, audit_institution
from reports.cli import main
from reports.exceptions import EmptyCurve, InvalidReport
from reports.models import InstitutionAudit
from reports.report import (
    AnalysisReport,
    build_report,
    emit_report,
    emit_summary,
    figure_inputs,
    load_report,
    make_provenance,
    simulation_seed,
    summary_rows,
    without_timestamp,
)
from reports.svg import render_curve_svg

FIXED_TIME = '2026-01-01T00:00:00+00:00'


def audit_report(counts, self_citations=None, generated_at=FIXED_TIME):
    config = AuditConfig()
    assessment = run_assessment(corpus_from_counts(counts, self_citations), 'U1', config)
    return assessment, build_report(assessment, config, make_provenance(), generated_at=generated_at)


class SvgTests(SimpleTestCase):
    def test_three_point_curve(self):
        svg = render_curve_svg(RankCitationCurve.from_counts({'A': 3, 'B': 2, 'C': 1})).decode('utf-8')
        self.assertTrue(svg.startswith('<?xml'))
        self.assertIn('<svg version="1.1"', svg)
        self.assertEqual(svg.count('<circle'), 3)
        self.assertIn('>Rank</text>', svg)
        self.assertIn('>Citations</text>', svg)
        self.assertNotIn('class="hump"', svg)
        self.assertTrue(svg.rstrip().endswith('</svg>'))

    def test_empty_curve(self):
        with self.assertRaises(EmptyCurve):
            render_curve_svg(RankCitationCurve(()))

    def test_single_point(self):
        svg = render_curve_svg(RankCitationCurve.from_counts({'A': 0})).decode('utf-8')
        self.assertEqual(svg.count('<circle'), 1)

    def test_hump_and_baseline_drawn(self):
        assessment, _ = audit_report(plateau_counts())
        svg = render_curve_svg(assessment.curve, assessment.fit, assessment.verdict.hump, log_y=True).decode('utf-8')
        self.assertIn('class="hump"', svg)
        self.assertIn('class="h-marker"', svg)
        self.assertIn('class="baseline"', svg)
        self.assertIn('Citations (log scale)', svg)

    def test_deterministic(self):
        assessment, _ = audit_report(plateau_counts())
        first = render_curve_svg(assessment.curve, assessment.fit, assessment.verdict.hump)
        second = render_curve_svg(assessment.curve, assessment.fit, assessment.verdict.hump)
        self.assertEqual(first, second)


class ReportTests(SimpleTestCase):
    def test_no_anomaly_json(self):
        _, report = audit_report(power_law_counts(400, 3000.0, 1.1))
        data = json.loads(emit_report(report, 'json'))
        self.assertEqual(data['verdict']['level'], 'no_anomaly')
        self.assertIsNone(data['verdict']['hump'])
        self.assertEqual(data['schema_version'], '1.0')
        self.assertEqual(data['config']['z_on'], 2.0)
        self.assertEqual(len(data['curve']), 400)

    def test_same_report_same_bytes(self):
        _, report = audit_report(plateau_counts())
        self.assertEqual(emit_report(report, 'json'), emit_report(report, 'json'))
        _, later = audit_report(plateau_counts(), generated_at='2026-06-30T12:00:00+00:00')
        self.assertNotEqual(emit_report(report, 'json'), emit_report(later, 'json'))
        self.assertEqual(without_timestamp(emit_report(report, 'json')), without_timestamp(emit_report(later, 'json')))

    def test_keys_sorted(self):
        _, report = audit_report(plateau_counts())
        text = emit_report(report, 'json').decode('utf-8')
        self.assertEqual(text, json.dumps(json.loads(text), sort_keys=True, indent=2, ensure_ascii=False) + '\n')

    def test_markdown_rounding(self):
        report = AnalysisReport(
            inst_id='KRE',
            metrics={'papers': 939, 'total_citations': 6205, 'h_index': 40, 'h_core_size': 40,
                     'core_citations': 3000, 'tail_citations': 3205, 'tail_core_ratio': 1.068333},
            verdict={
                'level': 'anomalous_pattern',
                'score': 0.97,
                'hump': {'rank_interval': [41, 79], 'citation_band': [40, 45], 'member_ids': [], 'members': 39,
                         'excess_mass': 120.5, 'peak_z': 6.1, 'contains_h': False},
                'self_cite': {'targets': 39, 'citing_docs': 667, 'self_citing_docs': 356, 'rate': 356 / 667,
                              'level': 'author'},
                'fwci': {'per_pub': {}, 'set_mean': 3.3512, 'baseline_cells': {}, 'uncovered': []},
                'median_self_cite_rate': 0.12,
                'notes': ['note'],
            },
            config_echo=AuditConfig().as_dict(),
            provenance=make_provenance(),
            generated_at=FIXED_TIME,
        )
        markdown = emit_report(report, 'markdown').decode('utf-8')
        self.assertIn('- self-citations: 53.4% (356 of 667 citing documents, author level)', markdown)
        self.assertIn('- FWCI: 3.35', markdown)
        self.assertIn('- ranks: 41-79 (39 publications)', markdown)
        self.assertIn('| 939 | 6205 | 40 |', markdown)

    def test_anomalous_markdown(self):
        _, report = audit_report(plateau_counts(), {index: 28 for index in range(39, 75)})
        markdown = emit_report(report, 'markdown').decode('utf-8')
        self.assertIn('level: anomalous_pattern', markdown)
        self.assertIn('- self-citations: ', markdown)

    def test_unknown_format(self):
        _, report = audit_report(power_law_counts(60))
        with self.assertRaises(ValueError):
            emit_report(report, 'html')

    def test_figure_rebuilt_from_report(self):
        assessment, report = audit_report(plateau_counts())
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'report.json'
            path.write_bytes(emit_report(report, 'json'))
            curve, fit, hump, h = figure_inputs(load_report(path))
        self.assertEqual(curve, assessment.curve)
        self.assertEqual(fit.fitted, assessment.fit.fitted)
        self.assertEqual(hump.rank_interval, assessment.verdict.hump.rank_interval)
        self.assertEqual(h, report.metrics['h_index'])
        self.assertEqual(
            render_curve_svg(curve, fit, hump),
            render_curve_svg(assessment.curve, assessment.fit, assessment.verdict.hump),
        )

    def test_invalid_report_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bad.json'
            path.write_text('{"hello": 1}', encoding='utf-8')
            with self.assertRaises(InvalidReport):
                load_report(path)
            with self.assertRaises(InvalidReport):
                load_report(Path(tmp) / 'missing.json')

    def test_malformed_report_content(self):
        _, report = audit_report(plateau_counts())
        good = report.as_dict()
        broken = [
            {**good, 'curve': [[1, 'A']]},
            {**good, 'curve': [[1, 'A', 'many']]},
            {**good, 'verdict': {**good['verdict'], 'hump': {'rank_interval': [1, 2]}}},
            {**good, 'baseline': {'model': 'spline'}},
        ]
        for data in broken:
            with self.assertRaises(InvalidReport):
                figure_inputs(data)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'r.json'
            path.write_text(json.dumps({**good, 'metrics': {'papers': 400}}), encoding='utf-8')
            with self.assertRaises(InvalidReport):
                load_report(path)

    def test_render_exits_one_on_malformed_curve(self):
        _, report = audit_report(plateau_counts())
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'r.json'
            path.write_text(json.dumps({**report.as_dict(), 'curve': [[1, 'A']]}), encoding='utf-8')
            stderr = io.StringIO()
            with redirect_stdout(io.StringIO()), redirect_stderr(stderr):
                code = main(['render', '--report', str(path)])
        self.assertEqual(code, 1)
        self.assertIn('InvalidReport', stderr.getvalue())
        self.assertNotIn('Traceback', stderr.getvalue())

    def test_seed_read_from_ground_truth(self):
        with tempfile.TemporaryDirectory() as tmp:
            pubs = Path(tmp) / 'publications.csv'
            self.assertIsNone(simulation_seed(pubs))
            (Path(tmp) / 'ground_truth.json').write_text(json.dumps({'params': {'seed': 11}}), encoding='utf-8')
            self.assertEqual(simulation_seed(pubs), 11)
            (Path(tmp) / 'ground_truth.json').write_text('{"injected_ids": []}', encoding='utf-8')
            self.assertIsNone(simulation_seed(pubs))


def two_institution_corpus():
    """ZZ: five papers cited five times each (h 5); AA: three papers cited three times each (h 3)"""
    stubs = [record(f'X{j}', [f'x{j}'], inst='EXT', external=True) for j in range(5)]
    papers = [record(f'Z{i}', [f'z{i}'], inst='ZZ') for i in range(5)]
    papers += [record(f'A{i}', [f'a{i}'], inst='AA') for i in range(3)]
    edges = [CitationEdge(f'X{j}', f'Z{i}') for i in range(5) for j in range(5)]
    edges += [CitationEdge(f'X{j}', f'A{i}') for i in range(3) for j in range(3)]
    return build_corpus(stubs + papers, edges)


class SummaryTests(SimpleTestCase):
    def test_ranked_by_h_then_id(self):
        rows = summary_rows([
            ('B', {'h_index': 2, 'papers': 5, 'total_citations': 9}, 'no_anomaly'),
            ('A', {'h_index': 2, 'papers': 4, 'total_citations': 8}, None),
            ('C', {'h_index': 9, 'papers': 30, 'total_citations': 200}, 'humpback_detected'),
        ])
        self.assertEqual([(row['rank'], row['inst_id']) for row in rows], [(1, 'C'), (2, 'A'), (3, 'B')])
        markdown = emit_summary(rows, 'markdown').decode('utf-8')
        self.assertIn('| 1 | C | 30 | 200 | 9 | humpback_detected |', markdown)
        self.assertIn('| 2 | A | 4 | 8 | 2 | n/a |', markdown)
        with self.assertRaises(ValueError):
            emit_summary(rows, 'html')

    def test_commands_write_ranked_summaries(self):
        with tempfile.TemporaryDirectory() as tmp:
            pubs, cites = Path(tmp) / 'p.csv', Path(tmp) / 'c.csv'
            save_corpus(two_institution_corpus(), pubs, cites)

            stdout = io.StringIO()
            call_command('metrics', pubs=str(pubs), cites=str(cites), format='markdown', stdout=stdout)
            lines = [line for line in stdout.getvalue().splitlines() if line.startswith('| ') and line[2].isdigit()]
            self.assertEqual(lines, ['| 1 | ZZ | 5 | 25 | 5 | n/a |', '| 2 | AA | 3 | 9 | 3 | n/a |'])

            out = Path(tmp) / 'batch'
            call_command('analyze', pubs=str(pubs), cites=str(cites), all_institutions=True, out=str(out),
                         stderr=io.StringIO())
            summary = json.loads((out / 'summary.json').read_text(encoding='utf-8'))
            markdown = (out / 'summary.md').read_text(encoding='utf-8')
        rows = summary['institutions']
        self.assertEqual([(row['inst_id'], row['h_index']) for row in rows], [('ZZ', 5), ('AA', 3)])
        self.assertEqual({row['level'] for row in rows}, {'insufficient_data'})
        self.assertEqual(
            [(row['papers'], row['total_citations']) for row in rows], [(5, 25), (3, 9)]
        )
        self.assertIn('| 1 | ZZ | 5 | 25 | 5 | insufficient_data |', markdown)


class BatchAuditTests(SimpleTestCase):
    def test_all_institutions(self):
        corpus = corpus_from_counts(power_law_counts(80), inst='U1')
        outputs, failures = audit_all(corpus, AuditConfig(), workers=2)
        self.assertEqual(sorted(outputs), ['U1'])
        self.assertEqual(failures, {})
        single = audit_institution(corpus, 'U1', AuditConfig(), outputs['U1'].report.provenance)
        self.assertEqual(single.svg, outputs['U1'].svg)


class CommandTests(SimpleTestCase):
    """simulate -> analyze -> render on a band-filled corpus calibrated to a 939-paper profile"""

    SIMULATE = {'strategy': 'strategic', 'profile': '939,6205,40', 'seed': 7, 'band_target': 38, 'band_below': 0}

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = Path(tempfile.mkdtemp())
        cls.sim = cls.tmp / 'sim'
        call_command('simulate', out=str(cls.sim), stderr=io.StringIO(), **cls.SIMULATE)
        cls.pubs = str(cls.sim / 'publications.csv')
        cls.cites = str(cls.sim / 'citations.csv')
        cls.config = cls.tmp / 'audit.conf'
        cls.config.write_text('self_cite_threshold = 0.2\n', encoding='utf-8')

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp, ignore_errors=True)
        super().tearDownClass()

    def test_simulation_files(self):
        self.assertEqual(sorted(p.name for p in self.sim.iterdir()),
                         ['citations.csv', 'ground_truth.json', 'publications.csv'])
        truth = json.loads((self.sim / 'ground_truth.json').read_text(encoding='utf-8'))
        self.assertEqual(len(truth['injected_ids']), 38)
        self.assertEqual(truth['params']['n_papers'], 939)
        self.assertEqual(truth['params']['band_target'], 38)

    def test_simulation_rerun_is_identical(self):
        again = self.tmp / 'again'
        call_command('simulate', out=str(again), stderr=io.StringIO(), **self.SIMULATE)
        for name in ('publications.csv', 'citations.csv', 'ground_truth.json'):
            self.assertEqual((again / name).read_bytes(), (self.sim / name).read_bytes())

    def test_analyze_matches_in_process_assessment(self):
        out, md, svg = self.tmp / 'r.json', self.tmp / 'r.md', self.tmp / 'r.svg'
        call_command(
            'analyze', pubs=self.pubs, cites=self.cites, institution='SIM', config=str(self.config),
            out=str(out), md=str(md), svg=str(svg), stderr=io.StringIO(),
        )
        data = json.loads(out.read_text(encoding='utf-8'))
        corpus, _ = load_corpus(self.pubs, self.cites)
        expected = run_assessment(corpus, 'SIM', load_config(self.config))
        self.assertEqual(data['verdict'], json.loads(json.dumps(expected.verdict.as_dict())))
        self.assertEqual(data['verdict']['level'], 'anomalous_pattern')
        self.assertEqual(data['config']['self_cite_threshold'], 0.2)
        self.assertEqual(data['metrics']['papers'], 939)
        self.assertEqual(set(data['provenance']['inputs']), {'publications', 'citations'})
        self.assertEqual(data['provenance']['seed'], 7)
        markdown = md.read_text(encoding='utf-8')
        self.assertTrue(markdown.startswith('# Citation audit: SIM'))
        self.assertIn('- median self-citation rate of cited SIM publications: ', markdown)

        redrawn = self.tmp / 'redrawn.svg'
        call_command('render', report=str(out), svg=str(redrawn))
        self.assertEqual(redrawn.read_bytes(), svg.read_bytes())

    def test_analyze_to_stdout(self):
        stdout = io.StringIO()
        call_command('analyze', pubs=self.pubs, cites=self.cites, institution='SIM',
                     stdout=stdout, stderr=io.StringIO())
        self.assertEqual(json.loads(stdout.getvalue())['inst_id'], 'SIM')

    def test_metrics_summary(self):
        stdout = io.StringIO()
        call_command('metrics', pubs=self.pubs, cites=self.cites, stdout=stdout)
        summary = json.loads(stdout.getvalue())
        self.assertEqual([row['inst_id'] for row in summary['institutions']], ['SIM'])
        row = summary['institutions'][0]
        self.assertEqual((row['rank'], row['papers'], row['level']), (1, 939, None))
        self.assertGreaterEqual(row['h_index'], 40)

    def test_unknown_institution(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('analyze', pubs=self.pubs, cites=self.cites, institution='NOPE', stderr=io.StringIO())
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn('NoPublications', str(ctx.exception))

    def test_missing_input_file(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('analyze', pubs=str(self.tmp / 'none.csv'), cites=self.cites, institution='SIM')
        self.assertEqual(ctx.exception.returncode, 1)

    def test_batch_mode(self):
        out = self.tmp / 'batch'
        call_command('analyze', pubs=self.pubs, cites=self.cites, all_institutions=True, out=str(out),
                     stderr=io.StringIO())
        self.assertEqual(
            sorted(p.name for p in out.iterdir()), ['SIM.json', 'SIM.md', 'SIM.svg', 'summary.json', 'summary.md']
        )
        summary = json.loads((out / 'summary.json').read_text(encoding='utf-8'))
        report = json.loads((out / 'SIM.json').read_text(encoding='utf-8'))
        self.assertEqual(summary['institutions'][0]['level'], report['verdict']['level'])
        self.assertEqual(summary['institutions'][0]['h_index'], report['metrics']['h_index'])

    def test_cli_exit_codes(self):
        def run(argv):
            stdout, stderr = io.StringIO(), io.StringIO()
            with redirect_stdout(stdout), redirect_stderr(stderr):
                code = main(argv)
            return code, stdout.getvalue(), stderr.getvalue()

        code, stdout, _ = run(['analyze', '--pubs', self.pubs, '--cites', self.cites, '--institution', 'SIM'])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(stdout)['inst_id'], 'SIM')

        code, stdout, stderr = run(['analyze', '--pubs', self.pubs, '--cites', self.cites, '--institution', 'X'])
        self.assertEqual(code, 1)
        self.assertEqual(stdout, '')
        self.assertIn('NoPublications', stderr)
        self.assertNotIn('Traceback', stderr)


class CliTests(SimpleTestCase):
    def run_cli(self, argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = main(argv)
        return code, stdout.getvalue(), stderr.getvalue()

    def test_missing_required_flag(self):
        code, _, stderr = self.run_cli(['analyze', '--pubs', 'p.csv'])
        self.assertEqual(code, 2)
        self.assertIn('usage', stderr)

    def test_unknown_command(self):
        code, _, stderr = self.run_cli(['explode'])
        self.assertEqual(code, 2)
        self.assertIn('usage', stderr)
        self.assertEqual(self.run_cli([])[0], 2)

    def test_help(self):
        code, _, stderr = self.run_cli(['--help'])
        self.assertEqual(code, 0)
        self.assertIn('analyze', stderr)


class SavedAuditTests(TestCase):
    def test_save_flag_stores_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            corpus = corpus_from_counts(plateau_counts())
            pubs, cites = Path(tmp) / 'p.csv', Path(tmp) / 'c.csv'
            save_corpus(corpus, pubs, cites)
            call_command('analyze', pubs=str(pubs), cites=str(cites), institution='U1', out=str(Path(tmp) / 'r.json'),
                         save=True, stderr=io.StringIO())

        audit = InstitutionAudit.objects.get()
        self.assertEqual(audit.inst_id, 'U1')
        self.assertEqual(audit.level, 'humpback_detected')
        self.assertEqual(audit.h_index, 46)
        self.assertEqual(json.loads(audit.report_json)['inst_id'], 'U1')
        self.assertTrue(audit.svg.startswith('<?xml'))
