import json
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from analytics.baseline import BaselineModel, fit_baseline
from analytics.config import AuditConfig
from analytics.metrics import fwci, h_index, rank_citation_curve, self_citation_stats
from analytics.verdict import VerdictLevel, expected_fwci, run_assessment
from corpus.ingest import load_corpus
from simulation.calibration import calibrate, parse_profile
from simulation.exceptions import InfeasibleTarget, InvalidParams
from simulation.generator import (
    SimParams,
    Strategy,
    _pick_strategic,
    band_census,
    fair_citation_counts,
    generate,
    ranked_citation_counts,
    write_simulation,
)

SMALL = SimParams(n_papers=200, n_authors=60, cited_share=0.8, target_h=15, seed=3)


class StrategyTests(SimpleTestCase):
    def test_parse_aliases(self):
        self.assertIs(Strategy.parse('fair'), Strategy.FAIR)
        self.assertIs(Strategy.parse('random-self'), Strategy.RANDOM_SELF)
        self.assertIs(Strategy.parse('strategic'), Strategy.STRATEGIC_SELF)
        with self.assertRaises(ValueError):
            Strategy.parse('greedy')


class SimParamsTests(SimpleTestCase):
    def test_invalid_params(self):
        with self.assertRaises(InvalidParams):
            SimParams(n_papers=0).validate()
        with self.assertRaises(InvalidParams):
            SimParams(n_papers=10, band_above=-1).validate()
        with self.assertRaises(InvalidParams):
            SimParams(n_papers=10, strategy=Strategy.STRATEGIC_SELF, self_budget=0).validate()

    def test_fair_ignores_budget(self):
        corpus, truth = generate(replace(SMALL, self_budget=5))
        self.assertEqual(truth.injected_ids, frozenset())
        self.assertEqual(truth.injected_self_edges, frozenset())


class FairCountsTests(SimpleTestCase):
    def test_deterministic_and_anchored(self):
        counts = fair_citation_counts(SMALL)
        self.assertEqual(counts.tolist(), fair_citation_counts(SMALL).tolist())
        self.assertEqual(len(counts), 200)
        self.assertTrue(np.all(counts >= 0))
        self.assertEqual(h_index(counts.tolist()), 15)
        self.assertEqual(int(np.count_nonzero(counts)), 160)

    def test_counts_stay_within_one_of_expectation(self):
        ranked = ranked_citation_counts(SMALL)
        expected = 15 * (15 / np.arange(1, 161)) ** SMALL.base_exponent
        self.assertTrue(np.all(np.abs(ranked[:160] - expected) < 1))
        self.assertEqual(int(ranked[14]), 15)

    def test_monotone_in_cited_share(self):
        previous = fair_citation_counts(replace(SMALL, cited_share=0.0))
        self.assertEqual(int(previous.sum()), 0)
        for share in (0.2, 0.4, 0.6, 0.8, 1.0):
            counts = fair_citation_counts(replace(SMALL, cited_share=share))
            self.assertTrue(np.all(counts >= previous))
            previous = counts

    def test_steeper_exponent_moves_citations_into_the_head(self):
        shallow = ranked_citation_counts(replace(SMALL, base_exponent=1.3))
        steep = ranked_citation_counts(replace(SMALL, base_exponent=2.5))
        self.assertGreater(steep[0], shallow[0])
        self.assertGreater(shallow[15:].sum(), steep[15:].sum())
        self.assertEqual(h_index(shallow.tolist()), h_index(steep.tolist()))


class GenerateTests(SimpleTestCase):
    def test_same_seed_same_corpus(self):
        first, truth = generate(SMALL)
        second, truth_again = generate(SMALL)
        self.assertEqual(first, second)
        self.assertEqual(truth, truth_again)
        other, _ = generate(replace(SMALL, seed=4))
        self.assertNotEqual(first, other)

    def test_fair_corpus_matches_counts(self):
        corpus, truth = generate(SMALL)
        counts = fair_citation_counts(SMALL)
        curve = rank_citation_curve(corpus, 'SIM')
        self.assertEqual(curve.citations.tolist(), sorted(counts.astype(float).tolist(), reverse=True))
        self.assertEqual(truth.pre_injection_h, h_index(counts.tolist()))
        self.assertEqual(len(corpus.institution_records('SIM')), 200)

    def test_fair_citing_authors_are_external(self):
        corpus, _ = generate(SMALL)
        targets = [r.pub_id for r in corpus.institution_records('SIM') if corpus.citing(r.pub_id)]
        self.assertEqual(self_citation_stats(corpus, targets).self_citing_docs, 0)

    def test_strategic_injections(self):
        params = replace(SMALL, strategy=Strategy.STRATEGIC_SELF, self_budget=2)
        corpus, truth = generate(params)
        fair_total = int(fair_citation_counts(params).sum())
        authors = {a for r in corpus.institution_records('SIM') for a in r.author_ids}
        self.assertEqual(len(corpus.edges), fair_total + 2 * len(authors))
        self.assertEqual(len(truth.injected_self_edges), 2 * len(authors))
        self.assertTrue(truth.injected_ids)
        for edge in truth.injected_self_edges:
            self.assertIn(edge, corpus.edges)
            citing, cited = corpus.get(edge.citing_id), corpus.get(edge.cited_id)
            self.assertTrue(citing.author_ids & cited.author_ids)
            self.assertIn(edge.cited_id, truth.injected_ids)

    def test_random_self_injections(self):
        params = replace(SMALL, strategy=Strategy.RANDOM_SELF, self_budget=1)
        corpus, truth = generate(params)
        authors = {a for r in corpus.institution_records('SIM') for a in r.author_ids}
        self.assertEqual(len(truth.injected_self_edges), len(authors))
        self.assertTrue(truth.injected_ids)

    def test_author_rounds_never_lower_h(self):
        corpus, truth = generate(replace(SMALL, strategy=Strategy.STRATEGIC_SELF, self_budget=3))
        self.assertGreaterEqual(h_index(rank_citation_curve(corpus, 'SIM')), truth.pre_injection_h)

    def test_band_fill_lifts_papers_into_the_band(self):
        params = replace(SMALL, strategy=Strategy.STRATEGIC_SELF, band_target=20, band_below=2, band_above=5)
        fair_corpus, truth = generate(SMALL)
        strategic, strategic_truth = generate(params)
        h = truth.pre_injection_h
        self.assertEqual(strategic_truth.pre_injection_h, h)
        self.assertEqual(len(strategic_truth.injected_ids), 20)
        for pub_id in strategic_truth.injected_ids:
            self.assertTrue(h - 2 <= len(strategic.citing(pub_id)) <= h + 5)
            self.assertLess(len(fair_corpus.citing(pub_id)), h - 2)
        for edge in strategic_truth.injected_self_edges:
            self.assertTrue(strategic.get(edge.citing_id).author_ids & strategic.get(edge.cited_id).author_ids)
        self.assertEqual(
            band_census(strategic, 'SIM', h - 2, h + 5),
            band_census(fair_corpus, 'SIM', h - 2, h + 5) + 20,
        )
        self.assertGreater(band_census(strategic, 'SIM', h, h + 5), band_census(fair_corpus, 'SIM', h, h + 5))

    def test_band_target_needs_strategic(self):
        with self.assertRaises(InvalidParams):
            replace(SMALL, strategy=Strategy.RANDOM_SELF, self_budget=1, band_target=5).validate()
        with self.assertRaises(InvalidParams):
            replace(SMALL, strategy=Strategy.STRATEGIC_SELF, band_target=0).validate()
        replace(SMALL, strategy=Strategy.STRATEGIC_SELF, band_target=5).validate()

    def test_written_files_reload(self):
        params = replace(SMALL, strategy=Strategy.STRATEGIC_SELF, self_budget=1)
        corpus, truth = generate(params)
        with tempfile.TemporaryDirectory() as tmp:
            out = write_simulation(tmp, corpus, truth, params)
            self.assertEqual(sorted(p.name for p in Path(out).iterdir()),
                             ['citations.csv', 'ground_truth.json', 'publications.csv'])
            loaded, report = load_corpus(out / 'publications.csv', out / 'citations.csv')
            self.assertTrue(report.ok)
            self.assertEqual(loaded, corpus)
            payload = json.loads((out / 'ground_truth.json').read_text(encoding='utf-8'))
            self.assertEqual(payload['injected_ids'], sorted(truth.injected_ids))
            self.assertEqual(payload['params']['strategy'], 'strategic_self')


class CalibrationTests(SimpleTestCase):
    def assertMatchesProfile(self, profile, params):
        papers, citations, h = profile
        counts = fair_citation_counts(params)
        self.assertEqual(len(counts), papers)
        self.assertLessEqual(abs(int(counts.sum()) - citations), 0.02 * citations)
        self.assertLessEqual(abs(h_index(counts.tolist()) - h), 1)

    def test_parse_profile(self):
        self.assertEqual(parse_profile('939,6205,40'), (939, 6205, 40))
        with self.assertRaises(InfeasibleTarget):
            parse_profile('939;6205;40')

    def test_small_university_profile(self):
        profile = (939, 6205, 40)
        self.assertMatchesProfile(profile, calibrate(profile, seed=7))

    def test_large_university_profile(self):
        profile = (1928, 7767, 36)
        self.assertMatchesProfile(profile, calibrate(profile, seed=1))

    def test_single_uncited_paper(self):
        params = calibrate((1, 0, 0))
        corpus, truth = generate(params)
        self.assertEqual(len(corpus.institution_records('SIM')), 1)
        self.assertEqual(len(corpus.edges), 0)
        self.assertEqual(truth.pre_injection_h, 0)

    def test_inconsistent_profile(self):
        with self.assertRaises(InfeasibleTarget):
            calibrate((10, 50, 20))
        with self.assertRaises(InfeasibleTarget):
            calibrate((100, 50, 10))


class StrategicPickTests(SimpleTestCase):
    def test_band_edges_are_inclusive(self):
        params = replace(SMALL, band_below=2, band_above=5)
        counts = np.array([13, 30, 20, 9])
        self.assertEqual(_pick_strategic([0, 1], counts, 15, params), 0)
        self.assertEqual(_pick_strategic([1, 2], counts, 15, params), 2)

    def test_closest_paper_below_the_band(self):
        params = replace(SMALL, band_below=2, band_above=5)
        counts = np.array([12, 30, 9])
        self.assertEqual(_pick_strategic([0, 1, 2], counts, 15, params), 0)
        self.assertIsNone(_pick_strategic([1], counts, 15, params))


MONTE_CARLO = SimParams(n_papers=300, n_authors=100, target_h=25, cited_share=0.3, self_budget=3)


def hump_found(params):
    corpus, _ = generate(params)
    return run_assessment(corpus, params.inst_id, AuditConfig()).verdict.hump is not None


class DiscriminationTests(SimpleTestCase):
    """Fair against strategic corpora drawn from the same parameters"""

    def test_true_and_false_positive_rates(self):
        seeds = range(100)
        false_positives = sum(hump_found(replace(MONTE_CARLO, seed=seed)) for seed in seeds)
        true_positives = sum(
            hump_found(replace(MONTE_CARLO, seed=seed, strategy=Strategy.STRATEGIC_SELF)) for seed in seeds
        )
        self.assertLessEqual(false_positives / 100, 0.05)
        self.assertGreaterEqual(true_positives / 100, 0.9)

    def test_fair_members_score_their_expected_fwci(self):
        for seed in range(3):
            corpus, _ = generate(calibrate((939, 6205, 40), seed=seed))
            curve = rank_citation_curve(corpus, 'SIM')
            h = h_index(curve)
            fit = fit_baseline(curve, AuditConfig(), h=h)
            members = curve.pub_ids[h - 6:h + 15]
            result = fwci(corpus, members)
            expected = expected_fwci(corpus, curve, fit, result)
            self.assertAlmostEqual(result.set_mean / expected, 1.0, delta=0.1)

    def test_fair_baseline_tracks_the_generating_law(self):
        for seed in range(20):
            corpus, _ = generate(replace(MONTE_CARLO, seed=seed))
            curve = rank_citation_curve(corpus, 'SIM')
            h = h_index(curve)
            fit = fit_baseline(curve, AuditConfig(), h=h)
            self.assertEqual(h, 25)
            self.assertEqual(fit.model, BaselineModel.POWER_LAW)
            self.assertAlmostEqual(fit.params['exponent'], MONTE_CARLO.base_exponent, delta=0.05)
            self.assertAlmostEqual(fit.fitted[h - 1] / h, 1.0, delta=0.05)


class RandomSelfControlTests(SimpleTestCase):
    def test_random_self_citation_rarely_looks_like_a_hump(self):
        detections = sum(
            hump_found(replace(MONTE_CARLO, seed=seed, strategy=Strategy.RANDOM_SELF)) for seed in range(100)
        )
        self.assertLessEqual(detections / 100, 0.1)


class HumpMembershipTests(SimpleTestCase):
    """Band fill calibrated to a 939-paper and a 1928-paper profile, ten seeds each"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.small = [cls.assess(calibrate((939, 6205, 40), seed=seed), 38, 0) for seed in range(10)]
        cls.large = [cls.assess(calibrate((1928, 7767, 36), seed=seed), 42, 2) for seed in range(10)]

    @staticmethod
    def assess(params, band_target, band_below):
        params = replace(
            params, strategy=Strategy.STRATEGIC_SELF, band_target=band_target, band_below=band_below, band_above=5,
        )
        corpus, _ = generate(params)
        return run_assessment(corpus, 'SIM', AuditConfig())

    def test_member_counts(self):
        for assessment in self.small:
            self.assertIsNotNone(assessment.verdict.hump)
            self.assertLessEqual(abs(assessment.verdict.hump.size - 39), 3)
        for assessment in self.large:
            self.assertIsNotNone(assessment.verdict.hump)
            self.assertLessEqual(abs(assessment.verdict.hump.size - 45), 3)

    def test_large_profile_band_reaches_below_h(self):
        below = sum(
            1 for assessment in self.large
            if assessment.verdict.hump and assessment.verdict.hump.citation_band[0] < assessment.summary.h_index
        )
        self.assertGreaterEqual(below, 8)

    def test_band_fill_self_citations_flag_at_a_lower_threshold(self):
        assessment = self.small[0]
        self.assertGreater(assessment.verdict.self_cite.rate, 0.2)
        self.assertNotEqual(assessment.verdict.level, VerdictLevel.NO_ANOMALY)
