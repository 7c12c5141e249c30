import math
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, override_settings

from analytics.baseline import BaselineFit, BaselineModel, exclusion_mask, fit_baseline
from analytics.config import AuditConfig, load_config
from analytics.exceptions import (
    ConfigError,
    EmptyTargetSet,
    NoCoveredMembers,
    NoPublications,
    RankMismatch,
    TooFewPoints,
)
from analytics.hump import HumpRegion, band_members, detect_hump, find_runs, hump_members, zscores
from analytics.metrics import (
    RankCitationCurve,
    baseline_expectations,
    core_tail_split,
    format_fwci,
    format_percent,
    fwci,
    h_index,
    median_self_citation_rate,
    rank_citation_curve,
    self_citation_by_pub,
    self_citation_stats,
    summarize,
)
from analytics.verdict import EXPERT_REVIEW_NOTE, VerdictLevel, assess, run_assessment, verdict_score
from corpus.exceptions import UnknownId
from corpus.records import CitationEdge, DocType, PublicationRecord, build_corpus


def record(pub_id, authors, inst='U1', year=2015, field_code='2200', external=False):
    return PublicationRecord(
        pub_id=pub_id,
        inst_id=inst,
        year=year,
        doc_type=DocType.ARTICLE,
        field_code=field_code,
        author_ids=frozenset(authors),
        external=external,
    )


def corpus_from_counts(counts, self_citations=None, inst='U1'):
    """Institution papers P0000.. with the given citation counts.

    Each paper has its own author. `self_citations` maps a paper index to how
    many of its citations come from documents by that author; the rest come
    from a shared pool of external citing documents.
    """
    self_citations = self_citations or {}
    records = [record(f'P{i:04d}', [f'A{i:04d}'], inst=inst) for i in range(len(counts))]
    edges = []
    pool = max([c - self_citations.get(i, 0) for i, c in enumerate(counts)] + [0])
    stubs = [record(f'X{j:05d}', [f'XA{j:05d}'], inst='EXT', external=True) for j in range(pool)]
    for i, count in enumerate(counts):
        own = self_citations.get(i, 0)
        for k in range(own):
            stub = record(f'S{i:04d}-{k:03d}', [f'A{i:04d}'], inst='EXT', external=True)
            stubs.append(stub)
            edges.append(CitationEdge(stub.pub_id, f'P{i:04d}'))
        for j in range(count - own):
            edges.append(CitationEdge(f'X{j:05d}', f'P{i:04d}'))
    return build_corpus(records + stubs, edges)


def curve_of(counts):
    return RankCitationCurve.from_counts({f'P{i:04d}': c for i, c in enumerate(counts)})


def power_law_counts(n=100, scale=1000.0, exponent=1.0):
    return [int(round(scale * r ** -exponent)) for r in range(1, n + 1)]


def plateau_counts(n=400, scale=3000.0, exponent=1.1, ranks=(40, 75), level=46):
    """Power-law decay with ranks in `ranks` flattened to `level` citations"""
    counts = power_law_counts(n, scale, exponent)
    lo, hi = ranks
    for r in range(lo, hi + 1):
        counts[r - 1] = level
    return counts


def brute_force_h(counts):
    return max(h for h in range(len(counts) + 1) if sum(1 for c in counts if c >= h) >= h)


class HIndexTests(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(h_index([]), 0)
        self.assertEqual(h_index([5, 5, 5, 5, 5]), 5)
        self.assertEqual(h_index([10, 8, 5, 4, 3]), 4)
        self.assertEqual(h_index([0, 0]), 0)

    def test_matches_brute_force_on_random_multisets(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            counts = rng.integers(0, 60, size=int(rng.integers(0, 40))).tolist()
            self.assertEqual(h_index(counts), brute_force_h(counts))
            self.assertEqual(h_index(curve_of(counts)), brute_force_h(counts))

    def test_order_invariant(self):
        rng = np.random.default_rng(7)
        counts = rng.integers(0, 30, size=50).tolist()
        self.assertEqual(h_index(counts), h_index(list(rng.permutation(counts))))


class CurveTests(SimpleTestCase):
    def test_sorted_descending(self):
        curve = RankCitationCurve.from_counts({'A': 3, 'B': 1, 'C': 0})
        self.assertEqual([(e.rank, e.pub_id, e.citations) for e in curve], [(1, 'A', 3), (2, 'B', 1), (3, 'C', 0)])

    def test_ties_by_id(self):
        curve = RankCitationCurve.from_counts({'B': 2, 'A': 2})
        self.assertEqual([(e.rank, e.pub_id, e.citations) for e in curve], [(1, 'A', 2), (2, 'B', 2)])

    def test_from_corpus(self):
        corpus = corpus_from_counts([1, 4, 0, 2])
        curve = rank_citation_curve(corpus, 'U1')
        self.assertEqual(curve.pub_ids, ['P0001', 'P0003', 'P0000', 'P0002'])
        self.assertEqual(curve.citations.tolist(), [4.0, 2.0, 1.0, 0.0])

    def test_unknown_institution(self):
        with self.assertRaises(NoPublications):
            rank_citation_curve(corpus_from_counts([1, 2]), 'U9')


class CoreTailTests(SimpleTestCase):
    def test_split(self):
        summary = core_tail_split(curve_of([3, 2, 1]), 2)
        self.assertEqual((summary.core_citations, summary.tail_citations), (5, 1))
        self.assertAlmostEqual(summary.tail_core_ratio, 0.2)

    def test_uncited(self):
        summary = core_tail_split(curve_of([0, 0]), 0)
        self.assertEqual(summary.h_core_size, 0)
        self.assertIsNone(summary.tail_core_ratio)

    def test_empty_tail(self):
        summary = summarize(curve_of([5, 5, 5, 5, 5]))
        self.assertEqual(summary.h_index, 5)
        self.assertEqual(summary.tail_citations, 0)
        self.assertEqual(summary.tail_core_ratio, 0.0)

    def test_sums_add_up(self):
        counts = power_law_counts(60)
        summary = summarize(curve_of(counts))
        self.assertEqual(summary.core_citations + summary.tail_citations, sum(counts))
        self.assertEqual(summary.papers, 60)


def hump_fixture(targets, citing_docs, self_docs):
    """`targets` papers cited by `citing_docs` distinct documents, `self_docs` of them by a target's author"""
    records = [record(f'T{i:02d}', [f'A{i:02d}']) for i in range(targets)]
    edges = []
    for j in range(citing_docs):
        cited = j % targets
        authors = [f'A{cited:02d}'] if j < self_docs else [f'EXT{j:04d}']
        stub = record(f'C{j:04d}', authors, inst='EXT', external=True)
        records.append(stub)
        edges.append(CitationEdge(stub.pub_id, f'T{cited:02d}'))
    return build_corpus(records, edges), [f'T{i:02d}' for i in range(targets)]


class SelfCitationTests(SimpleTestCase):
    def test_shared_author(self):
        corpus = build_corpus(
            [record('A', ['x']), record('B', ['x', 'y']), record('C', ['z'])],
            [CitationEdge('B', 'A'), CitationEdge('C', 'A')],
        )
        stats = self_citation_stats(corpus, {'A'})
        self.assertEqual((stats.citing_docs, stats.self_citing_docs), (2, 1))
        self.assertEqual(stats.rate, 0.5)

    def test_large_hump_rate(self):
        corpus, targets = hump_fixture(39, 667, 356)
        stats = self_citation_stats(corpus, targets)
        self.assertEqual((stats.citing_docs, stats.self_citing_docs), (667, 356))
        self.assertAlmostEqual(stats.rate, 0.5337, places=4)
        self.assertEqual(format_percent(stats.rate), '53.4%')

    def test_second_hump_rate(self):
        corpus, targets = hump_fixture(45, 721, 299)
        stats = self_citation_stats(corpus, targets)
        self.assertEqual(stats.self_citing_docs, 299)
        self.assertAlmostEqual(stats.rate, 0.4147, places=4)
        self.assertEqual(format_percent(stats.rate), '41.5%')

    def test_citing_document_counted_once(self):
        corpus = build_corpus(
            [record('A', ['x']), record('B', ['y']), record('C', ['x'])],
            [CitationEdge('C', 'A'), CitationEdge('C', 'B')],
        )
        stats = self_citation_stats(corpus, {'A', 'B'})
        self.assertEqual((stats.citing_docs, stats.self_citing_docs), (1, 1))

    def test_institution_level(self):
        corpus = build_corpus(
            [record('A', ['x'], inst='U1'), record('B', ['y'], inst='U1'), record('C', ['z'], inst='U2')],
            [CitationEdge('B', 'A'), CitationEdge('C', 'A')],
        )
        self.assertEqual(self_citation_stats(corpus, {'A'}).rate, 0.0)
        self.assertEqual(self_citation_stats(corpus, {'A'}, level='institution').rate, 0.5)

    def test_uncited_target_has_no_rate(self):
        corpus = build_corpus([record('A', ['x'])], [])
        self.assertIsNone(self_citation_stats(corpus, {'A'}).rate)

    def test_bad_targets(self):
        corpus = build_corpus([record('A', ['x'])], [])
        with self.assertRaises(EmptyTargetSet):
            self_citation_stats(corpus, set())
        with self.assertRaises(UnknownId):
            self_citation_stats(corpus, {'B'})

    def test_per_pub_and_median(self):
        corpus = build_corpus(
            [record('A', ['x']), record('B', ['y']), record('C', ['x']), record('D', ['w'])],
            [CitationEdge('C', 'A'), CitationEdge('D', 'A'), CitationEdge('D', 'B')],
        )
        rates = self_citation_by_pub(corpus, ['A', 'B', 'C'])
        self.assertEqual(rates, {'A': 0.5, 'B': 0.0, 'C': None})
        self.assertEqual(median_self_citation_rate(corpus, ['A', 'B', 'C']), 0.25)


def cell_fixture(target_count, target_citations, fillers):
    """One (field, year, doc type) cell: targets plus (count, citations) filler groups"""
    counts = [target_citations] * target_count
    for size, citations in fillers:
        counts += [citations] * size
    return corpus_from_counts(counts), [f'P{i:04d}' for i in range(target_count)]


class FwciTests(SimpleTestCase):
    def test_mean_cell_members_score_one(self):
        corpus = corpus_from_counts([4, 4, 4, 4, 4])
        result = fwci(corpus, ['P0000', 'P0001'])
        self.assertEqual(result.per_pub, {'P0000': 1.0, 'P0001': 1.0})
        self.assertEqual(result.set_mean, 1.0)

    def test_hand_mean(self):
        corpus = corpus_from_counts([6, 2, 4])
        result = fwci(corpus, ['P0000'], min_cell_size=3)
        self.assertAlmostEqual(result.per_pub['P0000'], 1.5)

    def test_first_hump_value(self):
        corpus, targets = cell_fixture(39, 67, [(86, 2), (15, 1)])
        result = fwci(corpus, targets)
        self.assertAlmostEqual(result.set_mean, 3.35, delta=1e-9)
        self.assertEqual(format_fwci(result.set_mean), '3.35')

    def test_second_hump_value(self):
        corpus, targets = cell_fixture(45, 108, [(140, 1), (15, 0)])
        result = fwci(corpus, targets)
        self.assertAlmostEqual(result.set_mean, 4.32, delta=1e-9)

    def test_cell_normalises_to_one(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            counts = rng.integers(0, 40, size=30).tolist()
            counts[0] += 1
            corpus = corpus_from_counts(counts)
            result = fwci(corpus, [f'P{i:04d}' for i in range(30)])
            self.assertAlmostEqual(result.set_mean, 1.0, places=9)

    def test_small_cells_are_not_covered(self):
        corpus = corpus_from_counts([3, 2, 1])
        self.assertEqual(baseline_expectations(corpus, min_cell_size=5), {('2200', 2015, 'article'): None})
        with self.assertRaises(NoCoveredMembers):
            fwci(corpus, ['P0000'])

    def test_uncovered_members_reported(self):
        records = [record(f'P{i}', ['a']) for i in range(5)] + [record('Q', ['b'], field_code='1700')]
        stub = record('X', ['x'], inst='EXT', external=True)
        corpus = build_corpus(records + [stub], [CitationEdge('X', 'P0'), CitationEdge('X', 'Q')])
        result = fwci(corpus, ['P0', 'Q'])
        self.assertEqual(result.uncovered, frozenset({'Q'}))
        self.assertAlmostEqual(result.per_pub['P0'], 5.0)


class BaselineTests(SimpleTestCase):
    def test_power_law_recovered(self):
        counts = power_law_counts(100, 1000.0, 1.0)
        curve = curve_of(counts)
        self.assertEqual(h_index(curve), 31)
        fit = fit_baseline(curve)
        self.assertEqual(fit.model, BaselineModel.POWER_LAW)
        self.assertAlmostEqual(fit.params['exponent'], 1.0, delta=0.05)
        self.assertLess(fit.residual_sigma, 0.1)
        self.assertEqual(fit.excluded_window, (21, 41))
        self.assertEqual(len(fit.fitted), 100)

    def test_window_changes_do_not_move_the_fit(self):
        counts = power_law_counts(100, 1000.0, 1.0)
        bumped = list(counts)
        bumped[25:30] = [40, 40, 39, 39, 38]
        self.assertEqual(h_index(bumped), h_index(counts))
        fit, bumped_fit = fit_baseline(curve_of(counts)), fit_baseline(curve_of(bumped))
        self.assertEqual(fit.params, bumped_fit.params)
        self.assertEqual(fit.residual_sigma, bumped_fit.residual_sigma)

    def test_flat_curve_uses_convex_fallback(self):
        fit = fit_baseline(curve_of([5] * 60))
        self.assertEqual(fit.model, BaselineModel.ISOTONIC_CONVEX)
        for value in fit.fitted:
            self.assertAlmostEqual(value, 5.0, places=6)
        self.assertTrue(fit.notes)

    def test_convex_fit_is_non_increasing(self):
        counts = sorted([int(v) for v in 200 * np.exp(-np.arange(80) / 12.0)], reverse=True)
        fit = fit_baseline(curve_of(counts), AuditConfig(r2_threshold=0.9999))
        fitted = np.asarray(fit.fitted)
        self.assertEqual(fit.model, BaselineModel.ISOTONIC_CONVEX)
        self.assertTrue(np.all(np.diff(fitted) <= 1e-9))

    def test_too_few_points(self):
        with self.assertRaises(TooFewPoints):
            fit_baseline(curve_of(power_law_counts(10)))

    def test_head_fit_ignores_bulges_below_the_window(self):
        counts = power_law_counts(100, 1000.0, 1.0)
        bumped = list(counts)
        for index in range(59, 70):
            bumped[index] = counts[58]
        self.assertEqual(h_index(bumped), h_index(counts))
        head = AuditConfig()
        self.assertEqual(fit_baseline(curve_of(bumped), head).params, fit_baseline(curve_of(counts), head).params)
        outside = AuditConfig(fit_span='outside_window')
        self.assertNotEqual(
            fit_baseline(curve_of(bumped), outside).params, fit_baseline(curve_of(counts), outside).params
        )

    def test_short_head_falls_back_to_all_ranks_outside_the_window(self):
        fit = fit_baseline(curve_of(power_law_counts(100, 1000.0, 1.0)), AuditConfig(exclude_window=30))
        self.assertEqual(fit.excluded_window, (1, 61))
        self.assertTrue(any('above the exclusion window' in note for note in fit.notes))

    def test_round_trip_through_dict(self):
        fit = fit_baseline(curve_of(power_law_counts(80)))
        self.assertEqual(BaselineFit.from_dict(fit.as_dict()).fitted, fit.fitted)

    def test_exclusion_mask(self):
        mask, window = exclusion_mask(20, 3, 5)
        self.assertEqual(window, (1, 8))
        self.assertEqual(int(mask.sum()), 8)
        mask, window = exclusion_mask(20, 0, 5)
        self.assertFalse(mask.any())


def synthetic_fit(counts, lowered=(), sigma=0.1):
    """Baseline equal to the curve except on the ranks in `lowered`, where it is halved"""
    curve = curve_of(counts)
    fitted = []
    for rank, c in enumerate(curve.citations, start=1):
        fitted.append(float(c) / 2 if rank in lowered else float(c))
    fit = BaselineFit(BaselineModel.POWER_LAW, {}, tuple(fitted), sigma, (0, 0))
    return curve, fit


class HumpDetectionTests(SimpleTestCase):
    def test_find_runs(self):
        runs = find_runs(np.array([0, 3, 3, 0, 2, 2, 2]), 2.0)
        self.assertEqual([(r.start, r.end, r.mass, r.peak) for r in runs], [(2, 3, 6.0, 3.0), (5, 7, 6.0, 2.0)])

    def test_run_through_h(self):
        counts = power_law_counts(100)
        curve, fit = synthetic_fit(counts, lowered=range(25, 41))
        hump = detect_hump(curve, fit, h=31)
        self.assertEqual(hump.rank_interval, (25, 40))
        self.assertTrue(hump.contains_h)
        self.assertEqual(hump.size, 16)
        self.assertEqual(hump.citation_band, (curve.citations_at(40), curve.citations_at(25)))
        self.assertGreater(hump.peak_z, 5)

    def test_run_may_extend_below_h(self):
        curve, fit = synthetic_fit(power_law_counts(100), lowered=range(10, 35))
        hump = detect_hump(curve, fit, h=31)
        self.assertEqual(hump.rank_interval, (10, 34))

    def test_far_run_is_only_a_note(self):
        curve, fit = synthetic_fit(power_law_counts(100), lowered=range(70, 91))
        notes = []
        self.assertIsNone(detect_hump(curve, fit, h=31, notes=notes))
        self.assertEqual(len(notes), 1)
        self.assertIn('70-90', notes[0])

    def test_short_run_rejected(self):
        curve, fit = synthetic_fit(power_law_counts(100), lowered=range(30, 34))
        self.assertIsNone(detect_hump(curve, fit, h=31))

    def test_longest_near_run_wins(self):
        lowered = list(range(22, 30)) + list(range(32, 45))
        curve, fit = synthetic_fit(power_law_counts(100), lowered=lowered)
        self.assertEqual(detect_hump(curve, fit, h=31).rank_interval, (32, 44))

    def test_zscores_zero_on_exact_fit(self):
        curve, fit = synthetic_fit(power_law_counts(50))
        self.assertTrue(np.allclose(zscores(curve, fit), 0.0))

    def test_plateau_detected_from_fitted_baseline(self):
        curve = curve_of(plateau_counts())
        h = h_index(curve)
        self.assertEqual(h, 46)
        fit = fit_baseline(curve, h=h)
        self.assertEqual(fit.model, BaselineModel.POWER_LAW)
        hump = detect_hump(curve, fit, h)
        self.assertIsNotNone(hump)
        lo, hi = hump.rank_interval
        self.assertTrue(40 <= lo and hi <= 76)
        self.assertGreaterEqual(hump.size, 15)

    def test_smooth_curve_has_no_hump(self):
        curve = curve_of(power_law_counts(100))
        self.assertIsNone(detect_hump(curve, fit_baseline(curve), 31))


class HumpMembersTests(SimpleTestCase):
    def setUp(self):
        self.curve = curve_of([939 - i for i in range(939)])

    def test_rank_intervals(self):
        self.assertEqual(len(hump_members(None, self.curve, self._hump(41, 79))), 39)
        self.assertEqual(len(hump_members(None, self.curve, self._hump(34, 78))), 45)
        self.assertEqual(hump_members(None, self.curve, self._hump(1, 1)), frozenset({'P0000'}))

    def test_interval_outside_curve(self):
        with self.assertRaises(RankMismatch):
            hump_members(None, self.curve, HumpRegion((900, 1000), (0, 0), frozenset(), 0.0, 0.0, False))

    def test_band_members(self):
        curve = curve_of([50, 45, 45, 42, 40, 40, 30])
        hump = HumpRegion((2, 4), (42, 45), frozenset(), 10.0, 3.0, True)
        self.assertEqual(band_members(curve, hump), frozenset({'P0001', 'P0002', 'P0003'}))

    def _hump(self, lo, hi):
        return HumpRegion(
            rank_interval=(lo, hi),
            citation_band=(self.curve.citations_at(hi), self.curve.citations_at(lo)),
            member_ids=frozenset(),
            excess_mass=0.0,
            peak_z=0.0,
            contains_h=False,
        )


class AssessTests(SimpleTestCase):
    def test_score_without_hump(self):
        self.assertAlmostEqual(verdict_score(AuditConfig()), 1 / (1 + math.exp(4)))

    def test_small_corpus_is_insufficient(self):
        verdict = assess(corpus_from_counts(power_law_counts(10, 30.0)), 'U1', AuditConfig())
        self.assertEqual(verdict.level, VerdictLevel.INSUFFICIENT_DATA)
        self.assertIsNone(verdict.hump)
        self.assertIn(EXPERT_REVIEW_NOTE, verdict.notes)

    def test_smooth_curve(self):
        verdict = assess(corpus_from_counts(power_law_counts(400, 3000.0, 1.1)), 'U1', AuditConfig())
        self.assertEqual(verdict.level, VerdictLevel.NO_ANOMALY)
        self.assertLess(verdict.score, 0.2)

    def test_plateau_without_self_citation(self):
        verdict = assess(corpus_from_counts(plateau_counts()), 'U1', AuditConfig())
        self.assertEqual(verdict.level, VerdictLevel.HUMPBACK_DETECTED)
        self.assertEqual(verdict.self_cite.rate, 0.0)
        self.assertLess(verdict.fwci.set_mean, 2.0)

    def test_self_cited_plateau_is_anomalous(self):
        counts = plateau_counts()
        self_citations = {index: 28 for index in range(39, 75)}
        assessment = run_assessment(corpus_from_counts(counts, self_citations), 'U1', AuditConfig())
        verdict = assessment.verdict
        self.assertEqual(verdict.level, VerdictLevel.ANOMALOUS_PATTERN)
        self.assertGreater(verdict.self_cite.rate, 0.3)
        self.assertGreater(verdict.score, 0.5)
        self.assertTrue(verdict.hump.member_ids)
        self.assertTrue(assessment.band_member_ids >= verdict.hump.member_ids)

    def test_fwci_compared_with_the_rank_matched_expectation(self):
        corpus = corpus_from_counts(plateau_counts() + [0] * 600)
        lenient = assess(corpus, 'U1', AuditConfig(fwci_excess_threshold=1.0))
        self.assertEqual(lenient.level, VerdictLevel.ANOMALOUS_PATTERN)
        self.assertEqual(lenient.self_cite.rate, 0.0)
        self.assertGreater(lenient.fwci.set_mean, 2.0)
        self.assertTrue(1.5 < lenient.fwci_expected < lenient.fwci.set_mean)

        strict = assess(corpus, 'U1', AuditConfig(fwci_excess_threshold=2.0))
        self.assertEqual(strict.level, VerdictLevel.HUMPBACK_DETECTED)
        self.assertEqual(strict.fwci.set_mean, lenient.fwci.set_mean)

    def test_deterministic(self):
        corpus = corpus_from_counts(plateau_counts())
        self.assertEqual(
            assess(corpus, 'U1', AuditConfig()).as_dict(),
            assess(corpus, 'U1', AuditConfig()).as_dict(),
        )


def random_corpus(rng, papers=30, citing=80):
    """Institution papers P.. cited by external documents whose authors sometimes overlap theirs"""
    authors = [f'a{i}' for i in range(10)]
    records = [
        record(f'P{i:03d}', rng.choice(authors, size=int(rng.integers(1, 4)), replace=False).tolist())
        for i in range(papers)
    ]
    pool = authors + [f'x{i}' for i in range(20)]
    edges = []
    for j in range(citing):
        stub = record(f'C{j:03d}', rng.choice(pool, size=2, replace=False).tolist(), inst='EXT', external=True)
        records.append(stub)
        for cited in rng.choice(papers, size=int(rng.integers(1, 5)), replace=False):
            edges.append(CitationEdge(stub.pub_id, f'P{cited:03d}'))
    return records, edges


def relabeled(records, edges, mapping):
    moved = [replace(r, pub_id=mapping[r.pub_id]) for r in records]
    return build_corpus(moved, [CitationEdge(mapping[e.citing_id], mapping[e.cited_id]) for e in edges])


class PropertyTests(SimpleTestCase):
    def test_h_index_bounded_by_papers_and_top_count(self):
        rng = np.random.default_rng(31)
        for _ in range(300):
            counts = rng.integers(0, 80, size=int(rng.integers(0, 60))).tolist()
            self.assertLessEqual(h_index(counts), min(len(counts), max(counts, default=0)))

    def test_single_increment_moves_h_by_at_most_one(self):
        rng = np.random.default_rng(32)
        for _ in range(300):
            counts = rng.integers(0, 40, size=int(rng.integers(1, 50))).tolist()
            before = h_index(counts)
            counts[int(rng.integers(len(counts)))] += 1
            self.assertIn(h_index(counts) - before, (0, 1))

    def test_hump_shrinks_as_z_on_rises(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            level = int(rng.integers(44, 60))
            counts = [int(c * rng.uniform(0.92, 1.08)) for c in plateau_counts(level=level)]
            curve = curve_of(counts)
            h = h_index(curve)
            fit = fit_baseline(curve, h=h)
            sizes = []
            for z_on in np.arange(1.0, 6.01, 0.5):
                hump = detect_hump(curve, fit, h, AuditConfig(z_on=float(z_on)))
                sizes.append(hump.size if hump else 0)
            self.assertEqual(sizes, sorted(sizes, reverse=True))

    def test_self_citation_rate_ignores_publication_ids(self):
        rng = np.random.default_rng(34)
        for _ in range(5):
            records, edges = random_corpus(rng)
            corpus = build_corpus(records, edges)
            ids = [r.pub_id for r in records]
            mapping = dict(zip(ids, (f'R{k:04d}' for k in rng.permutation(len(ids)))))
            targets = [f'P{i:03d}' for i in range(15)]
            original = self_citation_stats(corpus, targets)
            moved = self_citation_stats(relabeled(records, edges, mapping), [mapping[t] for t in targets])
            self.assertEqual(
                (moved.citing_docs, moved.self_citing_docs), (original.citing_docs, original.self_citing_docs)
            )
            self.assertEqual(moved.rate, original.rate)

    def test_curve_ignores_record_order(self):
        rng = np.random.default_rng(35)
        records, edges = random_corpus(rng)
        curve = rank_citation_curve(build_corpus(records, edges), 'U1')
        for _ in range(5):
            shuffled = [records[i] for i in rng.permutation(len(records))]
            reordered = [edges[i] for i in rng.permutation(len(edges))]
            self.assertEqual(rank_citation_curve(build_corpus(shuffled, reordered), 'U1'), curve)

    def test_fwci_averages_one_in_every_cell(self):
        rng = np.random.default_rng(36)
        cells = [(field_code, year) for field_code in ('2200', '1700', '3100') for year in (2014, 2015)]
        records, edges = [], []
        stubs = [record(f'X{j:03d}', [f'x{j}'], inst='EXT', external=True) for j in range(30)]
        for c, (field_code, year) in enumerate(cells):
            for i in range(int(rng.integers(5, 12))):
                pub_id = f'P{c}-{i:02d}'
                records.append(record(pub_id, [f'a{c}'], year=year, field_code=field_code))
                count = 1 + int(rng.integers(0, 30)) if i == 0 else int(rng.integers(0, 30))
                edges += [CitationEdge(f'X{j:03d}', pub_id) for j in range(count)]
        result = fwci(build_corpus(records + stubs, edges), [r.pub_id for r in records])
        self.assertEqual(len(result.baseline_cells), len(cells))
        for field_code, year in cells:
            members = [r.pub_id for r in records if (r.field_code, r.year) == (field_code, year)]
            self.assertAlmostEqual(float(np.mean([result.per_pub[p] for p in members])), 1.0, places=9)


class ConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = AuditConfig()
        self.assertEqual((config.z_on, config.min_run, config.near_h, config.min_points), (2.0, 8, 10, 50))
        self.assertEqual((config.self_cite_threshold, config.fwci_threshold), (0.3, 2.0))
        self.assertEqual((config.fit_span, config.fwci_excess_threshold), ('head', 1.5))
        with self.assertRaises(ConfigError):
            AuditConfig(fit_span='everything')

    def test_string_values_are_converted(self):
        config = AuditConfig().with_values({'z_on': '2.5', 'MIN_RUN': '12', 'self_citation_level': 'institution'})
        self.assertEqual((config.z_on, config.min_run, config.self_citation_level), (2.5, 12, 'institution'))

    def test_unknown_or_invalid_values(self):
        with self.assertRaises(ConfigError):
            AuditConfig().with_values({'zz_top': '1'})
        with self.assertRaises(ConfigError):
            AuditConfig().with_values({'min_run': 'eight'})
        with self.assertRaises(ConfigError):
            AuditConfig(z_on=-1)

    def test_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'audit.conf'
            path.write_text('z_on = 3\nmin_run=10\n# comment\n', encoding='utf-8')
            config = load_config(path)
        self.assertEqual((config.z_on, config.min_run), (3.0, 10))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config('/nonexistent/audit.conf')

    @override_settings(AUDIT_DEFAULTS={'min_points': '60'})
    def test_settings_layer(self):
        self.assertEqual(load_config().min_points, 60)
        self.assertEqual(load_config(overrides={'min_points': 70}).min_points, 70)
