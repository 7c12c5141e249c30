"""
The full per-institution pipeline: curve -> baseline -> hump -> corroboration.

A verdict only states that a citation pattern is unusual. It never names a
cause; confirmation is left to expert review of the member publications.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from corpus.records import Corpus

from .baseline import BaselineFit, fit_baseline
from .config import AuditConfig
from .exceptions import AnalysisError, NoCoveredMembers
from .hump import HumpRegion, band_members, detect_hump, hump_members
from .metrics import (
    FwciResult,
    MetricsSummary,
    RankCitationCurve,
    SelfCitationStats,
    core_tail_split,
    fwci,
    h_index,
    median_self_citation_rate,
    rank_citation_curve,
    self_citation_stats,
)

logger = logging.getLogger(__name__)

EXPERT_REVIEW_NOTE = (
    'Flags describe an unusual citation pattern only; any cause must be confirmed '
    'by expert evaluation of the member publications.'
)


class VerdictLevel(str, Enum):
    NO_ANOMALY = 'no_anomaly'
    HUMPBACK_DETECTED = 'humpback_detected'
    ANOMALOUS_PATTERN = 'anomalous_pattern'
    INSUFFICIENT_DATA = 'insufficient_data'


@dataclass(frozen=True)
class AnomalyVerdict:
    level: VerdictLevel
    score: float
    hump: Optional[HumpRegion] = None
    self_cite: Optional[SelfCitationStats] = None
    fwci: Optional[FwciResult] = None
    median_self_cite_rate: Optional[float] = None
    fwci_expected: Optional[float] = None
    notes: tuple = field(default_factory=tuple)

    def as_dict(self):
        return {
            'level': self.level.value,
            'score': self.score,
            'hump': self.hump.as_dict() if self.hump else None,
            'self_cite': self.self_cite.as_dict() if self.self_cite else None,
            'fwci': self.fwci.as_dict() if self.fwci else None,
            'median_self_cite_rate': self.median_self_cite_rate,
            'fwci_expected': self.fwci_expected,
            'notes': list(self.notes),
        }


@dataclass(frozen=True)
class Assessment:
    """Everything an audit report needs to reconstruct the verdict"""
    inst_id: str
    curve: RankCitationCurve
    summary: MetricsSummary
    fit: Optional[BaselineFit]
    verdict: AnomalyVerdict
    band_member_ids: frozenset = frozenset()


def verdict_score(
    config: AuditConfig, hump=None, self_cite=None, median_rate=None, fwci_result=None, fwci_expected=None
) -> float:
    """Fixed logistic combination of hump strength and corroborating evidence.

    The FWCI term is the members' FWCI relative to what the baseline predicts
    for the same ranks, so a hump of ordinary papers adds nothing.
    """
    logit = config.score_bias
    if hump is not None:
        logit += config.score_w_peak * hump.peak_z + config.score_w_mass * hump.excess_mass
    if self_cite is not None and self_cite.rate is not None:
        logit += config.score_w_self * (self_cite.rate - (median_rate or 0.0))
    if fwci_result is not None and fwci_expected:
        logit += config.score_w_fwci * (fwci_result.set_mean / fwci_expected - 1.0)
    if logit >= 0:
        return 1.0 / (1.0 + math.exp(-logit))
    odds = math.exp(logit)
    return odds / (1.0 + odds)


def expected_fwci(corpus: Corpus, curve: RankCitationCurve, fit: BaselineFit, fwci_result: FwciResult) -> float:
    """Mean FWCI the covered members would have at their ranks on the baseline curve"""
    fitted = fit.fitted_array
    ranks = {entry.pub_id: entry.rank for entry in curve.entries}
    values = [
        fitted[ranks[pub_id] - 1] / fwci_result.baseline_cells[corpus.get(pub_id).cell]
        for pub_id in fwci_result.per_pub
    ]
    return float(np.mean(values))


def run_assessment(corpus: Corpus, inst_id: str, config: AuditConfig = None) -> Assessment:
    config = config or AuditConfig()
    curve = rank_citation_curve(corpus, inst_id)
    h = h_index(curve)
    summary = core_tail_split(curve, h)
    notes = [EXPERT_REVIEW_NOTE]

    try:
        fit = fit_baseline(curve, config, h=h)
    except AnalysisError as e:
        logger.info(f"{inst_id}: insufficient data ({e})")
        notes.append(f'{e.code}: {e}')
        verdict = AnomalyVerdict(
            level=VerdictLevel.INSUFFICIENT_DATA,
            score=verdict_score(config),
            notes=tuple(notes),
        )
        return Assessment(inst_id, curve, summary, None, verdict)

    notes.extend(fit.notes)
    hump = detect_hump(curve, fit, h, config, notes=notes)
    if hump is None:
        verdict = AnomalyVerdict(
            level=VerdictLevel.NO_ANOMALY,
            score=verdict_score(config),
            notes=tuple(notes),
        )
        return Assessment(inst_id, curve, summary, fit, verdict)

    members = hump_members(corpus, curve, hump)
    self_cite = self_citation_stats(corpus, members, level=config.self_citation_level)
    median_rate = median_self_citation_rate(
        corpus, [e.pub_id for e in curve.entries if e.citations > 0], level=config.self_citation_level
    )
    try:
        fwci_result = fwci(corpus, members, min_cell_size=config.min_cell_size)
    except NoCoveredMembers as e:
        notes.append(f'{e.code}: {e}')
        fwci_result = None
    expected = expected_fwci(corpus, curve, fit, fwci_result) if fwci_result is not None else None

    self_flag = self_cite.rate is not None and self_cite.rate > config.self_cite_threshold
    fwci_flag = (
        fwci_result is not None
        and fwci_result.set_mean > config.fwci_threshold
        and fwci_result.set_mean > config.fwci_excess_threshold * expected
    )
    level = VerdictLevel.ANOMALOUS_PATTERN if (self_flag or fwci_flag) else VerdictLevel.HUMPBACK_DETECTED
    verdict = AnomalyVerdict(
        level=level,
        score=verdict_score(config, hump, self_cite, median_rate, fwci_result, expected),
        hump=hump,
        self_cite=self_cite,
        fwci=fwci_result,
        median_self_cite_rate=median_rate,
        fwci_expected=expected,
        notes=tuple(notes),
    )
    logger.info(f"{inst_id}: {level.value} (score {verdict.score:.3f})")
    return Assessment(inst_id, curve, summary, fit, verdict, band_members(curve, hump))


def assess(corpus: Corpus, inst_id: str, config: AuditConfig = None) -> AnomalyVerdict:
    return run_assessment(corpus, inst_id, config).verdict
