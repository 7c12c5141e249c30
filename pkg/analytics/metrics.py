"""
Scientometric indicators over a Corpus: rank-citation curve, h-index,
h-core/tail split, self-citation statistics and field-weighted citation impact.

All functions are pure; the corpus is never modified.
"""

import logging
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from corpus.records import Corpus, citation_count

from .exceptions import EmptyTargetSet, NoCoveredMembers, NoPublications

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CurveEntry:
    rank: int
    pub_id: str
    citations: int


@dataclass(frozen=True)
class RankCitationCurve:
    """Citation counts sorted descending (ties by pub_id), ranks 1..N"""
    entries: tuple

    @classmethod
    def from_counts(cls, counts):
        """Build from a {pub_id: citations} mapping"""
        ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        return cls(tuple(CurveEntry(rank, pub_id, int(c)) for rank, (pub_id, c) in enumerate(ordered, start=1)))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def citations(self) -> np.ndarray:
        return np.array([e.citations for e in self.entries], dtype=float)

    @property
    def pub_ids(self):
        return [e.pub_id for e in self.entries]

    def citations_at(self, rank):
        return self.entries[rank - 1].citations


@dataclass(frozen=True)
class MetricsSummary:
    papers: int
    total_citations: int
    h_index: int
    h_core_size: int
    core_citations: int
    tail_citations: int
    tail_core_ratio: Optional[float]

    def as_dict(self):
        return {
            'papers': self.papers,
            'total_citations': self.total_citations,
            'h_index': self.h_index,
            'h_core_size': self.h_core_size,
            'core_citations': self.core_citations,
            'tail_citations': self.tail_citations,
            'tail_core_ratio': self.tail_core_ratio,
        }


@dataclass(frozen=True)
class SelfCitationStats:
    target_set: frozenset
    citing_docs: int
    self_citing_docs: int
    rate: Optional[float]
    level: str = 'author'

    def as_dict(self):
        return {
            'targets': len(self.target_set),
            'citing_docs': self.citing_docs,
            'self_citing_docs': self.self_citing_docs,
            'rate': self.rate,
            'level': self.level,
        }


@dataclass(frozen=True)
class FwciResult:
    per_pub: dict
    set_mean: float
    baseline_cells: dict
    uncovered: frozenset = field(default_factory=frozenset)

    def as_dict(self):
        return {
            'per_pub': {k: self.per_pub[k] for k in sorted(self.per_pub)},
            'set_mean': self.set_mean,
            'baseline_cells': {'|'.join(map(str, k)): v for k, v in sorted(self.baseline_cells.items())},
            'uncovered': sorted(self.uncovered),
        }


def rank_citation_curve(corpus: Corpus, inst_id: str) -> RankCitationCurve:
    records = corpus.institution_records(inst_id)
    if not records:
        raise NoPublications(f'No publications for institution {inst_id!r}', inst_id=inst_id)
    return RankCitationCurve.from_counts({r.pub_id: citation_count(corpus, r.pub_id) for r in records})


def h_index(curve) -> int:
    """Largest h with at least h entries cited at least h times"""
    if isinstance(curve, RankCitationCurve):
        counts = [e.citations for e in curve.entries]
    else:
        counts = sorted((int(c) for c in curve), reverse=True)
    h = 0
    for rank, citations in enumerate(counts, start=1):
        if citations >= rank:
            h = rank
        else:
            break
    return h


def core_tail_split(curve: RankCitationCurve, h: int) -> MetricsSummary:
    counts = [e.citations for e in curve.entries]
    core = sum(counts[:h])
    tail = sum(counts[h:])
    return MetricsSummary(
        papers=len(counts),
        total_citations=core + tail,
        h_index=h,
        h_core_size=min(h, len(counts)),
        core_citations=core,
        tail_citations=tail,
        tail_core_ratio=(tail / core) if core > 0 else None,
    )


def summarize(curve: RankCitationCurve) -> MetricsSummary:
    return core_tail_split(curve, h_index(curve))


def _shares_identity(citing, target, level):
    if level == 'institution':
        return citing.inst_id == target.inst_id
    return bool(citing.author_ids & target.author_ids)


def _check_targets(corpus, target_set):
    targets = frozenset(target_set)
    if not targets:
        raise EmptyTargetSet('Target set is empty')
    for pub_id in targets:
        corpus.get(pub_id)
    return targets


def self_citation_stats(corpus: Corpus, target_set: Iterable[str], level='author') -> SelfCitationStats:
    """Union of citing documents over the targets and how many of them self-cite"""
    targets = _check_targets(corpus, target_set)
    cited_targets = defaultdict(set)
    for pub_id in targets:
        for citing_id in corpus.citing(pub_id):
            cited_targets[citing_id].add(pub_id)

    self_citing = 0
    for citing_id, cited in cited_targets.items():
        citing = corpus.get(citing_id)
        if any(_shares_identity(citing, corpus.get(t), level) for t in cited):
            self_citing += 1

    citing_docs = len(cited_targets)
    return SelfCitationStats(
        target_set=targets,
        citing_docs=citing_docs,
        self_citing_docs=self_citing,
        rate=(self_citing / citing_docs) if citing_docs else None,
        level=level,
    )


def self_citation_by_pub(corpus: Corpus, pub_ids: Iterable[str], level='author') -> dict:
    """Per-publication self-citation rate; None for uncited publications"""
    return {pub_id: self_citation_stats(corpus, [pub_id], level).rate for pub_id in pub_ids}


def median_self_citation_rate(corpus: Corpus, pub_ids: Iterable[str], level='author') -> Optional[float]:
    rates = [r for r in self_citation_by_pub(corpus, pub_ids, level).values() if r is not None]
    return statistics.median(rates) if rates else None


def baseline_expectations(corpus: Corpus, min_cell_size=5) -> dict:
    """Mean citation count per (field_code, year, doc_type) over non-external publications.

    Cells below `min_cell_size` or with a zero mean map to None.
    """
    cells = defaultdict(list)
    for record in corpus.publications.values():
        if record.external or record.cell is None:
            continue
        cells[record.cell].append(citation_count(corpus, record.pub_id))
    expectations = {}
    for cell, counts in cells.items():
        mean = sum(counts) / len(counts)
        expectations[cell] = mean if len(counts) >= min_cell_size and mean > 0 else None
    return expectations


def fwci(corpus: Corpus, target_set: Iterable[str], min_cell_size=5, expectations=None) -> FwciResult:
    targets = _check_targets(corpus, target_set)
    if expectations is None:
        expectations = baseline_expectations(corpus, min_cell_size)

    per_pub = {}
    used_cells = {}
    uncovered = set()
    for pub_id in sorted(targets):
        record = corpus.get(pub_id)
        expected = expectations.get(record.cell) if record.cell else None
        if expected is None:
            uncovered.add(pub_id)
            continue
        per_pub[pub_id] = citation_count(corpus, pub_id) / expected
        used_cells[record.cell] = expected

    if not per_pub:
        raise NoCoveredMembers(
            f'None of the {len(targets)} target publications has a baseline cell of size >= {min_cell_size}',
            targets=len(targets),
        )
    if uncovered:
        logger.info(f"FWCI: {len(uncovered)} of {len(targets)} publications not covered by a baseline cell")
    return FwciResult(
        per_pub=per_pub,
        set_mean=float(np.mean(list(per_pub.values()))),
        baseline_cells=used_cells,
        uncovered=frozenset(uncovered),
    )


def format_percent(rate) -> str:
    return 'n/a' if rate is None else f'{rate * 100:.1f}%'


def format_fwci(value) -> str:
    return 'n/a' if value is None else f'{value:.2f}'
