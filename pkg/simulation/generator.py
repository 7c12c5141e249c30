"""
Seeded synthetic institution corpora with known self-citation behaviour.

Fair papers receive citations from external stub documents whose authors never
overlap the cited paper. Under the non-fair strategies every institutional
author also writes `self_budget` citing documents that cite one of their own
papers, either uniformly at random or aimed at papers close to the h-paper.
With `band_target` set, the strategic phase instead lifts that many papers from
just below the band into it, which reproduces a hump of known size.
"""

import json
import logging
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from analytics.metrics import h_index
from corpus.ingest import save_corpus
from corpus.records import CitationEdge, DocType, PublicationRecord, build_corpus

from .exceptions import InvalidParams

logger = logging.getLogger(__name__)

EXTERNAL_INST = 'EXTERNAL'
FIRST_YEAR = 2003
LAST_YEAR = 2022
FIELD_CODES = ('2200', '1700', '3100')
DOC_TYPES = (DocType.ARTICLE, DocType.CONFERENCE)
DOC_TYPE_WEIGHTS = (0.75, 0.25)
DEFAULT_ANCHOR = 10


class Strategy(str, Enum):
    FAIR = 'fair'
    RANDOM_SELF = 'random_self'
    STRATEGIC_SELF = 'strategic_self'

    @classmethod
    def parse(cls, value):
        aliases = {'random-self': cls.RANDOM_SELF, 'strategic': cls.STRATEGIC_SELF, 'strategic-self': cls.STRATEGIC_SELF}
        return aliases.get(value) or cls(value)


@dataclass(frozen=True)
class SimParams:
    n_papers: int
    n_authors: int = 300
    authors_per_paper: tuple = (1, 4)
    base_exponent: float = 0.8
    cited_share: float = 0.3
    target_total_citations: Optional[int] = None
    target_h: Optional[int] = None
    strategy: Strategy = Strategy.FAIR
    self_budget: int = 0
    band_above: int = 5
    band_below: int = 2
    band_target: Optional[int] = None
    seed: int = 0
    inst_id: str = 'SIM'

    def validate(self):
        if self.n_papers < 1:
            raise InvalidParams('n_papers must be at least 1')
        if self.n_authors < 1:
            raise InvalidParams('n_authors must be at least 1')
        lo, hi = self.authors_per_paper
        if not 1 <= lo <= hi:
            raise InvalidParams('authors_per_paper must be a range with 1 <= min <= max')
        if self.base_exponent <= 0:
            raise InvalidParams('base_exponent must be positive')
        if not 0 <= self.cited_share <= 1:
            raise InvalidParams('cited_share must lie in [0, 1]')
        if self.band_above < 0 or self.band_below < 0:
            raise InvalidParams('band offsets must be non-negative')
        if self.self_budget < 0:
            raise InvalidParams('self_budget must be non-negative')
        if self.band_target is not None:
            if self.band_target < 1:
                raise InvalidParams('band_target must be at least 1')
            if self.strategy is not Strategy.STRATEGIC_SELF:
                raise InvalidParams('band_target only applies to strategic_self')
        elif self.strategy is not Strategy.FAIR and self.self_budget == 0:
            raise InvalidParams(f'{self.strategy.value} needs a positive self_budget')
        if self.target_h is not None and self.target_h < 0:
            raise InvalidParams('target_h must be non-negative')
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParams('seed must be a 64-bit unsigned integer')
        return self

    @property
    def anchor_rank(self):
        """Rank whose expected citation count equals the rank itself"""
        return DEFAULT_ANCHOR if self.target_h is None else self.target_h

    @property
    def cited_papers(self):
        return min(self.n_papers, int(round(self.cited_share * self.n_papers)))

    def as_dict(self):
        data = asdict(self)
        data['strategy'] = self.strategy.value
        data['authors_per_paper'] = list(self.authors_per_paper)
        return data


@dataclass(frozen=True)
class GroundTruth:
    injected_ids: frozenset = frozenset()
    injected_self_edges: frozenset = frozenset()
    pre_injection_h: int = 0

    def as_dict(self):
        return {
            'injected_ids': sorted(self.injected_ids),
            'injected_self_edges': [[e.citing_id, e.cited_id] for e in sorted(self.injected_self_edges)],
            'pre_injection_h': self.pre_injection_h,
        }


def _rng(seed, stream):
    return np.random.default_rng([seed, stream])


def ranked_citation_counts(params: SimParams) -> np.ndarray:
    """Fair citation counts by rank, most cited first.

    The paper at rank r expects anchor * (anchor / r)**base_exponent citations,
    so the anchor rank (`target_h`) expects exactly its own rank. Expectations
    are rounded stochastically to floor(mu + u) with u uniform on [0, 1), which
    keeps every count within one citation of its expectation and pins the
    h-index to the anchor whenever that many papers are cited. Ranks past
    `cited_papers` stay uncited.
    """
    n = params.n_papers
    jitter = _rng(params.seed, 0).random(n)
    counts = np.zeros(n, dtype=int)
    cited = params.cited_papers
    anchor = params.anchor_rank
    if cited == 0 or anchor == 0:
        return counts
    ranks = np.arange(1, cited + 1, dtype=float)
    expected = anchor * (anchor / ranks) ** params.base_exponent
    counts[:cited] = np.floor(expected + jitter[:cited])
    return np.sort(counts)[::-1]


def fair_citation_counts(params: SimParams) -> np.ndarray:
    """Per-paper citation counts before any self-citation, in paper order"""
    order = _rng(params.seed, 3).permutation(params.n_papers)
    return ranked_citation_counts(params)[order]


def _institution_records(params, rng):
    lo, hi = params.authors_per_paper
    authors = [f'{params.inst_id}-A{i:04d}' for i in range(params.n_authors)]
    records = []
    for i in range(params.n_papers):
        k = int(rng.integers(lo, hi + 1))
        chosen = rng.choice(len(authors), size=min(k, len(authors)), replace=False)
        records.append(PublicationRecord(
            pub_id=f'{params.inst_id}-P{i:05d}',
            inst_id=params.inst_id,
            year=int(rng.integers(FIRST_YEAR, LAST_YEAR + 1)),
            doc_type=DOC_TYPES[int(rng.choice(len(DOC_TYPES), p=DOC_TYPE_WEIGHTS))],
            field_code=FIELD_CODES[int(rng.integers(len(FIELD_CODES)))],
            author_ids=frozenset(authors[j] for j in sorted(chosen)),
        ))
    return records


class _CitingStubs:
    """Allocates external citing documents and their edges"""

    def __init__(self, params, rng):
        self.params = params
        self.rng = rng
        self.records = []
        self.edges = []

    def cite(self, cited, authors):
        index = len(self.records)
        stub = PublicationRecord(
            pub_id=f'{self.params.inst_id}-X{index:06d}',
            inst_id=EXTERNAL_INST,
            year=int(self.rng.integers(cited.year, LAST_YEAR + 1)),
            doc_type=DocType.ARTICLE,
            field_code=cited.field_code,
            author_ids=frozenset(authors),
            external=True,
        )
        edge = CitationEdge(stub.pub_id, cited.pub_id)
        self.records.append(stub)
        self.edges.append(edge)
        return edge

    def cite_external(self, cited):
        return self.cite(cited, [f'{self.params.inst_id}-XA{len(self.records):06d}'])


def _author_papers(records):
    owned = {}
    for index, record in enumerate(records):
        for author in record.author_ids:
            owned.setdefault(author, []).append(index)
    return owned


def _pick_strategic(own, counts, h, params):
    """Lowest own paper inside the band around h, else the closest one below it.

    Both band edges are inclusive: [h - band_below, h + band_above].
    """
    lo, hi = h - params.band_below, h + params.band_above
    in_band = [i for i in own if lo <= counts[i] <= hi]
    if in_band:
        return min(in_band, key=lambda i: (counts[i], i))
    below = [i for i in own if counts[i] < lo]
    if below:
        return max(below, key=lambda i: (counts[i], -i))
    return None


def _author_rounds(params, records, counts, stubs, rng):
    """`self_budget` rounds in which every author self-cites one own paper"""
    owned = _author_papers(records)
    authors = sorted(owned)
    order = [authors[i] for i in rng.permutation(len(authors))]
    h = h_index(counts.tolist())
    edges = []
    for _ in range(params.self_budget):
        for author in order:
            own = owned[author]
            if params.strategy is Strategy.RANDOM_SELF:
                target = own[int(rng.integers(len(own)))]
            else:
                target = _pick_strategic(own, counts, h, params)
                if target is None:
                    target = own[int(rng.integers(len(own)))]
            edges.append(stubs.cite(records[target], [author]))
            counts[target] += 1
            if params.strategy is Strategy.STRATEGIC_SELF:
                h = h_index(counts.tolist())
    return edges


def _fill_band(params, records, counts, stubs, rng):
    """Lift the `band_target` most cited papers below the band into it.

    The band is anchored at the pre-injection h. Lifted papers take the band's
    counts from the top edge down, cycling, and every added citation comes from
    one of the lifted paper's own authors.
    """
    h = h_index(counts.tolist())
    lo, hi = max(0, h - params.band_below), h + params.band_above
    below = sorted((i for i in range(len(counts)) if counts[i] < lo), key=lambda i: (-counts[i], i))
    if len(below) < params.band_target:
        logger.warning(f"Only {len(below)} papers below the band [{lo}, {hi}], wanted {params.band_target}")
    levels = list(range(hi, lo - 1, -1))
    edges = []
    for j, index in enumerate(below[:params.band_target]):
        record = records[index]
        authors = sorted(record.author_ids)
        for _ in range(levels[j % len(levels)] - int(counts[index])):
            author = authors[int(rng.integers(len(authors)))]
            edges.append(stubs.cite(record, [author]))
        counts[index] = levels[j % len(levels)]
    return edges


def generate(params: SimParams):
    """Build a (Corpus, GroundTruth) pair; identical params give identical output"""
    params.validate()
    counts = fair_citation_counts(params)
    rng = _rng(params.seed, 1)
    records = _institution_records(params, rng)
    stubs = _CitingStubs(params, _rng(params.seed, 2))

    for record, count in zip(records, counts):
        for _ in range(int(count)):
            stubs.cite_external(record)

    pre_h = h_index(counts.tolist())
    injected = []
    if params.strategy is not Strategy.FAIR:
        counts = counts.copy()
        inject = _fill_band if params.band_target is not None else _author_rounds
        injected = inject(params, records, counts, stubs, rng)

    corpus = build_corpus(records + stubs.records, stubs.edges)
    truth = GroundTruth(
        injected_ids=frozenset(edge.cited_id for edge in injected),
        injected_self_edges=frozenset(injected),
        pre_injection_h=pre_h,
    )
    logger.info(
        f"Generated {params.strategy.value} corpus: {params.n_papers} papers, "
        f"{len(stubs.edges)} citations, {len(injected)} self-citations, h {pre_h} -> {h_index(counts.tolist())}"
    )
    return corpus, truth


def band_census(corpus, inst_id, low, high):
    """Number of institutional papers with citation counts in [low, high]"""
    return sum(
        1 for record in corpus.institution_records(inst_id)
        if low <= len(corpus.citing(record.pub_id)) <= high
    )


def write_simulation(out_dir, corpus, truth, params=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out / 'publications.csv', out / 'citations.csv')
    payload = truth.as_dict()
    if params is not None:
        payload['params'] = params.as_dict()
    (out / 'ground_truth.json').write_text(json.dumps(payload, sort_keys=True, indent=2) + '\n', encoding='utf-8')
    return out
