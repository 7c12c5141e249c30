"""
Domain types for publications, citation links and the validated corpus.

A Corpus is built once through `build_corpus` and never mutated afterwards, so
the same instance can be shared by concurrent per-institution analyses.
"""

import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

from .exceptions import (
    DanglingEdge,
    DuplicateEdge,
    DuplicateId,
    EmptyAuthors,
    InvalidRecord,
    SelfLoop,
    UnknownId,
)

logger = logging.getLogger(__name__)

YEAR_MIN = 1900
YEAR_MAX = 2100
FIELD_CODE_RE = re.compile(r'^\d{4}$')


class DocType(str, Enum):
    ARTICLE = 'article'
    REVIEW = 'review'
    CONFERENCE = 'conference'
    OTHER = 'other'


@dataclass(frozen=True)
class PublicationRecord:
    """One publication (institutional or an external citing document)"""
    pub_id: str
    inst_id: str
    year: int
    doc_type: Optional[DocType]
    field_code: Optional[str]
    author_ids: frozenset
    external: bool = False
    title: Optional[str] = None

    def validate(self):
        if not self.pub_id:
            raise InvalidRecord('pub_id is empty', pub_id=self.pub_id)
        for name in ('pub_id', 'inst_id'):
            value = getattr(self, name)
            if value != value.strip():
                raise InvalidRecord(f'{name} {value!r} has surrounding whitespace', pub_id=self.pub_id)
        if not self.author_ids:
            raise EmptyAuthors(f'{self.pub_id} has no authors', pub_id=self.pub_id)
        if not YEAR_MIN <= self.year <= YEAR_MAX:
            raise InvalidRecord(
                f'{self.pub_id}: year {self.year} outside [{YEAR_MIN}, {YEAR_MAX}]',
                pub_id=self.pub_id,
            )
        if self.field_code is not None and not FIELD_CODE_RE.match(self.field_code):
            raise InvalidRecord(
                f'{self.pub_id}: field_code {self.field_code!r} is not a 4-digit code',
                pub_id=self.pub_id,
            )
        if self.doc_type is not None and not isinstance(self.doc_type, DocType):
            raise InvalidRecord(f'{self.pub_id}: bad doc_type {self.doc_type!r}', pub_id=self.pub_id)

    @property
    def cell(self):
        """FWCI baseline cell key, None when the record lacks classification"""
        if self.field_code is None or self.doc_type is None:
            return None
        return (self.field_code, self.year, self.doc_type.value)


@dataclass(frozen=True, order=True)
class CitationEdge:
    citing_id: str
    cited_id: str


@dataclass(frozen=True, eq=False)
class Corpus:
    publications: Mapping[str, PublicationRecord]
    edges: frozenset
    citing_index: Mapping[str, frozenset] = field(repr=False)
    cited_index: Mapping[str, frozenset] = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        return dict(self.publications) == dict(other.publications) and self.edges == other.edges

    def __hash__(self):
        return hash((frozenset(self.publications), self.edges))

    def __len__(self):
        return len(self.publications)

    def __contains__(self, pub_id):
        return pub_id in self.publications

    def get(self, pub_id) -> PublicationRecord:
        try:
            return self.publications[pub_id]
        except KeyError:
            raise UnknownId(f'Unknown publication {pub_id!r}', pub_id=pub_id) from None

    def citing(self, pub_id) -> frozenset:
        """Distinct citing publications of `pub_id`"""
        self.get(pub_id)
        return self.citing_index.get(pub_id, frozenset())

    def cited_by(self, citing_id) -> frozenset:
        """Publications referenced by `citing_id`"""
        return self.cited_index.get(citing_id, frozenset())

    def institution_records(self, inst_id):
        return [
            rec for rec in self.publications.values()
            if rec.inst_id == inst_id and not rec.external
        ]

    def institutions(self):
        return sorted({rec.inst_id for rec in self.publications.values() if not rec.external})


def build_corpus(records: Iterable[PublicationRecord], edges: Iterable[CitationEdge]) -> Corpus:
    """Validate and index publications and citation links into an immutable Corpus"""
    publications = {}
    for record in records:
        record.validate()
        if record.pub_id in publications:
            raise DuplicateId(f'Duplicate publication id {record.pub_id!r}', pub_id=record.pub_id)
        publications[record.pub_id] = record

    seen = set()
    citing_index = defaultdict(set)
    cited_index = defaultdict(set)
    for edge in edges:
        if edge.citing_id == edge.cited_id:
            raise SelfLoop(f'{edge.citing_id} cites itself', pub_id=edge.citing_id)
        if edge in seen:
            raise DuplicateEdge(
                f'Duplicate citation {edge.citing_id} -> {edge.cited_id}',
                citing_id=edge.citing_id, cited_id=edge.cited_id,
            )
        if edge.cited_id not in publications or edge.citing_id not in publications:
            raise DanglingEdge(
                f'Citation {edge.citing_id} -> {edge.cited_id} references an unknown publication',
                citing_id=edge.citing_id, cited_id=edge.cited_id,
            )
        seen.add(edge)
        citing_index[edge.cited_id].add(edge.citing_id)
        cited_index[edge.citing_id].add(edge.cited_id)

    logger.debug(f"Built corpus with {len(publications)} publications and {len(seen)} citations")
    return Corpus(
        publications=MappingProxyType({k: publications[k] for k in sorted(publications)}),
        edges=frozenset(seen),
        citing_index=MappingProxyType({k: frozenset(v) for k, v in citing_index.items()}),
        cited_index=MappingProxyType({k: frozenset(v) for k, v in cited_index.items()}),
    )


def citation_count(corpus: Corpus, pub_id: str) -> int:
    """Number of distinct publications citing `pub_id`"""
    return len(corpus.citing(pub_id))


def citation_counts(corpus: Corpus, pub_ids: Iterable[str]) -> dict:
    return {pub_id: citation_count(corpus, pub_id) for pub_id in pub_ids}
