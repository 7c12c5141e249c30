import io
import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from corpus.exceptions import (
    DanglingEdge,
    DuplicateEdge,
    DuplicateId,
    EmptyAuthors,
    InvalidRecord,
    MalformedHeader,
    SelfLoop,
    StrictRejection,
    UnknownId,
)
from corpus.ingest import (
    load_corpus,
    parse_citations,
    parse_publications,
    save_corpus,
    write_citations,
    write_publications,
)
from corpus.records import (
    CitationEdge,
    DocType,
    PublicationRecord,
    build_corpus,
    citation_count,
    citation_counts,
)

PUB_HEADER = 'pub_id,inst_id,year,doc_type,field_code,author_ids,external,title\n'
CITE_HEADER = 'citing_id,cited_id\n'


def pub(pub_id, authors=('a1',), inst='U1', year=2010, external=False, field_code='2200'):
    return PublicationRecord(
        pub_id=pub_id,
        inst_id=inst,
        year=year,
        doc_type=DocType.ARTICLE,
        field_code=field_code,
        author_ids=frozenset(authors),
        external=external,
    )


class BuildCorpusTests(SimpleTestCase):
    def test_empty_corpus(self):
        corpus = build_corpus([], [])
        self.assertEqual(len(corpus), 0)
        self.assertEqual(corpus.edges, frozenset())

    def test_citing_sets(self):
        corpus = build_corpus(
            [pub('A'), pub('B'), pub('C')],
            [CitationEdge('B', 'A'), CitationEdge('C', 'A')],
        )
        self.assertEqual(corpus.citing('A'), frozenset({'B', 'C'}))
        self.assertEqual(corpus.cited_by('B'), frozenset({'A'}))
        self.assertEqual(corpus.citing('B'), frozenset())

    def test_duplicate_edge(self):
        with self.assertRaises(DuplicateEdge):
            build_corpus([pub('A'), pub('B')], [CitationEdge('B', 'A'), CitationEdge('B', 'A')])

    def test_duplicate_id(self):
        with self.assertRaises(DuplicateId):
            build_corpus([pub('A'), pub('A')], [])

    def test_self_loop(self):
        with self.assertRaises(SelfLoop):
            build_corpus([pub('A')], [CitationEdge('A', 'A')])

    def test_dangling_edge_either_end(self):
        with self.assertRaises(DanglingEdge):
            build_corpus([pub('A')], [CitationEdge('Z', 'A')])
        with self.assertRaises(DanglingEdge):
            build_corpus([pub('A')], [CitationEdge('A', 'Z')])

    def test_empty_authors(self):
        with self.assertRaises(EmptyAuthors):
            build_corpus([pub('A', authors=())], [])

    def test_invalid_field_code_and_year(self):
        with self.assertRaises(InvalidRecord):
            build_corpus([pub('A', field_code='22')], [])
        with self.assertRaises(InvalidRecord):
            build_corpus([pub('A', year=1850)], [])

    def test_ids_with_surrounding_whitespace(self):
        with self.assertRaises(InvalidRecord):
            build_corpus([pub(' A')], [])
        with self.assertRaises(InvalidRecord):
            build_corpus([pub('A', inst='U1 ')], [])

    def test_unknown_id(self):
        corpus = build_corpus([pub('A')], [])
        with self.assertRaises(UnknownId):
            corpus.get('B')

    def test_institution_records_skip_external(self):
        corpus = build_corpus([pub('A'), pub('X', inst='OTHER', external=True), pub('B', inst='U2')], [])
        self.assertEqual([r.pub_id for r in corpus.institution_records('U1')], ['A'])
        self.assertEqual(corpus.institutions(), ['U1', 'U2'])

    def test_equal_corpora_compare_equal(self):
        records = [pub('A'), pub('B')]
        edges = [CitationEdge('B', 'A')]
        self.assertEqual(build_corpus(records, edges), build_corpus(list(reversed(records)), edges))


class CitationCountTests(SimpleTestCase):
    def setUp(self):
        self.corpus = build_corpus(
            [pub('A'), pub('B'), pub('C'), pub('D')],
            [CitationEdge('B', 'A'), CitationEdge('C', 'A'), CitationEdge('C', 'B')],
        )

    def test_uncited(self):
        self.assertEqual(citation_count(self.corpus, 'D'), 0)

    def test_cited_twice(self):
        self.assertEqual(citation_count(self.corpus, 'A'), 2)

    def test_counts_sum_to_edges(self):
        counts = citation_counts(self.corpus, self.corpus.publications)
        self.assertEqual(sum(counts.values()), len(self.corpus.edges))


class ParsePublicationsTests(SimpleTestCase):
    def test_header_only(self):
        records, report = parse_publications(io.StringIO(PUB_HEADER))
        self.assertEqual(records, [])
        self.assertEqual(report.records_read, 0)

    def test_empty_authors_rejected_at_line(self):
        text = PUB_HEADER + 'P1,U1,2010,article,2200,,false,\n'
        records, report = parse_publications(io.StringIO(text))
        self.assertEqual(records, [])
        self.assertEqual(len(report.rejected), 1)
        self.assertEqual(report.rejected[0].code, 'EmptyAuthors')
        self.assertEqual(report.rejected[0].line, 2)

    def test_bad_year_row_is_rejected(self):
        text = (
            PUB_HEADER
            + 'P1,U1,2010,article,2200,a1,false,First\n'
            + 'P2,U1,20x2,article,2200,a2,false,Second\n'
            + 'P3,U1,2012,review,1700,a1;a3,false,Third\n'
        )
        records, report = parse_publications(io.StringIO(text))
        self.assertEqual([r.pub_id for r in records], ['P1', 'P3'])
        self.assertEqual(report.records_read, 3)
        self.assertEqual([(r.line, r.code) for r in report.rejected], [(3, 'InvalidYear')])
        self.assertEqual(records[1].author_ids, frozenset({'a1', 'a3'}))

    def test_strict_mode_raises(self):
        text = PUB_HEADER + 'P1,U1,20x2,article,2200,a1,false,\n'
        with self.assertRaises(StrictRejection) as ctx:
            parse_publications(io.StringIO(text), strict=True)
        self.assertEqual(len(ctx.exception.report.rejected), 1)

    def test_wrong_header(self):
        with self.assertRaises(MalformedHeader):
            parse_publications(io.StringIO('id,institution\nP1,U1\n'))

    def test_unknown_doc_type_and_duplicate(self):
        text = (
            PUB_HEADER
            + 'P1,U1,2010,poster,2200,a1,false,\n'
            + 'P2,U1,2010,article,2200,a1,false,\n'
            + 'P2,U1,2011,article,2200,a1,false,\n'
        )
        records, report = parse_publications(io.StringIO(text))
        self.assertEqual([r.pub_id for r in records], ['P2'])
        self.assertEqual([r.code for r in report.rejected], ['InvalidDocType', 'DuplicateId'])

    def test_missing_classification(self):
        text = PUB_HEADER + 'P1,U1,2010,,,a1,false,\n'
        records, report = parse_publications(io.StringIO(text))
        self.assertEqual(len(records), 1)
        self.assertIsNone(records[0].cell)
        self.assertEqual(len(report.warnings), 1)

        records, report = parse_publications(io.StringIO(text), require_classification=True)
        self.assertEqual(records, [])
        self.assertEqual(report.rejected[0].code, 'MissingField')

    def test_year_window_skips_institutional_rows(self):
        text = (
            PUB_HEADER
            + 'P1,U1,2001,article,2200,a1,false,\n'
            + 'P2,U1,2010,article,2200,a1,false,\n'
            + 'X1,EXT,1999,article,2200,x1,true,\n'
        )
        records, report = parse_publications(io.StringIO(text), year_min=2003, year_max=2022)
        self.assertEqual([r.pub_id for r in records], ['P2', 'X1'])
        self.assertEqual(len(report.warnings), 1)
        self.assertEqual(report.rejected, [])

    def test_jsonl(self):
        lines = [
            {'pub_id': 'P1', 'inst_id': 'U1', 'year': 2010, 'doc_type': 'article', 'field_code': '2200',
             'author_ids': ['a1', 'a2'], 'external': False},
            'not json',
        ]
        text = json.dumps(lines[0]) + '\n' + lines[1] + '\n'
        records, report = parse_publications(io.StringIO(text), 'jsonl')
        self.assertEqual(records[0].author_ids, frozenset({'a1', 'a2'}))
        self.assertEqual([(r.line, r.code) for r in report.rejected], [(2, 'MalformedRow')])

    def test_padded_ids_are_rejected_not_trimmed(self):
        text = PUB_HEADER + 'P1,U1,2010,article,2200,a1,false,\n' + ' P1,U1,2010,article,2200,a1,false,\n'
        records, report = parse_publications(io.StringIO(text))
        self.assertEqual([r.pub_id for r in records], ['P1'])
        self.assertEqual([(r.line, r.code) for r in report.rejected], [(3, 'InvalidRecord')])


class ParseCitationsTests(SimpleTestCase):
    def test_empty_file(self):
        edges, report = parse_citations(io.StringIO(''))
        self.assertEqual(edges, [])
        self.assertTrue(report.ok)

    def test_duplicate_row(self):
        text = CITE_HEADER + 'B,A\nB,A\nC,C\n'
        edges, report = parse_citations(io.StringIO(text))
        self.assertEqual(edges, [CitationEdge('B', 'A')])
        self.assertEqual([(r.line, r.code) for r in report.rejected], [(3, 'DuplicateEdge'), (4, 'SelfLoop')])

    def test_padded_ids_are_rejected(self):
        text = CITE_HEADER + 'B,A\nB, A\n'
        edges, report = parse_citations(io.StringIO(text))
        self.assertEqual(edges, [CitationEdge('B', 'A')])
        self.assertEqual([(r.line, r.code) for r in report.rejected], [(3, 'InvalidValue')])
        self.assertEqual(report.edge_lines, {CitationEdge('B', 'A'): 2})

    def test_all_distinct_edges_accepted(self):
        text = CITE_HEADER + ''.join(f'X{i},H1\n' for i in range(667))
        edges, report = parse_citations(io.StringIO(text))
        self.assertEqual(len(edges), 667)
        self.assertEqual(report.edges_read, 667)
        self.assertEqual(report.rejected, [])


class FileRoundTripTests(SimpleTestCase):
    def setUp(self):
        self.corpus = build_corpus(
            [pub('A', authors=('a1', 'a2')), pub('B'), pub('X', inst='EXT', external=True, authors=('x1',))],
            [CitationEdge('B', 'A'), CitationEdge('X', 'A'), CitationEdge('X', 'B')],
        )

    def test_csv_and_jsonl_files_rebuild_the_corpus(self):
        with tempfile.TemporaryDirectory() as tmp:
            for suffix in ('csv', 'jsonl'):
                pubs, cites = Path(tmp) / f'p.{suffix}', Path(tmp) / f'c.{suffix}'
                save_corpus(self.corpus, pubs, cites)
                loaded, report = load_corpus(pubs, cites)
                self.assertTrue(report.ok)
                self.assertEqual(loaded, self.corpus)

    def test_writers_are_sorted(self):
        pubs, cites = io.StringIO(), io.StringIO()
        write_publications(reversed(list(self.corpus.publications.values())), pubs)
        write_citations(self.corpus.edges, cites)
        self.assertEqual(pubs.getvalue().splitlines()[1].split(',')[0], 'A')
        self.assertEqual(cites.getvalue().splitlines()[1:], ['B,A', 'X,A', 'X,B'])

    def test_dangling_edges_rejected_on_load(self):
        with tempfile.TemporaryDirectory() as tmp:
            pubs, cites = Path(tmp) / 'p.csv', Path(tmp) / 'c.csv'
            pubs.write_text(PUB_HEADER + 'A,U1,2010,article,2200,a1,false,\n', encoding='utf-8')
            cites.write_text(CITE_HEADER + 'Z,A\n', encoding='utf-8')
            corpus, report = load_corpus(pubs, cites)
            self.assertEqual(len(corpus.edges), 0)
            self.assertEqual(report.rejected[0].code, 'DanglingEdge')
            self.assertEqual(report.rejected[0].line, 2)
            with self.assertRaises(StrictRejection):
                load_corpus(pubs, cites, strict=True)
