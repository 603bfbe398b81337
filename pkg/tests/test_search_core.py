import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxsearch.behavior import PageMetadata
from ctxsearch.errors import AdapterError, ParseError, ValidationError
from ctxsearch.query_builder import And, BooleanQuery, Or, Term, build_query, serialize_query
from ctxsearch.search_core import (
    Document,
    FailingSearchAdapter,
    LocalSearchAdapter,
    ReplaySearchAdapter,
    evaluate_boolean,
    index_corpus,
    load_corpus,
    load_index,
    normalize_tree,
    parse_query,
    rank_all,
    save_index,
    search_ranked,
)
from ctxsearch.vectors import TermVector


def doc(doc_id, terms, url=None, title=""):
    return Document(
        doc_id=doc_id,
        url=url or f"http://corpus/{doc_id}",
        title=title,
        body_terms=list(terms),
        metadata=PageMetadata(url=url or f"http://corpus/{doc_id}", title=title),
    )


@pytest.fixture()
def small_index():
    return index_corpus(
        [doc(1, ["a", "b"]), doc(2, ["a"]), doc(3, ["c", "b"])]
    )


class TestIndexCorpus:
    def test_postings_cover_every_term(self, small_index):
        assert set(small_index.postings) == {"a", "b", "c"}
        assert small_index.postings["a"] == [1, 2]
        assert small_index.term_doc_freq == {"a": 2, "b": 2, "c": 1}

    def test_empty_corpus(self):
        idx = index_corpus([])
        assert idx.doc_count == 0
        assert idx.postings == {}

    def test_duplicate_doc_id_rejected(self):
        with pytest.raises(ValidationError):
            index_corpus([doc(1, ["a"]), doc(1, ["b"])])

    def test_title_and_meta_terms_indexed(self, stopwords):
        d = Document(
            doc_id=1,
            url="u",
            title="Volcano Hiking",
            body_terms=["java"],
            metadata=PageMetadata(url="u", title="Volcano Hiking", meta_keywords_raw=("island",)),
        )
        idx = index_corpus([d], stopwords)
        assert set(idx.postings) == {"java", "volcano", "hike", "island"}


class TestEvaluateBoolean:
    def test_and(self, small_index):
        q = BooleanQuery(And((Term("a"), Term("b"))))
        assert evaluate_boolean(q, small_index) == {1}

    def test_or(self, small_index):
        q = BooleanQuery(Or((Term("a"), Term("b"))))
        assert evaluate_boolean(q, small_index) == {1, 2, 3}

    def test_unknown_term_empty(self, small_index):
        assert evaluate_boolean(BooleanQuery(Term("zz")), small_index) == set()

    @staticmethod
    def brute_force(node, terms):
        if isinstance(node, Term):
            return node.term in terms
        results = [TestEvaluateBoolean.brute_force(c, terms) for c in node.children]
        return all(results) if isinstance(node, And) else any(results)

    VOCAB = ["a", "b", "c", "d", "e"]

    @st.composite
    @staticmethod
    def query_trees(draw, depth=0):
        self = TestEvaluateBoolean
        if depth >= 3 or draw(st.booleans()):
            return Term(draw(st.sampled_from(self.VOCAB + ["zz"])))
        kind = draw(st.sampled_from(["and", "or"]))
        children = draw(
            st.lists(self.query_trees(depth=depth + 1), min_size=1, max_size=3)  # type: ignore[call-arg]
        )
        if kind == "or":
            children = [c for c in children if not isinstance(c, Or)] or [Term("a")]
            return Or(tuple(children))
        return And(tuple(children))

    @settings(max_examples=300, deadline=None)
    @given(data=st.data())
    def test_matches_per_document_truth_evaluation(self, data):
        docs = data.draw(
            st.lists(
                st.sets(st.sampled_from(self.VOCAB), max_size=5),
                max_size=12,
            )
        )
        corpus = [doc(i + 1, sorted(terms)) for i, terms in enumerate(docs)]
        index = index_corpus(corpus)
        tree = data.draw(self.query_trees())
        q = BooleanQuery(tree)
        expected = {
            d.doc_id for d in corpus if self.brute_force(tree, set(d.body_terms))
        }
        assert evaluate_boolean(q, index) == expected


class TestSearchRanked:
    def test_single_match(self, small_index):
        hits = search_ranked(BooleanQuery(Term("c")), TermVector({"c": 1}), small_index)
        assert len(hits) == 1
        assert hits[0].rank == 1
        assert hits[0].doc_id == 3

    def test_term_frequency_wins_tfidf(self):
        idx = index_corpus(
            [doc(1, ["java", "java", "x"]), doc(2, ["java", "y", "z"]), doc(3, ["w"])]
        )
        hits = search_ranked(BooleanQuery(Term("java")), TermVector({"java": 1}), idx)
        assert [h.doc_id for h in hits] == [1, 2]
        # hand TF-IDF: idf(java)=ln(3/2); doc1 cos = 2*idf/sqrt((2 idf)^2+idf_x^2)
        idf_j = math.log(3 / 2)
        idf_x = math.log(3 / 1)
        expected_doc1 = 2 * idf_j / math.sqrt((2 * idf_j) ** 2 + idf_x**2)
        assert hits[0].score == pytest.approx(expected_doc1, abs=1e-12)

    def test_zero_context_falls_back_to_idf_sum(self, small_index):
        q = BooleanQuery(Or((Term("a"), Term("c"))))
        hits = search_ranked(q, TermVector(), small_index)
        # doc3 matches c (idf ln3); docs 1,2 match a (idf ln 1.5)
        assert hits[0].doc_id == 3
        assert hits[0].score == pytest.approx(math.log(3), abs=1e-12)
        assert [h.doc_id for h in hits[1:]] == [1, 2]

    def test_empty_candidates(self, small_index):
        assert search_ranked(BooleanQuery(Term("zz")), TermVector(), small_index) == []

    def test_pagination_ranks_are_global(self):
        idx = index_corpus([doc(i, ["t"]) for i in range(1, 8)])
        q = BooleanQuery(Term("t"))
        page2 = search_ranked(q, TermVector(), idx, page_size=3, page=2)
        assert [h.rank for h in page2] == [4, 5, 6]
        assert search_ranked(q, TermVector(), idx, page_size=3, page=4) == []

    def test_deterministic_total_order(self, small_index):
        q = BooleanQuery(Or((Term("a"), Term("b"), Term("c"))))
        first = rank_all(q, TermVector({"b": 2}), small_index)
        second = rank_all(q, TermVector({"b": 2}), small_index)
        assert first == second
        ranks = [h.rank for h in first]
        assert ranks == list(range(1, len(first) + 1))


class TestParseQuery:
    def test_round_trip_examples(self):
        for text in ("a AND (b OR c)", "a", "a AND b", "(a AND b) AND c", "(a OR b)"):
            assert serialize_query(parse_query(text)) == text

    def test_parse_errors(self):
        for bad in ("", "(a", "a)", "AND a", "a AND", "a OR OR b", "()"):
            with pytest.raises(ParseError):
                parse_query(bad)

    NODES = st.deferred(
        lambda: st.one_of(
            st.sampled_from([Term("a"), Term("b"), Term("c")]),
            TestParseQuery.and_nodes,
            TestParseQuery.or_nodes,
        )
    )
    and_nodes = st.deferred(
        lambda: st.lists(TestParseQuery.NODES, min_size=1, max_size=3).map(
            lambda cs: And(tuple(cs))
        )
    )
    or_nodes = st.deferred(
        lambda: st.lists(
            TestParseQuery.NODES.filter(lambda n: not isinstance(n, Or)),
            min_size=1,
            max_size=3,
        ).map(lambda cs: Or(tuple(cs)))
    )

    @settings(max_examples=200, deadline=None)
    @given(node=NODES)
    def test_parse_serialize_round_trip(self, node):
        q = BooleanQuery(node)
        assert parse_query(serialize_query(q)).root == normalize_tree(node)

    @given(
        keywords=st.lists(
            st.text(alphabet="abcdeghij", min_size=1, max_size=4), min_size=1, max_size=3,
            unique=True,
        )
    )
    def test_built_queries_round_trip(self, keywords):
        q = build_query(keywords)
        assert parse_query(serialize_query(q)).root == normalize_tree(q.root)


class TestMonotonicity:
    def test_adding_known_term_or_group_never_shrinks_results(self, small_index):
        base = BooleanQuery(And((Term("a"),)))
        widened = BooleanQuery(And((Term("a"), Or((Term("a"), Term("zz"))))))
        assert evaluate_boolean(base, small_index) <= evaluate_boolean(widened, small_index)


class TestIndexPersistence:
    def test_round_trip(self, tmp_path, stopwords):
        d = Document(
            doc_id=1,
            url="http://x/1",
            title="T",
            body_terms=["java", "island"],
            metadata=PageMetadata(url="http://x/1", title="T", meta_keywords_raw=("travel",)),
        )
        idx = index_corpus([d], stopwords)
        path = tmp_path / "corpus.idx"
        save_index(idx, path)
        loaded = load_index(path)
        assert loaded.postings == idx.postings
        assert loaded.doc_count == idx.doc_count
        assert loaded.term_doc_freq == idx.term_doc_freq
        assert loaded.docs[1].tf == idx.docs[1].tf
        assert loaded.docs[1].metadata == idx.docs[1].metadata

    def test_magic_header_checked(self, tmp_path):
        path = tmp_path / "bad.idx"
        path.write_bytes(b"NOTANIDX" + b"{}")
        with pytest.raises(ParseError):
            load_index(path)

    def test_header_bytes(self, tmp_path):
        path = tmp_path / "c.idx"
        save_index(index_corpus([]), path)
        assert path.read_bytes().startswith(b"CTXIDX1\n")


class TestCorpusLoading:
    def test_manifest_maps_urls(self, tmp_path, stopwords):
        (tmp_path / "a.html").write_text("<title>A</title><p>java island</p>")
        (tmp_path / "b.html").write_text("<title>B</title><p>python snake</p>")
        (tmp_path / "manifest.json").write_text('{"a.html": "http://site/a"}')
        docs = load_corpus(tmp_path, stopwords)
        assert [d.doc_id for d in docs] == [1, 2]
        assert docs[0].url == "http://site/a"
        assert docs[1].url == "b.html"
        assert "java" in docs[0].body_terms

    def test_term_frequencies_preserved(self, tmp_path, stopwords):
        (tmp_path / "a.html").write_text("<p>java java java island</p>")
        (docs,) = [load_corpus(tmp_path, stopwords)]
        assert docs[0].body_terms.count("java") == 3


class TestAdapters:
    def test_local_adapter_matches_engine(self, small_index):
        adapter = LocalSearchAdapter(small_index, page_size=10)
        hits = adapter.submit("a AND b")
        assert [h.doc_id for h in hits] == [1]

    def test_local_adapter_rejects_garbage(self, small_index):
        with pytest.raises(AdapterError):
            LocalSearchAdapter(small_index).submit("((broken")

    def test_replay_adapter_pages(self):
        fixture = {
            "queries": {
                "java": [
                    [{"doc_id": 1, "url": "http://x/1", "title": "One", "score": 2.0}],
                    [{"doc_id": 2, "url": "http://x/2", "title": "Two", "score": 1.0}],
                ]
            }
        }
        adapter = ReplaySearchAdapter(fixture)
        page1 = adapter.submit("java", 1)
        page2 = adapter.submit("java", 2)
        assert [h.url for h in page1] == ["http://x/1"]
        assert page2[0].rank == 2
        assert adapter.submit("java", 3) == []
        assert adapter.submit("unknown") == []

    def test_failing_adapter_raises(self):
        with pytest.raises(AdapterError):
            FailingSearchAdapter("timeout").submit("java")
