"""Local corpus index, Boolean evaluation, and TF-IDF ranking.

Also defines the adapter contract behind which an external engine (the
baseline phase's backend) can be swapped in, plus a replay adapter that
serves canned results from a fixture file for hermetic tests.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Iterable, Protocol

from .behavior import PageMetadata, extract_page_metadata, extract_page_text
from .errors import AdapterError, ParseError, ValidationError
from .lexicon import normalize_tokens
from .query_builder import And, BooleanQuery, Node, Or, Term
from .vectors import TermVector, cosine

INDEX_MAGIC = b"CTXIDX1\n"


@dataclass
class Document:
    doc_id: int
    url: str
    title: str
    body_terms: list[str]
    metadata: PageMetadata


@dataclass(frozen=True)
class SearchHit:
    doc_id: int
    url: str
    title: str
    score: float
    rank: int


@dataclass
class _DocEntry:
    url: str
    title: str
    tf: dict[str, int]
    metadata: PageMetadata


@dataclass
class Index:
    """Immutable-after-build inverted index with per-document frequencies."""

    postings: dict[str, list[int]] = field(default_factory=dict)
    doc_count: int = 0
    term_doc_freq: dict[str, int] = field(default_factory=dict)
    docs: dict[int, _DocEntry] = field(default_factory=dict)

    def idf(self, term: str) -> float:
        df = self.term_doc_freq.get(term, 0)
        if df == 0:
            return 0.0
        return math.log(self.doc_count / df)

    def doc_by_url(self, url: str) -> tuple[int, _DocEntry] | None:
        for doc_id, entry in self.docs.items():
            if entry.url == url:
                return doc_id, entry
        return None


def _doc_terms(doc: Document, stopwords: Collection[str]) -> list[str]:
    terms = list(doc.body_terms)
    terms.extend(normalize_tokens(doc.title, stopwords))
    for raw in doc.metadata.meta_keywords_raw:
        terms.extend(normalize_tokens(raw, stopwords))
    return terms


def index_corpus(docs: Iterable[Document], stopwords: Collection[str] = frozenset()) -> Index:
    """Build postings over body, title, and meta-keyword terms."""
    index = Index()
    for doc in docs:
        if doc.doc_id in index.docs:
            raise ValidationError(f"duplicate doc_id {doc.doc_id}")
        tf = Counter(_doc_terms(doc, stopwords))
        index.docs[doc.doc_id] = _DocEntry(
            url=doc.url, title=doc.title, tf=dict(tf), metadata=doc.metadata
        )
    index.doc_count = len(index.docs)
    postings: dict[str, set[int]] = {}
    for doc_id, entry in index.docs.items():
        for term in entry.tf:
            postings.setdefault(term, set()).add(doc_id)
    index.postings = {term: sorted(ids) for term, ids in sorted(postings.items())}
    index.term_doc_freq = {term: len(ids) for term, ids in index.postings.items()}
    return index


def evaluate_boolean(query: BooleanQuery, index: Index) -> set[int]:
    """Exact set semantics: Term -> postings, And -> ∩, Or -> ∪."""
    return _evaluate(query.root, index)


def _evaluate(node: Node, index: Index) -> set[int]:
    if isinstance(node, Term):
        return set(index.postings.get(node.term, ()))
    child_sets = [_evaluate(child, index) for child in node.children]
    result = child_sets[0]
    for other in child_sets[1:]:
        result = result & other if isinstance(node, And) else result | other
    return result


def _doc_tfidf(entry: _DocEntry, index: Index) -> TermVector:
    return TermVector({term: tf * index.idf(term) for term, tf in entry.tf.items()})


def rank_all(query: BooleanQuery, context: TermVector, index: Index) -> list[SearchHit]:
    """Every matching document, ranked.

    Scores are the cosine between the document's TF-IDF vector and the
    IDF-weighted context; if the weighted context vanishes (no context,
    or no context term occurs in the corpus) the score falls back to the
    summed IDF of the query's terms present in the document. Ordering is
    score descending, then doc_id ascending; ranks start at 1.
    """
    candidates = sorted(evaluate_boolean(query, index))
    ctx_weighted = TermVector(
        {term: weight * index.idf(term) for term, weight in context.weights.items()}
    )
    query_terms = dict.fromkeys(query.leaves())
    scored = []
    for doc_id in candidates:
        entry = index.docs[doc_id]
        if ctx_weighted:
            score = cosine(_doc_tfidf(entry, index), ctx_weighted)
        else:
            score = sum(index.idf(term) for term in query_terms if term in entry.tf)
        scored.append((doc_id, entry, score))
    scored.sort(key=lambda item: (-item[2], item[0]))
    return [
        SearchHit(doc_id=doc_id, url=entry.url, title=entry.title, score=score, rank=rank)
        for rank, (doc_id, entry, score) in enumerate(scored, start=1)
    ]


def search_ranked(
    query: BooleanQuery,
    context: TermVector,
    index: Index,
    page_size: int = 10,
    page: int = 1,
) -> list[SearchHit]:
    """One page of ranked hits; pages beyond the results are empty."""
    if page_size < 1:
        raise ValidationError(f"page_size must be >= 1, got {page_size}")
    if page < 1:
        raise ValidationError(f"page must be >= 1, got {page}")
    hits = rank_all(query, context, index)
    start = (page - 1) * page_size
    return hits[start : start + page_size]


# --- query string parsing -------------------------------------------------

_QUERY_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


def parse_query(text: str) -> BooleanQuery:
    """Parse the serialized infix form back into a query tree.

    Grammar: ``or := and (OR and)*``, ``and := atom (AND atom)*``,
    ``atom := term | '(' or ')'``. AND binds tighter than OR.
    """
    tokens = _QUERY_TOKEN_RE.findall(text)
    if not tokens:
        raise ParseError("empty query string")
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        token = tokens[pos]
        pos += 1
        return token

    def parse_or() -> Node:
        nodes = [parse_and()]
        while peek() == "OR":
            take()
            nodes.append(parse_and())
        if len(nodes) == 1:
            return nodes[0]
        flat: list[Node] = []
        for node in nodes:
            flat.extend(node.children if isinstance(node, Or) else (node,))
        return Or(tuple(flat))

    def parse_and() -> Node:
        nodes = [parse_atom()]
        while peek() == "AND":
            take()
            nodes.append(parse_atom())
        return nodes[0] if len(nodes) == 1 else And(tuple(nodes))

    def parse_atom() -> Node:
        token = peek()
        if token is None:
            raise ParseError("unexpected end of query")
        if token == "(":
            take()
            node = parse_or()
            if peek() != ")":
                raise ParseError("missing closing parenthesis")
            take()
            return node
        if token in (")", "AND", "OR"):
            raise ParseError(f"unexpected token {token!r}")
        return Term(take())

    root = parse_or()
    if pos != len(tokens):
        raise ParseError(f"trailing tokens after query: {tokens[pos:]!r}")
    return BooleanQuery(root=root)


def normalize_tree(node: Node) -> Node:
    """Collapse single-child groups and flatten OR-in-OR.

    ``parse_query(serialize_query(q))`` equals ``normalize_tree`` of the
    original tree, since serialization cannot represent 1-child groups.
    """
    if isinstance(node, Term):
        return node
    children = [normalize_tree(child) for child in node.children]
    if isinstance(node, Or):
        flat: list[Node] = []
        for child in children:
            flat.extend(child.children if isinstance(child, Or) else (child,))
        children = flat
    if len(children) == 1:
        return children[0]
    return And(tuple(children)) if isinstance(node, And) else Or(tuple(children))


# --- corpus loading and index persistence ----------------------------------


def load_corpus(
    corpus_dir: str | Path,
    stopwords: Collection[str],
    manifest: dict[str, str] | None = None,
) -> list[Document]:
    """Read one ``.html`` document per file, in sorted filename order.

    ``manifest`` maps filename to URL; unlisted files use their filename
    as URL. Doc ids are assigned 1-based in filename order.
    """
    corpus_dir = Path(corpus_dir)
    if manifest is None:
        manifest_path = corpus_dir / "manifest.json"
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        else:
            manifest = {}
    docs = []
    for doc_id, path in enumerate(sorted(corpus_dir.glob("*.html")), start=1):
        raw = path.read_text(encoding="utf-8")
        url = manifest.get(path.name, path.name)
        metadata = extract_page_metadata(raw, url)
        body_terms = normalize_tokens(extract_page_text(raw), stopwords)
        docs.append(
            Document(
                doc_id=doc_id,
                url=url,
                title=metadata.title,
                body_terms=body_terms,
                metadata=metadata,
            )
        )
    return docs


def save_index(index: Index, path: str | Path) -> None:
    """Write the index file: the ``CTXIDX1`` magic line, then JSON."""
    payload = {
        "doc_count": index.doc_count,
        "postings": index.postings,
        "term_doc_freq": index.term_doc_freq,
        "docs": {
            str(doc_id): {
                "url": entry.url,
                "title": entry.title,
                "tf": entry.tf,
                "metadata": {
                    "url": entry.metadata.url,
                    "title": entry.metadata.title,
                    "meta_keywords_raw": list(entry.metadata.meta_keywords_raw),
                    "description": entry.metadata.description,
                },
            }
            for doc_id, entry in index.docs.items()
        },
    }
    data = INDEX_MAGIC + json.dumps(payload, sort_keys=True).encode("utf-8")
    Path(path).write_bytes(data)


def load_index(path: str | Path) -> Index:
    data = Path(path).read_bytes()
    if not data.startswith(INDEX_MAGIC):
        raise ParseError(f"{path} is not a ctxsearch index (bad magic header)")
    try:
        payload = json.loads(data[len(INDEX_MAGIC) :])
    except json.JSONDecodeError as exc:
        raise ParseError(f"corrupt index payload: {exc.msg}") from exc
    index = Index(
        postings={t: list(ids) for t, ids in payload["postings"].items()},
        doc_count=payload["doc_count"],
        term_doc_freq=dict(payload["term_doc_freq"]),
    )
    for doc_id_str, doc in payload["docs"].items():
        meta = doc["metadata"]
        index.docs[int(doc_id_str)] = _DocEntry(
            url=doc["url"],
            title=doc["title"],
            tf={t: int(v) for t, v in doc["tf"].items()},
            metadata=PageMetadata(
                url=meta["url"],
                title=meta["title"],
                meta_keywords_raw=tuple(meta["meta_keywords_raw"]),
                description=meta["description"],
            ),
        )
    return index


# --- adapter contract -------------------------------------------------------


class SearchAdapter(Protocol):
    """Contract for pluggable result backends (the baseline engine)."""

    def submit(self, query: str, page: int = 1) -> list[SearchHit]:
        """Ranked hits for a serialized Boolean query, one page at a time."""
        ...  # pragma: no cover


class LocalSearchAdapter:
    """Baseline engine over the local index.

    Parses the submitted query string, evaluates it, and ranks by TF-IDF
    cosine against the query's own terms (no user context).
    """

    def __init__(self, index: Index, page_size: int = 10):
        self.index = index
        self.page_size = page_size

    def submit(self, query: str, page: int = 1) -> list[SearchHit]:
        try:
            parsed = parse_query(query)
        except ParseError as exc:
            raise AdapterError(f"backend rejected query: {exc}") from exc
        context = TermVector.from_terms(dict.fromkeys(parsed.leaves()))
        return search_ranked(parsed, context, self.index, self.page_size, page)


class ReplaySearchAdapter:
    """Serves canned hits recorded in a fixture file.

    Fixture format: ``{"queries": {"<query>": [[hit, ...], ...pages]}}``
    where each hit is ``{doc_id, url, title, score}``. Unknown queries
    return no hits; pages past the end are empty.
    """

    def __init__(self, fixture: str | Path | dict):
        if not isinstance(fixture, dict):
            fixture = json.loads(Path(fixture).read_text(encoding="utf-8"))
        self.queries: dict[str, list[list[dict]]] = fixture.get("queries", {})

    def submit(self, query: str, page: int = 1) -> list[SearchHit]:
        pages = self.queries.get(query, [])
        if page < 1 or page > len(pages):
            return []
        base_rank = sum(len(p) for p in pages[: page - 1])
        return [
            SearchHit(
                doc_id=hit["doc_id"],
                url=hit["url"],
                title=hit.get("title", ""),
                score=float(hit.get("score", 0.0)),
                rank=base_rank + offset,
            )
            for offset, hit in enumerate(pages[page - 1], start=1)
        ]


class FailingSearchAdapter:
    """Adapter that always fails; stands in for an unreachable backend."""

    def __init__(self, reason: str = "backend unreachable"):
        self.reason = reason

    def submit(self, query: str, page: int = 1) -> list[SearchHit]:
        raise AdapterError(self.reason)
