"""Session orchestration: state machine, metrics, and store wiring.

A session walks AwaitingQuery -> SensesOffered -> MetasOffered ->
ConceptsOffered -> ResultsShown -> Completed. Selection stages are
optional (an empty selection skips forward) and a new query re-enters
SensesOffered; baseline (OS3) sessions jump straight from query to
results and never touch the stores.

Metric definitions, chosen to be instrumentable and reproducible:
  * queries  - every submitted query, including ones rejected as empty
               after normalization (a typed attempt is an attempt);
  * clicks   - result-link clicks plus recommendation selections;
  * hits     - result items returned across all requested result pages
               (requesting a page again counts again: it was re-presented);
  * urls     - distinct clicked URLs, so urls <= clicks always;
  * elapsed_ms - completion minus creation time from an injected clock.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import behavior
from .errors import SessionStateError, ValidationError
from .lexicon import Lexicon, candidate_disambiguations, normalize_text
from .profile_store import (
    PersonalProfile,
    ProfileEntry,
    SharedKnowledgeBase,
    load_profile,
    load_sckb,
    merge_into_sckb,
    query_entries,
    record_entry,
)
from .query_builder import build_query, serialize_query
from .recommender import (
    Ontology,
    ScoredCandidate,
    recommend_concepts,
    recommend_meta_keywords,
    recommend_senses,
)
from .search_core import Index, LocalSearchAdapter, SearchAdapter, SearchHit, rank_all
from .vectors import TermVector

PHASES = ("OS1", "OS2", "OS3")

STATE_AWAITING_QUERY = "AwaitingQuery"
STATE_SENSES_OFFERED = "SensesOffered"
STATE_METAS_OFFERED = "MetasOffered"
STATE_CONCEPTS_OFFERED = "ConceptsOffered"
STATE_RESULTS_SHOWN = "ResultsShown"
STATE_COMPLETED = "Completed"

_STAGE_FOR_STATE = {
    STATE_SENSES_OFFERED: "senses",
    STATE_METAS_OFFERED: "metas",
    STATE_CONCEPTS_OFFERED: "concepts",
}

_USER_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")

Clock = Callable[[], int]


def system_clock() -> int:
    """Wall clock in UTC milliseconds."""
    return time.time_ns() // 1_000_000


class SteppingClock:
    """Deterministic clock for tests and simulations: +step per reading."""

    def __init__(self, start: int = 1_700_000_000_000, step: int = 250):
        self.now = start
        self.step = step

    def __call__(self) -> int:
        value = self.now
        self.now += self.step
        return value


@dataclass
class SessionMetrics:
    queries: int = 0
    clicks: int = 0
    hits: int = 0
    urls: int = 0
    elapsed_ms: int | None = None

    def to_json(self) -> dict:
        return {
            "queries": self.queries,
            "clicks": self.clicks,
            "hits": self.hits,
            "urls": self.urls,
            "elapsed_ms": self.elapsed_ms,
        }


@dataclass
class ServiceConfig:
    shared_weight: float = 1.0
    meta_keyword_limit: int = 5
    sense_k: int = 5
    concept_k: int = 5
    query_cap: int = 20
    page_size: int = 10
    sckb_enabled: bool = True
    sharing_enabled: bool = True


@dataclass
class Session:
    session_id: str
    user_id: str
    phase: str
    task_id: str
    state: str = STATE_AWAITING_QUERY
    metrics: SessionMetrics = field(default_factory=SessionMetrics)
    started_at: int = 0
    completed_at: int | None = None
    found: bool | None = None
    entry: ProfileEntry | None = None
    context: TermVector = field(default_factory=TermVector)
    presented_urls: set[str] = field(default_factory=set)
    clicked_urls: set[str] = field(default_factory=set)
    offered: dict[str, ScoredCandidate] = field(default_factory=dict)
    offer_payload: dict | None = None
    results: list[SearchHit] = field(default_factory=list)
    results_query: str | None = None

    @property
    def sckb_read_enabled(self) -> bool:
        return self.phase == "OS2"

    @property
    def contextual(self) -> bool:
        return self.phase != "OS3"


class SearchService:
    """Wires the lexicon, stores, recommender, engine, and sessions together."""

    def __init__(
        self,
        *,
        lexicon: Lexicon,
        stopwords: frozenset[str],
        ontology: Ontology,
        index: Index,
        store_dir: str | Path,
        adapter: SearchAdapter | None = None,
        config: ServiceConfig | None = None,
        clock: Clock | None = None,
    ):
        self.lexicon = lexicon
        self.stopwords = stopwords
        self.ontology = ontology
        self.index = index
        self.config = config or ServiceConfig()
        self.adapter = adapter or LocalSearchAdapter(index, self.config.page_size)
        self.clock = clock or system_clock
        self.store_dir = Path(store_dir)
        self.sessions: dict[str, Session] = {}
        self._profiles: dict[str, PersonalProfile] = {}
        self._sckb: SharedKnowledgeBase | None = None
        self._session_seq = 0
        self._entry_seq: dict[str, int] = {}
        self._url_to_doc = {entry.url: doc_id for doc_id, entry in index.docs.items()}

    # -- store access -------------------------------------------------------

    def _profile_path(self, user_id: str) -> Path:
        return self.store_dir / "profiles" / f"{user_id}.jsonl"

    def profile(self, user_id: str) -> PersonalProfile:
        if user_id not in self._profiles:
            self._profiles[user_id] = load_profile(self._profile_path(user_id), user_id)
        return self._profiles[user_id]

    def sckb(self) -> SharedKnowledgeBase:
        if self._sckb is None:
            self._sckb = load_sckb(self.store_dir / "sckb.jsonl")
        return self._sckb

    def sckb_stats(self) -> dict:
        stats = {"enabled": self.config.sckb_enabled}
        stats.update(self.sckb().stats())
        return stats

    def profile_summary(self, user_id: str, limit: int = 20) -> dict:
        self._check_user_id(user_id)
        profile = self.profile(user_id)
        return {
            "user_id": user_id,
            "entry_count": len(profile.entries),
            "entries": query_entries(profile, limit),
        }

    # -- session lifecycle ----------------------------------------------------

    def _check_user_id(self, user_id: str) -> None:
        if not _USER_ID_RE.match(user_id or ""):
            raise ValidationError(f"invalid user id {user_id!r}")

    def create_session(self, user_id: str, phase: str, task_id: str = "") -> Session:
        if phase not in PHASES:
            raise ValidationError(f"unknown phase {phase!r}; expected one of {PHASES}")
        self._check_user_id(user_id)
        self._session_seq += 1
        session = Session(
            session_id=f"s{self._session_seq}",
            user_id=user_id,
            phase=phase,
            task_id=task_id,
            started_at=self.clock(),
        )
        self.sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(f"unknown session {session_id!r}")
        return session

    def _ensure_active(self, session: Session) -> None:
        if session.state == STATE_COMPLETED:
            raise SessionStateError(f"session {session.session_id} is completed")

    def _next_entry_id(self, user_id: str) -> str:
        seq = self._entry_seq.get(user_id, 0) + 1
        self._entry_seq[user_id] = seq
        return f"{user_id}-e{seq}"

    # -- interaction ----------------------------------------------------------

    def submit_query(self, session_id: str, raw_query: str) -> dict:
        session = self.get_session(session_id)
        self._ensure_active(session)
        session.metrics.queries += 1
        keywords = normalize_text(raw_query, self.stopwords)
        if not keywords:
            raise ValidationError("query is empty after normalization")
        if not session.contextual:
            query = build_query(keywords, cap=self.config.query_cap)
            session.results_query = serialize_query(query)
            hits = self.adapter.submit(session.results_query, page=1)
            self._present(session, hits)
            session.state = STATE_RESULTS_SHOWN
            return self._results_payload(session, hits, page=1)
        # superseded attempts are still captured interactions
        if session.entry is not None:
            self._persist_entry(session.entry)
        session.entry = ProfileEntry(
            entry_id=self._next_entry_id(session.user_id),
            user_id=session.user_id,
            timestamp=self.clock(),
            raw_query=raw_query,
            query_keywords=keywords,
        )
        session.context = TermVector.from_terms(keywords)
        candidates = candidate_disambiguations(self.lexicon, keywords, self.stopwords)
        sckb = self.sckb() if (session.sckb_read_enabled and self.config.sckb_enabled) else None
        senses = recommend_senses(
            keywords,
            candidates,
            self.profile(session.user_id),
            sckb,
            k=self.config.sense_k,
            shared_weight=self.config.shared_weight,
        )
        session.state = STATE_SENSES_OFFERED
        return self._offer_senses(session, senses)

    def _offer_senses(self, session: Session, senses: dict[str, list[ScoredCandidate]]) -> dict:
        session.offered = {}
        payload: dict[str, list[dict]] = {}
        for keyword, candidates in senses.items():
            rows = []
            for candidate in candidates:
                term = candidate.payload
                candidate_id = f"{term.keyword}::{term.sense_id}"
                session.offered[candidate_id] = candidate
                rows.append(
                    {
                        "id": candidate_id,
                        "keyword": term.keyword,
                        "sense_id": term.sense_id,
                        "words": list(term.words),
                        "score": candidate.score,
                        "source": candidate.source,
                    }
                )
            payload[keyword] = rows
        session.offer_payload = {"stage": "senses", "senses": payload}
        return self._stage_response(session)

    def _offer_metas(self, session: Session) -> dict:
        sckb = self.sckb() if (session.sckb_read_enabled and self.config.sckb_enabled) else None
        metas = recommend_meta_keywords(
            session.context,
            self.profile(session.user_id),
            sckb,
            limit=self.config.meta_keyword_limit,
        )
        session.offered = {}
        rows = []
        for candidate in metas:
            candidate_id = "+".join(candidate.payload.words)
            session.offered[candidate_id] = candidate
            rows.append(
                {
                    "id": candidate_id,
                    "words": list(candidate.payload.words),
                    "score": candidate.score,
                    "source": candidate.source,
                }
            )
        session.offer_payload = {"stage": "metas", "meta_keywords": rows}
        return self._stage_response(session)

    def _offer_concepts(self, session: Session) -> dict:
        concepts = recommend_concepts(session.context, self.ontology, k=self.config.concept_k)
        session.offered = {}
        rows = []
        for candidate in concepts:
            concept = candidate.payload
            session.offered[concept.concept_id] = candidate
            rows.append(
                {
                    "id": concept.concept_id,
                    "label": concept.label,
                    "related_terms": list(concept.related_terms),
                    "score": candidate.score,
                    "source": candidate.source,
                }
            )
        session.offer_payload = {"stage": "concepts", "concepts": rows}
        return self._stage_response(session)

    def _query_preview(self, session: Session) -> str:
        """Serialized form of the query the current selections would run."""
        entry = session.entry
        if entry is None:
            return ""
        concepts = [self.ontology.get(cid) for cid in entry.selected_concepts]
        query = build_query(
            entry.query_keywords,
            entry.selected_terms,
            entry.selected_meta_keywords,
            [c for c in concepts if c is not None],
            cap=self.config.query_cap,
        )
        return serialize_query(query)

    def _stage_response(self, session: Session) -> dict:
        response = {
            "session_id": session.session_id,
            "state": session.state,
            "metrics": session.metrics.to_json(),
            "query_preview": self._query_preview(session),
        }
        response.update(session.offer_payload or {})
        return response

    def current_recommendations(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        if session.state not in _STAGE_FOR_STATE:
            raise SessionStateError(
                f"no recommendations pending in state {session.state}"
            )
        return self._stage_response(session)

    def apply_selection(self, session_id: str, stage: str, chosen_ids: list[str]) -> dict:
        session = self.get_session(session_id)
        self._ensure_active(session)
        expected = _STAGE_FOR_STATE.get(session.state)
        if expected is None:
            raise SessionStateError(
                f"cannot select in state {session.state}; submit a query first"
            )
        if stage != expected:
            raise SessionStateError(
                f"selection stage {stage!r} out of order; expected {expected!r}"
            )
        chosen: list[ScoredCandidate] = []
        for candidate_id in chosen_ids:
            candidate = session.offered.get(candidate_id)
            if candidate is None:
                raise ValidationError(f"unknown {stage} candidate id {candidate_id!r}")
            chosen.append(candidate)
        session.metrics.clicks += len(chosen)
        entry = session.entry
        assert entry is not None  # selection stages exist only after a query
        if stage == "senses":
            for candidate in chosen:
                entry.selected_terms.append(candidate.payload)
                session.context = session.context.merged(
                    TermVector.from_terms(candidate.payload.words)
                )
            session.state = STATE_METAS_OFFERED
            return self._offer_metas(session)
        if stage == "metas":
            for candidate in chosen:
                entry.selected_meta_keywords.append(candidate.payload)
                session.context = session.context.merged(
                    TermVector.from_terms(candidate.payload.words)
                )
            session.state = STATE_CONCEPTS_OFFERED
            return self._offer_concepts(session)
        for candidate in chosen:
            entry.selected_concepts.append(candidate.payload.concept_id)
            session.context = session.context.merged(
                TermVector.from_terms(dict.fromkeys(candidate.payload.related_terms))
            )
        return self._run_contextual_search(session)

    def _run_contextual_search(self, session: Session) -> dict:
        entry = session.entry
        assert entry is not None
        concepts = [
            self.ontology.get(concept_id) for concept_id in entry.selected_concepts
        ]
        query = build_query(
            entry.query_keywords,
            entry.selected_terms,
            entry.selected_meta_keywords,
            [c for c in concepts if c is not None],
            cap=self.config.query_cap,
        )
        session.results_query = serialize_query(query)
        session.results = rank_all(query, session.context, self.index)
        page_hits = session.results[: self.config.page_size]
        self._present(session, page_hits)
        session.state = STATE_RESULTS_SHOWN
        session.offered = {}
        session.offer_payload = None
        return self._results_payload(session, page_hits, page=1)

    def _present(self, session: Session, hits: list[SearchHit]) -> None:
        session.metrics.hits += len(hits)
        session.presented_urls.update(hit.url for hit in hits)

    def _results_payload(self, session: Session, hits: list[SearchHit], page: int) -> dict:
        return {
            "session_id": session.session_id,
            "state": session.state,
            "stage": "results",
            "query": session.results_query,
            "page": page,
            "hits": [
                {
                    "doc_id": hit.doc_id,
                    "url": hit.url,
                    "title": hit.title,
                    "score": hit.score,
                    "rank": hit.rank,
                }
                for hit in hits
            ],
            "metrics": session.metrics.to_json(),
        }

    def get_results(self, session_id: str, page: int = 1) -> dict:
        session = self.get_session(session_id)
        self._ensure_active(session)
        if session.results_query is None:
            raise SessionStateError("no results available; submit a query first")
        if page < 1:
            raise ValidationError(f"page must be >= 1, got {page}")
        if session.contextual:
            start = (page - 1) * self.config.page_size
            hits = session.results[start : start + self.config.page_size]
        else:
            hits = self.adapter.submit(session.results_query, page=page)
        self._present(session, hits)
        return self._results_payload(session, hits, page=page)

    def report_click(self, session_id: str, url: str) -> SessionMetrics:
        session = self.get_session(session_id)
        self._ensure_active(session)
        if url not in session.presented_urls:
            raise ValidationError(f"url was never presented in this session: {url}")
        session.metrics.clicks += 1
        if url not in session.clicked_urls:
            session.clicked_urls.add(url)
            session.metrics.urls += 1
        if session.contextual and session.entry is not None:
            document = self._document_for_url(url)
            behavior.record_click(
                session.entry, url, document, self.stopwords, session.presented_urls
            )
        return session.metrics

    def _document_for_url(self, url: str) -> str:
        doc_id = self._url_to_doc.get(url)
        if doc_id is None:
            return ""
        meta = self.index.docs[doc_id].metadata
        keywords = ", ".join(meta.meta_keywords_raw)
        return (
            f"<html><head><title>{meta.title}</title>"
            f'<meta name="keywords" content="{keywords}">'
            f'<meta name="description" content="{meta.description}">'
            f"</head><body></body></html>"
        )

    def complete_task(self, session_id: str, found: bool) -> SessionMetrics:
        session = self.get_session(session_id)
        if session.state == STATE_COMPLETED:
            raise SessionStateError(f"session {session.session_id} already completed")
        session.completed_at = self.clock()
        session.metrics.elapsed_ms = session.completed_at - session.started_at
        session.found = found
        if session.contextual and session.entry is not None:
            self._persist_entry(session.entry)
            if self.config.sharing_enabled:
                merge_into_sckb(self.sckb(), session.entry)
            session.entry = None
        session.state = STATE_COMPLETED
        return session.metrics

    def _persist_entry(self, entry: ProfileEntry) -> None:
        record_entry(self.profile(entry.user_id), entry)
