"""Contextual web search: profile-driven query expansion and evaluation."""

from .behavior import MetaKeyword, PageMetadata, build_meta_keywords, extract_page_metadata
from .errors import (
    AdapterError,
    CtxSearchError,
    HarnessError,
    ParseError,
    SessionStateError,
    StorageError,
    ValidationError,
)
from .lexicon import (
    DisambiguatedTerm,
    Lexicon,
    Sense,
    candidate_disambiguations,
    load_lexicon,
    load_stopwords,
    normalize_text,
)
from .profile_store import (
    PersonalProfile,
    ProfileEntry,
    SharedKnowledgeBase,
    entry_vector,
    load_store,
    merge_into_sckb,
    query_entries,
    record_entry,
    save_store,
)
from .query_builder import And, BooleanQuery, Or, Term, build_query, serialize_query
from .recommender import (
    Concept,
    Ontology,
    ScoredCandidate,
    load_ontology,
    nn_two_step,
    recommend_concepts,
    recommend_meta_keywords,
    recommend_senses,
)
from .search_core import (
    Document,
    Index,
    LocalSearchAdapter,
    ReplaySearchAdapter,
    SearchHit,
    evaluate_boolean,
    index_corpus,
    parse_query,
    search_ranked,
)
from .session import SearchService, ServiceConfig, Session, SessionMetrics, SteppingClock
from .stats import kruskal_wallis
from .vectors import TermVector, cosine

__version__ = "0.1.0"
