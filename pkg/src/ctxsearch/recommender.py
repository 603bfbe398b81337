"""Ranking of sense candidates, meta keywords, and ontology concepts.

Matching against stores uses cosine similarity over sparse term vectors
with a two-step nearest-neighbor: an inverted index over entry terms
prunes to entries sharing at least one term with the probe (everything
else scores exactly 0 under cosine), then exact cosine ranks the
survivors. The result is identical to brute force.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .behavior import META_KEYWORD_WORD_CAP, MetaKeyword
from .errors import ParseError, ValidationError
from .lexicon import DisambiguatedTerm
from .profile_store import PersonalProfile, SharedKnowledgeBase, entry_vector
from .vectors import TermVector, cosine

SOURCE_PERSONAL = "personal"
SOURCE_SHARED = "shared"
SOURCE_LEXICON_ORDER = "lexicon-order"
SOURCE_ONTOLOGY = "ontology"


@dataclass(frozen=True)
class Concept:
    concept_id: str
    label: str
    related_terms: tuple[str, ...]
    parent_id: str | None = None

    def __post_init__(self):
        if not self.related_terms:
            raise ValidationError(f"concept {self.concept_id!r} has no related terms")


class Ontology:
    """Concepts keyed by id, file order preserved; parents acyclic."""

    def __init__(self, concepts: Iterable[Concept] = ()):
        self.concepts: dict[str, Concept] = {}
        for concept in concepts:
            if concept.concept_id in self.concepts:
                raise ValidationError(f"duplicate concept id {concept.concept_id!r}")
            self.concepts[concept.concept_id] = concept
        self._check_parents()

    def _check_parents(self) -> None:
        for concept in self.concepts.values():
            if concept.parent_id is not None and concept.parent_id not in self.concepts:
                raise ValidationError(
                    f"concept {concept.concept_id!r} references unknown parent "
                    f"{concept.parent_id!r}"
                )
        # walk parent chains; a repeat within one chain is a cycle
        for concept in self.concepts.values():
            seen = {concept.concept_id}
            parent = concept.parent_id
            while parent is not None:
                if parent in seen:
                    raise ValidationError(f"concept parent cycle through {parent!r}")
                seen.add(parent)
                parent = self.concepts[parent].parent_id

    def get(self, concept_id: str) -> Concept | None:
        return self.concepts.get(concept_id)

    def __len__(self) -> int:
        return len(self.concepts)


@dataclass
class ScoredCandidate:
    """A recommendation payload with its score and provenance."""

    payload: Any
    score: float
    source: str

    def __post_init__(self):
        if not -1e-12 <= self.score <= 1 + 1e-12:
            raise ValidationError(f"candidate score outside [0, 1]: {self.score}")


def load_ontology(path: str | Path) -> Ontology:
    """Load a tab-separated concept file.

    Format: ``concept_id<TAB>label<TAB>term1,term2,...<TAB>parent_id``
    with the parent field optional; ``#`` comments and blank lines are
    skipped. Related terms must be stored in normalized form.
    """
    path = Path(path)
    concepts: list[Concept] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in (3, 4):
                raise ParseError(
                    f"expected 3 or 4 tab-separated fields, got {len(fields)}", line=lineno
                )
            concept_id, label, terms_field = (f.strip() for f in fields[:3])
            if not concept_id or not label:
                raise ParseError("empty concept id or label", line=lineno)
            terms = tuple(t.strip() for t in terms_field.split(",") if t.strip())
            if not terms:
                raise ParseError(f"concept {concept_id!r} has no related terms", line=lineno)
            parent = fields[3].strip() if len(fields) == 4 and fields[3].strip() else None
            concepts.append(
                Concept(concept_id=concept_id, label=label, related_terms=terms, parent_id=parent)
            )
    return Ontology(concepts)


def nn_two_step(
    query: TermVector,
    entries: Sequence[tuple[Any, TermVector]],
    k: int,
) -> list[tuple[Any, float]]:
    """Top-k entries by cosine, pruned through an inverted index.

    Step one unions the postings of the query's terms; step two scores
    the candidates exactly. Zero-score entries are excluded and ties
    break by ascending id, so the output equals brute-force cosine top-k.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    postings: dict[str, list[int]] = defaultdict(list)
    for idx, (_, vec) in enumerate(entries):
        for term in vec.weights:
            postings[term].append(idx)
    candidates: set[int] = set()
    for term in query.weights:
        candidates.update(postings.get(term, ()))
    scored: list[tuple[Any, float]] = []
    for idx in candidates:
        entry_id, vec = entries[idx]
        score = cosine(query, vec)
        if score > 0.0:
            scored.append((entry_id, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def _best_match(probe: TermVector, entries: Sequence[tuple[Any, TermVector]]) -> float:
    top = nn_two_step(probe, entries, 1) if entries else []
    return top[0][1] if top else 0.0


def _store_vectors(store) -> list[tuple[Any, TermVector]]:
    if store is None:
        return []
    return [(entry.entry_id, entry_vector(entry)) for entry in store.entries]


def recommend_senses(
    query_keywords: Sequence[str],
    candidates: dict[str, list[DisambiguatedTerm]],
    profile: PersonalProfile | None,
    sckb: SharedKnowledgeBase | None = None,
    k: int = 5,
    shared_weight: float = 1.0,
) -> dict[str, list[ScoredCandidate]]:
    """Rank each keyword's sense candidates against the stores.

    A sense's score is the best cosine between its word vector and any
    pooled entry vector, with the shared-store contribution multiplied by
    ``shared_weight`` and the result clamped to 1. When nothing matches
    (cold start), candidates keep lexicon file order with score 0 and
    source "lexicon-order".
    """
    personal = _store_vectors(profile)
    shared = _store_vectors(sckb)
    out: dict[str, list[ScoredCandidate]] = {}
    for keyword in query_keywords:
        ranked: list[tuple[float, int, ScoredCandidate]] = []
        for position, term in enumerate(candidates.get(keyword, ())):
            probe = TermVector.from_terms(term.words)
            personal_score = _best_match(probe, personal)
            shared_score = _best_match(probe, shared) * shared_weight
            score = min(max(personal_score, shared_score), 1.0)
            if score <= 0.0:
                score, source = 0.0, SOURCE_LEXICON_ORDER
            elif personal_score >= shared_score:
                source = SOURCE_PERSONAL
            else:
                source = SOURCE_SHARED
            payload = replace(term, score=score)
            ranked.append((score, position, ScoredCandidate(payload, score, source)))
        ranked.sort(key=lambda item: (-item[0], item[1]))
        out[keyword] = [candidate for _, _, candidate in ranked[:k]]
    return out


def recommend_meta_keywords(
    context: TermVector,
    profile: PersonalProfile | None,
    sckb: SharedKnowledgeBase | None = None,
    limit: int = 5,
) -> list[ScoredCandidate]:
    """Top meta keywords pooled from the stores, scored against the context.

    Selected and extracted meta keywords from all entries are pooled,
    deduplicated by word list (personal store first), scored by cosine
    against the context, and capped at ``limit``. Zero-score candidates
    are dropped: with no overlap there is no evidence to recommend on.
    """
    pool: dict[tuple[str, ...], str] = {}
    for store, source in ((profile, SOURCE_PERSONAL), (sckb, SOURCE_SHARED)):
        if store is None:
            continue
        for entry in store.entries:
            for mk in (*entry.selected_meta_keywords, *entry.extracted_meta_keywords):
                if len(mk.words) > META_KEYWORD_WORD_CAP:
                    raise ValidationError(f"stored meta keyword exceeds word cap: {mk.words}")
                pool.setdefault(mk.words, source)
    scored: list[ScoredCandidate] = []
    for words, source in pool.items():
        score = cosine(TermVector.from_terms(words), context)
        if score > 0.0:
            scored.append(ScoredCandidate(MetaKeyword(words=words), score, source))
    scored.sort(key=lambda c: (-c.score, c.payload.words))
    return scored[: max(limit, 0)]


def recommend_concepts(
    context: TermVector,
    ontology: Ontology,
    k: int = 5,
) -> list[ScoredCandidate]:
    """Top-k concepts by cosine between unit-weight related terms and context."""
    scored: list[ScoredCandidate] = []
    for concept in ontology.concepts.values():
        probe = TermVector.from_terms(dict.fromkeys(concept.related_terms))
        score = cosine(probe, context)
        if score > 0.0:
            scored.append(ScoredCandidate(concept, score, SOURCE_ONTOLOGY))
    scored.sort(key=lambda c: (-c.score, c.payload.concept_id))
    return scored[: max(k, 0)]
