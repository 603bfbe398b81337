"""Personal contextual profiles and the shared knowledge base.

Stores are append-only JSON Lines files: one ``ProfileEntry`` object per
line, field names exactly as on the dataclass. A shared-knowledge-base
file is the same format with ``user_id`` blanked; entries whose term
vectors are identical are folded into one record with a contributor
count, both in memory and when a log is re-read.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from .behavior import MetaKeyword
from .errors import ParseError, StorageError, ValidationError
from .lexicon import DisambiguatedTerm, tokenize
from .stemming import stem_fixed
from .vectors import TermVector


@dataclass
class ProfileEntry:
    """One captured search interaction."""

    entry_id: str
    user_id: str
    timestamp: int
    raw_query: str
    query_keywords: list[str]
    selected_terms: list[DisambiguatedTerm] = field(default_factory=list)
    selected_meta_keywords: list[MetaKeyword] = field(default_factory=list)
    selected_concepts: list[str] = field(default_factory=list)
    clicked_urls: list[str] = field(default_factory=list)
    extracted_meta_keywords: list[MetaKeyword] = field(default_factory=list)

    def __post_init__(self):
        if not self.entry_id:
            raise ValidationError("profile entry requires an entry_id")
        if not self.query_keywords:
            raise ValidationError("profile entry requires non-empty query_keywords")
        if self.timestamp < 0:
            raise ValidationError("profile entry timestamp must be >= 0")


def entry_to_json(entry: ProfileEntry) -> dict:
    return {
        "entry_id": entry.entry_id,
        "user_id": entry.user_id,
        "timestamp": entry.timestamp,
        "raw_query": entry.raw_query,
        "query_keywords": list(entry.query_keywords),
        "selected_terms": [
            {
                "keyword": t.keyword,
                "sense_id": t.sense_id,
                "words": list(t.words),
                "score": t.score,
            }
            for t in entry.selected_terms
        ],
        "selected_meta_keywords": [list(mk.words) for mk in entry.selected_meta_keywords],
        "selected_concepts": list(entry.selected_concepts),
        "clicked_urls": list(entry.clicked_urls),
        "extracted_meta_keywords": [list(mk.words) for mk in entry.extracted_meta_keywords],
    }


def entry_from_json(data: dict) -> ProfileEntry:
    try:
        return ProfileEntry(
            entry_id=data["entry_id"],
            user_id=data["user_id"],
            timestamp=int(data["timestamp"]),
            raw_query=data["raw_query"],
            query_keywords=list(data["query_keywords"]),
            selected_terms=[
                DisambiguatedTerm(
                    keyword=t["keyword"],
                    sense_id=t["sense_id"],
                    words=tuple(t["words"]),
                    score=float(t.get("score", 0.0)),
                )
                for t in data.get("selected_terms", ())
            ],
            selected_meta_keywords=[
                MetaKeyword(words=tuple(w)) for w in data.get("selected_meta_keywords", ())
            ],
            selected_concepts=list(data.get("selected_concepts", ())),
            clicked_urls=list(data.get("clicked_urls", ())),
            extracted_meta_keywords=[
                MetaKeyword(words=tuple(w)) for w in data.get("extracted_meta_keywords", ())
            ],
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"profile entry record is malformed: {exc}") from exc


@dataclass
class PersonalProfile:
    """Ordered interaction log for one user, optionally file-backed."""

    user_id: str
    entries: list[ProfileEntry] = field(default_factory=list)
    path: Path | None = None

    def __post_init__(self):
        for entry in self.entries:
            if entry.user_id != self.user_id:
                raise ValidationError(
                    f"entry {entry.entry_id} belongs to {entry.user_id!r}, "
                    f"not {self.user_id!r}"
                )


@dataclass
class SharedKnowledgeBase:
    """Anonymized pooled entries with per-record contributor counts."""

    entries: list[ProfileEntry] = field(default_factory=list)
    contributor_count: dict[str, int] = field(default_factory=dict)
    path: Path | None = None

    def __post_init__(self):
        self._vector_ids = {entry_vector(e).key(): e.entry_id for e in self.entries}

    def stats(self) -> dict:
        return {
            "entry_count": len(self.entries),
            "contributor_total": sum(self.contributor_count.values()),
        }


def entry_vector(entry: ProfileEntry) -> TermVector:
    """Raw term-frequency vector over everything the entry captured.

    Concept selections are stored as concept ids; ids are label slugs, so
    tokenizing and stemming them recovers the label terms.
    """
    terms: list[str] = list(entry.query_keywords)
    for term in entry.selected_terms:
        terms.extend(term.words)
    for mk in entry.selected_meta_keywords:
        terms.extend(mk.words)
    for mk in entry.extracted_meta_keywords:
        terms.extend(mk.words)
    for concept_id in entry.selected_concepts:
        terms.extend(stem_fixed(tok) for tok in tokenize(concept_id))
    return TermVector.from_terms(terms)


def _append_line(path: Path, payload: dict) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise StorageError(f"could not append to {path}: {exc}") from exc


def record_entry(profile: PersonalProfile, entry: ProfileEntry) -> PersonalProfile:
    """Append an entry to the profile, durably writing it first."""
    if entry.user_id != profile.user_id:
        raise ValidationError(
            f"entry user {entry.user_id!r} does not match profile user {profile.user_id!r}"
        )
    if any(e.entry_id == entry.entry_id for e in profile.entries):
        raise ValidationError(f"duplicate entry_id {entry.entry_id!r} in profile")
    if profile.entries and entry.timestamp < profile.entries[-1].timestamp:
        raise ValidationError(
            f"entry timestamp {entry.timestamp} precedes last recorded "
            f"timestamp {profile.entries[-1].timestamp}"
        )
    if profile.path is not None:
        _append_line(profile.path, entry_to_json(entry))
    profile.entries.append(entry)
    return profile


def merge_into_sckb(sckb: SharedKnowledgeBase, entry: ProfileEntry) -> SharedKnowledgeBase:
    """Merge an anonymized copy of the entry into the knowledge base.

    An entry whose term vector equals an existing record's increments that
    record's contributor count instead of being appended.
    """
    anonymized = replace(
        entry,
        user_id="",
        query_keywords=list(entry.query_keywords),
        selected_terms=list(entry.selected_terms),
        selected_meta_keywords=list(entry.selected_meta_keywords),
        selected_concepts=list(entry.selected_concepts),
        clicked_urls=list(entry.clicked_urls),
        extracted_meta_keywords=list(entry.extracted_meta_keywords),
    )
    if sckb.path is not None:
        _append_line(sckb.path, entry_to_json(anonymized))
    key = entry_vector(anonymized).key()
    existing_id = sckb._vector_ids.get(key)
    if existing_id is not None:
        sckb.contributor_count[existing_id] += 1
    else:
        sckb.entries.append(anonymized)
        sckb.contributor_count[anonymized.entry_id] = 1
        sckb._vector_ids[key] = anonymized.entry_id
    return sckb


def _read_entries(path: Path) -> list[ProfileEntry]:
    entries = []
    with path.open(encoding="utf-8") as fh:
        for record_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", record=record_no) from exc
            try:
                entries.append(entry_from_json(data))
            except (ParseError, ValidationError) as exc:
                raise ParseError(f"bad profile entry: {exc}", record=record_no) from exc
    return entries


def load_profile(path: str | Path, user_id: str | None = None) -> PersonalProfile:
    """Load a personal profile log; missing file means an empty profile."""
    path = Path(path)
    entries = _read_entries(path) if path.exists() else []
    if user_id is None:
        user_id = entries[0].user_id if entries else ""
    profile = PersonalProfile(user_id=user_id, entries=entries, path=path)
    return profile


def load_sckb(path: str | Path) -> SharedKnowledgeBase:
    """Load (and re-fold) a shared-knowledge-base log."""
    path = Path(path)
    sckb = SharedKnowledgeBase(path=None)
    if path.exists():
        for record_no, entry in enumerate(_read_entries(path), start=1):
            if entry.user_id:
                raise ParseError(
                    f"shared store exposes user_id {entry.user_id!r}", record=record_no
                )
            merge_into_sckb(sckb, entry)
    sckb.path = path
    return sckb


def load_store(path: str | Path, kind: str = "auto") -> PersonalProfile | SharedKnowledgeBase:
    """Load either store type; ``kind`` is "profile", "sckb", or "auto".

    Auto-detection treats a log whose entries all have blank user ids as a
    shared knowledge base (an empty file auto-loads as an empty profile).
    """
    if kind == "profile":
        return load_profile(path)
    if kind == "sckb":
        return load_sckb(path)
    if kind != "auto":
        raise ValidationError(f"unknown store kind {kind!r}")
    entries = _read_entries(Path(path)) if Path(path).exists() else []
    if entries and not any(e.user_id for e in entries):
        return load_sckb(path)
    return load_profile(path)


def save_store(store: PersonalProfile | SharedKnowledgeBase, path: str | Path) -> None:
    """Rewrite a store file so that loading it reproduces the store."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        with tmp.open("w", encoding="utf-8") as fh:
            if isinstance(store, SharedKnowledgeBase):
                for entry in store.entries:
                    line = json.dumps(entry_to_json(entry), sort_keys=True) + "\n"
                    fh.write(line * store.contributor_count[entry.entry_id])
            else:
                for entry in store.entries:
                    fh.write(json.dumps(entry_to_json(entry), sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        tmp.replace(path)
    except OSError as exc:
        raise StorageError(f"could not write {path}: {exc}") from exc


def query_entries(
    store: PersonalProfile | SharedKnowledgeBase, limit: int | None = None
) -> list[ProfileEntry]:
    """Most recent entries first; ``limit`` of 0 returns []."""
    recent = list(reversed(store.entries))
    if limit is not None:
        recent = recent[: max(limit, 0)]
    return recent
