"""Lexical database, stopwords, and text normalization.

The lexicon file is UTF-8 text, one sense record per line:

    lemma<TAB>sense_id<TAB>gloss<TAB>syn1,syn2,...

The synonym field may be empty or omitted. Blank lines and ``#`` comments
are skipped. Lemma lookup is case-insensitive; matching against query
keywords requires lemmas to be stored in normalized (stemmed) form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Iterable

from .errors import ParseError, ValidationError
from .stemming import stem_fixed

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class Sense:
    """One lexical sense of a lemma."""

    lemma: str
    sense_id: str
    gloss: str
    synonyms: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.gloss:
            raise ValidationError(f"sense {self.lemma}/{self.sense_id}: empty gloss")
        if not self.sense_id:
            raise ValidationError(f"sense of {self.lemma!r}: empty sense id")


@dataclass
class DisambiguatedTerm:
    """A filtered sense candidate for one query keyword.

    ``words`` holds the normalized gloss/synonym terms with stopwords,
    duplicates, and query keywords removed. ``score`` is filled in by the
    recommender; it stays 0.0 for cold-start (lexicon-order) candidates.
    """

    keyword: str
    sense_id: str
    words: tuple[str, ...]
    score: float = 0.0

    def __post_init__(self):
        if not self.words:
            raise ValidationError(
                f"disambiguated term {self.keyword}/{self.sense_id}: empty word list"
            )
        if self.score < 0:
            raise ValidationError("disambiguated term score must be >= 0")


class Lexicon:
    """Lemma -> ordered senses, preserving file order per lemma."""

    def __init__(self, entries: dict[str, list[Sense]] | None = None):
        self.entries: dict[str, list[Sense]] = {}
        for lemma, senses in (entries or {}).items():
            self.entries[lemma.lower()] = list(senses)

    def senses(self, lemma: str) -> list[Sense]:
        return list(self.entries.get(lemma.lower(), ()))

    def __contains__(self, lemma: str) -> bool:
        return lemma.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Load a stopword file: one word per line, ``#`` comments allowed."""
    path = Path(path)
    words: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if any(ch.isspace() for ch in line):
                raise ParseError(f"stopword entry contains whitespace: {line!r}", line=lineno)
            words.add(line.lower())
    if not words:
        raise ValidationError(f"stopword file {path} contains no words")
    return frozenset(words)


def load_lexicon(path: str | Path) -> Lexicon:
    """Load the tab-separated lexicon file described in the module docstring."""
    path = Path(path)
    entries: dict[str, list[Sense]] = {}
    seen_ids: set[tuple[str, str]] = set()
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
            lemma, sense_id, gloss = (f.strip() for f in fields[:3])
            if not lemma:
                raise ParseError("empty lemma", line=lineno)
            if not sense_id:
                raise ParseError("empty sense id", line=lineno)
            if not gloss:
                raise ParseError("missing gloss", line=lineno)
            synonyms = ()
            if len(fields) == 4 and fields[3].strip():
                synonyms = tuple(s.strip() for s in fields[3].split(",") if s.strip())
            key = (lemma.lower(), sense_id)
            if key in seen_ids:
                raise ValidationError(
                    f"duplicate sense id {sense_id!r} under lemma {lemma!r} (line {lineno})"
                )
            seen_ids.add(key)
            entries.setdefault(lemma.lower(), []).append(
                Sense(lemma=lemma.lower(), sense_id=sense_id, gloss=gloss, synonyms=synonyms)
            )
    return Lexicon(entries)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs (digits kept)."""
    return _TOKEN_RE.findall(text.lower())


def normalize_text(text: str, stopwords: Collection[str]) -> list[str]:
    """Tokenize, stem, drop stopwords, and deduplicate keeping first occurrence."""
    seen: set[str] = set()
    out: list[str] = []
    for token in tokenize(text):
        term = stem_fixed(token)
        if term in stopwords or term in seen:
            continue
        seen.add(term)
        out.append(term)
    return out


def normalize_tokens(text: str, stopwords: Collection[str]) -> list[str]:
    """Like ``normalize_text`` but keeps repeats; used when term frequency matters."""
    out: list[str] = []
    for token in tokenize(text):
        term = stem_fixed(token)
        if term not in stopwords:
            out.append(term)
    return out


def candidate_disambiguations(
    lexicon: Lexicon,
    query_keywords: Iterable[str],
    stopwords: Collection[str],
) -> dict[str, list[DisambiguatedTerm]]:
    """Sense candidates per keyword, in lexicon file order.

    Each sense's gloss and synonyms are run through ``normalize_text`` and
    terms equal to any query keyword are removed; senses left with no
    words are dropped. Keywords absent from the lexicon map to [].
    """
    keywords = list(query_keywords)
    banned = set(keywords)
    result: dict[str, list[DisambiguatedTerm]] = {}
    for keyword in keywords:
        candidates: list[DisambiguatedTerm] = []
        for sense in lexicon.senses(keyword):
            text = " ".join((sense.gloss, *sense.synonyms))
            words = [w for w in normalize_text(text, stopwords) if w not in banned]
            if words:
                candidates.append(
                    DisambiguatedTerm(keyword=keyword, sense_id=sense.sense_id, words=tuple(words))
                )
        result[keyword] = candidates
    return result
