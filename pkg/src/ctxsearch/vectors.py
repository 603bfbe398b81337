"""Sparse term vectors and cosine similarity."""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Mapping

from .errors import ValidationError


class TermVector:
    """Sparse map of terms to positive weights.

    Zero weights are dropped on construction; negative weights are
    rejected. Instances compare equal by weights.
    """

    __slots__ = ("weights",)

    def __init__(self, weights: Mapping[str, float] | None = None):
        clean: dict[str, float] = {}
        for term, weight in (weights or {}).items():
            if weight < 0:
                raise ValidationError(f"negative weight for term {term!r}: {weight}")
            if weight > 0:
                clean[term] = float(weight)
        self.weights = clean

    @classmethod
    def from_terms(cls, terms: Iterable[str]) -> "TermVector":
        """Raw term-frequency vector over an iterable of terms."""
        return cls(Counter(iter(terms)))

    def merged(self, other: "TermVector") -> "TermVector":
        out = dict(self.weights)
        for term, weight in other.weights.items():
            out[term] = out.get(term, 0.0) + weight
        return TermVector(out)

    def scaled(self, factor: float) -> "TermVector":
        if factor <= 0:
            raise ValidationError(f"scale factor must be positive, got {factor}")
        return TermVector({t: w * factor for t, w in self.weights.items()})

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights.values()))

    def key(self) -> tuple[tuple[str, float], ...]:
        """Canonical hashable form, used for exact-equality deduplication."""
        return tuple(sorted(self.weights.items()))

    def __bool__(self) -> bool:
        return bool(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TermVector):
            return NotImplemented
        return self.weights == other.weights

    def __hash__(self):  # pragma: no cover - explicit: mutable mapping inside
        raise TypeError("TermVector is not hashable; use .key()")

    def __repr__(self) -> str:
        items = ", ".join(f"{t}: {w:g}" for t, w in sorted(self.weights.items()))
        return f"TermVector({{{items}}})"


def cosine(a: TermVector, b: TermVector) -> float:
    """Cosine similarity in [0, 1]; 0.0 when either vector is empty."""
    if not a or not b:
        return 0.0
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    dot = 0.0
    for term, weight in small.weights.items():
        other = large.weights.get(term)
        if other is not None:
            dot += weight * other
    if dot == 0.0:
        return 0.0
    return dot / (a.norm() * b.norm())
