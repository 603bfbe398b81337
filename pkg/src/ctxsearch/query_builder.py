"""Boolean query construction and serialization.

The expanded query is an AND over the original keywords plus one OR
group per selection category (senses, meta keywords, concepts), so the
keywords keep precision while each accepted category widens recall
within itself. A global leaf cap bounds query size; expansion terms are
dropped lowest-rank-first (concept tail first, then meta keywords, then
sense words) and the original keywords are never dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .errors import ValidationError

DEFAULT_LEAF_CAP = 20

Node = Union["Term", "And", "Or"]


@dataclass(frozen=True)
class Term:
    term: str

    def __post_init__(self):
        if not self.term:
            raise ValidationError("query term must be non-empty")


@dataclass(frozen=True)
class And:
    children: tuple[Node, ...]

    def __post_init__(self):
        if not self.children:
            raise ValidationError("AND node requires at least one child")


@dataclass(frozen=True)
class Or:
    children: tuple[Node, ...]

    def __post_init__(self):
        if not self.children:
            raise ValidationError("OR node requires at least one child")
        if any(isinstance(child, Or) for child in self.children):
            raise ValidationError("OR nodes must be flattened, not nested")


@dataclass(frozen=True)
class BooleanQuery:
    root: Node

    def leaves(self) -> list[str]:
        out: list[str] = []
        _collect_leaves(self.root, out)
        return out

    def leaf_count(self) -> int:
        return len(self.leaves())


def _collect_leaves(node: Node, out: list[str]) -> None:
    if isinstance(node, Term):
        out.append(node.term)
    else:
        for child in node.children:
            _collect_leaves(child, out)


def _dedup(terms: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(terms))


def build_query(
    query_keywords: Sequence[str],
    selected_terms: Sequence = (),
    selected_metas: Sequence = (),
    selected_concepts: Sequence = (),
    cap: int = DEFAULT_LEAF_CAP,
) -> BooleanQuery:
    """Expand keywords plus selections into a capped Boolean query.

    ``selected_terms`` and ``selected_metas`` contribute their ``words``;
    ``selected_concepts`` contribute their ``related_terms``. Each
    category becomes one OR group in rank order, deduplicated within the
    category. Raises when the keywords alone exceed the cap, since the
    originals may never be dropped.
    """
    keywords = _dedup(query_keywords)
    if not keywords:
        raise ValidationError("query keywords must be non-empty")
    if cap < len(keywords):
        raise ValidationError(
            f"cap {cap} cannot retain all {len(keywords)} original keywords"
        )
    groups = [
        _dedup(w for t in selected_terms for w in t.words),
        _dedup(w for mk in selected_metas for w in mk.words),
        _dedup(t for c in selected_concepts for t in c.related_terms),
    ]
    budget = cap - len(keywords)
    total = sum(len(g) for g in groups)
    for group in reversed(groups):
        if total <= budget:
            break
        drop = min(len(group), total - budget)
        if drop:
            del group[len(group) - drop :]
            total -= drop
    children: list[Node] = [Term(k) for k in keywords]
    children.extend(Or(tuple(Term(w) for w in group)) for group in groups if group)
    return BooleanQuery(root=And(tuple(children)))


def serialize_query(query: BooleanQuery) -> str:
    """Infix form with uppercase operators.

    Every OR group is parenthesized, as is any AND nested under another
    node; terms are emitted verbatim.
    """
    return _serialize(query.root, top=True)


def _serialize(node: Node, top: bool = False) -> str:
    if isinstance(node, Term):
        return node.term
    if isinstance(node, And):
        body = " AND ".join(_serialize(child) for child in node.children)
        if len(node.children) == 1:
            return body
        return body if top else f"({body})"
    body = " OR ".join(_serialize(child) for child in node.children)
    return f"({body})"
