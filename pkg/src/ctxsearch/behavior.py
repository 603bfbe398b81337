"""Click capture and meta-keyword extraction from visited pages.

Markup parsing is tolerant: it is built on the stdlib ``HTMLParser`` and
never raises on malformed input; anything unparseable yields empty
metadata. Only the title and ``<meta name="keywords|description">`` tags
are mined, plus plain text content for the indexer.
"""

from __future__ import annotations

from dataclasses import dataclass
from html.parser import HTMLParser
from typing import TYPE_CHECKING, Collection

from .errors import ValidationError
from .lexicon import normalize_text

if TYPE_CHECKING:  # pragma: no cover
    from .profile_store import ProfileEntry

META_KEYWORD_WORD_CAP = 5
META_KEYWORDS_PER_PAGE_CAP = 5


@dataclass(frozen=True)
class PageMetadata:
    """Title/keywords/description scraped from one page."""

    url: str
    title: str = ""
    meta_keywords_raw: tuple[str, ...] = ()
    description: str = ""

    def __post_init__(self):
        if not self.url:
            raise ValidationError("page metadata requires a non-empty url")


@dataclass(frozen=True)
class MetaKeyword:
    """A short normalized keyword phrase, capped at five words."""

    words: tuple[str, ...]

    def __post_init__(self):
        if not 1 <= len(self.words) <= META_KEYWORD_WORD_CAP:
            raise ValidationError(
                f"meta keyword must have 1..{META_KEYWORD_WORD_CAP} words, got {len(self.words)}"
            )
        if len(set(self.words)) != len(self.words):
            raise ValidationError(f"meta keyword has duplicate words: {self.words}")


@dataclass(frozen=True)
class BehaviorRecord:
    """One captured click: the page's capped meta keywords in query context."""

    url: str
    timestamp: int
    query_keywords: tuple[str, ...]
    meta_keywords: tuple[MetaKeyword, ...]

    def __post_init__(self):
        if len(self.meta_keywords) > META_KEYWORDS_PER_PAGE_CAP:
            raise ValidationError("behavior record holds more than 5 meta keywords")


class _PageScraper(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.title_parts: list[str] = []
        self.keywords = ""
        self.description = ""
        self.text_parts: list[str] = []
        self._in_title = False
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag == "title":
            self._in_title = True
        elif tag in ("script", "style"):
            self._skip_depth += 1
        elif tag == "meta":
            attr_map = {k.lower(): (v or "") for k, v in attrs}
            name = attr_map.get("name", "").lower()
            if name == "keywords":
                self.keywords = attr_map.get("content", "")
            elif name == "description":
                self.description = attr_map.get("content", "")

    def handle_endtag(self, tag):
        if tag == "title":
            self._in_title = False
        elif tag in ("script", "style") and self._skip_depth > 0:
            self._skip_depth -= 1

    def handle_data(self, data):
        if self._in_title:
            self.title_parts.append(data)
        elif self._skip_depth == 0:
            self.text_parts.append(data)


def _scrape(document: str | bytes) -> _PageScraper:
    if isinstance(document, bytes):
        document = document.decode("utf-8", errors="replace")
    scraper = _PageScraper()
    try:
        scraper.feed(document)
        scraper.close()
    except Exception:  # extraction is best-effort on hostile markup
        pass
    return scraper


def extract_page_metadata(document: str | bytes, url: str) -> PageMetadata:
    """Best-effort scrape of title, keyword metadata, and description."""
    scraper = _scrape(document)
    raw = tuple(part.strip() for part in scraper.keywords.split(",") if part.strip())
    return PageMetadata(
        url=url,
        title=" ".join("".join(scraper.title_parts).split()),
        meta_keywords_raw=raw,
        description=scraper.description.strip(),
    )


def extract_page_text(document: str | bytes) -> str:
    """Visible text content (scripts/styles skipped); used by the indexer."""
    scraper = _scrape(document)
    return " ".join(" ".join(scraper.text_parts).split())


def build_meta_keywords(
    meta: PageMetadata,
    query_keywords: Collection[str],
    stopwords: Collection[str],
) -> list[MetaKeyword]:
    """Capped meta keywords for a page in the context of a query.

    Each raw keyword phrase is normalized, terms equal to a query keyword
    are removed, and the first five remaining words are kept; empty
    results are dropped. Pages without keyword metadata fall back to the
    title as a single phrase. At most the first five distinct meta
    keywords are returned.
    """
    banned = set(query_keywords)
    raws = meta.meta_keywords_raw or ((meta.title,) if meta.title else ())
    out: list[MetaKeyword] = []
    seen: set[tuple[str, ...]] = set()
    for raw in raws:
        words = tuple(w for w in normalize_text(raw, stopwords) if w not in banned)
        words = words[:META_KEYWORD_WORD_CAP]
        if not words or words in seen:
            continue
        seen.add(words)
        out.append(MetaKeyword(words=words))
        if len(out) == META_KEYWORDS_PER_PAGE_CAP:
            break
    return out


def capture_click(
    url: str,
    timestamp: int,
    query_keywords: Collection[str],
    document: str | bytes,
    stopwords: Collection[str],
) -> BehaviorRecord:
    """Scrape one clicked page into a capped behavior record."""
    meta = extract_page_metadata(document, url)
    return BehaviorRecord(
        url=url,
        timestamp=timestamp,
        query_keywords=tuple(query_keywords),
        meta_keywords=tuple(build_meta_keywords(meta, query_keywords, stopwords)),
    )


def record_click(
    entry: "ProfileEntry",
    url: str,
    document: str | bytes,
    stopwords: Collection[str],
    presented_urls: Collection[str] | None = None,
) -> "ProfileEntry":
    """Append a click to an in-progress profile entry.

    Every click is appended to ``clicked_urls`` (repeat clicks count), but
    page metadata is extracted only on the first click of a URL within the
    entry. When ``presented_urls`` is given, clicking a URL outside it is
    a validation error.
    """
    if presented_urls is not None and url not in presented_urls:
        raise ValidationError(f"url was never presented in this session: {url}")
    first_click = url not in entry.clicked_urls
    entry.clicked_urls.append(url)
    if first_click:
        meta = extract_page_metadata(document, url)
        known = {mk.words for mk in entry.extracted_meta_keywords}
        for mk in build_meta_keywords(meta, entry.query_keywords, stopwords):
            if mk.words not in known:
                known.add(mk.words)
                entry.extracted_meta_keywords.append(mk)
    return entry
