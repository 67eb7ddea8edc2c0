"""Pure HTML analysis: keyword profiles, visibility classes, co-located links.

Counting scope is rendered text nodes plus the page title; attribute
values and script bodies never count. Each text node is classified as
visible, hidden via display:none, or positioned off screen, so a page's
keyword total splits cleanly by visibility without double counting.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from urllib.parse import urljoin, urlsplit

from . import htmldoc
from .htmldoc import Element, effective_style_value
from .psl import SuffixDatabase

logger = logging.getLogger(__name__)

DEFAULT_KEYWORDS = (
    "togel", "toto", "judi", "slot", "gacor", "bandar", "maxwin", "zeus", "bet",
)

SUBSTRING = "substring"
WORD_BOUNDARY = "word_boundary"
MATCH_MODES = (SUBSTRING, WORD_BOUNDARY)

# offsets at least this far negative count as off-screen placement
OFFSCREEN_PX = 1000

_SKIPPED_SCHEMES = ("mailto:", "javascript:", "tel:", "data:")
_LENGTH_RE = re.compile(r"^(-?\d+(?:\.\d+)?)(px|rem|em)?$", re.IGNORECASE)
_FONT_PX_PER_REM = 16.0


class Visibility(str, Enum):
    VISIBLE = "visible"
    HIDDEN_DISPLAY_NONE = "hidden_display_none"
    OFF_SCREEN = "off_screen"


@dataclass(frozen=True)
class KeywordSet:
    """Ordered lowercase keywords plus the matching mode applied to them."""

    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    match_mode: str = SUBSTRING

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError("keyword set must not be empty")
        for kw in self.keywords:
            if kw != kw.lower() or not kw or any(c.isspace() for c in kw):
                raise ValueError(f"keywords must be lowercase without whitespace: {kw!r}")
        if self.match_mode not in MATCH_MODES:
            raise ValueError(f"unknown match_mode: {self.match_mode!r}")


@dataclass(frozen=True)
class KeywordProfile:
    """Per-keyword counts split by visibility class, plus title/URL hits."""

    per_keyword: dict[str, dict[Visibility, int]]
    total: int
    distinct: int
    title_hits: tuple[str, ...] = ()
    url_hits: tuple[str, ...] = ()

    @classmethod
    def empty(cls) -> "KeywordProfile":
        return cls(per_keyword={}, total=0, distinct=0)

    def keyword_total(self, keyword: str) -> int:
        return sum(self.per_keyword.get(keyword, {}).values())

    def class_total(self, visibility: Visibility) -> int:
        return sum(classes.get(visibility, 0) for classes in self.per_keyword.values())


@dataclass(frozen=True)
class ExtractedLink:
    """An anchor sharing a parent structure with at least one keyword."""

    href: str
    anchor_text: str
    visibility: Visibility
    co_located_keyword: str
    is_third_party: bool
    registrable_domain: str
    occurrences: int = 1


def count_occurrences(text: str, keyword: str, mode: str) -> int:
    """Non-overlapping occurrence count of one keyword in plain text.

    Scans left to right; an accepted match consumes its span, a match
    rejected by the word-boundary test advances one character so that an
    overlapping later candidate still gets considered. Word boundaries
    demand a non-alphanumeric neighbour (or the string edge) on each side.
    """
    lowered = text.lower()
    kw = keyword.lower()
    count = 0
    pos = 0
    klen = len(kw)
    while True:
        i = lowered.find(kw, pos)
        if i < 0:
            return count
        if mode == WORD_BOUNDARY:
            left_ok = i == 0 or not lowered[i - 1].isalnum()
            right_ok = i + klen >= len(lowered) or not lowered[i + klen].isalnum()
            if not (left_ok and right_ok):
                pos = i + 1
                continue
        count += 1
        pos = i + klen


def _parse_css_length_px(value: str) -> float | None:
    match = _LENGTH_RE.match(value.strip())
    if not match:
        return None
    number = float(match.group(1))
    unit = (match.group(2) or "px").lower()
    if unit in ("rem", "em"):
        return number * _FONT_PX_PER_REM
    return number


def classify_visibility(element: Element, offscreen_px: int = OFFSCREEN_PX) -> Visibility:
    """Visibility of an element under its effective inline style.

    The effective value of each property is the element's own declaration
    or, failing that, the nearest styled ancestor's. display:none wins
    over off-screen placement when both apply; off-screen requires
    absolute or fixed positioning plus an offset at or beyond the
    threshold in the negative direction (px, or rem/em at 16px each).
    """
    display = effective_style_value(element, "display")
    if display is not None and display.strip().lower() == "none":
        return Visibility.HIDDEN_DISPLAY_NONE

    position = (effective_style_value(element, "position") or "").strip().lower()
    if position in ("absolute", "fixed"):
        for prop in ("left", "top", "right", "bottom"):
            value = effective_style_value(element, prop)
            if value is None:
                continue
            px = _parse_css_length_px(value)
            if px is not None and px <= -offscreen_px:
                return Visibility.OFF_SCREEN
    return Visibility.VISIBLE


def _fallback_text(html: str) -> str:
    no_scripts = re.sub(r"(?is)<(script|style)\b[^>]*>.*?</\1\s*>", " ", html)
    return re.sub(r"(?s)<[^>]*>", " ", no_scripts)


def count_keywords(
    html: str,
    title: str | None,
    url: str,
    ks: KeywordSet,
    offscreen_px: int = OFFSCREEN_PX,
) -> KeywordProfile:
    """Profile a page: per-keyword counts by visibility, title and URL hits.

    Matching is case-insensitive and runs per text node, so markup between
    words never glues two halves of a keyword together. When the DOM
    builder chokes on the input entirely, the whole body degrades to a
    flat text scan counted as visible, with a diagnostic.
    """
    counts: dict[str, dict[Visibility, int]] = {}

    def add(keyword: str, visibility: Visibility, n: int) -> None:
        if n <= 0:
            return
        by_class = counts.setdefault(keyword, {})
        by_class[visibility] = by_class.get(visibility, 0) + n

    try:
        root = htmldoc.parse_html(html)
    except Exception as exc:  # parser failure: degrade, do not crash
        logger.warning("HTML parse failed (%s); falling back to flat text scan", exc)
        flat = _fallback_text(html)
        for kw in ks.keywords:
            add(kw, Visibility.VISIBLE, count_occurrences(flat, kw, ks.match_mode))
        root = None

    if root is not None:
        visibility_cache: dict[int, Visibility] = {}

        def element_visibility(element: Element) -> Visibility:
            key = id(element)
            if key not in visibility_cache:
                visibility_cache[key] = classify_visibility(element, offscreen_px)
            return visibility_cache[key]

        for node in root.iter_text():
            if not node.content.strip():
                continue
            visibility = (
                element_visibility(node.parent) if node.parent is not None else Visibility.VISIBLE
            )
            for kw in ks.keywords:
                add(kw, visibility, count_occurrences(node.content, kw, ks.match_mode))
        if title is None:
            title = htmldoc.page_title(root)

    title = title or ""
    title_hits = tuple(
        kw for kw in ks.keywords if count_occurrences(title, kw, ks.match_mode) > 0
    )
    url_hits = tuple(
        kw for kw in ks.keywords if count_occurrences(url, kw, ks.match_mode) > 0
    )

    total = sum(sum(by_class.values()) for by_class in counts.values())
    distinct = sum(1 for by_class in counts.values() if sum(by_class.values()) > 0)
    return KeywordProfile(
        per_keyword=counts,
        total=total,
        distinct=distinct,
        title_hits=title_hits,
        url_hits=url_hits,
    )


def _subtree_has_keyword(scope: Element, ks: KeywordSet) -> str | None:
    """First keyword (in configured order) present in a subtree's text, else None."""
    text = scope.text(separator=" ")
    for kw in ks.keywords:
        if count_occurrences(text, kw, ks.match_mode) > 0:
            return kw
    return None


def _colocation_scope(anchor: Element, depth: int) -> Element:
    scope = anchor
    for _ in range(depth):
        if scope.parent is None:
            break
        scope = scope.parent
    return scope


def extract_colocated_links(
    html: str,
    page_url: str,
    ks: KeywordSet,
    psl: SuffixDatabase,
    ancestor_depth: int = 1,
    offscreen_px: int = OFFSCREEN_PX,
) -> list[ExtractedLink]:
    """Anchors whose parent structure also contains a keyword occurrence.

    The co-location scope is the anchor's parent subtree (the parent and
    everything under it); ``ancestor_depth`` widens that to grandparents
    and beyond. mailto:, javascript:, tel: and fragment-only hrefs are
    skipped; relative hrefs resolve against the page base. Duplicate
    (href, visibility) pairs collapse into one entry with an occurrence
    count.
    """
    root = htmldoc.parse_html(html)
    base = htmldoc.base_href(root)
    resolve_base = urljoin(page_url, base) if base else page_url
    page_host = urlsplit(page_url).hostname or ""
    page_domain = psl.registrable_domain(page_host) if page_host else ""

    collapsed: dict[tuple[str, Visibility], ExtractedLink] = {}
    order: list[tuple[str, Visibility]] = []

    for anchor in root.iter_elements("a"):
        href = (anchor.attr("href") or "").strip()
        if not href or href.startswith("#"):
            continue
        if any(href.lower().startswith(scheme) for scheme in _SKIPPED_SCHEMES):
            continue
        absolute = urljoin(resolve_base, href)
        scheme = urlsplit(absolute).scheme
        if scheme not in ("http", "https"):
            continue

        scope = _colocation_scope(anchor, ancestor_depth)
        keyword = _subtree_has_keyword(scope, ks)
        if keyword is None:
            continue

        host = urlsplit(absolute).hostname or ""
        if not host:
            continue
        domain = psl.registrable_domain(host)
        visibility = classify_visibility(anchor, offscreen_px)
        key = (absolute, visibility)
        if key in collapsed:
            existing = collapsed[key]
            collapsed[key] = ExtractedLink(
                href=existing.href,
                anchor_text=existing.anchor_text,
                visibility=existing.visibility,
                co_located_keyword=existing.co_located_keyword,
                is_third_party=existing.is_third_party,
                registrable_domain=existing.registrable_domain,
                occurrences=existing.occurrences + 1,
            )
        else:
            collapsed[key] = ExtractedLink(
                href=absolute,
                anchor_text=anchor.text().strip(),
                visibility=visibility,
                co_located_keyword=keyword,
                is_third_party=(domain != page_domain),
                registrable_domain=domain,
            )
            order.append(key)

    return [collapsed[key] for key in order]
