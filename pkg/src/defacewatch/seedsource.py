"""Seed ingestion: externally produced lists of suspected-defaced URLs.

Accepts JSON Lines (one object per line with url / discovered_at /
source_label / matched_keyword) or plain text (one URL per line).
Every URL is canonicalized before being deduplicated against the
persistent checked list, so later batches only surface genuinely new
pages.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime

from .timefmt import from_rfc3339, to_rfc3339, utc_now
from urllib.parse import urlsplit, urlunsplit


class MalformedUrl(ValueError):
    """The value does not parse as an absolute HTTP(S) URL."""


_DEFAULT_PORTS = {"http": "80", "https": "443"}
_PCT_RE = re.compile(r"%[0-9a-fA-F]{2}")


def _upper_pct(value: str) -> str:
    return _PCT_RE.sub(lambda m: m.group(0).upper(), value)


def canonicalize_url(raw: str) -> str:
    """Normalize a URL so that equal pages compare equal.

    Scheme and host are lowercased, default ports stripped, the fragment
    dropped, percent-escapes uppercased. The query survives untouched and
    a trailing slash on a non-root path is kept exactly as given.
    """
    if not raw or not raw.strip():
        raise MalformedUrl("empty URL")
    raw = raw.strip()
    try:
        parts = urlsplit(raw)
    except ValueError as exc:
        raise MalformedUrl(f"unparseable URL: {raw!r}") from exc
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https"):
        raise MalformedUrl(f"not an absolute http(s) URL: {raw!r}")
    if not parts.hostname:
        raise MalformedUrl(f"missing host: {raw!r}")

    host = parts.hostname.lower()
    netloc = host
    if parts.port is not None and str(parts.port) != _DEFAULT_PORTS[scheme]:
        netloc = f"{host}:{parts.port}"
    if parts.username:
        cred = parts.username
        if parts.password:
            cred += f":{parts.password}"
        netloc = f"{cred}@{netloc}"

    path = _upper_pct(parts.path) or "/"
    query = _upper_pct(parts.query)
    return urlunsplit((scheme, netloc, path, query, ""))


@dataclass(frozen=True)
class SeedEntry:
    """One row from an external suspected-defacement feed."""

    url: str
    discovered_at: datetime
    source_label: str
    matched_keyword: str | None = None


@dataclass(frozen=True)
class MonitoredPage:
    """A canonical URL accepted for monitoring, with its seed provenance."""

    url: str
    discovered_at: datetime
    source_label: str
    matched_keyword: str | None = None


@dataclass
class CheckedList:
    """Set of canonicalized URLs already seen. Never shrinks within a run."""

    entries: frozenset[str] = field(default_factory=frozenset)
    updated_at: datetime = field(default_factory=utc_now)

    def __contains__(self, canonical_url: str) -> bool:
        return canonical_url in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class IngestReport:
    total: int = 0
    new: int = 0
    already_checked: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (value, reason)


def ingest(
    entries: list[SeedEntry],
    checked: CheckedList,
    now: datetime | None = None,
) -> tuple[list[MonitoredPage], CheckedList, IngestReport]:
    """Split a seed batch into new monitoring targets and known URLs.

    Pure: the input checked list is untouched and a grown copy is
    returned, which makes re-ingesting the same batch a no-op. Malformed
    entries and entries timestamped in the future are skipped and counted
    rather than raised.
    """
    now = now or utc_now()
    report = IngestReport(total=len(entries))
    new_targets: list[MonitoredPage] = []
    seen_in_batch: set[str] = set()
    added: set[str] = set()

    for entry in entries:
        try:
            canonical = canonicalize_url(entry.url)
        except MalformedUrl as exc:
            report.skipped.append((entry.url, str(exc)))
            continue
        if entry.discovered_at > now:
            report.skipped.append(
                (entry.url, f"discovered_at {to_rfc3339(entry.discovered_at)} is in the future")
            )
            continue
        if canonical in seen_in_batch:
            continue
        seen_in_batch.add(canonical)
        if canonical in checked:
            report.already_checked += 1
            continue
        new_targets.append(
            MonitoredPage(
                url=canonical,
                discovered_at=entry.discovered_at,
                source_label=entry.source_label,
                matched_keyword=entry.matched_keyword,
            )
        )
        added.add(canonical)

    report.new = len(new_targets)
    updated = CheckedList(entries=checked.entries | frozenset(added), updated_at=now)
    return new_targets, updated, report


def parse_seed_lines(
    lines: list[str],
    source_label: str,
    now: datetime | None = None,
) -> tuple[list[SeedEntry], list[tuple[str, str]]]:
    """Parse feed lines in either supported format.

    A line starting with ``{`` is treated as a JSON object; anything else
    as a bare URL whose discovery time is the ingest time. Returns the
    parsed entries plus (line, reason) pairs for lines that were dropped.
    """
    now = now or utc_now()
    entries: list[SeedEntry] = []
    bad: list[tuple[str, str]] = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("{"):
            try:
                obj = json.loads(line)
                url = obj["url"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                bad.append((line, f"bad JSON seed row: {exc}"))
                continue
            discovered_raw = obj.get("discovered_at")
            try:
                discovered = from_rfc3339(discovered_raw) if discovered_raw else now
            except ValueError as exc:
                bad.append((line, f"bad discovered_at: {exc}"))
                continue
            entries.append(
                SeedEntry(
                    url=url,
                    discovered_at=discovered,
                    source_label=obj.get("source_label") or source_label,
                    matched_keyword=obj.get("matched_keyword"),
                )
            )
        else:
            entries.append(SeedEntry(url=line, discovered_at=now, source_label=source_label))
    return entries, bad
