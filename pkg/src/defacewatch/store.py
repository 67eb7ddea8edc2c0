"""Durable append-only persistence: the single source of truth.

Layout under the data directory:

    pages.jsonl                      page upsert events, latest wins
    observations/<shard>/<id>.jsonl  per-page observation series
    links.jsonl                      co-located link rows
    verdicts.jsonl                   analyst verdict history
    checked_list.jsonl               canonical URLs already ingested
    snapshots.jsonl                  body snapshot records
    bodies/<d2>/<digest>             content-addressed HTML bodies

Every record is one JSON object per line; nothing is ever rewritten in
place. A torn trailing line (crash mid-write) is truncated away before
the next append and skipped on read, so completed records survive
exactly once. Appends flush and fsync before returning.
"""

from __future__ import annotations

import errno
import hashlib
import json
import logging
import os
import threading
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import IO, Iterator

from .analyze import ExtractedLink, KeywordProfile, Visibility
from .classify import Observation
from .seedsource import CheckedList, MalformedUrl, canonicalize_url
from .timefmt import from_rfc3339, to_rfc3339, utc_now

logger = logging.getLogger(__name__)


class UnknownPage(KeyError):
    """The page id has never been registered."""


class StorageFull(OSError):
    """The underlying filesystem has no room left."""


ORIGIN_SEED = "seed"
ORIGIN_INTERNAL = "internal"

MONITORING_ACTIVE = "active"
MONITORING_STOPPED_FP = "stopped_false_positive"
MONITORING_STOPPED_MANUAL = "stopped_manual"

VERDICT_CONFIRMED = "confirmed_defaced"
VERDICT_FALSE_POSITIVE = "false_positive"
VERDICT_REMEDIATED = "remediated"
VERDICT_VALUES = (VERDICT_CONFIRMED, VERDICT_FALSE_POSITIVE, VERDICT_REMEDIATED)


def page_id_for(canonical_url: str) -> str:
    """Stable page identifier: prefix of the URL's SHA-256."""
    return hashlib.sha256(canonical_url.encode("utf-8")).hexdigest()[:16]


def body_digest(html: str) -> str:
    return hashlib.sha256(html.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PageRecord:
    page_id: str
    url: str
    tld_group: str
    first_seen: datetime
    origin: str = ORIGIN_SEED
    monitoring: str = MONITORING_ACTIVE
    current_flag: str | None = None
    source_label: str | None = None


@dataclass(frozen=True)
class SnapshotRecord:
    page_id: str
    fetched_at: datetime
    content_digest: str
    body_path: str
    screenshot_path: str | None = None


@dataclass(frozen=True)
class VerdictRecord:
    page_id: str
    verdict: str
    analyst: str
    at: datetime
    note: str | None = None


@dataclass(frozen=True)
class LinkRecord:
    page_id: str
    at: datetime
    href: str
    canonical_href: str
    anchor_text: str
    visibility: str
    co_located_keyword: str
    is_third_party: bool
    registrable_domain: str
    occurrences: int


@dataclass(frozen=True)
class FetchRecord:
    """Fetch provenance kept alongside each observation."""

    page_id: str
    at: datetime
    requested_url: str
    final_url: str
    status: str
    http_status: int | None
    elapsed_ms: int
    truncated: bool
    notes: tuple[str, ...]
    redirect_chain: tuple[dict, ...]  # {from_url, to_url, mechanism, status_code}


def _profile_to_json(profile: KeywordProfile) -> dict:
    return {
        "per_keyword": {
            kw: {vis.value: n for vis, n in classes.items()}
            for kw, classes in profile.per_keyword.items()
        },
        "total": profile.total,
        "distinct": profile.distinct,
        "title_hits": list(profile.title_hits),
        "url_hits": list(profile.url_hits),
    }


def _profile_from_json(obj: dict) -> KeywordProfile:
    return KeywordProfile(
        per_keyword={
            kw: {Visibility(vis): n for vis, n in classes.items()}
            for kw, classes in obj.get("per_keyword", {}).items()
        },
        total=obj.get("total", 0),
        distinct=obj.get("distinct", 0),
        title_hits=tuple(obj.get("title_hits", [])),
        url_hits=tuple(obj.get("url_hits", [])),
    )


def observation_to_json(obs: Observation) -> dict:
    return {
        "page_id": obs.page_id,
        "at": to_rfc3339(obs.at),
        "reachable": obs.reachable,
        "redirect_cross_site": obs.redirect_cross_site,
        "profile": _profile_to_json(obs.profile),
    }


def observation_from_json(obj: dict) -> Observation:
    return Observation(
        page_id=obj["page_id"],
        at=from_rfc3339(obj["at"]),
        reachable=obj["reachable"],
        redirect_cross_site=obj.get("redirect_cross_site", False),
        profile=_profile_from_json(obj.get("profile", {})),
    )


class DataStore:
    """Single-writer append-only store over a data directory."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / "observations").mkdir(exist_ok=True)
        (self.data_dir / "bodies").mkdir(exist_ok=True)
        self._lock = threading.RLock()
        self._handles: dict[Path, IO[bytes]] = {}
        self._repaired: set[Path] = set()

        self._pages: dict[str, PageRecord] = {}
        self._checked: set[str] = set()
        self._latest_verdicts: dict[str, VerdictRecord] = {}
        self._internal_targets: set[str] = set()
        self._load_state()

    # -- internal plumbing -------------------------------------------------

    def _path(self, name: str) -> Path:
        return self.data_dir / name

    def _series_path(self, page_id: str) -> Path:
        return self.data_dir / "observations" / page_id[:2] / f"{page_id}.jsonl"

    def _body_path(self, digest: str) -> Path:
        return self.data_dir / "bodies" / digest[:2] / digest

    def _repair_tail(self, path: Path) -> None:
        """Drop a torn trailing record left behind by a crash mid-write."""
        if path in self._repaired:
            return
        self._repaired.add(path)
        if not path.exists():
            return
        raw = path.read_bytes()
        if not raw:
            return
        keep = len(raw)
        if not raw.endswith(b"\n"):
            cut = raw.rfind(b"\n")
            keep = cut + 1 if cut >= 0 else 0
        else:
            # last line has its newline; make sure it actually parses
            body = raw[:-1]
            cut = body.rfind(b"\n")
            last = body[cut + 1:]
            try:
                json.loads(last)
            except (json.JSONDecodeError, UnicodeDecodeError):
                keep = cut + 1 if cut >= 0 else 0
        if keep != len(raw):
            logger.warning("truncating torn record at end of %s", path)
            with open(path, "r+b") as fh:
                fh.truncate(keep)

    def _append_line(self, path: Path, obj: dict) -> None:
        line = json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"
        with self._lock:
            self._repair_tail(path)
            handle = self._handles.get(path)
            if handle is None or handle.closed:
                path.parent.mkdir(parents=True, exist_ok=True)
                handle = open(path, "ab")
                self._handles[path] = handle
            try:
                handle.write(line.encode("utf-8"))
                handle.flush()
                os.fsync(handle.fileno())
            except OSError as exc:
                if exc.errno == errno.ENOSPC:
                    raise StorageFull(str(exc)) from exc
                raise

    def _read_lines(self, path: Path) -> Iterator[dict]:
        if not path.exists():
            return
        with open(path, "rb") as fh:
            raw = fh.read()
        lines = raw.split(b"\n")
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except (json.JSONDecodeError, UnicodeDecodeError):
                if i >= len(lines) - 2:
                    logger.warning("skipping torn trailing record in %s", path)
                else:
                    logger.warning("skipping unreadable record %d in %s", i, path)

    def _load_state(self) -> None:
        for obj in self._read_lines(self._path("pages.jsonl")):
            record = PageRecord(
                page_id=obj["page_id"],
                url=obj["url"],
                tld_group=obj.get("tld_group", ""),
                first_seen=from_rfc3339(obj["first_seen"]),
                origin=obj.get("origin", ORIGIN_SEED),
                monitoring=obj.get("monitoring", MONITORING_ACTIVE),
                current_flag=obj.get("current_flag"),
                source_label=obj.get("source_label"),
            )
            self._pages[record.page_id] = record
        for obj in self._read_lines(self._path("checked_list.jsonl")):
            self._checked.add(obj["url"])
        for obj in self._read_lines(self._path("verdicts.jsonl")):
            record = VerdictRecord(
                page_id=obj["page_id"],
                verdict=obj["verdict"],
                analyst=obj["analyst"],
                at=from_rfc3339(obj["at"]),
                note=obj.get("note"),
            )
            self._latest_verdicts[record.page_id] = record
        for obj in self._read_lines(self._path("links.jsonl")):
            if obj.get("is_third_party"):
                self._internal_targets.add(obj["canonical_href"])

    def close(self) -> None:
        with self._lock:
            for handle in self._handles.values():
                if not handle.closed:
                    handle.close()
            self._handles.clear()

    # -- pages -------------------------------------------------------------

    def upsert_page(self, record: PageRecord) -> None:
        obj = {
            "page_id": record.page_id,
            "url": record.url,
            "tld_group": record.tld_group,
            "first_seen": to_rfc3339(record.first_seen),
            "origin": record.origin,
            "monitoring": record.monitoring,
            "current_flag": record.current_flag,
            "source_label": record.source_label,
        }
        with self._lock:
            self._append_line(self._path("pages.jsonl"), obj)
            self._pages[record.page_id] = record

    def has_page(self, page_id: str) -> bool:
        return page_id in self._pages

    def get_page(self, page_id: str) -> PageRecord:
        try:
            return self._pages[page_id]
        except KeyError:
            raise UnknownPage(page_id) from None

    def pages(self) -> list[PageRecord]:
        return sorted(self._pages.values(), key=lambda p: p.page_id)

    def set_monitoring(self, page_id: str, monitoring: str) -> PageRecord:
        record = replace(self.get_page(page_id), monitoring=monitoring)
        self.upsert_page(record)
        return record

    def set_current_flag(self, page_id: str, flag: str | None) -> PageRecord:
        record = self.get_page(page_id)
        if record.current_flag == flag:
            return record
        record = replace(record, current_flag=flag)
        self.upsert_page(record)
        return record

    # -- observations --------------------------------------------------------

    def append_observation(self, obs: Observation) -> None:
        if obs.page_id not in self._pages:
            raise UnknownPage(obs.page_id)
        self._append_line(self._series_path(obs.page_id), observation_to_json(obs))

    def read_series(self, page_id: str) -> list[Observation]:
        if page_id not in self._pages:
            raise UnknownPage(page_id)
        series = [
            observation_from_json(obj)
            for obj in self._read_lines(self._series_path(page_id))
        ]
        series.sort(key=lambda o: o.at)  # stable: insertion order breaks ties
        return series

    # -- links ---------------------------------------------------------------

    def record_links(self, page_id: str, links: list[ExtractedLink], at: datetime) -> None:
        if page_id not in self._pages:
            raise UnknownPage(page_id)
        with self._lock:
            for link in links:
                try:
                    canonical = canonicalize_url(link.href)
                except MalformedUrl:
                    canonical = link.href
                obj = {
                    "page_id": page_id,
                    "at": to_rfc3339(at),
                    "href": link.href,
                    "canonical_href": canonical,
                    "anchor_text": link.anchor_text,
                    "visibility": link.visibility.value,
                    "co_located_keyword": link.co_located_keyword,
                    "is_third_party": link.is_third_party,
                    "registrable_domain": link.registrable_domain,
                    "occurrences": link.occurrences,
                }
                self._append_line(self._path("links.jsonl"), obj)
                if link.is_third_party:
                    self._internal_targets.add(canonical)

    def read_links(self, page_id: str | None = None) -> list[LinkRecord]:
        rows = []
        for obj in self._read_lines(self._path("links.jsonl")):
            if page_id is not None and obj["page_id"] != page_id:
                continue
            rows.append(
                LinkRecord(
                    page_id=obj["page_id"],
                    at=from_rfc3339(obj["at"]),
                    href=obj["href"],
                    canonical_href=obj["canonical_href"],
                    anchor_text=obj.get("anchor_text", ""),
                    visibility=obj.get("visibility", "visible"),
                    co_located_keyword=obj.get("co_located_keyword", ""),
                    is_third_party=obj.get("is_third_party", False),
                    registrable_domain=obj.get("registrable_domain", ""),
                    occurrences=obj.get("occurrences", 1),
                )
            )
        return rows

    def internal_targets(self) -> list[str]:
        """Distinct canonical third-party URLs awaiting the internal sweep."""
        return sorted(self._internal_targets)

    # -- fetch provenance -------------------------------------------------------

    def record_fetch(self, record: FetchRecord) -> None:
        if record.page_id not in self._pages:
            raise UnknownPage(record.page_id)
        self._append_line(
            self._path("fetches.jsonl"),
            {
                "page_id": record.page_id,
                "at": to_rfc3339(record.at),
                "requested_url": record.requested_url,
                "final_url": record.final_url,
                "status": record.status,
                "http_status": record.http_status,
                "elapsed_ms": record.elapsed_ms,
                "truncated": record.truncated,
                "notes": list(record.notes),
                "redirect_chain": list(record.redirect_chain),
            },
        )

    def read_fetches(self, page_id: str | None = None) -> list[FetchRecord]:
        rows = []
        for obj in self._read_lines(self._path("fetches.jsonl")):
            if page_id is not None and obj["page_id"] != page_id:
                continue
            rows.append(
                FetchRecord(
                    page_id=obj["page_id"],
                    at=from_rfc3339(obj["at"]),
                    requested_url=obj["requested_url"],
                    final_url=obj["final_url"],
                    status=obj["status"],
                    http_status=obj.get("http_status"),
                    elapsed_ms=obj.get("elapsed_ms", 0),
                    truncated=obj.get("truncated", False),
                    notes=tuple(obj.get("notes", [])),
                    redirect_chain=tuple(obj.get("redirect_chain", [])),
                )
            )
        return rows

    # -- verdicts ------------------------------------------------------------

    def record_verdict(self, record: VerdictRecord) -> None:
        if record.page_id not in self._pages:
            raise UnknownPage(record.page_id)
        if record.verdict not in VERDICT_VALUES:
            raise ValueError(f"unknown verdict: {record.verdict!r}")
        obj = {
            "page_id": record.page_id,
            "verdict": record.verdict,
            "analyst": record.analyst,
            "at": to_rfc3339(record.at),
            "note": record.note,
        }
        with self._lock:
            self._append_line(self._path("verdicts.jsonl"), obj)
            self._latest_verdicts[record.page_id] = record
            if record.verdict == VERDICT_FALSE_POSITIVE:
                self.set_monitoring(record.page_id, MONITORING_STOPPED_FP)
            else:
                # confirmed or remediated pages stay monitored so recurrence is caught
                self.set_monitoring(record.page_id, MONITORING_ACTIVE)

    def latest_verdict(self, page_id: str) -> VerdictRecord | None:
        return self._latest_verdicts.get(page_id)

    def verdict_history(self, page_id: str) -> list[VerdictRecord]:
        return [
            VerdictRecord(
                page_id=obj["page_id"],
                verdict=obj["verdict"],
                analyst=obj["analyst"],
                at=from_rfc3339(obj["at"]),
                note=obj.get("note"),
            )
            for obj in self._read_lines(self._path("verdicts.jsonl"))
            if obj["page_id"] == page_id
        ]

    # -- checked list ----------------------------------------------------------

    def checked_list(self) -> CheckedList:
        return CheckedList(entries=frozenset(self._checked), updated_at=utc_now())

    def add_checked(self, canonical_urls: list[str], at: datetime | None = None) -> None:
        at = at or utc_now()
        with self._lock:
            for url in canonical_urls:
                if url in self._checked:
                    continue
                self._append_line(
                    self._path("checked_list.jsonl"), {"url": url, "at": to_rfc3339(at)}
                )
                self._checked.add(url)

    # -- bodies and snapshots ----------------------------------------------------

    def store_body(self, html: str) -> str:
        """Write a body content-addressed; returns its digest. Idempotent."""
        digest = body_digest(html)
        path = self._body_path(digest)
        with self._lock:
            if not path.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp")
                tmp.write_bytes(html.encode("utf-8"))
                os.replace(tmp, path)
        return digest

    def load_body(self, digest: str) -> str:
        path = self._body_path(digest)
        if not path.exists():
            raise KeyError(digest)
        raw = path.read_bytes()
        actual = hashlib.sha256(raw).hexdigest()
        if actual != digest:
            raise ValueError(f"body {digest} fails digest verification")
        return raw.decode("utf-8")

    def has_body(self, digest: str) -> bool:
        return self._body_path(digest).exists()

    def record_snapshot(
        self,
        page_id: str,
        fetched_at: datetime,
        content_digest: str,
        screenshot_path: str | None = None,
    ) -> SnapshotRecord:
        if page_id not in self._pages:
            raise UnknownPage(page_id)
        record = SnapshotRecord(
            page_id=page_id,
            fetched_at=fetched_at,
            content_digest=content_digest,
            body_path=f"bodies/{content_digest[:2]}/{content_digest}",
            screenshot_path=screenshot_path,
        )
        self._append_line(
            self._path("snapshots.jsonl"),
            {
                "page_id": record.page_id,
                "fetched_at": to_rfc3339(record.fetched_at),
                "content_digest": record.content_digest,
                "body_path": record.body_path,
                "screenshot_path": record.screenshot_path,
            },
        )
        return record

    def snapshots(self, page_id: str | None = None) -> list[SnapshotRecord]:
        rows = []
        for obj in self._read_lines(self._path("snapshots.jsonl")):
            if page_id is not None and obj["page_id"] != page_id:
                continue
            rows.append(
                SnapshotRecord(
                    page_id=obj["page_id"],
                    fetched_at=from_rfc3339(obj["fetched_at"]),
                    content_digest=obj["content_digest"],
                    body_path=obj["body_path"],
                    screenshot_path=obj.get("screenshot_path"),
                )
            )
        return rows
