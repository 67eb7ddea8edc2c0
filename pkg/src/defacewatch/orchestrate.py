"""Scheduling and collection: seed polling, hourly page re-checks, daily
third-party sweeps.

A page's first visit is a full collection (keyword profile, co-located
links, body snapshot); every later visit only re-profiles keywords, with
a fresh snapshot taken solely when the keyword total moved. Third-party
targets harvested from links are visited by their own daily handler and
never get link extraction of their own. Handlers run one at a time;
page work inside a handler fans out to a bounded worker pool.
"""

from __future__ import annotations

import concurrent.futures
import logging
import os
import random
import signal
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from urllib.parse import urlsplit

import httpx

from .analyze import KeywordProfile, KeywordSet, count_keywords, extract_colocated_links
from .classify import Observation, flag_timeline
from .config import Config
from .fetch import FetchEngine, FetchStatus, is_cross_site_redirect
from .psl import SuffixDatabase
from .seedsource import MonitoredPage, ingest, parse_seed_lines
from .store import (
    MONITORING_ACTIVE,
    ORIGIN_INTERNAL,
    ORIGIN_SEED,
    DataStore,
    FetchRecord,
    PageRecord,
    page_id_for,
)
from .timefmt import hours_between, utc_now

logger = logging.getLogger(__name__)


class LockHeld(RuntimeError):
    """Another live process owns the data directory."""


@dataclass
class PageOutcome:
    page_id: str
    url: str
    action: str  # full_collection | keyword_check | skipped | error
    note: str = ""


@dataclass
class HandlerReport:
    handler: str
    at: datetime
    outcomes: list[PageOutcome] = field(default_factory=list)

    def count(self, action: str) -> int:
        return sum(1 for o in self.outcomes if o.action == action)

    def summary(self) -> str:
        actions = sorted({o.action for o in self.outcomes})
        parts = [f"{a}={self.count(a)}" for a in actions] or ["nothing due"]
        return f"{self.handler}: " + ", ".join(parts)


class DirectoryLock:
    """Pidfile lock making the process single-instance per data directory."""

    def __init__(self, data_dir: str | Path):
        self.path = Path(data_dir) / ".lock"

    def acquire(self) -> None:
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            pid = self._holder()
            if pid is not None and self._alive(pid):
                raise LockHeld(f"data directory locked by pid {pid} ({self.path})")
            logger.warning("removing stale lock %s (pid %s is gone)", self.path, pid)
            self.path.unlink(missing_ok=True)
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))

    def release(self) -> None:
        self.path.unlink(missing_ok=True)

    def _holder(self) -> int | None:
        try:
            return int(self.path.read_text().strip())
        except (OSError, ValueError):
            return None

    @staticmethod
    def _alive(pid: int) -> bool:
        try:
            os.kill(pid, 0)
        except ProcessLookupError:
            return False
        except PermissionError:
            return True
        return True


class Orchestrator:
    """Drives the collection pipeline over one store and one fetch engine."""

    def __init__(
        self,
        store: DataStore,
        engine: FetchEngine,
        psl: SuffixDatabase,
        cfg: Config,
    ):
        self.store = store
        self.engine = engine
        self.psl = psl
        self.cfg = cfg
        self.keywords: KeywordSet = cfg.keyword_set()
        self._handler_lock = threading.Lock()
        self._shutdown = threading.Event()

    # -- seeds ---------------------------------------------------------------

    def _tld_group(self, url: str) -> str:
        host = urlsplit(url).hostname or ""
        return self.psl.public_suffix(host) if host else ""

    def _register_targets(self, targets: list[MonitoredPage], origin: str) -> None:
        for target in targets:
            page_id = page_id_for(target.url)
            if self.store.has_page(page_id):
                continue
            self.store.upsert_page(
                PageRecord(
                    page_id=page_id,
                    url=target.url,
                    tld_group=self._tld_group(target.url),
                    first_seen=target.discovered_at,
                    origin=origin,
                    monitoring=MONITORING_ACTIVE,
                    source_label=target.source_label,
                )
            )

    def ingest_lines(self, lines: list[str], source_label: str, now: datetime | None = None):
        """Parse and ingest seed lines; registers new pages and grows the checked list."""
        now = now or utc_now()
        entries, bad = parse_seed_lines(lines, source_label, now)
        targets, updated, report = ingest(entries, self.store.checked_list(), now)
        report.skipped.extend(bad)
        report.total += len(bad)
        self._register_targets(targets, ORIGIN_SEED)
        self.store.add_checked([t.url for t in targets], now)
        return targets, report

    def poll_seed_endpoint(self, now: datetime | None = None):
        """Fetch the configured seed endpoint and ingest its body, if any."""
        if not self.cfg.seed_endpoint:
            return [], None
        try:
            response = httpx.get(
                self.cfg.seed_endpoint,
                timeout=self.cfg.fetch.timeout_ms / 1000.0,
                headers={"User-Agent": self.cfg.fetch.user_agent},
            )
            response.raise_for_status()
        except httpx.HTTPError as exc:
            logger.warning("seed endpoint poll failed: %s", exc)
            return [], None
        label = f"endpoint:{self.cfg.seed_endpoint}"
        return self.ingest_lines(response.text.splitlines(), label, now)

    # -- page work -------------------------------------------------------------

    def _last_total(self, page_id: str) -> int | None:
        series = self.store.read_series(page_id)
        if not series:
            return None
        return series[-1].profile.total

    def _observe(self, record: PageRecord, now: datetime, full: bool, links: bool) -> PageOutcome:
        result = self.engine.fetch_page(record.url)
        reachable = result.status is not FetchStatus.UNREACHABLE
        if reachable:
            profile = count_keywords(
                result.html,
                None,
                result.final_url,
                self.keywords,
                self.cfg.offscreen_px,
            )
        else:
            profile = KeywordProfile.empty()
        previous_total = self._last_total(record.page_id)

        obs = Observation(
            page_id=record.page_id,
            at=now,
            reachable=reachable,
            profile=profile,
            redirect_cross_site=is_cross_site_redirect(result, self.psl),
        )
        self.store.append_observation(obs)
        self.store.record_fetch(
            FetchRecord(
                page_id=record.page_id,
                at=now,
                requested_url=result.requested_url,
                final_url=result.final_url,
                status=result.status.value,
                http_status=result.http_status,
                elapsed_ms=result.elapsed_ms,
                truncated=result.truncated,
                notes=result.notes,
                redirect_chain=tuple(
                    {
                        "from_url": hop.from_url,
                        "to_url": hop.to_url,
                        "mechanism": hop.mechanism.value,
                        "status_code": hop.status_code,
                    }
                    for hop in result.redirect_chain
                ),
            )
        )

        note = ""
        if reachable and result.html:
            take_snapshot = full or previous_total != profile.total
            if take_snapshot:
                digest = self.store.store_body(result.html)
                self.store.record_snapshot(record.page_id, now, digest)
                note = "snapshot"
            if links and full:
                extracted = extract_colocated_links(
                    result.html,
                    result.final_url,
                    self.keywords,
                    self.psl,
                    self.cfg.ancestor_depth,
                    self.cfg.offscreen_px,
                )
                if extracted:
                    self.store.record_links(record.page_id, extracted, now)
                    note = f"{note}+{len(extracted)} links" if note else f"{len(extracted)} links"
        elif not reachable:
            note = "; ".join(result.notes) or "unreachable"

        flag = flag_timeline(
            self.store.read_series(record.page_id), self.cfg.single_keyword_mode
        )
        self.store.set_current_flag(record.page_id, flag.value)
        return PageOutcome(
            page_id=record.page_id,
            url=record.url,
            action="full_collection" if full else "keyword_check",
            note=note,
        )

    def _observe_safely(self, record: PageRecord, now: datetime, full: bool, links: bool) -> PageOutcome:
        try:
            return self._observe(record, now, full, links)
        except Exception as exc:  # isolate per-page failures
            logger.exception("page %s failed", record.url)
            return PageOutcome(
                page_id=record.page_id, url=record.url, action="error", note=str(exc)
            )

    def _run_pool(self, jobs: list[tuple[PageRecord, bool, bool]], now: datetime) -> list[PageOutcome]:
        if not jobs:
            return []
        outcomes: list[PageOutcome] = []
        workers = max(1, self.cfg.fetch.concurrency)
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(self._observe_safely, record, now, full, links)
                for record, full, links in jobs
            ]
            for future in concurrent.futures.as_completed(futures):
                outcomes.append(future.result())
        outcomes.sort(key=lambda o: o.page_id)
        return outcomes

    def _due(self, record: PageRecord, now: datetime, interval_hours: float) -> bool:
        series = self.store.read_series(record.page_id)
        if not series:
            return True
        return hours_between(series[-1].at, now) >= interval_hours

    # -- handlers ----------------------------------------------------------------

    def run_list_handler(self, now: datetime | None = None, force_due: bool = False) -> HandlerReport:
        """Re-check every active seeded page that is due.

        First-ever visits run every collector; later visits only count
        keywords. Pages stopped by a verdict are skipped outright.
        """
        now = now or utc_now()
        report = HandlerReport(handler="list", at=now)
        with self._handler_lock:
            jobs: list[tuple[PageRecord, bool, bool]] = []
            for record in self.store.pages():
                if record.origin != ORIGIN_SEED:
                    continue
                if record.monitoring != MONITORING_ACTIVE:
                    report.outcomes.append(
                        PageOutcome(record.page_id, record.url, "skipped", record.monitoring)
                    )
                    continue
                first_time = not self.store.read_series(record.page_id)
                if not first_time and not force_due and not self._due(
                    record, now, self.cfg.schedule.list_handler_hours
                ):
                    continue
                jobs.append((record, first_time, first_time))
            report.outcomes.extend(self._run_pool(jobs, now))
        report.outcomes.sort(key=lambda o: o.page_id)
        return report

    def run_internal_handler(self, now: datetime | None = None, force_due: bool = False) -> HandlerReport:
        """Visit each distinct third-party target harvested from link rows."""
        now = now or utc_now()
        report = HandlerReport(handler="internal", at=now)
        with self._handler_lock:
            jobs: list[tuple[PageRecord, bool, bool]] = []
            for url in self.store.internal_targets():
                page_id = page_id_for(url)
                if not self.store.has_page(page_id):
                    self.store.upsert_page(
                        PageRecord(
                            page_id=page_id,
                            url=url,
                            tld_group=self._tld_group(url),
                            first_seen=now,
                            origin=ORIGIN_INTERNAL,
                        )
                    )
                record = self.store.get_page(page_id)
                if record.origin != ORIGIN_INTERNAL:
                    continue  # already monitored as a seeded page
                if record.monitoring != MONITORING_ACTIVE:
                    report.outcomes.append(
                        PageOutcome(record.page_id, record.url, "skipped", record.monitoring)
                    )
                    continue
                if not force_due and not self._due(
                    record, now, self.cfg.schedule.internal_handler_hours
                ):
                    continue
                jobs.append((record, False, False))
            report.outcomes.extend(self._run_pool(jobs, now))
        report.outcomes.sort(key=lambda o: o.page_id)
        return report

    # -- entry points ----------------------------------------------------------------

    def run_once(self, now: datetime | None = None) -> dict[str, HandlerReport]:
        """One forced pass of each handler, for tests and cron-style use."""
        now = now or utc_now()
        if self.cfg.seed_endpoint:
            self.poll_seed_endpoint(now)
        return {
            "list": self.run_list_handler(now, force_due=True),
            "internal": self.run_internal_handler(now, force_due=True),
        }

    def request_shutdown(self) -> None:
        self._shutdown.set()

    def run_daemon(self, install_signals: bool = True) -> None:
        """Run all cadences until a shutdown signal arrives.

        Intervals come off the monotonic clock with a small jitter so a
        wall-clock jump can never fire a handler early or with a negative
        delay; wall-clock time only labels observations.
        """
        if install_signals:
            signal.signal(signal.SIGINT, lambda *_: self.request_shutdown())
            signal.signal(signal.SIGTERM, lambda *_: self.request_shutdown())

        schedule = self.cfg.schedule
        tasks = {
            "seed": (schedule.seed_poll_hours, self._daemon_poll_seeds),
            "list": (schedule.list_handler_hours, lambda: self.run_list_handler()),
            "internal": (schedule.internal_handler_hours, lambda: self.run_internal_handler()),
        }
        next_due = {name: time.monotonic() for name in tasks}

        def jittered(hours: float) -> float:
            spread = schedule.jitter_fraction
            return hours * 3600.0 * (1.0 + random.uniform(-spread, spread))

        logger.info("daemon started; cadences(h): %s", {
            name: interval for name, (interval, _) in tasks.items()
        })
        while not self._shutdown.is_set():
            now_mono = time.monotonic()
            for name, (interval, runner) in tasks.items():
                if now_mono >= next_due[name] and not self._shutdown.is_set():
                    try:
                        result = runner()
                        if isinstance(result, HandlerReport):
                            logger.info(result.summary())
                    except Exception:
                        logger.exception("%s handler pass failed", name)
                    next_due[name] = time.monotonic() + max(1.0, jittered(interval))
            pending = [due for due in next_due.values()]
            wait = max(0.2, min(pending) - time.monotonic())
            self._shutdown.wait(timeout=min(wait, 30.0))
        logger.info("daemon stopped")

    def _daemon_poll_seeds(self) -> None:
        self.poll_seed_endpoint()
