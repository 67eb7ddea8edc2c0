"""Page retrieval with full redirect-chain accounting.

Redirects are followed hop by hop rather than delegated to the client,
so every 3xx Location and qualifying meta refresh lands in the result as
an explicit hop. Network-level failures (DNS, connect, TLS, timeout,
redirect loops) never raise; they come back as unreachable results with
an empty body. A rendering-browser adapter can stand in for this engine
by producing the same FetchResult shape, including script_observed hops,
which the static engine itself never emits.
"""

from __future__ import annotations

import codecs
import logging
import re
import threading
import time
import urllib.robotparser
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from urllib.parse import urljoin, urlsplit

import httpx

from .htmldoc import find_meta_refresh
from .psl import SuffixDatabase
from .seedsource import MalformedUrl, canonicalize_url
from .timefmt import utc_now

logger = logging.getLogger(__name__)

DEFAULT_USER_AGENT = "defacewatch/0.1 (+defacement monitoring)"


class FetchStatus(str, Enum):
    OK = "ok"
    HTTP_ERROR = "http_error"
    UNREACHABLE = "unreachable"


class Mechanism(str, Enum):
    HTTP_3XX = "http_3xx"
    META_REFRESH = "meta_refresh"
    SCRIPT_OBSERVED = "script_observed"


@dataclass(frozen=True)
class RedirectHop:
    from_url: str
    to_url: str
    mechanism: Mechanism
    status_code: int | None = None

    def __post_init__(self) -> None:
        if self.from_url == self.to_url:
            raise ValueError("redirect hop must change the URL")
        if self.mechanism is Mechanism.HTTP_3XX:
            if self.status_code is None or not 300 <= self.status_code <= 399:
                raise ValueError("http_3xx hops carry a 3xx status code")
        elif self.status_code is not None:
            raise ValueError("only http_3xx hops carry a status code")


@dataclass(frozen=True)
class FetchResult:
    requested_url: str
    final_url: str
    redirect_chain: tuple[RedirectHop, ...]
    status: FetchStatus
    http_status: int | None
    html: str
    fetched_at: datetime
    elapsed_ms: int
    truncated: bool = False
    notes: tuple[str, ...] = ()


@dataclass
class FetchPolicy:
    timeout_ms: int = 30000
    max_redirects: int = 10
    meta_refresh_max_seconds: float = 5.0
    per_host_delay_ms: int = 2000
    concurrency: int = 4
    user_agent: str = DEFAULT_USER_AGENT
    respect_robots: bool = False
    max_body_bytes: int = 8 * 1024 * 1024
    tls_verify: bool = False  # monitored pages routinely serve broken certs


_META_CHARSET_RE = re.compile(
    rb"""<meta[^>]+charset\s*=\s*["']?\s*([a-zA-Z0-9_.:-]+)""", re.IGNORECASE
)


def decode_body(raw: bytes, content_type: str | None) -> str:
    """Decode per the header charset, then a meta sniff, then UTF-8 with replacement."""
    encodings = []
    if content_type:
        match = re.search(r"charset\s*=\s*([^\s;]+)", content_type, re.IGNORECASE)
        if match:
            encodings.append(match.group(1).strip("'\""))
    sniff = _META_CHARSET_RE.search(raw[:2048])
    if sniff:
        encodings.append(sniff.group(1).decode("ascii", "ignore"))
    for name in encodings:
        try:
            codecs.lookup(name)
            return raw.decode(name)
        except (LookupError, UnicodeDecodeError):
            continue
    return raw.decode("utf-8", errors="replace")


class HostThrottle:
    """Serializes requests per host and enforces a minimum gap between them."""

    def __init__(self, delay_ms: int, sleeper=time.sleep, clock=time.monotonic):
        self.delay_s = delay_ms / 1000.0
        self._sleep = sleeper
        self._clock = clock
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}

    def _lock_for(self, host: str) -> threading.Lock:
        with self._guard:
            if host not in self._locks:
                self._locks[host] = threading.Lock()
            return self._locks[host]

    def run(self, host: str, fn):
        with self._lock_for(host):
            if self.delay_s > 0:
                last = self._last.get(host)
                if last is not None:
                    wait = self.delay_s - (self._clock() - last)
                    if wait > 0:
                        self._sleep(wait)
            try:
                return fn()
            finally:
                self._last[host] = self._clock()


def _loop_key(url: str) -> str:
    try:
        return canonicalize_url(url)
    except MalformedUrl:
        return url


class FetchEngine:
    """Static HTTP fetcher conforming to the collection seam."""

    def __init__(self, policy: FetchPolicy | None = None, transport: httpx.BaseTransport | None = None):
        self.policy = policy or FetchPolicy()
        self._client = httpx.Client(
            follow_redirects=False,
            timeout=self.policy.timeout_ms / 1000.0,
            headers={"User-Agent": self.policy.user_agent},
            transport=transport,
            verify=self.policy.tls_verify,
        )
        self.throttle = HostThrottle(self.policy.per_host_delay_ms)
        self._robots: dict[str, urllib.robotparser.RobotFileParser | None] = {}
        self._robots_lock = threading.Lock()

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "FetchEngine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- robots ------------------------------------------------------------

    def _robots_allows(self, url: str) -> bool:
        if not self.policy.respect_robots:
            return True
        parts = urlsplit(url)
        origin = f"{parts.scheme}://{parts.netloc}"
        with self._robots_lock:
            parser = self._robots.get(origin, "missing")
        if parser == "missing":
            parser = urllib.robotparser.RobotFileParser()
            try:
                response = self._client.get(origin + "/robots.txt")
                if response.status_code == 200:
                    parser.parse(response.text.splitlines())
                else:
                    parser = None
            except httpx.HTTPError:
                parser = None
            with self._robots_lock:
                self._robots[origin] = parser
        if parser is None:
            return True
        return parser.can_fetch(self.policy.user_agent, url)

    # -- fetching ----------------------------------------------------------

    def _read_capped(self, response: httpx.Response) -> tuple[bytes, bool]:
        cap = self.policy.max_body_bytes
        chunks: list[bytes] = []
        size = 0
        truncated = False
        for chunk in response.iter_bytes():
            room = cap - size
            if room <= 0:
                truncated = True
                break
            if len(chunk) > room:
                chunks.append(chunk[:room])
                size = cap
                truncated = True
                break
            chunks.append(chunk)
            size += len(chunk)
        return b"".join(chunks), truncated

    def fetch_page(self, url: str) -> FetchResult:
        """Retrieve a page, following 3xx hops and at most one meta refresh.

        The hop budget applies to HTTP redirects; the single qualifying
        meta refresh rides on top of it. A canonical URL repeating inside
        one chain is a loop and makes the result unreachable.
        """
        started = time.monotonic()
        fetched_at = utc_now()
        chain: list[RedirectHop] = []
        notes: list[str] = []
        current = url
        visited = {_loop_key(url)}
        meta_followed = False
        http_redirects = 0

        def finish(
            status: FetchStatus,
            http_status: int | None = None,
            html: str = "",
            truncated: bool = False,
        ) -> FetchResult:
            return FetchResult(
                requested_url=url,
                final_url=current,
                redirect_chain=tuple(chain),
                status=status,
                http_status=http_status,
                html=html if status is not FetchStatus.UNREACHABLE else "",
                fetched_at=fetched_at,
                elapsed_ms=int((time.monotonic() - started) * 1000),
                truncated=truncated,
                notes=tuple(notes),
            )

        if not self._robots_allows(url):
            notes.append("blocked by robots.txt")
            return finish(FetchStatus.UNREACHABLE)

        while True:
            host = urlsplit(current).hostname or ""
            try:
                request = self._client.build_request("GET", current)
                response = self.throttle.run(
                    host, lambda: self._client.send(request, stream=True)
                )
            except httpx.HTTPError as exc:
                notes.append(f"{type(exc).__name__}: {exc}")
                return finish(FetchStatus.UNREACHABLE)

            try:
                code = response.status_code
                location = response.headers.get("location")
                if 300 <= code <= 399 and location:
                    response.close()
                    if http_redirects >= self.policy.max_redirects:
                        notes.append("max redirects exceeded")
                        return finish(FetchStatus.HTTP_ERROR, http_status=code)
                    target = urljoin(current, location)
                    if urlsplit(target).scheme not in ("http", "https"):
                        notes.append(f"redirect to non-http target: {target}")
                        return finish(FetchStatus.HTTP_ERROR, http_status=code)
                    key = _loop_key(target)
                    if key in visited:
                        notes.append(f"redirect loop at {target}")
                        return finish(FetchStatus.UNREACHABLE)
                    visited.add(key)
                    chain.append(
                        RedirectHop(
                            from_url=current,
                            to_url=target,
                            mechanism=Mechanism.HTTP_3XX,
                            status_code=code,
                        )
                    )
                    current = target
                    http_redirects += 1
                    continue

                raw, truncated = self._read_capped(response)
                if truncated:
                    notes.append("body truncated at size cap")
                html = decode_body(raw, response.headers.get("content-type"))
            except httpx.HTTPError as exc:
                notes.append(f"{type(exc).__name__}: {exc}")
                return finish(FetchStatus.UNREACHABLE)
            finally:
                response.close()

            if 200 <= code < 300 and not meta_followed:
                refresh = find_meta_refresh(html)
                if refresh is not None:
                    delay, raw_target = refresh
                    if delay <= self.policy.meta_refresh_max_seconds:
                        target = urljoin(current, raw_target)
                        if urlsplit(target).scheme in ("http", "https"):
                            key = _loop_key(target)
                            if key in visited:
                                notes.append(f"redirect loop at {target}")
                                return finish(FetchStatus.UNREACHABLE)
                            visited.add(key)
                            chain.append(
                                RedirectHop(
                                    from_url=current,
                                    to_url=target,
                                    mechanism=Mechanism.META_REFRESH,
                                )
                            )
                            current = target
                            meta_followed = True
                            continue

            if 200 <= code < 300:
                return finish(FetchStatus.OK, http_status=code, html=html, truncated=truncated)
            if 300 <= code <= 399:
                notes.append("redirect without followable location")
                return finish(FetchStatus.HTTP_ERROR, http_status=code, html=html, truncated=truncated)
            return finish(FetchStatus.HTTP_ERROR, http_status=code, html=html, truncated=truncated)


def is_cross_site_redirect(result: FetchResult, psl: SuffixDatabase) -> bool:
    """True when the chain ends on a different registrable domain than requested."""
    if not result.redirect_chain:
        return False
    from_host = urlsplit(result.requested_url).hostname or ""
    to_host = urlsplit(result.final_url).hostname or ""
    if not from_host or not to_host:
        return False
    return psl.registrable_domain(from_host) != psl.registrable_domain(to_host)
