from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from defacewatch.analyze import KeywordProfile, KeywordSet, Visibility
from defacewatch.classify import Observation
from defacewatch.psl import SuffixDatabase
from defacewatch.store import DataStore, PageRecord, page_id_for

EPOCH = datetime(2025, 5, 27, tzinfo=timezone.utc)


@pytest.fixture(scope="session")
def psl_db() -> SuffixDatabase:
    return SuffixDatabase.load()


@pytest.fixture()
def keywords() -> KeywordSet:
    return KeywordSet()


@pytest.fixture()
def store(tmp_path) -> DataStore:
    s = DataStore(tmp_path / "data")
    yield s
    s.close()


def profile_from_counts(
    counts: dict[str, int],
    visibility: Visibility = Visibility.VISIBLE,
    title_hits: tuple[str, ...] = (),
    url_hits: tuple[str, ...] = (),
) -> KeywordProfile:
    per_keyword = {kw: {visibility: n} for kw, n in counts.items() if n > 0}
    total = sum(n for n in counts.values() if n > 0)
    distinct = sum(1 for n in counts.values() if n > 0)
    return KeywordProfile(
        per_keyword=per_keyword,
        total=total,
        distinct=distinct,
        title_hits=title_hits,
        url_hits=url_hits,
    )


def obs_at(
    page_id: str,
    hours: float,
    counts: dict[str, int] | None = None,
    reachable: bool = True,
    **profile_kwargs,
) -> Observation:
    """Observation `hours` after the fixed test epoch."""
    if not reachable:
        return Observation.unreachable_at(page_id, EPOCH + timedelta(hours=hours))
    return Observation(
        page_id=page_id,
        at=EPOCH + timedelta(hours=hours),
        reachable=True,
        profile=profile_from_counts(counts or {}, **profile_kwargs),
    )


def series_from_totals(page_id: str, totals: list[int], step_hours: float = 1.0):
    """A series whose effective totals are exactly `totals`.

    Uses two keywords per positive observation so the single-keyword
    false-positive rule never kicks in. An effective total of exactly 1
    is unrealizable (one occurrence is always one distinct keyword), so
    callers must avoid it.
    """
    series = []
    for i, total in enumerate(totals):
        if total == 1:
            raise ValueError("an effective total of 1 cannot be realized by a profile")
        counts = {} if total == 0 else {"slot": total - 1, "gacor": 1}
        series.append(obs_at(page_id, i * step_hours, counts))
    return series


def register_page(
    store: DataStore,
    url: str,
    tld_group: str = "ac.id",
    origin: str = "seed",
    first_seen: datetime = EPOCH,
) -> PageRecord:
    record = PageRecord(
        page_id=page_id_for(url),
        url=url,
        tld_group=tld_group,
        first_seen=first_seen,
        origin=origin,
    )
    store.upsert_page(record)
    return record
