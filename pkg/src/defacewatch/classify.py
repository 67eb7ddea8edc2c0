"""Single-observation assessment and per-page lifecycle classification.

An observation series reduces to effective keyword counts: unreachable
checks count zero, and so do checks that only ever matched one distinct
keyword, which is how pure substring noise ("bet" inside "between")
stays out of the timelines. Flags follow a strict precedence so every
page gets exactly one.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum

from .analyze import KeywordProfile
from .timefmt import hours_between


SINGLE_KEYWORD_DISTINCT = "distinct"  # one distinct keyword means false positive
SINGLE_KEYWORD_TOTAL = "total"        # a lone occurrence overall means false positive
SINGLE_KEYWORD_MODES = (SINGLE_KEYWORD_DISTINCT, SINGLE_KEYWORD_TOTAL)


class EmptySeries(ValueError):
    """A timeline operation needs at least one observation."""


class Status(str, Enum):
    DEFACED = "defaced"
    SUSPECTED_FALSE_POSITIVE = "suspected_false_positive"
    CLEAN = "clean"
    UNREACHABLE = "unreachable"


class Confidence(str, Enum):
    HIGH = "high"
    MEDIUM = "medium"


class Flag(str, Enum):
    REPEAT_DEFACEMENT = "repeat_defacement"
    FIXED = "fixed"
    DEFACED_FLUCTUATING = "defaced_fluctuating"
    DEFACED_CONSTANT = "defaced_constant"
    NOT_FOUND = "not_found"


BUCKET_LABELS = ("≤24h", "24–72h", "72–168h", ">168h")


@dataclass(frozen=True)
class Observation:
    """One timestamped measurement of a page."""

    page_id: str
    at: datetime
    reachable: bool
    profile: KeywordProfile
    redirect_cross_site: bool = False

    def __post_init__(self) -> None:
        if not self.reachable and self.profile.total != 0:
            raise ValueError("unreachable observations carry an empty profile")

    @classmethod
    def unreachable_at(cls, page_id: str, at: datetime) -> "Observation":
        return cls(page_id=page_id, at=at, reachable=False, profile=KeywordProfile.empty())


@dataclass(frozen=True)
class PageAssessment:
    status: Status
    confidence: Confidence
    reasons: tuple[str, ...]


@dataclass(frozen=True)
class Cycle:
    """One defacement-to-fix interval."""

    start_at: datetime
    fixed_at: datetime
    delta_hours: float


@dataclass(frozen=True)
class ReactionStats:
    cycles: tuple[Cycle, ...] = ()
    delta_first_hours: float | None = None
    delta_avg_hours: float | None = None


def assess(obs: Observation, single_keyword_mode: str = SINGLE_KEYWORD_DISTINCT) -> PageAssessment:
    """Classify a single observation.

    Rule order: unreachable, then the single-keyword false-positive rule,
    then clean on zero total, otherwise defaced. Confidence is high only
    for defaced pages whose title or URL carries a keyword.
    """
    if single_keyword_mode not in SINGLE_KEYWORD_MODES:
        raise ValueError(f"unknown single_keyword_mode: {single_keyword_mode!r}")
    if not obs.reachable:
        return PageAssessment(
            status=Status.UNREACHABLE,
            confidence=Confidence.MEDIUM,
            reasons=("page failed to load; keyword total treated as zero",),
        )
    profile = obs.profile
    if single_keyword_mode == SINGLE_KEYWORD_DISTINCT:
        single = profile.distinct == 1
        single_reason = "only one distinct keyword matched"
    else:
        single = profile.total == 1
        single_reason = "only a single keyword occurrence matched"
    if single:
        return PageAssessment(
            status=Status.SUSPECTED_FALSE_POSITIVE,
            confidence=Confidence.MEDIUM,
            reasons=(single_reason,),
        )
    if profile.total == 0:
        return PageAssessment(
            status=Status.CLEAN,
            confidence=Confidence.MEDIUM,
            reasons=("no keyword occurrences",),
        )
    reasons = [f"{profile.distinct} distinct keywords, {profile.total} occurrences"]
    confidence = Confidence.MEDIUM
    if profile.title_hits or profile.url_hits:
        confidence = Confidence.HIGH
        if profile.title_hits:
            reasons.append(f"title contains {', '.join(profile.title_hits)}")
        if profile.url_hits:
            reasons.append(f"url contains {', '.join(profile.url_hits)}")
    return PageAssessment(status=Status.DEFACED, confidence=confidence, reasons=tuple(reasons))


def effective_count(obs: Observation, single_keyword_mode: str = SINGLE_KEYWORD_DISTINCT) -> int:
    """Keyword total for timeline purposes; unreachable and false-positive checks count zero."""
    if not obs.reachable:
        return 0
    if assess(obs, single_keyword_mode).status is Status.SUSPECTED_FALSE_POSITIVE:
        return 0
    return obs.profile.total


def _effective_counts(
    series: list, single_keyword_mode: str
) -> list[int]:
    if not series:
        raise EmptySeries("series has no observations")
    counts = []
    for item in series:
        if isinstance(item, Observation):
            counts.append(effective_count(item, single_keyword_mode))
        else:
            counts.append(int(item))  # already-reduced effective count
    return counts


def flag_timeline(
    series: list,
    single_keyword_mode: str = SINGLE_KEYWORD_DISTINCT,
) -> Flag:
    """Lifecycle flag for a time-ordered series.

    Accepts observations (reduced to effective counts here) or counts
    that were reduced upstream. Precedence: never positive, then
    gone-and-back (repeat), then ending at zero (fixed), then
    positive-and-identical throughout (constant), otherwise fluctuating.
    """
    counts = _effective_counts(series, single_keyword_mode)

    if not any(c > 0 for c in counts):
        return Flag.NOT_FOUND

    first_positive = next(i for i, c in enumerate(counts) if c > 0)
    zero_after = next(
        (j for j in range(first_positive + 1, len(counts)) if counts[j] == 0), None
    )
    if zero_after is not None and any(c > 0 for c in counts[zero_after + 1:]):
        return Flag.REPEAT_DEFACEMENT

    if counts[-1] == 0:
        return Flag.FIXED

    if all(c > 0 for c in counts) and len(set(counts)) == 1:
        return Flag.DEFACED_CONSTANT

    return Flag.DEFACED_FLUCTUATING


def reaction_stats(
    series: list[Observation],
    single_keyword_mode: str = SINGLE_KEYWORD_DISTINCT,
) -> ReactionStats:
    """Defacement-to-fix cycles and their durations.

    A cycle opens at the first positive observation outside any cycle and
    closes at the next zero observation; trailing positives that never
    reach zero produce no cycle. Durations are fractional hours.
    """
    counts = _effective_counts(series, single_keyword_mode)
    cycles: list[Cycle] = []
    open_start: datetime | None = None
    for obs, count in zip(series, counts):
        if open_start is None:
            if count > 0:
                open_start = obs.at
        elif count == 0:
            cycles.append(
                Cycle(
                    start_at=open_start,
                    fixed_at=obs.at,
                    delta_hours=hours_between(open_start, obs.at),
                )
            )
            open_start = None
    if not cycles:
        return ReactionStats()
    deltas = [c.delta_hours for c in cycles]
    return ReactionStats(
        cycles=tuple(cycles),
        delta_first_hours=deltas[0],
        delta_avg_hours=sum(deltas) / len(deltas),
    )


def bucket_delta(delta_hours: float) -> str:
    """Remediation-time bucket; each boundary belongs to the bucket on its left."""
    if delta_hours < 0:
        raise ValueError("delta_hours must be non-negative")
    if delta_hours <= 24.0:
        return BUCKET_LABELS[0]
    if delta_hours <= 72.0:
        return BUCKET_LABELS[1]
    if delta_hours <= 168.0:
        return BUCKET_LABELS[2]
    return BUCKET_LABELS[3]
