"""Summary statistics over the store: crawler overview, keyword and flag
tables, TLD breakdown, remediation-time distributions, third-party links.

Every generator is a pure function of a store snapshot plus options, and
all output (JSON, CSV, SVG) is emitted in sorted deterministic order, so
identical snapshots produce byte-identical bundles.
"""

from __future__ import annotations

import csv
import io
import logging
import statistics
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from urllib.parse import urlsplit

from .analyze import KeywordSet
from .classify import (
    BUCKET_LABELS,
    Flag,
    bucket_delta,
    flag_timeline,
    reaction_stats,
)
from .psl import SuffixDatabase
from .store import (
    MONITORING_STOPPED_FP,
    ORIGIN_SEED,
    VERDICT_FALSE_POSITIVE,
    DataStore,
)
from .timefmt import to_rfc3339

logger = logging.getLogger(__name__)

GRANULARITY_DOMAIN = "domain"
GRANULARITY_HOST = "host"

DEFAULT_BIN_HOURS = 12.0
TOP_DOMAINS = 10


def round_half_up(value: float, ndigits: int = 1) -> float:
    quantum = Decimal(10) ** -ndigits
    return float(Decimal(str(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class OverviewStats:
    pages_found: int
    failed_to_load: int
    defaced_pages: int
    false_positive_pages: int
    false_positive_rate_pct: float
    defaced_websites: int
    mean_pages_per_site: float | None
    median_pages_per_site: float | None
    tld_count: int
    pages_pending: int = 0


@dataclass(frozen=True)
class DeltaSummary:
    count: int
    mean: float
    median: float
    q1: float
    q3: float
    outliers: tuple[float, ...]
    histogram: tuple[tuple[float, float, int], ...]  # (bin_start, bin_end, count)
    buckets: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class LinkStats:
    unique_urls: int
    unique_domains: int
    mean_occurrence: float | None
    median_occurrence: float | None
    urls_seen_once: int
    top_domains: tuple[tuple[str, int], ...]  # (domain, distinct source sites)


@dataclass(frozen=True)
class ReportBundle:
    as_of: str | None
    overview: OverviewStats
    keyword_table: tuple[tuple[str, float, int], ...]  # (keyword, websites pct, max per page)
    flag_table: tuple[tuple[str, int], ...]
    tld_table: tuple[tuple[str, int, int], ...]  # (tld group, pages, websites)
    reaction_first: DeltaSummary | None
    reaction_avg: DeltaSummary | None
    links: LinkStats


@dataclass
class ReportOptions:
    granularity: str = GRANULARITY_DOMAIN
    bin_hours: float = DEFAULT_BIN_HOURS
    single_keyword_mode: str = "distinct"
    top_domains: int = TOP_DOMAINS


# -- pure statistic helpers ---------------------------------------------------


def overview_from_counts(
    pages_found: int,
    failed_to_load: int,
    defaced_pages: int,
    site_page_counts: list[int],
    tld_count: int = 0,
    pages_pending: int = 0,
) -> OverviewStats:
    """Overview identity: found pages split into failed, defaced and false positive."""
    false_positive_pages = pages_found - failed_to_load - defaced_pages
    if false_positive_pages < 0:
        raise ValueError("counts violate pages_found = failed + defaced + false positive")
    rate = 100.0 * false_positive_pages / pages_found if pages_found else 0.0
    mean_pages = median_pages = None
    if site_page_counts:
        mean_pages = round_half_up(sum(site_page_counts) / len(site_page_counts), 2)
        median_pages = float(statistics.median(site_page_counts))
    return OverviewStats(
        pages_found=pages_found,
        failed_to_load=failed_to_load,
        defaced_pages=defaced_pages,
        false_positive_pages=false_positive_pages,
        false_positive_rate_pct=round_half_up(rate, 1),
        defaced_websites=len(site_page_counts),
        mean_pages_per_site=mean_pages,
        median_pages_per_site=median_pages,
        tld_count=tld_count,
        pages_pending=pages_pending,
    )


def summarize_deltas(values: list[float], bin_hours: float = DEFAULT_BIN_HOURS) -> DeltaSummary:
    """Descriptive stats for remediation deltas.

    Quantiles use linear interpolation over the sorted data (the
    inclusive method); outliers follow the 1.5*IQR fences; histogram bins
    are half-open [k*w, (k+1)*w) starting at zero.
    """
    if not values:
        raise ValueError("no deltas to summarize")
    mean = statistics.fmean(values)
    median = float(statistics.median(values))
    if len(values) >= 2:
        q1, _, q3 = statistics.quantiles(values, n=4, method="inclusive")
    else:
        q1 = q3 = float(values[0])
    iqr = q3 - q1
    low, high = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    outliers = tuple(sorted(v for v in values if v < low or v > high))

    n_bins = int(max(values) // bin_hours) + 1
    histo = []
    for k in range(n_bins):
        lo, hi = k * bin_hours, (k + 1) * bin_hours
        histo.append((lo, hi, sum(1 for v in values if lo <= v < hi)))

    bucket_counts = {label: 0 for label in BUCKET_LABELS}
    for v in values:
        bucket_counts[bucket_delta(v)] += 1

    return DeltaSummary(
        count=len(values),
        mean=mean,
        median=median,
        q1=q1,
        q3=q3,
        outliers=outliers,
        histogram=tuple(histo),
        buckets=tuple((label, bucket_counts[label]) for label in BUCKET_LABELS),
    )


# -- corpus walks -------------------------------------------------------------


@dataclass
class _PageView:
    record: object
    series: list
    flag: Flag | None
    site: str
    reachable_ever: bool


def _site_key(url: str, psl: SuffixDatabase, granularity: str) -> str:
    host = urlsplit(url).hostname or ""
    if granularity == GRANULARITY_HOST:
        return host
    return psl.registrable_domain(host) if host else ""


def _collect_views(
    store: DataStore, psl: SuffixDatabase, opts: ReportOptions
) -> list[_PageView]:
    views = []
    for record in store.pages():
        series = store.read_series(record.page_id)
        flag = (
            flag_timeline(series, opts.single_keyword_mode) if series else None
        )
        views.append(
            _PageView(
                record=record,
                series=series,
                flag=flag,
                site=_site_key(record.url, psl, opts.granularity),
                reachable_ever=any(o.reachable for o in series),
            )
        )
    return views


def _is_defaced(store: DataStore, view: _PageView) -> bool:
    if view.flag is None or view.flag is Flag.NOT_FOUND:
        return False
    verdict = store.latest_verdict(view.record.page_id)
    if verdict is not None and verdict.verdict == VERDICT_FALSE_POSITIVE:
        return False
    if view.record.monitoring == MONITORING_STOPPED_FP:
        return False
    return True


def overview_stats(
    store: DataStore, psl: SuffixDatabase, opts: ReportOptions | None = None
) -> OverviewStats:
    opts = opts or ReportOptions()
    views = [
        v for v in _collect_views(store, psl, opts) if v.record.origin == ORIGIN_SEED
    ]
    observed = [v for v in views if v.series]
    if not observed:
        logger.warning("empty corpus: no observed pages, reporting zeros")
    pending = len(views) - len(observed)
    failed = [v for v in observed if not v.reachable_ever]
    defaced = [v for v in observed if v.reachable_ever and _is_defaced(store, v)]
    site_counts: dict[str, int] = {}
    for v in defaced:
        site_counts[v.site] = site_counts.get(v.site, 0) + 1
    tlds = {v.record.tld_group for v in defaced if v.record.tld_group}
    stats = overview_from_counts(
        pages_found=len(observed),
        failed_to_load=len(failed),
        defaced_pages=len(defaced),
        site_page_counts=sorted(site_counts.values()),
        tld_count=len(tlds),
        pages_pending=pending,
    )
    # partition check: the three categories must cover every observed page
    false_positives = len(observed) - len(failed) - len(defaced)
    assert stats.false_positive_pages == false_positives
    return stats


def keyword_table(
    store: DataStore,
    psl: SuffixDatabase,
    ks: KeywordSet,
    opts: ReportOptions | None = None,
) -> list[tuple[str, float, int]]:
    """Per keyword: share of defaced websites carrying it, and the page maximum."""
    opts = opts or ReportOptions()
    views = _collect_views(store, psl, opts)
    defaced = [v for v in views if v.record.origin == ORIGIN_SEED and _is_defaced(store, v)]
    sites = {v.site for v in defaced}
    rows = []
    for kw in ks.keywords:
        sites_with = set()
        max_per_page = 0
        for v in defaced:
            page_max = max(
                (obs.profile.keyword_total(kw) for obs in v.series), default=0
            )
            if page_max > 0:
                sites_with.add(v.site)
            max_per_page = max(max_per_page, page_max)
        pct = 100.0 * len(sites_with) / len(sites) if sites else 0.0
        rows.append((kw, round_half_up(pct, 1), max_per_page))
    return rows


def flag_table(
    store: DataStore, psl: SuffixDatabase, opts: ReportOptions | None = None
) -> list[tuple[str, int]]:
    opts = opts or ReportOptions()
    views = [v for v in _collect_views(store, psl, opts) if v.flag is not None]
    counts = {flag.value: 0 for flag in Flag}
    for v in views:
        counts[v.flag.value] += 1
    return [(flag.value, counts[flag.value]) for flag in Flag]


def tld_table(
    store: DataStore, psl: SuffixDatabase, opts: ReportOptions | None = None
) -> list[tuple[str, int, int]]:
    opts = opts or ReportOptions()
    views = _collect_views(store, psl, opts)
    defaced = [v for v in views if v.record.origin == ORIGIN_SEED and _is_defaced(store, v)]
    pages: dict[str, int] = {}
    sites: dict[str, set[str]] = {}
    for v in defaced:
        group = v.record.tld_group or "(unknown)"
        pages[group] = pages.get(group, 0) + 1
        sites.setdefault(group, set()).add(v.site)
    rows = [(group, pages[group], len(sites[group])) for group in pages]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


def reaction_report(
    store: DataStore, psl: SuffixDatabase, opts: ReportOptions | None = None
) -> tuple[DeltaSummary | None, DeltaSummary | None]:
    """Distribution summaries for first and average remediation times."""
    opts = opts or ReportOptions()
    first_deltas: list[float] = []
    avg_deltas: list[float] = []
    for view in _collect_views(store, psl, opts):
        if not view.series:
            continue
        stats = reaction_stats(view.series, opts.single_keyword_mode)
        if stats.delta_first_hours is not None:
            first_deltas.append(stats.delta_first_hours)
            avg_deltas.append(stats.delta_avg_hours)
    if not first_deltas:
        logger.info("no closed defacement cycles; reaction report is empty")
        return None, None
    return (
        summarize_deltas(first_deltas, opts.bin_hours),
        summarize_deltas(avg_deltas, opts.bin_hours),
    )


def link_report(
    store: DataStore, psl: SuffixDatabase, opts: ReportOptions | None = None
) -> LinkStats:
    """Third-party link statistics: uniqueness, spread, recurring domains."""
    opts = opts or ReportOptions()
    rows = [r for r in store.read_links() if r.is_third_party]
    url_sources: dict[str, set[str]] = {}
    domain_sources: dict[str, set[str]] = {}
    for row in rows:
        url_sources.setdefault(row.canonical_href, set()).add(row.page_id)
        try:
            source_site = _site_key(store.get_page(row.page_id).url, psl, opts.granularity)
        except KeyError:
            source_site = row.page_id
        domain_sources.setdefault(row.registrable_domain, set()).add(source_site)

    occurrence_counts = sorted(len(pages) for pages in url_sources.values())
    top = sorted(
        ((domain, len(sites)) for domain, sites in domain_sources.items()),
        key=lambda item: (-item[1], item[0]),
    )[: opts.top_domains]
    return LinkStats(
        unique_urls=len(url_sources),
        unique_domains=len(domain_sources),
        mean_occurrence=(
            round_half_up(sum(occurrence_counts) / len(occurrence_counts), 1)
            if occurrence_counts
            else None
        ),
        median_occurrence=(
            float(statistics.median(occurrence_counts)) if occurrence_counts else None
        ),
        urls_seen_once=sum(1 for c in occurrence_counts if c == 1),
        top_domains=tuple(top),
    )


def build_bundle(
    store: DataStore,
    psl: SuffixDatabase,
    ks: KeywordSet,
    opts: ReportOptions | None = None,
) -> ReportBundle:
    opts = opts or ReportOptions()
    last_seen = None
    for record in store.pages():
        for obs in store.read_series(record.page_id):
            if last_seen is None or obs.at > last_seen:
                last_seen = obs.at
    first, avg = reaction_report(store, psl, opts)
    return ReportBundle(
        as_of=to_rfc3339(last_seen) if last_seen else None,
        overview=overview_stats(store, psl, opts),
        keyword_table=tuple(keyword_table(store, psl, ks, opts)),
        flag_table=tuple(flag_table(store, psl, opts)),
        tld_table=tuple(tld_table(store, psl, opts)),
        reaction_first=first,
        reaction_avg=avg,
        links=link_report(store, psl, opts),
    )


# -- serialization ------------------------------------------------------------


def _summary_to_dict(summary: DeltaSummary | None) -> dict | None:
    if summary is None:
        return None
    return {
        "count": summary.count,
        "mean": summary.mean,
        "median": summary.median,
        "q1": summary.q1,
        "q3": summary.q3,
        "outliers": list(summary.outliers),
        "histogram": [
            {"from_hours": lo, "to_hours": hi, "count": n}
            for lo, hi, n in summary.histogram
        ],
        "buckets": [{"bucket": label, "count": n} for label, n in summary.buckets],
    }


def bundle_to_dict(bundle: ReportBundle) -> dict:
    o = bundle.overview
    return {
        "as_of": bundle.as_of,
        "overview": {
            "pages_found": o.pages_found,
            "failed_to_load": o.failed_to_load,
            "defaced_pages": o.defaced_pages,
            "false_positive_pages": o.false_positive_pages,
            "false_positive_rate_pct": o.false_positive_rate_pct,
            "defaced_websites": o.defaced_websites,
            "mean_pages_per_site": o.mean_pages_per_site,
            "median_pages_per_site": o.median_pages_per_site,
            "tld_count": o.tld_count,
            "pages_pending": o.pages_pending,
        },
        "keywords": [
            {"keyword": kw, "websites_pct": pct, "max_per_page": mx}
            for kw, pct, mx in bundle.keyword_table
        ],
        "flags": [{"flag": flag, "pages": n} for flag, n in bundle.flag_table],
        "tlds": [
            {"tld_group": group, "pages": pages, "websites": sites}
            for group, pages, sites in bundle.tld_table
        ],
        "reaction": {
            "delta_first": _summary_to_dict(bundle.reaction_first),
            "delta_avg": _summary_to_dict(bundle.reaction_avg),
        },
        "links": {
            "unique_urls": bundle.links.unique_urls,
            "unique_domains": bundle.links.unique_domains,
            "mean_occurrence": bundle.links.mean_occurrence,
            "median_occurrence": bundle.links.median_occurrence,
            "urls_seen_once": bundle.links.urls_seen_once,
            "top_domains": [
                {"domain": domain, "websites": n}
                for domain, n in bundle.links.top_domains
            ],
        },
    }


def _csv_text(header: list[str], rows: list[list]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_bundle(
    bundle: ReportBundle, out_dir: str | Path, fmt: str = "json"
) -> list[Path]:
    """Write the bundle under out_dir; returns the files written.

    json writes report.json; csv writes one file per table. SVG charts
    accompany the reaction summaries in both formats.
    """
    import json as _json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if fmt == "json":
        path = out / "report.json"
        path.write_text(
            _json.dumps(bundle_to_dict(bundle), indent=2, sort_keys=True, ensure_ascii=False)
            + "\n",
            encoding="utf-8",
        )
        written.append(path)
    elif fmt == "csv":
        o = bundle.overview
        tables = {
            "overview.csv": _csv_text(
                ["metric", "value"],
                [
                    ["pages_found", o.pages_found],
                    ["failed_to_load", o.failed_to_load],
                    ["defaced_pages", o.defaced_pages],
                    ["false_positive_pages", o.false_positive_pages],
                    ["false_positive_rate_pct", o.false_positive_rate_pct],
                    ["defaced_websites", o.defaced_websites],
                    ["mean_pages_per_site", o.mean_pages_per_site],
                    ["median_pages_per_site", o.median_pages_per_site],
                    ["tld_count", o.tld_count],
                    ["pages_pending", o.pages_pending],
                ],
            ),
            "keywords.csv": _csv_text(
                ["keyword", "websites_pct", "max_per_page"],
                [list(row) for row in bundle.keyword_table],
            ),
            "flags.csv": _csv_text(
                ["flag", "pages"], [list(row) for row in bundle.flag_table]
            ),
            "tlds.csv": _csv_text(
                ["tld_group", "pages", "websites"],
                [list(row) for row in bundle.tld_table],
            ),
            "links.csv": _csv_text(
                ["metric", "value"],
                [
                    ["unique_urls", bundle.links.unique_urls],
                    ["unique_domains", bundle.links.unique_domains],
                    ["mean_occurrence", bundle.links.mean_occurrence],
                    ["median_occurrence", bundle.links.median_occurrence],
                    ["urls_seen_once", bundle.links.urls_seen_once],
                ]
                + [
                    [f"top_domain:{domain}", n]
                    for domain, n in bundle.links.top_domains
                ],
            ),
        }
        for name, summary in (
            ("reaction_first.csv", bundle.reaction_first),
            ("reaction_avg.csv", bundle.reaction_avg),
        ):
            if summary is None:
                continue
            rows = [
                ["count", summary.count],
                ["mean_hours", summary.mean],
                ["median_hours", summary.median],
                ["q1_hours", summary.q1],
                ["q3_hours", summary.q3],
            ]
            rows += [
                [f"bucket:{label}", n] for label, n in summary.buckets
            ]
            rows += [
                [f"bin:{lo:g}-{hi:g}h", n] for lo, hi, n in summary.histogram
            ]
            tables[name] = _csv_text(["metric", "value"], rows)
        for name, text in tables.items():
            path = out / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
    else:
        raise ValueError(f"unknown report format: {fmt!r}")

    for label, summary in (
        ("delta_first", bundle.reaction_first),
        ("delta_avg", bundle.reaction_avg),
    ):
        if summary is None:
            continue
        histo_path = out / f"{label}_histogram.svg"
        histo_path.write_text(
            svg_bar_chart(
                f"{label} histogram ({summary.count} pages)",
                [f"{lo:g}-{hi:g}h" for lo, hi, _ in summary.histogram],
                [n for _, _, n in summary.histogram],
            ),
            encoding="utf-8",
        )
        written.append(histo_path)
        bucket_path = out / f"{label}_buckets.svg"
        bucket_path.write_text(
            svg_bar_chart(
                f"{label} remediation buckets",
                [label_ for label_, _ in summary.buckets],
                [n for _, n in summary.buckets],
            ),
            encoding="utf-8",
        )
        written.append(bucket_path)
    return written


def svg_bar_chart(
    title: str, labels: list[str], values: list[float], width: int = 640, height: int = 360
) -> str:
    """Minimal deterministic vertical bar chart."""
    margin_left, margin_bottom, margin_top = 40, 60, 30
    plot_w = width - margin_left - 10
    plot_h = height - margin_top - margin_bottom
    peak = max(values) if values and max(values) > 0 else 1
    n = max(len(values), 1)
    slot = plot_w / n
    bar_w = slot * 0.8

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:g}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{_esc(title)}</text>',
        f'<line x1="{margin_left}" y1="{margin_top + plot_h:g}" '
        f'x2="{width - 10}" y2="{margin_top + plot_h:g}" stroke="#333"/>',
    ]
    for i, (label, value) in enumerate(zip(labels, values)):
        h = plot_h * (value / peak)
        x = margin_left + i * slot + (slot - bar_w) / 2
        y = margin_top + plot_h - h
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" fill="#4472a8"/>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{value:g}</text>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{margin_top + plot_h + 14:g}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10" '
            f'transform="rotate(30 {x + bar_w / 2:.1f} {margin_top + plot_h + 14:g})">'
            f"{_esc(label)}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
