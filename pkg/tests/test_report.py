from __future__ import annotations

import random

import pytest

from defacewatch.analyze import KeywordSet
from defacewatch.report import (
    GRANULARITY_HOST,
    LinkStats,
    ReportOptions,
    build_bundle,
    bundle_to_dict,
    keyword_table,
    link_report,
    flag_table,
    overview_from_counts,
    overview_stats,
    reaction_report,
    round_half_up,
    summarize_deltas,
    svg_bar_chart,
    tld_table,
    write_bundle,
)
from defacewatch.store import DataStore, VerdictRecord
from defacewatch.analyze import ExtractedLink, Visibility

from conftest import EPOCH, obs_at, register_page, series_from_totals
from oracles import sort_stats


class TestRounding:
    @pytest.mark.parametrize(
        "value,digits,expected",
        [
            (20.309050, 1, 20.3),
            (20.35, 1, 20.4),  # half rounds up
            (2.3537, 2, 2.35),
            (2.355, 2, 2.36),
            (0.0, 1, 0.0),
        ],
    )
    def test_half_up(self, value, digits, expected):
        assert round_half_up(value, digits) == expected


class TestOverviewFromCounts:
    def test_reference_counts(self):
        # the classic month-scale shape: 453 found, 15 failed, 346 defaced
        site_counts = [1] * 110 + [6] * 36 + [20]  # 147 sites, 346 pages, median 1
        assert sum(site_counts) == 346 and len(site_counts) == 147
        stats = overview_from_counts(453, 15, 346, site_counts, tld_count=8)
        assert abs(stats.false_positive_rate_pct - 20.3) <= 0.05
        assert stats.false_positive_pages == 92
        assert stats.mean_pages_per_site == 2.35
        assert stats.median_pages_per_site == 1
        assert stats.defaced_websites == 147

    def test_identity_enforced(self):
        with pytest.raises(ValueError):
            overview_from_counts(10, 5, 6, [])

    def test_empty_corpus_zeros(self):
        stats = overview_from_counts(0, 0, 0, [])
        assert stats.false_positive_rate_pct == 0.0
        assert stats.mean_pages_per_site is None


def build_corpus(store: DataStore) -> dict:
    """Five observed seed pages: 3 defaced, 1 substring-noise, 1 dead."""
    constant = register_page(store, "http://p1.kampus.ac.id/", tld_group="ac.id")
    repeat = register_page(store, "http://p2.kampus.ac.id/", tld_group="ac.id")
    fixed = register_page(store, "http://p3.dinas.go.id/", tld_group="go.id")
    noise = register_page(store, "http://p4.media.co.id/", tld_group="co.id")
    dead = register_page(store, "http://p5.desa.id/", tld_group="desa.id")

    for obs in series_from_totals(constant.page_id, [7, 7, 7]):
        store.append_observation(obs)
    for obs in series_from_totals(repeat.page_id, [5, 0, 3]):
        store.append_observation(obs)
    for obs in series_from_totals(fixed.page_id, [5, 3, 0]):
        store.append_observation(obs)
    for hour in range(3):
        store.append_observation(obs_at(noise.page_id, hour, {"bet": 9}))
        store.append_observation(obs_at(dead.page_id, hour, reachable=False))
    return {
        "constant": constant,
        "repeat": repeat,
        "fixed": fixed,
        "noise": noise,
        "dead": dead,
    }


class TestOverviewStats:
    def test_partition(self, store, psl_db):
        build_corpus(store)
        stats = overview_stats(store, psl_db)
        assert stats.pages_found == 5
        assert stats.failed_to_load == 1
        assert stats.defaced_pages == 3
        assert stats.false_positive_pages == 1
        assert stats.false_positive_rate_pct == 20.0
        assert stats.defaced_websites == 2  # two pages share kampus.ac.id
        assert stats.mean_pages_per_site == 1.5
        assert stats.tld_count == 2

    def test_false_positive_verdict_excludes_from_defaced(self, store, psl_db):
        pages = build_corpus(store)
        store.record_verdict(
            VerdictRecord(pages["fixed"].page_id, "false_positive", "analyst", EPOCH)
        )
        stats = overview_stats(store, psl_db)
        assert stats.defaced_pages == 2
        assert stats.false_positive_pages == 2

    def test_unobserved_pages_are_pending(self, store, psl_db):
        build_corpus(store)
        register_page(store, "http://p9.web.id/", tld_group="web.id")
        stats = overview_stats(store, psl_db)
        assert stats.pages_found == 5
        assert stats.pages_pending == 1

    def test_empty_store(self, store, psl_db):
        stats = overview_stats(store, psl_db)
        assert stats.pages_found == 0
        assert stats.false_positive_rate_pct == 0.0

    def test_host_granularity(self, store, psl_db):
        build_corpus(store)
        stats = overview_stats(store, psl_db, ReportOptions(granularity=GRANULARITY_HOST))
        assert stats.defaced_websites == 3  # three distinct hosts here as well


class TestKeywordTable:
    def test_shares_and_maxima(self, store, psl_db):
        build_corpus(store)
        ks = KeywordSet()
        rows = {kw: (pct, mx) for kw, pct, mx in keyword_table(store, psl_db, ks)}
        assert rows["slot"] == (100.0, 6)  # every defaced site, max 7-1
        assert rows["gacor"][0] == 100.0
        assert rows["zeus"] == (0.0, 0)
        assert rows["bet"] == (0.0, 0)  # noise page is not a defaced site

    def test_rows_follow_keyword_order(self, store, psl_db):
        build_corpus(store)
        ks = KeywordSet()
        assert [row[0] for row in keyword_table(store, psl_db, ks)] == list(ks.keywords)


class TestFlagAndTldTables:
    def test_flag_partition(self, store, psl_db):
        build_corpus(store)
        table = dict(flag_table(store, psl_db))
        assert table["defaced_constant"] == 1
        assert table["repeat_defacement"] == 1
        assert table["fixed"] == 1
        assert table["not_found"] == 2  # noise page and the dead page
        assert sum(table.values()) == 5

    def test_tld_rows(self, store, psl_db):
        build_corpus(store)
        rows = tld_table(store, psl_db)
        assert rows[0] == ("ac.id", 2, 1)
        assert ("go.id", 1, 1) in rows


class TestSummarizeDeltas:
    def test_mean_median(self):
        summary = summarize_deltas([24.0, 72.0])
        assert summary.mean == 48.0
        assert summary.median == 48.0

    def test_bucket_counts(self):
        summary = summarize_deltas([10.0, 30.0, 200.0])
        assert dict(summary.buckets) == {
            "≤24h": 1,
            "24–72h": 1,
            "72–168h": 0,
            ">168h": 1,
        }

    def test_histogram_bins(self):
        summary = summarize_deltas([0.0, 11.9, 12.0, 30.0], bin_hours=12.0)
        assert summary.histogram[0] == (0.0, 12.0, 2)
        assert summary.histogram[1] == (12.0, 24.0, 1)
        assert summary.histogram[2] == (24.0, 36.0, 1)

    def test_reference_statistics_shape(self):
        # constructed in advance: mean 74.7, median 32.7
        deltas = [10.0, 20.0, 32.7, 100.0, 210.8]
        summary = summarize_deltas(deltas)
        assert round_half_up(summary.mean, 1) == 74.7
        assert summary.median == 32.7

    def test_single_value(self):
        summary = summarize_deltas([50.0])
        assert summary.q1 == summary.median == summary.q3 == 50.0
        assert summary.outliers == ()

    def test_1000_random_sets_match_sort_oracle(self):
        rng = random.Random(20250609)
        for _ in range(1000):
            values = [rng.uniform(0, 400) for _ in range(rng.randint(1, 40))]
            summary = summarize_deltas(values)
            oracle = sort_stats(values)
            assert summary.mean == pytest.approx(oracle["mean"])
            assert summary.median == pytest.approx(oracle["median"])
            assert summary.q1 == pytest.approx(oracle["q1"])
            assert summary.q3 == pytest.approx(oracle["q3"])
            assert list(summary.outliers) == pytest.approx(oracle["outliers"])


class TestReactionReport:
    def test_deltas_from_corpus(self, store, psl_db):
        build_corpus(store)
        first, avg = reaction_report(store, psl_db)
        # repeat page closes a 1h cycle, fixed page a 2h cycle
        assert first.count == 2
        assert sorted([first.mean, first.median]) == [1.5, 1.5]
        assert avg.count == 2

    def test_no_cycles_yields_none(self, store, psl_db):
        page = register_page(store, "http://p1.ac.id/")
        for obs in series_from_totals(page.page_id, [5, 3]):
            store.append_observation(obs)
        assert reaction_report(store, psl_db) == (None, None)


class TestLinkReport:
    def test_statistics(self, store, psl_db):
        corpus = build_corpus(store)

        def link(href, domain):
            return ExtractedLink(
                href=href,
                anchor_text="x",
                visibility=Visibility.HIDDEN_DISPLAY_NONE,
                co_located_keyword="slot",
                is_third_party=True,
                registrable_domain=domain,
            )

        hub = link("https://hub.example/", "hub.example")
        store.record_links(corpus["constant"].page_id, [hub], EPOCH)
        store.record_links(corpus["repeat"].page_id, [hub], EPOCH)
        store.record_links(corpus["fixed"].page_id, [hub], EPOCH)
        store.record_links(
            corpus["constant"].page_id, [link("https://once.example/a", "once.example")], EPOCH
        )
        stats = link_report(store, psl_db)
        assert stats.unique_urls == 2
        assert stats.unique_domains == 2
        assert stats.urls_seen_once == 1
        assert stats.median_occurrence == 2.0
        assert stats.mean_occurrence == 2.0
        # three source pages but two registrable source domains
        assert stats.top_domains[0] == ("hub.example", 2)

    def test_empty(self, store, psl_db):
        stats = link_report(store, psl_db)
        assert stats == LinkStats(
            unique_urls=0,
            unique_domains=0,
            mean_occurrence=None,
            median_occurrence=None,
            urls_seen_once=0,
            top_domains=(),
        )

    def test_matches_brute_force_recount(self, store, psl_db):
        build_corpus(store)
        rng = random.Random(5)
        pages = [p for p in store.pages()]
        for _ in range(40):
            page = rng.choice(pages)
            n = rng.randint(0, 9)
            store.record_links(
                page.page_id,
                [
                    ExtractedLink(
                        href=f"https://d{n}.example/p{rng.randint(0, 3)}",
                        anchor_text="x",
                        visibility=Visibility.VISIBLE,
                        co_located_keyword="slot",
                        is_third_party=True,
                        registrable_domain=f"d{n}.example",
                    )
                ],
                EPOCH,
            )
        stats = link_report(store, psl_db)
        rows = [r for r in store.read_links() if r.is_third_party]
        urls = {}
        domains = set()
        for row in rows:
            urls.setdefault(row.canonical_href, set()).add(row.page_id)
            domains.add(row.registrable_domain)
        assert stats.unique_urls == len(urls)
        assert stats.unique_domains == len(domains)
        assert stats.urls_seen_once == sum(1 for v in urls.values() if len(v) == 1)


class TestBundleDeterminism:
    def test_byte_identical_outputs(self, tmp_path, psl_db):
        data_dir = tmp_path / "data"
        store = DataStore(data_dir)
        build_corpus(store)
        store.close()
        ks = KeywordSet()

        outputs = []
        for name in ("out1", "out2"):
            snapshot = DataStore(data_dir)
            bundle = build_bundle(snapshot, psl_db, ks)
            files = write_bundle(bundle, tmp_path / name, fmt="json")
            files += write_bundle(bundle, tmp_path / (name + "_csv"), fmt="csv")
            outputs.append(
                {f.name: f.read_bytes() for f in files}
            )
            snapshot.close()
        assert outputs[0].keys() == outputs[1].keys()
        for name in outputs[0]:
            assert outputs[0][name] == outputs[1][name], name

    def test_bundle_dict_shape(self, store, psl_db):
        build_corpus(store)
        payload = bundle_to_dict(build_bundle(store, psl_db, KeywordSet()))
        assert payload["overview"]["pages_found"] == 5
        assert len(payload["keywords"]) == 9
        assert payload["reaction"]["delta_first"]["count"] == 2
        assert payload["as_of"].endswith("Z")

    def test_svg_is_deterministic_and_escaped(self):
        one = svg_bar_chart("a<b", ["x&y", "z"], [3, 5])
        two = svg_bar_chart("a<b", ["x&y", "z"], [3, 5])
        assert one == two
        assert "a&lt;b" in one and "x&amp;y" in one
