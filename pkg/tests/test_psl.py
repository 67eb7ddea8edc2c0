from __future__ import annotations

from importlib import resources

import pytest

from defacewatch.psl import SuffixDatabase, is_ip_literal

from oracles import psl_has_suffix


def bundled_psl_path():
    return resources.files("defacewatch").joinpath("data/public_suffix_list.dat")


class TestRegistrableDomain:
    def test_indonesian_academic(self, psl_db):
        # the suffix database itself must list ac.id for this to be meaningful
        assert psl_has_suffix(bundled_psl_path(), "ac.id")
        assert psl_db.registrable_domain("jim.unindra.ac.id") == "unindra.ac.id"

    @pytest.mark.parametrize(
        "host,expected",
        [
            ("heylink.me", "heylink.me"),
            ("www.heylink.me", "heylink.me"),
            ("lazada.co.id", "lazada.co.id"),
            ("www.lazada.co.id", "lazada.co.id"),
            ("linklst.bio", "linklst.bio"),
            ("a.b.c.example.go.id", "example.go.id"),
            ("example.id", "example.id"),
            ("deep.example.co.uk", "example.co.uk"),
        ],
    )
    def test_common_hosts(self, psl_db, host, expected):
        assert psl_db.registrable_domain(host) == expected

    def test_ip_literal_unchanged(self, psl_db):
        assert psl_db.registrable_domain("10.0.0.1") == "10.0.0.1"
        assert psl_db.registrable_domain("[2001:db8::1]") == "[2001:db8::1]"
        assert is_ip_literal("10.0.0.1")
        assert not is_ip_literal("10.0.0.1.id")

    def test_unlisted_tld_falls_back_to_last_two_labels(self, psl_db):
        assert psl_db.registrable_domain("foo.bar.unlistedtld") == "bar.unlistedtld"

    def test_host_equal_to_suffix(self, psl_db):
        assert psl_db.registrable_domain("ac.id") == "ac.id"

    def test_case_and_trailing_dot(self, psl_db):
        assert psl_db.registrable_domain("WWW.Example.AC.ID.") == "example.ac.id"


class TestRuleKinds:
    def test_wildcard_rule(self, psl_db):
        # *.ck makes every label under ck a suffix
        assert psl_db.public_suffix("foo.anything.ck") == "anything.ck"
        assert psl_db.registrable_domain("foo.anything.ck") == "foo.anything.ck"

    def test_exception_rule(self, psl_db):
        # !www.ck carves www.ck out of the wildcard
        assert psl_db.public_suffix("www.ck") == "ck"
        assert psl_db.registrable_domain("www.ck") == "www.ck"
        assert psl_db.registrable_domain("sub.www.ck") == "www.ck"

    def test_longest_match_wins(self, psl_db):
        assert psl_db.public_suffix("x.ac.id") == "ac.id"
        assert psl_db.public_suffix("x.id") == "id"

    def test_tld_grouping(self, psl_db):
        # the suffix is the TLD group used in per-namespace tables
        assert psl_db.public_suffix("kampus.ac.id") == "ac.id"
        assert psl_db.public_suffix("dinas.go.id") == "go.id"
        assert psl_db.public_suffix("situs.web.id") == "web.id"

    def test_from_text_ignores_comments(self):
        db = SuffixDatabase.from_text("// comment\nfoo\n*.bar\n!keep.bar\n")
        assert db.public_suffix("a.foo") == "foo"
        assert db.public_suffix("x.y.bar") == "y.bar"
        assert db.public_suffix("keep.bar") == "bar"
