from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from defacewatch.analyze import KeywordSet
from defacewatch.api import SNAPSHOT_CSP, create_app
from defacewatch.fixtures import listing_style_page
from defacewatch.report import build_bundle, bundle_to_dict
from defacewatch.store import MONITORING_STOPPED_FP

from conftest import EPOCH, obs_at, register_page
from test_report import build_corpus


@pytest.fixture()
def client(store, psl_db):
    app = create_app(store, psl_db, KeywordSet())
    return TestClient(app)


class TestListPages:
    def test_lists_all(self, client, store):
        build_corpus(store)
        payload = client.get("/api/pages").json()
        assert payload["total"] == 5
        assert len(payload["items"]) == 5
        assert payload["items"][0]["last_observed_at"] is not None

    def test_flag_filter(self, client, store):
        pages = build_corpus(store)
        payload = client.get("/api/pages", params={"flag": "repeat_defacement"}).json()
        assert payload["total"] == 1
        assert payload["items"][0]["page_id"] == pages["repeat"].page_id

    def test_status_filter(self, client, store):
        build_corpus(store)
        payload = client.get("/api/pages", params={"status": "unreachable"}).json()
        assert payload["total"] == 1

    def test_unknown_filter_values_rejected(self, client, store):
        assert client.get("/api/pages", params={"flag": "nope"}).status_code == 400
        assert client.get("/api/pages", params={"status": "nope"}).status_code == 400
        assert client.get("/api/pages", params={"verdict": "nope"}).status_code == 400
        assert client.get("/api/pages", params={"page": 0}).status_code == 400

    def test_empty_store(self, client):
        payload = client.get("/api/pages").json()
        assert payload == {
            "items": [],
            "total": 0,
            "page": 1,
            "per_page": 50,
            "pages": 1,
        }

    def test_pagination_stable(self, client, store):
        build_corpus(store)
        seen = []
        for number in (1, 2, 3):
            payload = client.get(
                "/api/pages", params={"per_page": 2, "page": number}
            ).json()
            assert payload["pages"] == 3
            seen.extend(item["page_id"] for item in payload["items"])
        assert len(seen) == 5
        assert len(set(seen)) == 5
        again = client.get("/api/pages", params={"per_page": 2, "page": 1}).json()
        assert [i["page_id"] for i in again["items"]] == seen[:2]


class TestTimeline:
    def test_cycles_and_flag(self, client, store):
        pages = build_corpus(store)
        payload = client.get(f"/api/pages/{pages['repeat'].page_id}/timeline").json()
        assert payload["flag"] == "repeat_defacement"
        assert [point["total"] for point in payload["series"]] == [5, 0, 3]
        assert len(payload["cycles"]) == 1
        assert payload["delta_first_hours"] == 1.0

    def test_unreachable_points_marked(self, client, store):
        pages = build_corpus(store)
        payload = client.get(f"/api/pages/{pages['dead'].page_id}/timeline").json()
        assert all(point["reachable"] is False for point in payload["series"])

    def test_empty_series(self, client, store):
        record = register_page(store, "http://fresh.ac.id/")
        payload = client.get(f"/api/pages/{record.page_id}/timeline").json()
        assert payload["series"] == []
        assert payload["flag"] is None

    def test_unknown_page_404(self, client):
        assert client.get("/api/pages/ffff/timeline").status_code == 404

    def test_per_keyword_visibility_split(self, client, store):
        record = register_page(store, "http://kampus.ac.id/")
        store.append_observation(obs_at(record.page_id, 0, {"slot": 3, "gacor": 1}))
        payload = client.get(f"/api/pages/{record.page_id}/timeline").json()
        point = payload["series"][0]
        assert point["per_keyword"]["slot"]["visible"] == 3
        assert point["profile"]["by_class"]["visible"] == 4


class TestVerdicts:
    def test_false_positive_stops_monitoring(self, client, store):
        pages = build_corpus(store)
        response = client.post(
            f"/api/pages/{pages['noise'].page_id}/verdict",
            json={"verdict": "false_positive", "analyst": "dina"},
        )
        assert response.status_code == 201
        assert response.json()["verdict"] == "false_positive"
        assert store.get_page(pages["noise"].page_id).monitoring == MONITORING_STOPPED_FP
        # and the active listing reflects it
        payload = client.get("/api/pages", params={"verdict": "false_positive"}).json()
        assert payload["total"] == 1

    def test_invalid_verdict_422(self, client, store):
        pages = build_corpus(store)
        response = client.post(
            f"/api/pages/{pages['noise'].page_id}/verdict",
            json={"verdict": "perhaps", "analyst": "dina"},
        )
        assert response.status_code == 422

    def test_blank_analyst_422(self, client, store):
        pages = build_corpus(store)
        response = client.post(
            f"/api/pages/{pages['noise'].page_id}/verdict",
            json={"verdict": "remediated", "analyst": "   "},
        )
        assert response.status_code == 422

    def test_unknown_page_404(self, client):
        response = client.post(
            "/api/pages/ffff/verdict",
            json={"verdict": "remediated", "analyst": "dina"},
        )
        assert response.status_code == 404

    def test_history_kept_latest_wins(self, client, store):
        pages = build_corpus(store)
        page_id = pages["fixed"].page_id
        client.post(
            f"/api/pages/{page_id}/verdict",
            json={"verdict": "false_positive", "analyst": "a"},
        )
        client.post(
            f"/api/pages/{page_id}/verdict",
            json={"verdict": "confirmed_defaced", "analyst": "b"},
        )
        history = client.get(f"/api/pages/{page_id}/verdicts").json()["items"]
        assert [v["verdict"] for v in history] == ["false_positive", "confirmed_defaced"]
        item = client.get(f"/api/pages/{page_id}/timeline").json()["page"]
        assert item["verdict"]["verdict"] == "confirmed_defaced"
        assert item["monitoring"] == "active"


class TestReportsEndpoint:
    def test_matches_direct_bundle(self, client, store, psl_db):
        build_corpus(store)
        via_api = client.get("/api/reports/current").json()
        direct = bundle_to_dict(build_bundle(store, psl_db, KeywordSet()))
        import json

        assert via_api == json.loads(json.dumps(direct))


class TestSnapshots:
    def test_byte_exact_round_trip(self, client, store):
        record = register_page(store, "http://kampus.ac.id/")
        html = listing_style_page()
        digest = store.store_body(html)
        store.record_snapshot(record.page_id, EPOCH, digest)
        response = client.get(f"/api/pages/{record.page_id}/snapshot/{digest}")
        assert response.status_code == 200
        assert response.content == html.encode("utf-8")

    def test_security_headers(self, client, store):
        record = register_page(store, "http://kampus.ac.id/")
        digest = store.store_body("<script>alert(1)</script>")
        response = client.get(f"/api/pages/{record.page_id}/snapshot/{digest}")
        csp = response.headers["content-security-policy"]
        assert csp == SNAPSHOT_CSP
        assert "sandbox" in csp
        assert "script-src" not in csp or "'none'" in csp
        assert response.headers["x-content-type-options"] == "nosniff"

    def test_unknown_digest_404(self, client, store):
        record = register_page(store, "http://kampus.ac.id/")
        response = client.get(f"/api/pages/{record.page_id}/snapshot/{'0' * 64}")
        assert response.status_code == 404

    def test_snapshots_listed_in_timeline(self, client, store):
        record = register_page(store, "http://kampus.ac.id/")
        store.append_observation(obs_at(record.page_id, 0, {"slot": 2, "gacor": 1}))
        digest = store.store_body("<p>slot</p>")
        store.record_snapshot(record.page_id, EPOCH, digest)
        payload = client.get(f"/api/pages/{record.page_id}/timeline").json()
        assert payload["snapshots"][0]["content_digest"] == digest


class TestTokenAuth:
    def test_token_required_when_configured(self, store, psl_db):
        app = create_app(store, psl_db, KeywordSet(), token="hunter2")
        client = TestClient(app)
        assert client.get("/api/pages").status_code == 401
        ok = client.get("/api/pages", headers={"X-Auth-Token": "hunter2"})
        assert ok.status_code == 200
