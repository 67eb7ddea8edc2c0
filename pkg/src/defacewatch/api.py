"""HTTP service for the analyst triage loop.

Read-only over the store except for the verdict endpoint, whose effect
(stopping or pinning monitoring) is what gates the next handler pass.
Stored snapshot bodies are hostile markup: they are served under a
sandboxing content-security policy that forbids script execution, and
the UI renders them only inside a sandboxed frame on top of that.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, field_validator

from .analyze import KeywordSet, Visibility
from .classify import (
    Flag,
    Status,
    assess,
    flag_timeline,
    reaction_stats,
)
from .psl import SuffixDatabase
from .report import ReportOptions, build_bundle, bundle_to_dict
from .store import (
    VERDICT_VALUES,
    DataStore,
    UnknownPage,
    VerdictRecord,
)
from .timefmt import to_rfc3339, utc_now

SNAPSHOT_CSP = "sandbox; default-src 'none'; style-src 'unsafe-inline'; img-src data:"

_FLAG_VALUES = {flag.value for flag in Flag}
_STATUS_VALUES = {status.value for status in Status}


class VerdictBody(BaseModel):
    verdict: Literal["confirmed_defaced", "false_positive", "remediated"]
    analyst: str
    note: str | None = None

    @field_validator("analyst")
    @classmethod
    def analyst_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("analyst must not be blank")
        return value


def _profile_summary(profile) -> dict:
    return {
        "total": profile.total,
        "distinct": profile.distinct,
        "title_hits": list(profile.title_hits),
        "url_hits": list(profile.url_hits),
        "by_class": {
            vis.value: profile.class_total(vis) for vis in Visibility
        },
    }


def _verdict_json(record: VerdictRecord) -> dict:
    return {
        "page_id": record.page_id,
        "verdict": record.verdict,
        "analyst": record.analyst,
        "at": to_rfc3339(record.at),
        "note": record.note,
    }


def create_app(
    store: DataStore,
    psl: SuffixDatabase,
    keywords: KeywordSet,
    single_keyword_mode: str = "distinct",
    report_options: ReportOptions | None = None,
    token: str | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="defacewatch", docs_url=None, redoc_url=None)
    report_options = report_options or ReportOptions(single_keyword_mode=single_keyword_mode)

    if token:

        @app.middleware("http")
        async def require_token(request: Request, call_next):
            if request.url.path.startswith("/api/") and request.headers.get("x-auth-token") != token:
                return JSONResponse({"error": "missing or bad token"}, status_code=401)
            return await call_next(request)

    def triage_item(record) -> dict:
        series = store.read_series(record.page_id)
        flag = flag_timeline(series, single_keyword_mode).value if series else None
        latest = series[-1] if series else None
        assessment = assess(latest, single_keyword_mode) if latest else None
        verdict = store.latest_verdict(record.page_id)
        return {
            "page_id": record.page_id,
            "url": record.url,
            "origin": record.origin,
            "tld_group": record.tld_group,
            "monitoring": record.monitoring,
            "current_flag": flag,
            "status": assessment.status.value if assessment else None,
            "confidence": assessment.confidence.value if assessment else None,
            "latest_profile": _profile_summary(latest.profile) if latest else None,
            "last_observed_at": to_rfc3339(latest.at) if latest else None,
            "observation_count": len(series),
            "verdict": _verdict_json(verdict) if verdict else None,
        }

    @app.get("/api/pages")
    def list_pages(
        flag: str | None = None,
        status: str | None = None,
        verdict: str | None = None,
        page: int = 1,
        per_page: int = 50,
    ):
        if flag is not None and flag not in _FLAG_VALUES:
            return JSONResponse({"error": f"unknown flag filter: {flag}"}, status_code=400)
        if status is not None and status not in _STATUS_VALUES:
            return JSONResponse({"error": f"unknown status filter: {status}"}, status_code=400)
        if verdict is not None and verdict not in VERDICT_VALUES:
            return JSONResponse({"error": f"unknown verdict filter: {verdict}"}, status_code=400)
        if page < 1 or per_page < 1 or per_page > 500:
            return JSONResponse({"error": "bad pagination parameters"}, status_code=400)

        items = [triage_item(record) for record in store.pages()]
        if flag is not None:
            items = [i for i in items if i["current_flag"] == flag]
        if status is not None:
            items = [i for i in items if i["status"] == status]
        if verdict is not None:
            items = [i for i in items if i["verdict"] and i["verdict"]["verdict"] == verdict]
        # most recently observed first, page_id tiebreak, unobserved at the end
        observed = [i for i in items if i["last_observed_at"] is not None]
        unobserved = sorted(
            (i for i in items if i["last_observed_at"] is None),
            key=lambda i: i["page_id"],
        )
        observed.sort(key=lambda i: i["page_id"])
        observed.sort(key=lambda i: i["last_observed_at"], reverse=True)
        items = observed + unobserved

        total = len(items)
        pages = max(1, math.ceil(total / per_page))
        start = (page - 1) * per_page
        return {
            "items": items[start : start + per_page],
            "total": total,
            "page": page,
            "per_page": per_page,
            "pages": pages,
        }

    @app.get("/api/pages/{page_id}/timeline")
    def timeline(page_id: str):
        try:
            record = store.get_page(page_id)
        except UnknownPage:
            return JSONResponse({"error": "unknown page"}, status_code=404)
        series = store.read_series(page_id)
        stats = reaction_stats(series, single_keyword_mode) if series else None
        return {
            "page": triage_item(record),
            "series": [
                {
                    "at": to_rfc3339(obs.at),
                    "reachable": obs.reachable,
                    "redirect_cross_site": obs.redirect_cross_site,
                    "total": obs.profile.total,
                    "distinct": obs.profile.distinct,
                    "profile": _profile_summary(obs.profile),
                    "per_keyword": {
                        kw: {vis.value: n for vis, n in classes.items()}
                        for kw, classes in obs.profile.per_keyword.items()
                    },
                }
                for obs in series
            ],
            "cycles": [
                {
                    "start_at": to_rfc3339(c.start_at),
                    "fixed_at": to_rfc3339(c.fixed_at),
                    "delta_hours": c.delta_hours,
                }
                for c in (stats.cycles if stats else ())
            ],
            "delta_first_hours": stats.delta_first_hours if stats else None,
            "delta_avg_hours": stats.delta_avg_hours if stats else None,
            "flag": flag_timeline(series, single_keyword_mode).value if series else None,
            "snapshots": [
                {
                    "fetched_at": to_rfc3339(snap.fetched_at),
                    "content_digest": snap.content_digest,
                }
                for snap in store.snapshots(page_id)
            ],
        }

    @app.post("/api/pages/{page_id}/verdict", status_code=201)
    def post_verdict(page_id: str, body: VerdictBody):
        try:
            store.get_page(page_id)
        except UnknownPage:
            return JSONResponse({"error": "unknown page"}, status_code=404)
        record = VerdictRecord(
            page_id=page_id,
            verdict=body.verdict,
            analyst=body.analyst.strip(),
            at=utc_now(),
            note=body.note,
        )
        store.record_verdict(record)
        return _verdict_json(record)

    @app.get("/api/pages/{page_id}/verdicts")
    def verdict_history(page_id: str):
        try:
            store.get_page(page_id)
        except UnknownPage:
            return JSONResponse({"error": "unknown page"}, status_code=404)
        return {"items": [_verdict_json(v) for v in store.verdict_history(page_id)]}

    @app.get("/api/reports/current")
    def current_report():
        return bundle_to_dict(build_bundle(store, psl, keywords, report_options))

    @app.get("/api/pages/{page_id}/snapshot/{digest}")
    def snapshot(page_id: str, digest: str):
        try:
            store.get_page(page_id)
        except UnknownPage:
            return JSONResponse({"error": "unknown page"}, status_code=404)
        try:
            body = store.load_body(digest)
        except KeyError:
            return JSONResponse({"error": "unknown digest"}, status_code=404)
        return Response(
            content=body.encode("utf-8"),
            media_type="text/html; charset=utf-8",
            headers={
                "Content-Security-Policy": SNAPSHOT_CSP,
                "X-Content-Type-Options": "nosniff",
            },
        )

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

        @app.get("/")
        def index_redirect():
            return Response(status_code=307, headers={"Location": "/ui/"})

    return app


def serve(app: FastAPI, addr: str) -> None:
    """Blocking uvicorn server; addr is HOST:PORT."""
    import uvicorn

    host, _, port = addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
