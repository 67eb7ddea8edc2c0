"""Operator entry point: ingest, run, report, serve, scan, fixtures.

Every subcommand is non-interactive; identical inputs give identical
output and exit codes. Config resolution order is defaults, then the
config file, then flags. Exit codes: 2 bad config or usage, and for
scan: 0 clean, 3 defaced, 4 suspected false positive, 5 unreachable.
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click

from . import __version__
from .analyze import count_keywords, extract_colocated_links
from .classify import Status, assess, Observation
from .config import Config, ConfigError, effective_config_yaml, parse_config
from .fetch import FetchEngine, FetchStatus
from .orchestrate import DirectoryLock, LockHeld, Orchestrator
from .psl import SuffixDatabase
from .report import ReportOptions, build_bundle, write_bundle
from .store import DataStore
from .timefmt import utc_now

logger = logging.getLogger(__name__)

SCAN_EXIT = {
    Status.CLEAN: 0,
    Status.DEFACED: 3,
    Status.SUSPECTED_FALSE_POSITIVE: 4,
    Status.UNREACHABLE: 5,
}


def _load_config(ctx: click.Context) -> Config:
    params = ctx.obj
    overrides = {}
    if params.get("data_dir"):
        overrides["data_dir"] = params["data_dir"]
    try:
        return parse_config(params.get("config_path"), overrides)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)


def _open_psl(cfg: Config) -> SuffixDatabase:
    return SuffixDatabase.load(cfg.psl_path)


@click.group(invoke_without_command=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="YAML config file.")
@click.option("--data-dir", default=None, help="Data directory (overrides config and DEFACEWATCH_DATA_DIR).")
@click.option("--print-config", is_flag=True, help="Print the effective configuration and exit.")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
@click.version_option(__version__)
@click.pass_context
def main(ctx, config_path, data_dir, print_config, verbose):
    """Monitor websites for illegal-online-gambling defacement."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["data_dir"] = data_dir or os.environ.get("DEFACEWATCH_DATA_DIR")
    if print_config:
        cfg = _load_config(ctx)
        click.echo(effective_config_yaml(cfg), nl=False)
        ctx.exit(0)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())
        ctx.exit(0)


@main.command()
@click.option("--file", "seed_file", required=True, type=click.Path(exists=True, dir_okay=False), help="Seed list (JSON Lines or one URL per line).")
@click.option("--source", "source_label", default=None, help="Provenance label; defaults to file:<name>.")
@click.pass_context
def ingest(ctx, seed_file, source_label):
    """Ingest a seed file of suspected-defaced URLs."""
    cfg = _load_config(ctx)
    label = source_label or f"file:{Path(seed_file).name}"
    store = DataStore(cfg.data_dir)
    try:
        orchestrator = Orchestrator(store, FetchEngine(cfg.fetch), _open_psl(cfg), cfg)
        lines = Path(seed_file).read_text(encoding="utf-8").splitlines()
        targets, report = orchestrator.ingest_lines(lines, label)
        click.echo(
            f"ingested {report.total} rows: {report.new} new targets, "
            f"{report.already_checked} already checked, {len(report.skipped)} skipped"
        )
        for value, reason in report.skipped:
            click.echo(f"  skipped {value}: {reason}", err=True)
    finally:
        store.close()


@main.command()
@click.option("--once", "mode_once", is_flag=True, help="One forced pass of each handler, then exit.")
@click.option("--daemon", "mode_daemon", is_flag=True, help="Run the scheduler until interrupted.")
@click.pass_context
def run(ctx, mode_once, mode_daemon):
    """Run the collection pipeline."""
    if mode_once == mode_daemon:
        click.echo("choose exactly one of --once or --daemon", err=True)
        sys.exit(2)
    cfg = _load_config(ctx)
    lock = DirectoryLock(cfg.data_dir)
    store = DataStore(cfg.data_dir)
    try:
        lock.acquire()
    except LockHeld as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    engine = FetchEngine(cfg.fetch)
    try:
        orchestrator = Orchestrator(store, engine, _open_psl(cfg), cfg)
        if mode_once:
            reports = orchestrator.run_once()
            for report in reports.values():
                click.echo(report.summary())
        else:
            orchestrator.run_daemon()
    finally:
        engine.close()
        store.close()
        lock.release()


@main.command()
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--granularity", type=click.Choice(["domain", "host"]), default=None)
@click.pass_context
def report(ctx, fmt, out_dir, granularity):
    """Compute and write the statistics bundle."""
    cfg = _load_config(ctx)
    fmt = fmt or cfg.report.format
    out_dir = out_dir or cfg.report.out_dir
    granularity = granularity or cfg.report.granularity
    store = DataStore(cfg.data_dir)
    try:
        options = ReportOptions(
            granularity=granularity,
            bin_hours=cfg.report.histogram_bin_hours,
            single_keyword_mode=cfg.single_keyword_mode,
        )
        bundle = build_bundle(store, _open_psl(cfg), cfg.keyword_set(), options)
        written = write_bundle(bundle, out_dir, fmt)
        for path in written:
            click.echo(str(path))
    finally:
        store.close()


@main.command()
@click.option("--addr", default=None, help="Bind address HOST:PORT.")
@click.option("--token", default=None, help="Require this X-Auth-Token header on API calls.")
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False), help="Serve this directory as the web console.")
@click.pass_context
def serve(ctx, addr, token, ui_dir):
    """Serve the triage API (and the console, when built)."""
    from .api import create_app, serve as _serve

    cfg = _load_config(ctx)
    store = DataStore(cfg.data_dir)
    app = create_app(
        store,
        _open_psl(cfg),
        cfg.keyword_set(),
        single_keyword_mode=cfg.single_keyword_mode,
        report_options=ReportOptions(
            granularity=cfg.report.granularity,
            bin_hours=cfg.report.histogram_bin_hours,
            single_keyword_mode=cfg.single_keyword_mode,
        ),
        token=token or cfg.serve.token,
        ui_dir=ui_dir or cfg.serve.ui_dir,
    )
    _serve(app, addr or cfg.serve.addr)


@main.command()
@click.argument("target")
@click.option("--url", "logical_url", default=None, help="Logical URL when scanning a local file.")
@click.pass_context
def scan(ctx, target, logical_url):
    """Analyze one URL or local HTML file and print the findings."""
    cfg = _load_config(ctx)
    ks = cfg.keyword_set()
    psl = _open_psl(cfg)

    if Path(target).is_file():
        html = Path(target).read_text(encoding="utf-8", errors="replace")
        page_url = logical_url or "http://localhost/"
        reachable = True
        chain = ()
    else:
        engine = FetchEngine(cfg.fetch)
        try:
            result = engine.fetch_page(target)
        finally:
            engine.close()
        html = result.html
        page_url = result.final_url
        reachable = result.status is not FetchStatus.UNREACHABLE
        chain = result.redirect_chain
        for hop in chain:
            click.echo(f"redirect {hop.mechanism.value}: {hop.from_url} -> {hop.to_url}")
        if not reachable:
            click.echo("unreachable: " + "; ".join(result.notes))

    if reachable:
        profile = count_keywords(html, None, page_url, ks, cfg.offscreen_px)
        obs = Observation(page_id="scan", at=utc_now(), reachable=True, profile=profile)
    else:
        obs = Observation.unreachable_at("scan", utc_now())
        profile = obs.profile

    assessment = assess(obs, cfg.single_keyword_mode)
    click.echo(f"status: {assessment.status.value} (confidence {assessment.confidence.value})")
    for reason in assessment.reasons:
        click.echo(f"  - {reason}")
    click.echo(f"total occurrences: {profile.total}, distinct keywords: {profile.distinct}")
    for kw in ks.keywords:
        classes = profile.per_keyword.get(kw)
        if not classes:
            continue
        split = ", ".join(f"{vis.value}={n}" for vis, n in sorted(classes.items()))
        click.echo(f"  {kw}: {split}")
    if reachable and html:
        links = extract_colocated_links(
            html, page_url, ks, psl, cfg.ancestor_depth, cfg.offscreen_px
        )
        click.echo(f"co-located links: {len(links)}")
        for link in links:
            party = "third-party" if link.is_third_party else "first-party"
            click.echo(
                f"  [{link.visibility.value}] {link.href} ({party}, near '{link.co_located_keyword}')"
            )
    sys.exit(SCAN_EXIT[assessment.status])


@main.command()
@click.option("--out", "out_dir", default="./fixtures", type=click.Path(file_okay=False))
def fixtures(out_dir):
    """Generate the synthetic fixture corpus used by the test suite."""
    from .fixtures import write_fixtures

    for path in write_fixtures(out_dir):
        click.echo(str(path))


if __name__ == "__main__":
    main()
