"""Configuration: documented defaults, YAML file, then flag overrides.

Unknown keys are rejected with the file line they sit on, and every
value is type- and range-checked before the process touches the network.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from .analyze import (
    DEFAULT_KEYWORDS,
    MATCH_MODES,
    OFFSCREEN_PX,
    SUBSTRING,
    KeywordSet,
)
from .classify import SINGLE_KEYWORD_DISTINCT, SINGLE_KEYWORD_MODES
from .fetch import DEFAULT_USER_AGENT, FetchPolicy
from .report import GRANULARITY_DOMAIN, GRANULARITY_HOST, DEFAULT_BIN_HOURS


class ConfigError(Exception):
    """Invalid configuration; the message names the key and line."""


@dataclass
class ScheduleConfig:
    """Cadences for the three periodic jobs, in hours."""

    seed_poll_hours: float = 2.0
    list_handler_hours: float = 1.0
    internal_handler_hours: float = 24.0
    jitter_fraction: float = 0.05

    def __post_init__(self) -> None:
        for name in ("seed_poll_hours", "list_handler_hours", "internal_handler_hours"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"schedule interval {name} must be positive")
        if not 0 <= self.jitter_fraction <= 0.2:
            raise ConfigError("jitter_fraction must be within [0, 0.2]")


@dataclass
class ReportConfig:
    format: str = "json"
    out_dir: str = "./reports"
    granularity: str = GRANULARITY_DOMAIN
    histogram_bin_hours: float = DEFAULT_BIN_HOURS


@dataclass
class ServeConfig:
    addr: str = "127.0.0.1:8787"
    token: str | None = None
    ui_dir: str | None = None


@dataclass
class Config:
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    match_mode: str = SUBSTRING
    seed_endpoint: str | None = None
    fetch: FetchPolicy = field(default_factory=FetchPolicy)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    single_keyword_mode: str = SINGLE_KEYWORD_DISTINCT
    offscreen_px: int = OFFSCREEN_PX
    ancestor_depth: int = 1
    psl_path: str | None = None
    data_dir: str = "./data"
    report: ReportConfig = field(default_factory=ReportConfig)
    serve: ServeConfig = field(default_factory=ServeConfig)

    def keyword_set(self) -> KeywordSet:
        return KeywordSet(keywords=tuple(self.keywords), match_mode=self.match_mode)


# -- schema ------------------------------------------------------------------


def _typed(kind: type, label: str) -> Callable[[Any], Any]:
    def check(value: Any) -> Any:
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
            raise ValueError(f"expected {label}")
        return value

    return check


def _positive(check: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def wrapped(value: Any) -> Any:
        value = check(value)
        if value <= 0:
            raise ValueError("must be positive")
        return value

    return wrapped


def _non_negative(check: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def wrapped(value: Any) -> Any:
        value = check(value)
        if value < 0:
            raise ValueError("must not be negative")
        return value

    return wrapped


def _one_of(*allowed: str) -> Callable[[Any], Any]:
    def check(value: Any) -> Any:
        if value not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return value

    return check


def _range(lo: float, hi: float) -> Callable[[Any], Any]:
    def check(value: Any) -> Any:
        value = _typed(float, "number")(value)
        if not lo <= value <= hi:
            raise ValueError(f"expected a number within [{lo}, {hi}]")
        return value

    return check


def _opt(check: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def wrapped(value: Any) -> Any:
        if value is None:
            return None
        return check(value)

    return wrapped


def _keyword_list(value: Any) -> Any:
    if not isinstance(value, list) or not value:
        raise ValueError("expected a non-empty list of keywords")
    for kw in value:
        if not isinstance(kw, str) or not kw or kw != kw.lower() or any(c.isspace() for c in kw):
            raise ValueError(f"keywords must be lowercase without whitespace: {kw!r}")
    return value


_STR = _typed(str, "a string")
_BOOL = _typed(bool, "a boolean")
_INT = _typed(int, "an integer")
_FLOAT = _typed(float, "a number")

SCHEMA: dict[str, Any] = {
    "keywords": _keyword_list,
    "match_mode": _one_of(*MATCH_MODES),
    "seed": {
        "endpoint": _opt(_STR),
        "poll_hours": _positive(_FLOAT),
    },
    "fetch": {
        "timeout_ms": _positive(_INT),
        "max_redirects": _non_negative(_INT),
        "meta_refresh_max_seconds": _non_negative(_FLOAT),
        "per_host_delay_ms": _non_negative(_INT),
        "concurrency": _positive(_INT),
        "user_agent": _STR,
        "respect_robots": _BOOL,
        "max_body_bytes": _positive(_INT),
        "tls_verify": _BOOL,
    },
    "schedule": {
        "list_handler_hours": _positive(_FLOAT),
        "internal_handler_hours": _positive(_FLOAT),
        "jitter_fraction": _range(0.0, 0.2),
    },
    "classify": {
        "single_keyword_mode": _one_of(*SINGLE_KEYWORD_MODES),
    },
    "analyze": {
        "offscreen_px": _positive(_INT),
        "ancestor_depth": _positive(_INT),
        "psl_path": _opt(_STR),
    },
    "data_dir": _STR,
    "report": {
        "format": _one_of("json", "csv"),
        "out_dir": _STR,
        "granularity": _one_of(GRANULARITY_DOMAIN, GRANULARITY_HOST),
        "histogram_bin_hours": _positive(_FLOAT),
    },
    "serve": {
        "addr": _STR,
        "token": _opt(_STR),
        "ui_dir": _opt(_STR),
    },
}


def _walk_node(node: yaml.Node, schema: Any, path: str, loader: yaml.SafeLoader) -> Any:
    line = node.start_mark.line + 1
    if isinstance(schema, dict):
        if not isinstance(node, yaml.MappingNode):
            raise ConfigError(f"{path or 'config'}: expected a mapping (line {line})")
        result: dict[str, Any] = {}
        for key_node, value_node in node.value:
            key = key_node.value
            key_path = f"{path}.{key}" if path else key
            key_line = key_node.start_mark.line + 1
            if key not in schema:
                raise ConfigError(f"unknown config key '{key_path}' (line {key_line})")
            result[key] = _walk_node(value_node, schema[key], key_path, loader)
        return result
    value = loader.construct_object(node, deep=True)
    try:
        return schema(value)
    except ValueError as exc:
        raise ConfigError(f"invalid value for '{path}' (line {line}): {exc}") from None


def _load_yaml_checked(text: str) -> dict[str, Any]:
    loader = yaml.SafeLoader(io.StringIO(text))
    try:
        node = loader.get_single_node()
    except yaml.YAMLError as exc:
        raise ConfigError(f"config does not parse as YAML: {exc}") from None
    finally:
        loader.dispose()
    if node is None:
        return {}
    loader = yaml.SafeLoader(io.StringIO(text))
    try:
        return _walk_node(node, SCHEMA, "", loader)
    finally:
        loader.dispose()


def _apply_overrides(tree: dict[str, Any], overrides: dict[str, Any]) -> None:
    for dotted, value in overrides.items():
        if value is None:
            continue
        schema: Any = SCHEMA
        cursor = tree
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(schema, dict) or part not in schema:
                raise ConfigError(f"unknown config key '{dotted}' (flag override)")
            schema = schema[part]
            cursor = cursor.setdefault(part, {})
        leaf = parts[-1]
        if not isinstance(schema, dict) or leaf not in schema:
            raise ConfigError(f"unknown config key '{dotted}' (flag override)")
        try:
            cursor[leaf] = schema[leaf](value)
        except ValueError as exc:
            raise ConfigError(f"invalid value for '{dotted}' (flag override): {exc}") from None


def parse_config(
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> Config:
    """Resolve configuration: defaults, then the file, then flag overrides."""
    tree: dict[str, Any] = {}
    if path is not None:
        tree = _load_yaml_checked(Path(path).read_text(encoding="utf-8"))
    if overrides:
        _apply_overrides(tree, overrides)

    def section(name: str) -> dict[str, Any]:
        return tree.get(name, {}) or {}

    fetch_in = section("fetch")
    policy = FetchPolicy(
        timeout_ms=fetch_in.get("timeout_ms", 30000),
        max_redirects=fetch_in.get("max_redirects", 10),
        meta_refresh_max_seconds=fetch_in.get("meta_refresh_max_seconds", 5.0),
        per_host_delay_ms=fetch_in.get("per_host_delay_ms", 2000),
        concurrency=fetch_in.get("concurrency", 4),
        user_agent=fetch_in.get("user_agent", DEFAULT_USER_AGENT),
        respect_robots=fetch_in.get("respect_robots", False),
        max_body_bytes=fetch_in.get("max_body_bytes", 8 * 1024 * 1024),
        tls_verify=fetch_in.get("tls_verify", False),
    )
    seed_in = section("seed")
    schedule_in = section("schedule")
    schedule = ScheduleConfig(
        seed_poll_hours=seed_in.get("poll_hours", 2.0),
        list_handler_hours=schedule_in.get("list_handler_hours", 1.0),
        internal_handler_hours=schedule_in.get("internal_handler_hours", 24.0),
        jitter_fraction=schedule_in.get("jitter_fraction", 0.05),
    )
    classify_in = section("classify")
    analyze_in = section("analyze")
    report_in = section("report")
    serve_in = section("serve")
    keywords = tuple(tree.get("keywords", DEFAULT_KEYWORDS))
    return Config(
        keywords=keywords,
        match_mode=tree.get("match_mode", SUBSTRING),
        seed_endpoint=seed_in.get("endpoint"),
        fetch=policy,
        schedule=schedule,
        single_keyword_mode=classify_in.get("single_keyword_mode", SINGLE_KEYWORD_DISTINCT),
        offscreen_px=analyze_in.get("offscreen_px", OFFSCREEN_PX),
        ancestor_depth=analyze_in.get("ancestor_depth", 1),
        psl_path=analyze_in.get("psl_path"),
        data_dir=tree.get("data_dir", "./data"),
        report=ReportConfig(
            format=report_in.get("format", "json"),
            out_dir=report_in.get("out_dir", "./reports"),
            granularity=report_in.get("granularity", GRANULARITY_DOMAIN),
            histogram_bin_hours=report_in.get("histogram_bin_hours", DEFAULT_BIN_HOURS),
        ),
        serve=ServeConfig(
            addr=serve_in.get("addr", "127.0.0.1:8787"),
            token=serve_in.get("token"),
            ui_dir=serve_in.get("ui_dir"),
        ),
    )


def effective_config_yaml(cfg: Config) -> str:
    """The fully resolved configuration, in file format, for --print-config."""
    tree = {
        "keywords": list(cfg.keywords),
        "match_mode": cfg.match_mode,
        "seed": {"endpoint": cfg.seed_endpoint, "poll_hours": cfg.schedule.seed_poll_hours},
        "fetch": {
            "timeout_ms": cfg.fetch.timeout_ms,
            "max_redirects": cfg.fetch.max_redirects,
            "meta_refresh_max_seconds": cfg.fetch.meta_refresh_max_seconds,
            "per_host_delay_ms": cfg.fetch.per_host_delay_ms,
            "concurrency": cfg.fetch.concurrency,
            "user_agent": cfg.fetch.user_agent,
            "respect_robots": cfg.fetch.respect_robots,
            "max_body_bytes": cfg.fetch.max_body_bytes,
            "tls_verify": cfg.fetch.tls_verify,
        },
        "schedule": {
            "list_handler_hours": cfg.schedule.list_handler_hours,
            "internal_handler_hours": cfg.schedule.internal_handler_hours,
            "jitter_fraction": cfg.schedule.jitter_fraction,
        },
        "classify": {"single_keyword_mode": cfg.single_keyword_mode},
        "analyze": {
            "offscreen_px": cfg.offscreen_px,
            "ancestor_depth": cfg.ancestor_depth,
            "psl_path": cfg.psl_path,
        },
        "data_dir": cfg.data_dir,
        "report": {
            "format": cfg.report.format,
            "out_dir": cfg.report.out_dir,
            "granularity": cfg.report.granularity,
            "histogram_bin_hours": cfg.report.histogram_bin_hours,
        },
        "serve": {
            "addr": cfg.serve.addr,
            "token": cfg.serve.token,
            "ui_dir": cfg.serve.ui_dir,
        },
    }
    return yaml.safe_dump(tree, sort_keys=False, default_flow_style=False)
