"""Runtime configuration.

Settings come from the environment, optionally overlaid by a JSON config
file (``--config`` on the CLI). File values win over environment values;
explicit constructor arguments win over both.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .matching import DEFAULT_FUZZY_THRESHOLD
from .ragqa import DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE, DEFAULT_TOP_K
from .debate import DEFAULT_MAX_REGENS
from .context import DEFAULT_SNIPPET_COUNT


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GatewayConfig:
    provider: str = "mock"
    api_key: str | None = None
    base_url: str | None = None
    fixtures_dir: str | None = None
    seed: int = 0


@dataclass(frozen=True)
class SearchConfig:
    base_url: str | None = None
    api_key: str | None = None
    fixtures_dir: str | None = None


@dataclass(frozen=True)
class PipelineConfig:
    chunk_size: int = DEFAULT_CHUNK_SIZE
    chunk_overlap: int = DEFAULT_CHUNK_OVERLAP
    top_k: int = DEFAULT_TOP_K
    fuzzy_threshold: float = DEFAULT_FUZZY_THRESHOLD
    max_regens: int = DEFAULT_MAX_REGENS
    snippet_count: int = DEFAULT_SNIPPET_COUNT

    def __post_init__(self) -> None:
        if not 0 < self.fuzzy_threshold <= 1:
            raise ConfigError("fuzzy_threshold must be in (0, 1]")
        if self.chunk_size < 1 or not 0 <= self.chunk_overlap < self.chunk_size:
            raise ConfigError("chunk_overlap must satisfy 0 <= overlap < size")
        if self.top_k < 1 or self.max_regens < 0 or self.snippet_count < 1:
            raise ConfigError("top_k/snippet_count must be >= 1, max_regens >= 0")


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    data_dir: str = "data"
    pipeline_mode: str = "thread"  # "thread" or "manual"

    def __post_init__(self) -> None:
        if self.pipeline_mode not in ("thread", "manual"):
            raise ConfigError(f"unknown pipeline mode {self.pipeline_mode!r}")


@dataclass(frozen=True)
class AppConfig:
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def _from_env(environ: Mapping[str, str]) -> AppConfig:
    gateway = GatewayConfig(
        provider=environ.get("GATEWAY_PROVIDER", "mock"),
        api_key=environ.get("GATEWAY_API_KEY"),
        base_url=environ.get("GATEWAY_BASE_URL"),
        fixtures_dir=environ.get("GATEWAY_FIXTURES_DIR"),
        seed=int(environ.get("GATEWAY_SEED", "0")),
    )
    search = SearchConfig(
        base_url=environ.get("SEARCH_BASE_URL"),
        api_key=environ.get("SEARCH_API_KEY"),
        fixtures_dir=environ.get("SEARCH_FIXTURES_DIR"),
    )
    return AppConfig(gateway=gateway, search=search)


def _overlay(section: Any, values: Mapping[str, Any]) -> Any:
    known = {f.name for f in fields(section)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return replace(section, **values)


def load_config(
    config_path: str | Path | None = None,
    environ: Mapping[str, str] | None = None,
) -> AppConfig:
    """Env first, then JSON file sections {gateway, search, pipeline, service}."""
    config = _from_env(os.environ if environ is None else environ)
    if config_path is None:
        return config
    try:
        raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    sections = {
        "gateway": config.gateway,
        "search": config.search,
        "pipeline": config.pipeline,
        "service": config.service,
    }
    unknown = set(raw) - set(sections)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    merged = {
        name: _overlay(section, raw.get(name, {}))
        for name, section in sections.items()
    }
    return AppConfig(**merged)
