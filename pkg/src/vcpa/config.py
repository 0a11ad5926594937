"""Service configuration: artifact paths plus tunable thresholds.

Values come from defaults, then an optional JSON file, then VCPA_*
environment variables (highest precedence). Every load path ends in
validate(), so a bad window or cutoff fails fast instead of surfacing as
odd notice behavior later.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import OutOfRange, SchemaMismatch
from .model import GREEN_ABOVE, RED_BELOW

ENV_PREFIX = "VCPA_"


@dataclass(frozen=True)
class ServiceConfig:
    catalog_path: Path = Path("artifacts/catalog.json")
    profiles_path: Path = Path("artifacts/profiles.json")
    log_path: Path = Path("artifacts/events.jsonl")
    window_start_ms: int = 210_000
    window_end_ms: int = 240_000
    red_below: float = RED_BELOW
    green_above: float = GREEN_ABOVE
    alternatives_above: float = 0.1
    fsync: bool = False
    host: str = "127.0.0.1"
    port: int = 8000

    def validate(self) -> "ServiceConfig":
        if self.window_start_ms < 0 or self.window_end_ms <= self.window_start_ms:
            raise OutOfRange("exploratory window lower bound must sit below the upper")
        if not 0.0 < self.red_below <= self.alternatives_above < 1.0:
            raise OutOfRange("need 0 < red_below <= alternatives_above < 1")
        if not self.red_below <= self.green_above <= 1.0:
            raise OutOfRange("need red_below <= green_above <= 1")
        if not 0 < self.port < 65536:
            raise OutOfRange(f"port {self.port} outside (0, 65536)")
        return self


_PATH_FIELDS = {"catalog_path", "profiles_path", "log_path"}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, kind: type, raw: Any) -> Any:
    if name in _PATH_FIELDS:
        return Path(raw)
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        token = str(raw).strip().lower()
        if token in _BOOL_TRUE:
            return True
        if token in _BOOL_FALSE:
            return False
        raise SchemaMismatch(f"{name}: not a boolean: {raw!r}")
    try:
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise SchemaMismatch(f"{name}: {exc}") from exc


def _apply(config: ServiceConfig, overrides: Mapping[str, Any], origin: str) -> ServiceConfig:
    known = {f.name: f.type for f in fields(ServiceConfig)}
    kinds = {
        "window_start_ms": int, "window_end_ms": int, "port": int,
        "red_below": float, "green_above": float, "alternatives_above": float,
        "fsync": bool, "host": str,
    }
    updates = {}
    for name, raw in overrides.items():
        if name not in known:
            raise SchemaMismatch(f"{origin}: unknown config key {name!r}")
        updates[name] = _coerce(name, kinds.get(name, str), raw)
    return replace(config, **updates)


def load_config(path: str | Path | None = None, *, env: Mapping[str, str] | None = None) -> ServiceConfig:
    """Build the effective config: defaults <- JSON file <- environment."""
    config = ServiceConfig()
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise SchemaMismatch(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaMismatch(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise SchemaMismatch(f"{path}: config must be a JSON object")
        config = _apply(config, doc, str(path))
    env = os.environ if env is None else env
    picked = {
        key[len(ENV_PREFIX):].lower(): value
        for key, value in env.items()
        if key.startswith(ENV_PREFIX)
    }
    if picked:
        config = _apply(config, picked, "environment")
    return config.validate()
