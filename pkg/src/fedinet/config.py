"""Run configuration shared by crawling, synthesis and analysis."""

from __future__ import annotations

import dataclasses
import json
import sys
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .timeutil import SIX_MONTHS_DAYS, end_of_day, format_ts, parse_date

CATEGORIES = ("Aficionados", "Others1", "Others2")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__("config key %r: %s" % (key, message))
        self.key = key


@dataclass(frozen=True)
class Config:
    t_end: date = date(2023, 12, 31)
    acquisition_date: date = date(2022, 10, 27)
    target_n: int = 2000
    bandwidth_quantile: float = 0.3
    min_contacts: int = 2
    min_relationship_age_days: float = SIX_MONTHS_DAYS
    active_frequency_threshold: float = 1.0
    exclude_bots: bool = True
    rings_mode: bool = False
    # None means every category; the structural and post-acquisition analyses
    # are restricted to these user categories
    focus_categories: tuple[str, ...] | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.target_n < 1:
            raise ConfigError("target_n", "must be positive")
        if not 0 < self.bandwidth_quantile <= 1:
            raise ConfigError("bandwidth_quantile", "must be in (0, 1]")
        if self.min_contacts < 1:
            raise ConfigError("min_contacts", "must be positive")
        if self.min_relationship_age_days <= 0:
            raise ConfigError("min_relationship_age_days", "must be positive")
        if self.active_frequency_threshold <= 0:
            raise ConfigError("active_frequency_threshold", "must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs", "must be positive")
        if not self.acquisition_date < self.t_end:
            raise ConfigError("acquisition_date", "must precede t_end")
        if self.focus_categories is not None:
            bad = [c for c in self.focus_categories if c not in CATEGORIES]
            if bad:
                raise ConfigError("focus_categories", "unknown categories %s" % bad)

    @property
    def T_end(self) -> datetime:
        """Observation end as an instant: the close of the ``t_end`` day."""
        return end_of_day(self.t_end)

    @property
    def thresholds(self) -> dict:
        return {
            "min_contacts": self.min_contacts,
            "min_age_days": self.min_relationship_age_days,
            "min_frequency": self.active_frequency_threshold,
        }

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["t_end"] = self.t_end.isoformat()
        d["acquisition_date"] = self.acquisition_date.isoformat()
        if self.focus_categories is not None:
            d["focus_categories"] = list(self.focus_categories)
        return d

    def replace(self, **changes) -> "Config":
        return from_mapping({**self.to_dict(), **changes})


_FIELDS = {f.name: f for f in dataclasses.fields(Config)}


def _coerce(key: str, value: Any) -> Any:
    try:
        if key in ("t_end", "acquisition_date"):
            return parse_date(value)
        if key in ("target_n", "min_contacts", "jobs"):
            if isinstance(value, bool) or int(value) != value:
                raise ValueError("not an integer")
            return int(value)
        if key in ("bandwidth_quantile", "min_relationship_age_days", "active_frequency_threshold"):
            if isinstance(value, bool):
                raise ValueError("not a number")
            return float(value)
        if key in ("exclude_bots", "rings_mode"):
            if not isinstance(value, bool):
                raise ValueError("not a boolean")
            return value
        if key == "focus_categories":
            if value is None:
                return None
            if isinstance(value, str):
                value = [value]
            return tuple(str(v) for v in value)
    except (TypeError, ValueError) as e:
        raise ConfigError(key, "invalid value %r (%s)" % (value, e)) from None
    return value


def from_mapping(data: Mapping[str, Any], base: Config | None = None) -> Config:
    values = dataclasses.asdict(base) if base is not None else {}
    for key, value in data.items():
        if key not in _FIELDS:
            raise ConfigError(key, "unknown key")
        values[key] = _coerce(key, value)
    return Config(**values)


def load_config(path: str | Path | None, base: Config | None = None) -> Config:
    """Read a ``.toml`` or ``.json`` config file; ``None`` gives the defaults."""
    if path is None:
        return base or Config()
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix.lower() == ".toml":
        data = tomllib.loads(raw.decode("utf-8"))
        data = data.get("fedinet", data)
    else:
        data = json.loads(raw)
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a table/object")
    return from_mapping(data, base)


def dataset_snapshot(config: Config, source: str, **extra) -> dict:
    """The immutable ``config.json`` written into a new dataset."""
    snap = {
        "format_version": 1,
        "source": source,
        "t_end": config.t_end.isoformat(),
        "t_end_ts": format_ts(config.T_end),
        "acquisition_date": config.acquisition_date.isoformat(),
        "thresholds": {
            "min_contacts": config.min_contacts,
            "min_relationship_age_days": config.min_relationship_age_days,
            "active_frequency_threshold": config.active_frequency_threshold,
        },
    }
    snap.update(extra)
    return snap


def config_for_dataset(snapshot: Mapping, base: Config | None = None) -> Config:
    """Defaults overlaid with the dataset's own observation window and thresholds."""
    data = {"t_end": snapshot["t_end"], "acquisition_date": snapshot["acquisition_date"]}
    data.update(snapshot.get("thresholds", {}))
    return from_mapping(data, base)
