"""Plain key-value configuration for the pipeline.

The config file is line oriented: ``key = value``, ``#`` starts a
comment, blank lines are ignored.  Unknown keys are rejected so typos
fail loudly.  The documented schema lives in the README; every module
level option is reachable from here.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


def parse_config_file(path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def _as_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_year_range(value: str) -> tuple[int, int]:
    if "-" in value:
        lo, hi = value.split("-", 1)
        return int(lo), int(hi)
    year = int(value)
    return year, year


@dataclass
class Settings:
    """Typed view of the configuration, CLI flags already folded in."""

    publications: str = ""
    authors: str = ""
    affiliations: str = ""
    year_min: int = 1971
    year_max: int = 2010
    training_years: str = "2006-2008"
    simulate_years: int = 2
    weeks_per_year: int = 52
    weekly_rule: str = "geometric"
    gate_scale: float = 1.0
    dispersion_metric: str = "variance"
    protected_countries: str = "NL"
    hidden_states: int = 2
    em_max_iterations: int = 200
    em_tolerance: float = 1e-8
    epsilon: float = 1e-6
    seed: int = 0
    snapshot_cadence: str = "weekly"
    dense_threshold: int = 400
    subset: str = "all"
    oracle_agents: int = 10000
    oracle_matched: bool = True
    allow_unlisted_authors: bool = False
    figures: bool = True

    @classmethod
    def load(cls, path=None, **overrides) -> "Settings":
        mapping = parse_config_file(path) if path else {}
        known = {f.name: f for f in fields(cls)}
        for key in mapping:
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
        merged = dict(mapping)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        settings = cls()
        for name, value in merged.items():
            field_type = known[name].type
            if isinstance(value, str):
                if field_type in ("int", int):
                    value = int(value)
                elif field_type in ("float", float):
                    value = float(value)
                elif field_type in ("bool", bool):
                    value = _as_bool(value)
            setattr(settings, name, value)
        return settings

    @property
    def training_range(self) -> tuple[int, int]:
        return parse_year_range(str(self.training_years))

    @property
    def protected(self) -> frozenset[str]:
        return frozenset(
            c.strip().upper() for c in str(self.protected_countries).split(",") if c.strip()
        )

    def corpus_paths(self, base: Path | None = None):
        paths = []
        for name in ("publications", "authors", "affiliations"):
            value = getattr(self, name)
            if not value:
                raise ValueError(f"config is missing the {name!r} file path")
            path = Path(value)
            if base is not None and not path.is_absolute():
                path = base / path
            paths.append(path)
        return tuple(paths)
