from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from typing import Mapping

_ENV_PREFIX = "STOCHORDER_"


@dataclass(frozen=True)
class Settings:
    """Numeric defaults used across the services.

    Every field can be overridden with a ``STOCHORDER_<FIELD>`` environment variable.
    """

    order_tol: float = 1e-9
    tail_tol: float = 1e-12
    oracle_tail_mass: float = 1e-10
    grid_points: int = 4001
    grid_quantile: float = 1e-9
    table_size_cap: int = 1_000_000
    scale_ratio_cap: float = 1e4
    series_tol: float = 1e-12
    max_series_terms: int = 4_000_000
    limit_tol: float = 1e-8
    criteria_rel_tol: float = 1e-12
    skip_fraction: float = 0.10
    significant_digits: int = 12
    seed: int = 20090417


def load_settings(environ: Mapping[str, str] | None = None) -> Settings:
    environ = os.environ if environ is None else environ
    overrides: dict[str, object] = {}
    for field in fields(Settings):
        raw = environ.get(_ENV_PREFIX + field.name.upper())
        if raw is None:
            continue
        caster = type(field.default)
        try:
            overrides[field.name] = caster(float(raw)) if caster is int else caster(raw)
        except ValueError as exc:
            raise ValueError(f"Setting {_ENV_PREFIX}{field.name.upper()}={raw!r} is not a valid {caster.__name__}") from exc
    return replace(Settings(), **overrides)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return load_settings()
