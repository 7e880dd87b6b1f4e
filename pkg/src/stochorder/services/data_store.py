from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable

from ..errors import SpecParseError

_FIXTURE_FILE = Path(__file__).resolve().parent.parent / "data" / "fixtures" / "presets.json"


class JsonDataStore:
    """JSON-backed catalogue of named comparisons."""

    def __init__(self, fixture_path: Path) -> None:
        self._fixture_path = fixture_path
        self._cache: dict[str, Any] | None = None

    def _load(self) -> dict[str, Any]:
        if self._cache is None:
            with self._fixture_path.open("r", encoding="utf-8") as handle:
                self._cache = json.load(handle)
        return self._cache

    def collection(self, key: str) -> list[dict[str, Any]]:
        items = self._load().get(key)
        if items is None:
            return []
        if not isinstance(items, list):
            raise TypeError(f"Fixture key '{key}' is not a list")
        return items

    def preset(self, name: str) -> dict[str, Any]:
        for item in self.collection("presets"):
            if item.get("name") == name:
                return item
        known = ", ".join(item["name"] for item in self.collection("presets"))
        raise SpecParseError(f"unknown preset {name!r}; known presets: {known}")


@lru_cache(maxsize=1)
def get_data_store() -> JsonDataStore:
    return JsonDataStore(_FIXTURE_FILE)


def iter_presets() -> Iterable[dict[str, Any]]:
    yield from get_data_store().collection("presets")


def get_preset(name: str) -> dict[str, Any]:
    return get_data_store().preset(name)
