"""Bundled refactoring pairs with their expected verdicts (see ``manifest.toml``)."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class CorpusPair:
    name: str
    expect: str
    category: str
    path_a: Path
    path_b: Path
    epsilon: float | None = None
    method: str | None = None
    h: float | None = None
    t_end: float | None = None

    def texts(self) -> tuple[str, str]:
        return self.path_a.read_text(encoding="utf-8"), self.path_b.read_text(encoding="utf-8")


def corpus_dir() -> Path:
    return Path(str(resources.files(__name__)))


def load_pairs() -> list[CorpusPair]:
    root = corpus_dir()
    with open(root / "manifest.toml", "rb") as f:
        manifest = tomllib.load(f)
    pairs = []
    for entry in manifest["pair"]:
        name = entry.pop("name")
        pairs.append(CorpusPair(name=name, path_a=root / f"{name}_a.bdl", path_b=root / f"{name}_b.bdl", **entry))
    return pairs
