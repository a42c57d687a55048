"""Corpus discovery, parse bookkeeping and file-level splitting."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

from ..errors import IoError
from ..minilang import LexError, ParseError, ast, parse, tokenize
from ..minilang.tokens import Token

log = logging.getLogger(__name__)

EXTENSION = ".mini"


class ParseStatus(str, Enum):
    OK = "OK"
    LEX_ERROR = "LEX_ERROR"
    PARSE_ERROR = "PARSE_ERROR"


@dataclass
class SourceFile:
    path: str  # relative, posix
    source: str
    tokens: list[Token]
    module: ast.Module


@dataclass
class CorpusManifest:
    root: str
    files: list[str] = field(default_factory=list)
    status: dict[str, ParseStatus] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def ok_files(self) -> list[str]:
        return [f for f in self.files if self.status[f] is ParseStatus.OK]

    @property
    def counts(self) -> dict[str, int]:
        out = {s.value: 0 for s in ParseStatus}
        for s in self.status.values():
            out[s.value] += 1
        out["total"] = len(self.files)
        return out

    def to_json(self) -> str:
        return json.dumps({
            "root": self.root,
            "files": [{"path": f, "status": self.status[f].value, **({"error": self.errors[f]} if f in self.errors else {})}
                      for f in self.files],
            "counts": self.counts,
        }, indent=2, sort_keys=True) + "\n"


def scan(root: str | Path) -> CorpusManifest:
    """Discover ``*.mini`` files under ``root`` (sorted) and record whether each parses."""
    root_path = Path(root)
    if not root_path.is_dir():
        raise IoError(f"not a readable directory: {root}")
    manifest = CorpusManifest(str(root_path))
    for path in sorted(p.relative_to(root_path).as_posix() for p in root_path.rglob("*" + EXTENSION) if p.is_file()):
        manifest.files.append(path)
        try:
            text = (root_path / path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise IoError(f"cannot read {path}: {exc}") from exc
        try:
            parse(tokenize(text))
            manifest.status[path] = ParseStatus.OK
        except LexError as exc:
            manifest.status[path] = ParseStatus.LEX_ERROR
            manifest.errors[path] = str(exc)
            log.warning("skipping %s: %s", path, exc)
        except ParseError as exc:
            manifest.status[path] = ParseStatus.PARSE_ERROR
            manifest.errors[path] = str(exc)
            log.warning("skipping %s: %s", path, exc)
    return manifest


def load_files(manifest: CorpusManifest, paths: Sequence[str] | None = None) -> list[SourceFile]:
    """Tokenize and parse the OK files of the manifest (optionally only ``paths``), path-sorted."""
    wanted = manifest.ok_files if paths is None else sorted(set(paths) & set(manifest.ok_files))
    out = []
    for rel in wanted:
        text = (Path(manifest.root) / rel).read_text(encoding="utf-8")
        tokens = tokenize(text)
        out.append(SourceFile(rel, text, tokens, parse(tokens)))
    return out


def load_dir(root: str | Path) -> list[SourceFile]:
    return load_files(scan(root))


def from_sources(sources: dict[str, str]) -> list[SourceFile]:
    """Parse in-memory sources, skipping those that fail, in path order."""
    out = []
    for rel in sorted(sources):
        try:
            tokens = tokenize(sources[rel])
            out.append(SourceFile(rel, sources[rel], tokens, parse(tokens)))
        except (LexError, ParseError) as exc:
            log.warning("skipping %s: %s", rel, exc)
    return out


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.8
    valid: float = 0.1
    test: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        ratios = (self.train, self.valid, self.test)
        if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must be non-negative and sum to 1, got {ratios}")


def _unit_hash(path: str, seed: int) -> float:
    digest = hashlib.sha256(f"{seed}:{path}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2.0 ** 64


def assign_split(path: str, spec: SplitSpec) -> str:
    u = _unit_hash(path, spec.seed)
    if u < spec.train:
        return "train"
    if u < spec.train + spec.valid:
        return "valid"
    return "test"


def split(manifest: CorpusManifest | Sequence[str], spec: SplitSpec) -> dict[str, list[str]]:
    """Partition OK files into train/valid/test by a seeded hash of each path."""
    files = manifest.ok_files if isinstance(manifest, CorpusManifest) else sorted(manifest)
    parts: dict[str, list[str]] = {"train": [], "valid": [], "test": []}
    for f in files:
        parts[assign_split(f, spec)].append(f)
    return parts
