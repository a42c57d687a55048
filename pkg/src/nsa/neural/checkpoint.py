"""JSON checkpoint format shared by every trained model.

Layout: {"format", "model", "meta", "tensors": [{"name", "shape", "data"}]}
with tensors sorted by name and floats written with 17 significant digits.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import FormatError, IoError, ModelMismatch, VersionError

FORMAT = "nsa-ckpt-v1"


@dataclass
class Checkpoint:
    model: str
    meta: dict[str, str] = field(default_factory=dict)
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    format: str = FORMAT

    def expect(self, model: str) -> "Checkpoint":
        if self.model != model:
            raise ModelMismatch(f"expected a {model!r} checkpoint, got {self.model!r}")
        return self

    def meta_json(self, key: str):
        return json.loads(self.meta[key])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Checkpoint):
            return NotImplemented
        return (self.format == other.format and self.model == other.model
                and self.meta == other.meta and self.tensors.keys() == other.tensors.keys()
                and all(self.tensors[k].shape == other.tensors[k].shape
                        and np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors))


def _number(x: float) -> str:
    text = format(float(x), ".17g")
    if text in ("inf", "-inf", "nan"):
        raise FormatError("cannot serialize non-finite tensor values")
    return text


def dumps(ckpt: Checkpoint) -> str:
    parts = [
        "{",
        f'"format": {json.dumps(ckpt.format)},\n',
        f'"model": {json.dumps(ckpt.model)},\n',
        f'"meta": {json.dumps({str(k): str(v) for k, v in ckpt.meta.items()}, sort_keys=True)},\n',
        '"tensors": [',
    ]
    entries = []
    for name in sorted(ckpt.tensors):
        arr = np.asarray(ckpt.tensors[name], dtype=np.float64)
        data = ",".join(_number(v) for v in arr.reshape(-1))
        entries.append(f'\n{{"name": {json.dumps(name)}, "shape": {list(arr.shape)}, "data": [{data}]}}')
    parts.append(",".join(entries))
    parts.append("\n]}\n")
    return "".join(parts)


def loads(text: str) -> Checkpoint:
    try:
        obj = json.loads(text, parse_int=float)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed checkpoint: {exc}") from None
    if not isinstance(obj, dict) or set(obj) != {"format", "model", "meta", "tensors"}:
        raise FormatError("checkpoint must have exactly the fields format, model, meta, tensors")
    if obj["format"] != FORMAT:
        raise VersionError(f"unsupported checkpoint format {obj['format']!r}")
    meta = obj["meta"]
    if not isinstance(meta, dict) or not all(isinstance(v, str) for v in meta.values()):
        raise FormatError("meta must map text to text")
    tensors = {}
    for entry in obj["tensors"]:
        try:
            shape = tuple(int(s) for s in entry["shape"])
            data = np.asarray(entry["data"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed tensor entry: {exc}") from None
        if data.ndim != 1 or data.size != int(np.prod(shape, dtype=np.int64)):
            raise FormatError(f"tensor {entry.get('name')!r}: data does not match shape {shape}")
        tensors[entry["name"]] = data.reshape(shape)
    return Checkpoint(obj["model"], dict(meta), tensors, obj["format"])


def save(ckpt: Checkpoint, path: str | os.PathLike) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(dumps(ckpt), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from exc


def load(path: str | os.PathLike) -> Checkpoint:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read checkpoint {path}: {exc}") from exc
    return loads(text)
