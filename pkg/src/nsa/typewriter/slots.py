"""Type slots: one prediction target per non-self parameter and per function return."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

from ..embeddings import code_stream, split_subwords
from ..minilang import ast, pretty_print, tokenize
from ..minilang.printer import format_expr

BASE_TYPES = ("int", "float", "str", "bool", "None", "list", "Any")
# spellings folded onto the canonical MiniType names
TYPE_ALIASES = {"Bool": "bool", "Boolean": "bool", "boolean": "bool", "Int": "int", "Float": "float",
                "Str": "str", "String": "str", "List": "list", "NoneType": "None"}

MAX_ID_WORDS = 8
MAX_CODE_TOKENS = 40
MAX_COMMENT_WORDS = 30


def canonical_type(name: str | None) -> str | None:
    return None if name is None else TYPE_ALIASES.get(name, name)


class SlotKind(str, Enum):
    PARAM = "PARAM"
    RETURN = "RETURN"


@dataclass(frozen=True)
class TypeSlot:
    kind: SlotKind
    function: str
    param_name: str | None
    id_words: tuple[str, ...]
    code_tokens: tuple[str, ...]
    comment_words: tuple[str, ...]
    ground_truth: str | None = None
    file: str = ""
    line: int = 0  # line of the enclosing def

    @property
    def key(self) -> tuple[str, int, str, str]:
        return (self.file, self.line, self.kind.value, self.param_name or "")

    @property
    def name(self) -> str:
        return self.param_name if self.kind is SlotKind.PARAM else self.function

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind.value, "function": self.function, "param_name": self.param_name,
            "id_words": list(self.id_words), "code_tokens": list(self.code_tokens),
            "comment_words": list(self.comment_words), "type": self.ground_truth,
            "file": self.file, "line": self.line,
        })

    @classmethod
    def from_json(cls, text: str) -> "TypeSlot":
        d = json.loads(text)
        return cls(SlotKind(d["kind"]), d["function"], d["param_name"], tuple(d["id_words"]),
                   tuple(d["code_tokens"]), tuple(d["comment_words"]), d["type"], d["file"], int(d["line"]))


def comment_words(docstring: str | None) -> list[str]:
    if not docstring:
        return []
    return re.findall(r"[a-z0-9_]+", docstring.lower())


def _own_exprs(stmt) -> list:
    """Expressions that belong to the statement's own line (headers only for compound statements)."""
    if isinstance(stmt, ast.Assign):
        return [stmt.target, stmt.value]
    if isinstance(stmt, ast.Return):
        return [] if stmt.value is None else [stmt.value]
    if isinstance(stmt, ast.ExprStmt):
        return [stmt.expr]
    if isinstance(stmt, ast.If):
        return [stmt.cond]
    if isinstance(stmt, ast.While):
        return [stmt.cond]
    if isinstance(stmt, ast.For):
        return [stmt.iterable]
    return []


def _line_tokens(stmt) -> list[str]:
    if isinstance(stmt, ast.If):
        text = f"if {format_expr(stmt.cond)}:"
    elif isinstance(stmt, ast.While):
        text = f"while {format_expr(stmt.cond)}:"
    elif isinstance(stmt, ast.For):
        text = f"for {stmt.var} in {format_expr(stmt.iterable)}:"
    else:
        text = pretty_print(stmt)
    return code_stream(tokenize(text))


def _lines(body: Sequence) -> Iterator:
    """Statements in source order, descending into compound bodies but not nested defs."""
    for stmt in body:
        if isinstance(stmt, (ast.FunctionDef, ast.ClassDef)):
            continue
        yield stmt
        if isinstance(stmt, ast.If):
            yield from _lines(stmt.then_body)
            for cond, elif_body in stmt.elifs:
                # elif headers count as their own lines
                yield ast.If(cond, ())
                yield from _lines(elif_body)
            yield from _lines(stmt.else_body)
        elif isinstance(stmt, (ast.While, ast.For)):
            yield from _lines(stmt.body)


def _references(stmt, name: str) -> bool:
    if isinstance(stmt, ast.For) and stmt.var == name:
        return True
    return any(isinstance(n, ast.Name) and n.id == name for e in _own_exprs(stmt) for n in ast.walk(e))


def function_slots(func: ast.FunctionDef, is_method: bool, file: str = "",
                   max_id: int = MAX_ID_WORDS, max_code: int = MAX_CODE_TOKENS,
                   max_comment: int = MAX_COMMENT_WORDS) -> list[TypeSlot]:
    params = func.params[1:] if is_method else func.params
    words = tuple(comment_words(func.docstring)[:max_comment])
    fname_words = split_subwords(func.name)
    lines = list(_lines(func.body))
    slots = []
    for p in params:
        code: list[str] = []
        for stmt in lines:
            if _references(stmt, p.name):
                code += _line_tokens(stmt)
        slots.append(TypeSlot(SlotKind.PARAM, func.name, p.name,
                              tuple((fname_words + split_subwords(p.name))[:max_id]),
                              tuple(code[:max_code]), words, canonical_type(p.annotation), file, func.line))
    code = []
    for stmt in lines:
        if isinstance(stmt, ast.Return):
            code += _line_tokens(stmt)
    slots.append(TypeSlot(SlotKind.RETURN, func.name, None, tuple(fname_words[:max_id]),
                          tuple(code[:max_code]), words, canonical_type(func.return_annotation), file, func.line))
    return slots


def extract_slots(modules: Iterable[tuple[str, ast.Module]], max_id: int = MAX_ID_WORDS,
                  max_code: int = MAX_CODE_TOKENS, max_comment: int = MAX_COMMENT_WORDS) -> list[TypeSlot]:
    """Slots for every function and method of the given (path, Module) pairs, in source order."""
    out = []
    for path, module in modules:
        for cls, func in ast.walk_functions(module):
            out += function_slots(func, cls is not None, path, max_id, max_code, max_comment)
    return out


@dataclass(frozen=True)
class TypeVocabulary:
    types: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.types)

    def index(self, name: str) -> int:
        return self.types.index(name)

    def __contains__(self, name: str) -> bool:
        return name in self.types

    def to_json(self) -> str:
        return json.dumps(list(self.types))

    @classmethod
    def from_json(cls, text: str) -> "TypeVocabulary":
        return cls(tuple(json.loads(text)))


def build_type_vocab(slots: Iterable[TypeSlot], n: int) -> TypeVocabulary:
    """The ``n`` most frequent ground-truth types, always including the base types.

    Ordered by (frequency desc, name asc).
    """
    if n < len(BASE_TYPES):
        raise ValueError(f"type vocabulary needs at least {len(BASE_TYPES)} entries")
    counts = Counter(s.ground_truth for s in slots if s.ground_truth is not None)
    others = sorted((t for t in counts if t not in BASE_TYPES), key=lambda t: (-counts[t], t))
    chosen = list(BASE_TYPES) + others[: n - len(BASE_TYPES)]
    return TypeVocabulary(tuple(sorted(chosen, key=lambda t: (-counts[t], t))))
