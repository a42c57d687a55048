"""Greedy validation of predicted types against the gradual checker."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from ..minilang import ast
from .checker import check_module
from .slots import SlotKind, TypeSlot, extract_slots


@dataclass(frozen=True)
class SlotOutcome:
    file: str
    line: int
    kind: SlotKind
    name: str
    assigned: str | None  # None when left unassigned
    rank: int | None  # 1-based rank of the accepted prediction

    def to_json(self) -> str:
        return json.dumps({"file": self.file, "line": self.line, "kind": self.kind.value, "name": self.name,
                           "assigned": self.assigned, "rank": self.rank})


@dataclass(frozen=True)
class AssignmentReport:
    outcomes: tuple[SlotOutcome, ...]
    errors_before: int
    errors_after: int
    passes: int

    @property
    def assigned(self) -> int:
        return sum(o.assigned is not None for o in self.outcomes)

    @property
    def rate(self) -> float:
        return self.assigned / len(self.outcomes) if self.outcomes else 0.0


def _map_functions(body: tuple, fn) -> tuple:
    out = []
    for stmt in body:
        if isinstance(stmt, ast.FunctionDef):
            stmt = fn(stmt)
        elif isinstance(stmt, ast.ClassDef):
            stmt = replace(stmt, body=_map_functions(stmt.body, fn))
        out.append(stmt)
    return tuple(out)


def annotate(module: ast.Module, slot: TypeSlot, type_name: str | None) -> ast.Module:
    """Set (or with ``None`` clear) the annotation of one slot."""
    def fn(f: ast.FunctionDef) -> ast.FunctionDef:
        if f.line != slot.line or f.name != slot.function:
            return f
        if slot.kind is SlotKind.RETURN:
            return replace(f, return_annotation=type_name)
        return replace(f, params=tuple(replace(p, annotation=type_name) if p.name == slot.param_name else p
                                       for p in f.params))
    return replace(module, body=_map_functions(module.body, fn))


def strip_annotations(module: ast.Module) -> ast.Module:
    def fn(f: ast.FunctionDef) -> ast.FunctionDef:
        return replace(f, return_annotation=None, params=tuple(replace(p, annotation=None) for p in f.params))
    return replace(module, body=_map_functions(module.body, fn))


def validate_and_assign(modules: Sequence[tuple[str, ast.Module]],
                        predictions: Mapping[tuple, Sequence[tuple[str, float]]],
                        k: int) -> tuple[list[tuple[str, ast.Module]], AssignmentReport]:
    """Annotate unannotated slots with predicted types that do not increase the type-error count.

    ``predictions`` maps ``TypeSlot.key`` to ranked (type, probability) lists.
    Slots are visited by top-1 probability (descending, then file and line);
    each takes the first of its top-``k`` types that keeps the total error
    count from growing. Passes repeat until one adds nothing.
    """
    current = {path: module for path, module in modules}
    errors = {path: len(check_module(m, path)) for path, m in current.items()}
    before = sum(errors.values())
    pending = [s for s in extract_slots(modules) if s.ground_truth is None]
    order = {s.key: i for i, s in enumerate(pending)}

    def confidence(s: TypeSlot):
        ranked = predictions.get(s.key, ())
        top = ranked[0][1] if ranked else 0.0
        return (-top, s.file, s.line, order[s.key])

    pending.sort(key=confidence)
    outcome: dict[tuple, SlotOutcome] = {}
    passes = 0
    while k > 0 and pending:
        passes += 1
        remaining = []
        for slot in pending:
            total = sum(errors.values())
            accepted = False
            for rank, (type_name, _) in enumerate(list(predictions.get(slot.key, ()))[:k], start=1):
                trial = annotate(current[slot.file], slot, type_name)
                n = len(check_module(trial, slot.file))
                if total - errors[slot.file] + n <= total:
                    current[slot.file] = trial
                    errors[slot.file] = n
                    outcome[slot.key] = SlotOutcome(slot.file, slot.line, slot.kind, slot.name, type_name, rank)
                    accepted = True
                    break
            if not accepted:
                remaining.append(slot)
        if len(remaining) == len(pending):
            break
        pending = remaining
    for slot in pending:
        outcome.setdefault(slot.key, SlotOutcome(slot.file, slot.line, slot.kind, slot.name, None, None))
    outcomes = tuple(outcome[s.key] for s in sorted(
        [s for s in extract_slots(modules) if s.ground_truth is None], key=lambda s: order[s.key]))
    result = [(path, current[path]) for path, _ in modules]
    return result, AssignmentReport(outcomes, before, sum(errors.values()), passes)
