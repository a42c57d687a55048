"""Extraction helpers shared by the analyses: call sites and argument naming."""

from __future__ import annotations

from dataclasses import dataclass

from . import ast


@dataclass(frozen=True)
class CallSite:
    callee_name: str
    base_name: str | None
    arg_names: tuple[str, ...]
    resolved_param_names: tuple[str, ...] | None
    file: str
    line: int
    col: int


def name_of(expr: ast.Expr) -> str:
    """Heuristic name of an expression, total over all expression variants."""
    if isinstance(expr, ast.Name):
        return expr.id
    if isinstance(expr, ast.Attribute):
        return expr.attr
    if isinstance(expr, ast.Call):
        return name_of(expr.callee)
    if isinstance(expr, ast.Subscript):
        return name_of(expr.base)
    if isinstance(expr, ast.Literal):
        return "LIT:" + expr.kind.value
    if isinstance(expr, (ast.BinOp, ast.UnaryOp, ast.ListExpr)):
        return "EXPR"
    raise TypeError(f"not an expression: {expr!r}")


class FunctionIndex:
    """Name-based, module-local lookup of function and method signatures."""

    def __init__(self, module: ast.Module) -> None:
        self.functions: dict[str, list[ast.FunctionDef]] = {}
        self.methods: dict[str, list[ast.FunctionDef]] = {}
        self.classes: set[str] = set()
        for cls, fn in ast.walk_functions(module):
            table = self.functions if cls is None else self.methods
            table.setdefault(fn.name, []).append(fn)
        for stmt in module.body:
            if isinstance(stmt, ast.ClassDef):
                self.classes.add(stmt.name)

    def resolve(self, callee: ast.Expr) -> tuple[ast.FunctionDef, tuple[ast.Param, ...]] | None:
        """Return the unique target and its explicit parameters (receiver dropped for methods)."""
        if isinstance(callee, ast.Name):
            found = self.functions.get(callee.id, [])
            if len(found) == 1:
                return found[0], found[0].params
        elif isinstance(callee, ast.Attribute):
            found = self.methods.get(callee.attr, [])
            if len(found) == 1:
                return found[0], found[0].params[1:]
        return None


def iter_calls(node) -> list[ast.Call]:
    """All Call nodes under ``node``, inner calls before the calls enclosing them."""
    calls = [n for n in ast.walk(node) if isinstance(n, ast.Call)]
    return sorted(calls, key=lambda c: (c.end_line, c.end_col))


def extract_calls(module: ast.Module, file: str = "", min_args: int = 2) -> list[CallSite]:
    """One CallSite per call with at least ``min_args`` arguments, ordered by closing parenthesis."""
    index = FunctionIndex(module)
    sites = []
    for call in iter_calls(module):
        if len(call.args) < min_args:
            continue
        base = name_of(call.callee.base) if isinstance(call.callee, ast.Attribute) else None
        target = index.resolve(call.callee)
        params = tuple(p.name for p in target[1]) if target else None
        sites.append(CallSite(
            callee_name=name_of(call.callee),
            base_name=base,
            arg_names=tuple(name_of(a) for a in call.args),
            resolved_param_names=params,
            file=file,
            line=call.line,
            col=call.col,
        ))
    return sites
