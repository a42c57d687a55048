"""A flow-insensitive, module-local gradual type checker for MiniLang.

Unannotated parameters and returns are ``Any`` and never produce errors, so
adding annotations can only add checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from ..minilang import ast
from .slots import canonical_type

ANY = "Any"
NUMERIC = ("int", "float")
ARITHMETIC = ("+", "-", "*", "/", "%")
BOOLEAN = ("and", "or", "==", "!=", "<", "<=", ">", ">=")
_LITERAL_TYPES = {ast.LitKind.INT: "int", ast.LitKind.FLOAT: "float", ast.LitKind.STR: "str",
                  ast.LitKind.BOOL: "bool", ast.LitKind.NONE: "None"}


class ErrorCategory(str, Enum):
    ARG_MISMATCH = "ARG_MISMATCH"
    RETURN_MISMATCH = "RETURN_MISMATCH"
    OP_MISMATCH = "OP_MISMATCH"


@dataclass(frozen=True, order=True)
class TypeErrorReport:
    file: str
    line: int
    category: ErrorCategory
    message: str

    def to_json(self) -> str:
        return json.dumps({"file": self.file, "line": self.line, "category": self.category.value,
                           "message": self.message})


def compatible(actual: str, expected: str) -> bool:
    if actual == ANY or expected == ANY or actual == expected:
        return True
    return actual == "int" and expected == "float"


@dataclass(frozen=True)
class _Signature:
    params: tuple[str, ...]  # annotation or Any, receiver dropped for methods
    returns: str


class _ModuleChecker:
    def __init__(self, module: ast.Module, file: str) -> None:
        self.file = file
        self.errors: list[TypeErrorReport] = []
        self.classes = {s.name for s in module.body if isinstance(s, ast.ClassDef)}
        funcs: dict[str, list[_Signature]] = {}
        methods: dict[str, list[_Signature]] = {}
        for cls, f in ast.walk_functions(module):
            params = f.params[1:] if cls is not None else f.params
            sig = _Signature(tuple(canonical_type(p.annotation) or ANY for p in params),
                             canonical_type(f.return_annotation) or ANY)
            (methods if cls is not None else funcs).setdefault(f.name, []).append(sig)
        self.functions = {k: v[0] for k, v in funcs.items() if len(v) == 1}
        self.methods = {k: v[0] for k, v in methods.items() if len(v) == 1}

    def error(self, node, category: ErrorCategory, message: str) -> None:
        self.errors.append(TypeErrorReport(self.file, node.line, category, message))

    # -- expressions ------------------------------------------------------

    def infer(self, e, env: dict[str, str]) -> str:
        if isinstance(e, ast.Literal):
            return ANY if e.is_ellipsis else _LITERAL_TYPES[e.kind]
        if isinstance(e, ast.Name):
            return env.get(e.id, ANY)
        if isinstance(e, ast.ListExpr):
            for item in e.items:
                self.infer(item, env)
            return "list"
        if isinstance(e, ast.Attribute):
            self.infer(e.base, env)
            return ANY
        if isinstance(e, ast.Subscript):
            self.infer(e.base, env)
            self.infer(e.index, env)
            return ANY
        if isinstance(e, ast.UnaryOp):
            t = self.infer(e.operand, env)
            if e.op == "not":
                return "bool"
            if t != ANY and t not in NUMERIC:
                self.error(e, ErrorCategory.OP_MISMATCH, f"unary '-' applied to {t}")
                return ANY
            return t
        if isinstance(e, ast.BinOp):
            lt, rt = self.infer(e.left, env), self.infer(e.right, env)
            if e.op in BOOLEAN:
                return "bool"
            bad = [t for t in (lt, rt) if t != ANY and t not in NUMERIC]
            if bad:
                self.error(e, ErrorCategory.OP_MISMATCH, f"operator '{e.op}' applied to {lt} and {rt}")
                return ANY
            if ANY in (lt, rt):
                return ANY
            if e.op == "/" or "float" in (lt, rt):
                return "float"
            return "int"
        if isinstance(e, ast.Call):
            return self.infer_call(e, env)
        return ANY

    def infer_call(self, call: ast.Call, env: dict[str, str]) -> str:
        arg_types = [self.infer(a, env) for a in call.args]
        sig, callee = None, None
        if isinstance(call.callee, ast.Name):
            callee = call.callee.id
            if callee in self.classes:
                return callee
            sig = self.functions.get(callee)
        elif isinstance(call.callee, ast.Attribute):
            self.infer(call.callee.base, env)
            callee = call.callee.attr
            sig = self.methods.get(callee)
        else:
            self.infer(call.callee, env)
        if sig is None:
            return ANY
        for i, (actual, expected) in enumerate(zip(arg_types, sig.params)):
            if not compatible(actual, expected):
                self.error(call.args[i], ErrorCategory.ARG_MISMATCH,
                           f"argument {i + 1} of '{callee}' expects {expected}, got {actual}")
        return sig.returns

    # -- statements -------------------------------------------------------

    def run(self, body, env: dict[str, str], returns: str | None) -> None:
        for stmt in body:
            if isinstance(stmt, (ast.FunctionDef, ast.ClassDef)):
                continue
            if isinstance(stmt, ast.Assign):
                t = self.infer(stmt.value, env)
                if isinstance(stmt.target, ast.Name):
                    env[stmt.target.id] = t
                else:
                    self.infer(stmt.target, env)
            elif isinstance(stmt, ast.Return):
                t = "None" if stmt.value is None else self.infer(stmt.value, env)
                if returns is not None and not compatible(t, returns):
                    self.error(stmt, ErrorCategory.RETURN_MISMATCH, f"returns {t} where {returns} is declared")
            elif isinstance(stmt, ast.ExprStmt):
                self.infer(stmt.expr, env)
            elif isinstance(stmt, ast.If):
                self.infer(stmt.cond, env)
                self.run(stmt.then_body, env, returns)
                for cond, elif_body in stmt.elifs:
                    self.infer(cond, env)
                    self.run(elif_body, env, returns)
                self.run(stmt.else_body, env, returns)
            elif isinstance(stmt, ast.While):
                self.infer(stmt.cond, env)
                self.run(stmt.body, env, returns)
            elif isinstance(stmt, ast.For):
                self.infer(stmt.iterable, env)
                env[stmt.var] = ANY
                self.run(stmt.body, env, returns)

    def check(self, module: ast.Module) -> list[TypeErrorReport]:
        for cls, f in ast.walk_functions(module):
            params = f.params[1:] if cls is not None else f.params
            env = {p.name: canonical_type(p.annotation) or ANY for p in params}
            self.run(f.body, env, canonical_type(f.return_annotation))
        # module-level code, including class-body statements, as one pseudo-function
        self.run(module.body, {}, None)
        for stmt in module.body:
            if isinstance(stmt, ast.ClassDef):
                self.run(stmt.body, {}, None)
        return self.errors


def check_module(module: ast.Module, file: str = "") -> list[TypeErrorReport]:
    return sorted(_ModuleChecker(module, file).check(module))


def typecheck(modules: Iterable[tuple[str, ast.Module]]) -> list[TypeErrorReport]:
    """All type errors of the given (path, Module) pairs, ordered by (file, line, category)."""
    out: list[TypeErrorReport] = []
    for path, module in modules:
        out += check_module(module, path)
    return sorted(out)
