"""AST node family for MiniLang.

Nodes are frozen dataclasses. Positions are excluded from equality so two
trees compare equal when they have the same structure and values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Union


class LitKind(Enum):
    INT = "INT"
    FLOAT = "FLOAT"
    STR = "STR"
    BOOL = "BOOL"
    NONE = "NONE"


def _pos() -> Any:
    return field(default=0, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Name:
    id: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Attribute:
    base: Expr
    attr: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Call:
    callee: Expr
    args: tuple[Expr, ...]
    line: int = _pos()
    col: int = _pos()
    # position of the closing parenthesis; orders nested calls inner-first
    end_line: int = _pos()
    end_col: int = _pos()


@dataclass(frozen=True)
class Subscript:
    base: Expr
    index: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Literal:
    """A constant. The ``...`` placeholder is a NONE-kind literal whose value is Ellipsis."""

    kind: LitKind
    value: Any
    line: int = _pos()
    col: int = _pos()

    @property
    def is_ellipsis(self) -> bool:
        return self.value is Ellipsis


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class ListExpr:
    items: tuple[Expr, ...]
    line: int = _pos()
    col: int = _pos()


Expr = Union[Name, Attribute, Call, Subscript, Literal, BinOp, UnaryOp, ListExpr]
EXPR_TYPES = (Name, Attribute, Call, Subscript, Literal, BinOp, UnaryOp, ListExpr)


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    name: str
    annotation: str | None = None
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[Param, ...]
    return_annotation: str | None
    docstring: str | None
    body: tuple[Stmt, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class ClassDef:
    name: str
    body: tuple[Stmt, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Assign:
    target: Expr
    value: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Return:
    value: Expr | None
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then_body: tuple[Stmt, ...]
    elifs: tuple[tuple[Expr, tuple[Stmt, ...]], ...] = ()
    else_body: tuple[Stmt, ...] = ()
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple[Stmt, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class For:
    var: str
    iterable: Expr
    body: tuple[Stmt, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Pass:
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Module:
    body: tuple[Stmt, ...]
    line: int = _pos()
    col: int = _pos()


Stmt = Union[FunctionDef, ClassDef, Assign, Return, If, While, For, ExprStmt, Pass]


def child_nodes(node: Any) -> Iterator[Any]:
    """Yield direct children in source order."""
    if isinstance(node, (Module, ClassDef, While)):
        if isinstance(node, While):
            yield node.cond
        yield from node.body
    elif isinstance(node, FunctionDef):
        yield from node.params
        yield from node.body
    elif isinstance(node, Assign):
        yield node.target
        yield node.value
    elif isinstance(node, Return):
        if node.value is not None:
            yield node.value
    elif isinstance(node, If):
        yield node.cond
        yield from node.then_body
        for cond, body in node.elifs:
            yield cond
            yield from body
        yield from node.else_body
    elif isinstance(node, For):
        yield node.iterable
        yield from node.body
    elif isinstance(node, ExprStmt):
        yield node.expr
    elif isinstance(node, Attribute):
        yield node.base
    elif isinstance(node, Call):
        yield node.callee
        yield from node.args
    elif isinstance(node, Subscript):
        yield node.base
        yield node.index
    elif isinstance(node, BinOp):
        yield node.left
        yield node.right
    elif isinstance(node, UnaryOp):
        yield node.operand
    elif isinstance(node, ListExpr):
        yield from node.items


def walk(node: Any) -> Iterator[Any]:
    """Pre-order traversal."""
    yield node
    for child in child_nodes(node):
        yield from walk(child)


def walk_functions(module: Module) -> Iterator[tuple[str | None, FunctionDef]]:
    """Yield (enclosing class name, function) for module-level functions and methods."""
    for stmt in module.body:
        if isinstance(stmt, FunctionDef):
            yield None, stmt
        elif isinstance(stmt, ClassDef):
            for inner in stmt.body:
                if isinstance(inner, FunctionDef):
                    yield stmt.name, inner
