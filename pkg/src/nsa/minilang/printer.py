"""Pretty-printer: AST back to MiniLang source."""

from __future__ import annotations

from . import ast

INDENT = "    "

_PREC = {"or": 1, "and": 2, "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}
_NOT, _NEG, _ATOM = 3, 7, 8


def _prec(e: ast.Expr) -> int:
    if isinstance(e, ast.BinOp):
        return _PREC[e.op]
    if isinstance(e, ast.UnaryOp):
        return _NOT if e.op == "not" else _NEG
    return _ATOM


def format_string(value: str) -> str:
    body = value.replace("\\", "\\\\").replace('"', '\\"').replace("\r", "\\r").replace("\0", "\\0")
    if "\n" in value:
        return '"""' + body + '"""'
    return '"' + body.replace("\t", "\\t") + '"'


def format_literal(lit: ast.Literal) -> str:
    if lit.kind is ast.LitKind.NONE:
        return "..." if lit.is_ellipsis else "None"
    if lit.kind is ast.LitKind.BOOL:
        return "True" if lit.value else "False"
    if lit.kind is ast.LitKind.STR:
        return format_string(lit.value)
    if lit.kind is ast.LitKind.FLOAT:
        return repr(float(lit.value))
    return str(int(lit.value))


def _wrap(e: ast.Expr, parens: bool) -> str:
    text = format_expr(e)
    return f"({text})" if parens else text


def format_expr(e: ast.Expr) -> str:
    if isinstance(e, ast.Name):
        return e.id
    if isinstance(e, ast.Literal):
        return format_literal(e)
    if isinstance(e, ast.Attribute):
        return f"{_wrap(e.base, _prec(e.base) < _ATOM)}.{e.attr}"
    if isinstance(e, ast.Call):
        args = ", ".join(format_expr(a) for a in e.args)
        return f"{_wrap(e.callee, _prec(e.callee) < _ATOM)}({args})"
    if isinstance(e, ast.Subscript):
        return f"{_wrap(e.base, _prec(e.base) < _ATOM)}[{format_expr(e.index)}]"
    if isinstance(e, ast.ListExpr):
        return "[" + ", ".join(format_expr(i) for i in e.items) + "]"
    if isinstance(e, ast.UnaryOp):
        if e.op == "not":
            return "not " + _wrap(e.operand, _prec(e.operand) < _NOT)
        return "-" + _wrap(e.operand, _prec(e.operand) < _NEG)
    if isinstance(e, ast.BinOp):
        p = _PREC[e.op]
        left = _wrap(e.left, _prec(e.left) < p)
        right = _wrap(e.right, _prec(e.right) <= p)
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")


def _block(body: tuple[ast.Stmt, ...], depth: int) -> list[str]:
    lines: list[str] = []
    for stmt in body:
        lines.extend(_stmt(stmt, depth))
    return lines


def _stmt(s: ast.Stmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, ast.Pass):
        return [pad + "pass"]
    if isinstance(s, ast.ExprStmt):
        return [pad + format_expr(s.expr)]
    if isinstance(s, ast.Assign):
        return [f"{pad}{format_expr(s.target)} = {format_expr(s.value)}"]
    if isinstance(s, ast.Return):
        return [pad + "return" + ("" if s.value is None else " " + format_expr(s.value))]
    if isinstance(s, ast.FunctionDef):
        params = ", ".join(p.name + (f": {p.annotation}" if p.annotation else "") for p in s.params)
        ret = f" -> {s.return_annotation}" if s.return_annotation else ""
        return [f"{pad}def {s.name}({params}){ret}:"] + _block(s.body, depth + 1)
    if isinstance(s, ast.ClassDef):
        return [f"{pad}class {s.name}:"] + _block(s.body, depth + 1)
    if isinstance(s, ast.If):
        out = [f"{pad}if {format_expr(s.cond)}:"] + _block(s.then_body, depth + 1)
        for cond, body in s.elifs:
            out += [f"{pad}elif {format_expr(cond)}:"] + _block(body, depth + 1)
        if s.else_body:
            out += [pad + "else:"] + _block(s.else_body, depth + 1)
        return out
    if isinstance(s, ast.While):
        return [f"{pad}while {format_expr(s.cond)}:"] + _block(s.body, depth + 1)
    if isinstance(s, ast.For):
        return [f"{pad}for {s.var} in {format_expr(s.iterable)}:"] + _block(s.body, depth + 1)
    raise TypeError(f"not a statement: {s!r}")


def pretty_print(node) -> str:
    """Render a Module, statement or expression as MiniLang text."""
    if isinstance(node, ast.Module):
        lines = _block(node.body, 0)
    elif isinstance(node, ast.EXPR_TYPES):
        return format_expr(node)
    else:
        lines = _stmt(node, 0)
    return "".join(line + "\n" for line in lines)
