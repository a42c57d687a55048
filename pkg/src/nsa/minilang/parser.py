"""Recursive-descent parser producing the MiniLang AST."""

from __future__ import annotations

from ..errors import NsaError
from . import ast
from .tokens import Token, TokenKind, decode_string, tokenize

K = TokenKind

COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")
ADDITIVE = ("+", "-")
MULTIPLICATIVE = ("*", "/", "%")


class ParseError(NsaError):
    def __init__(self, line: int, col: int, expected: str, found: str) -> None:
        super().__init__(f"{line}:{col}: expected {expected}, found {found!r}")
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found


class Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.toks = [t for t in tokens if t.kind is not K.COMMENT]
        if not self.toks or self.toks[-1].kind is not K.EOF:
            last = self.toks[-1] if self.toks else Token(K.EOF, "", 1, 1)
            self.toks.append(Token(K.EOF, "", last.line, last.col))
        self.i = 0

    # -- token helpers -------------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def at(self, kind: TokenKind, lexeme: str | None = None) -> bool:
        tok = self.cur
        return tok.kind is kind and (lexeme is None or tok.lexeme == lexeme)

    def at_keyword(self, word: str) -> bool:
        return self.at(K.KEYWORD, word)

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind is not K.EOF:
            self.i += 1
        return tok

    def fail(self, expected: str) -> ParseError:
        tok = self.cur
        found = tok.lexeme if tok.lexeme.strip() else tok.kind.name
        return ParseError(tok.line, tok.col, expected, found)

    def expect(self, kind: TokenKind, lexeme: str | None = None) -> Token:
        if not self.at(kind, lexeme):
            raise self.fail(repr(lexeme) if lexeme else kind.name)
        return self.advance()

    # -- statements ----------------------------------------------------------

    def module(self) -> ast.Module:
        body = []
        while not self.at(K.EOF):
            if self.at(K.NEWLINE):
                self.advance()
                continue
            body.append(self.statement())
        return ast.Module(tuple(body), line=1, col=1)

    def block(self) -> tuple[ast.Stmt, ...]:
        self.expect(K.NEWLINE)
        self.expect(K.INDENT)
        body = []
        while not self.at(K.DEDENT):
            if self.at(K.EOF):
                raise self.fail("DEDENT")
            body.append(self.statement())
        self.advance()
        return tuple(body)

    def statement(self) -> ast.Stmt:
        tok = self.cur
        if tok.kind is K.KEYWORD:
            word = tok.lexeme
            if word == "def":
                return self.funcdef()
            if word == "class":
                self.advance()
                name = self.expect(K.IDENT).lexeme
                self.expect(K.PUNCT, ":")
                return ast.ClassDef(name, self.block(), line=tok.line, col=tok.col)
            if word == "return":
                self.advance()
                value = None if self.at(K.NEWLINE) else self.expr()
                self.expect(K.NEWLINE)
                return ast.Return(value, line=tok.line, col=tok.col)
            if word == "pass":
                self.advance()
                self.expect(K.NEWLINE)
                return ast.Pass(line=tok.line, col=tok.col)
            if word == "if":
                return self.if_stmt()
            if word == "while":
                self.advance()
                cond = self.expr()
                self.expect(K.PUNCT, ":")
                return ast.While(cond, self.block(), line=tok.line, col=tok.col)
            if word == "for":
                self.advance()
                var = self.expect(K.IDENT).lexeme
                self.expect(K.KEYWORD, "in")
                iterable = self.expr()
                self.expect(K.PUNCT, ":")
                return ast.For(var, iterable, self.block(), line=tok.line, col=tok.col)
        expr = self.expr()
        if self.at(K.OP, "="):
            if not isinstance(expr, (ast.Name, ast.Attribute, ast.Subscript)):
                raise self.fail("NEWLINE")
            self.advance()
            value = self.expr()
            self.expect(K.NEWLINE)
            return ast.Assign(expr, value, line=tok.line, col=tok.col)
        self.expect(K.NEWLINE)
        return ast.ExprStmt(expr, line=tok.line, col=tok.col)

    def type_name(self) -> str:
        if self.at_keyword("None"):
            return self.advance().lexeme
        return self.expect(K.IDENT).lexeme

    def funcdef(self) -> ast.FunctionDef:
        start = self.advance()
        name = self.expect(K.IDENT).lexeme
        self.expect(K.PUNCT, "(")
        params = []
        if not self.at(K.PUNCT, ")"):
            while True:
                ptok = self.expect(K.IDENT)
                annotation = None
                if self.at(K.PUNCT, ":"):
                    self.advance()
                    annotation = self.type_name()
                params.append(ast.Param(ptok.lexeme, annotation, line=ptok.line, col=ptok.col))
                if not self.at(K.PUNCT, ","):
                    break
                self.advance()
        self.expect(K.PUNCT, ")")
        returns = None
        if self.at(K.OP, "->"):
            self.advance()
            returns = self.type_name()
        self.expect(K.PUNCT, ":")
        body = self.block()
        docstring = None
        first = body[0]
        if (isinstance(first, ast.ExprStmt) and isinstance(first.expr, ast.Literal)
                and first.expr.kind is ast.LitKind.STR):
            docstring = first.expr.value
        return ast.FunctionDef(name, tuple(params), returns, docstring, body,
                               line=start.line, col=start.col)

    def if_stmt(self) -> ast.If:
        start = self.advance()
        cond = self.expr()
        self.expect(K.PUNCT, ":")
        then_body = self.block()
        elifs = []
        while self.at_keyword("elif"):
            self.advance()
            c = self.expr()
            self.expect(K.PUNCT, ":")
            elifs.append((c, self.block()))
        else_body: tuple[ast.Stmt, ...] = ()
        if self.at_keyword("else"):
            self.advance()
            self.expect(K.PUNCT, ":")
            else_body = self.block()
        return ast.If(cond, then_body, tuple(elifs), else_body, line=start.line, col=start.col)

    # -- expressions (lowest to highest precedence) ---------------------------

    def expr(self) -> ast.Expr:
        return self.or_expr()

    def or_expr(self) -> ast.Expr:
        left = self.and_expr()
        while self.at_keyword("or"):
            self.advance()
            left = ast.BinOp("or", left, self.and_expr(), line=left.line, col=left.col)
        return left

    def and_expr(self) -> ast.Expr:
        left = self.not_expr()
        while self.at_keyword("and"):
            self.advance()
            left = ast.BinOp("and", left, self.not_expr(), line=left.line, col=left.col)
        return left

    def not_expr(self) -> ast.Expr:
        if self.at_keyword("not"):
            tok = self.advance()
            return ast.UnaryOp("not", self.not_expr(), line=tok.line, col=tok.col)
        return self.comparison()

    def comparison(self) -> ast.Expr:
        left = self.additive()
        while self.cur.kind is K.OP and self.cur.lexeme in COMPARISONS:
            op = self.advance().lexeme
            left = ast.BinOp(op, left, self.additive(), line=left.line, col=left.col)
        return left

    def additive(self) -> ast.Expr:
        left = self.term()
        while self.cur.kind is K.OP and self.cur.lexeme in ADDITIVE:
            op = self.advance().lexeme
            left = ast.BinOp(op, left, self.term(), line=left.line, col=left.col)
        return left

    def term(self) -> ast.Expr:
        left = self.unary()
        while self.cur.kind is K.OP and self.cur.lexeme in MULTIPLICATIVE:
            op = self.advance().lexeme
            left = ast.BinOp(op, left, self.unary(), line=left.line, col=left.col)
        return left

    def unary(self) -> ast.Expr:
        if self.at(K.OP, "-"):
            tok = self.advance()
            return ast.UnaryOp("-", self.unary(), line=tok.line, col=tok.col)
        return self.postfix()

    def postfix(self) -> ast.Expr:
        node = self.atom()
        while True:
            if self.at(K.PUNCT, "("):
                self.advance()
                args = self.expr_list(")")
                close = self.expect(K.PUNCT, ")")
                node = ast.Call(node, args, line=node.line, col=node.col,
                                end_line=close.line, end_col=close.col)
            elif self.at(K.PUNCT, "."):
                self.advance()
                attr = self.expect(K.IDENT).lexeme
                node = ast.Attribute(node, attr, line=node.line, col=node.col)
            elif self.at(K.PUNCT, "["):
                self.advance()
                index = self.expr()
                self.expect(K.PUNCT, "]")
                node = ast.Subscript(node, index, line=node.line, col=node.col)
            else:
                return node

    def expr_list(self, closer: str) -> tuple[ast.Expr, ...]:
        items = []
        if not self.at(K.PUNCT, closer):
            items.append(self.expr())
            while self.at(K.PUNCT, ","):
                self.advance()
                if self.at(K.PUNCT, closer):
                    break
                items.append(self.expr())
        return tuple(items)

    def atom(self) -> ast.Expr:
        tok = self.cur
        pos = {"line": tok.line, "col": tok.col}
        if tok.kind is K.IDENT:
            self.advance()
            return ast.Name(tok.lexeme, **pos)
        if tok.kind is K.INT_LIT:
            self.advance()
            return ast.Literal(ast.LitKind.INT, int(tok.lexeme), **pos)
        if tok.kind is K.FLOAT_LIT:
            self.advance()
            return ast.Literal(ast.LitKind.FLOAT, float(tok.lexeme), **pos)
        if tok.kind is K.STR_LIT:
            self.advance()
            return ast.Literal(ast.LitKind.STR, decode_string(tok.lexeme), **pos)
        if tok.kind is K.KEYWORD and tok.lexeme in ("True", "False"):
            self.advance()
            return ast.Literal(ast.LitKind.BOOL, tok.lexeme == "True", **pos)
        if tok.kind is K.KEYWORD and tok.lexeme == "None":
            self.advance()
            return ast.Literal(ast.LitKind.NONE, None, **pos)
        if tok.kind is K.PUNCT and tok.lexeme == "...":
            self.advance()
            return ast.Literal(ast.LitKind.NONE, Ellipsis, **pos)
        if tok.kind is K.PUNCT and tok.lexeme == "(":
            self.advance()
            inner = self.expr()
            self.expect(K.PUNCT, ")")
            return inner
        if tok.kind is K.PUNCT and tok.lexeme == "[":
            self.advance()
            items = self.expr_list("]")
            self.expect(K.PUNCT, "]")
            return ast.ListExpr(items, **pos)
        raise self.fail("expression")


def parse(tokens: list[Token]) -> ast.Module:
    """Parse a token list into a Module; stops at the first error."""
    return Parser(tokens).module()


def parse_source(source: str) -> ast.Module:
    return parse(tokenize(source))
