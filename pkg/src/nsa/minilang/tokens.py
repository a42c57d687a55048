"""Indentation-aware tokenizer for MiniLang."""

from __future__ import annotations

import re
from enum import Enum, unique
from typing import NamedTuple

from ..errors import NsaError


@unique
class TokenKind(Enum):
    KEYWORD = "keyword"
    IDENT = "ident"
    INT_LIT = "int"
    FLOAT_LIT = "float"
    STR_LIT = "str"
    OP = "op"
    PUNCT = "punct"
    NEWLINE = "newline"
    INDENT = "indent"
    DEDENT = "dedent"
    COMMENT = "comment"
    EOF = "eof"

    def __repr__(self) -> str:
        return f"{self.__class__.__qualname__}.{self._name_}"


KEYWORDS = frozenset(
    "def class return if elif else while for in pass and or not True False None".split()
)

# longest first so that "==" wins over "="
OPERATORS = ("->", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%", "=")
PUNCTUATION = ("...", "(", ")", "[", "]", ",", ":", ".", ";")

LAYOUT_KINDS = frozenset(
    {TokenKind.NEWLINE, TokenKind.INDENT, TokenKind.DEDENT, TokenKind.COMMENT, TokenKind.EOF}
)

_NUMBER = re.compile(r"[0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"', "0": "\0"}


class Token(NamedTuple):
    kind: TokenKind
    lexeme: str
    line: int
    col: int


class LexError(NsaError):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


def decode_string(lexeme: str) -> str:
    """Return the value of a string literal lexeme (quotes stripped, escapes resolved)."""
    if lexeme[:3] in ('"""', "'''"):
        body = lexeme[3:-3]
    else:
        body = lexeme[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append(_ESCAPES.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class _Lexer:
    def __init__(self, source: str) -> None:
        self.src = source
        self.pos = 0
        self.line = 1
        self.line_start = 0
        self.tokens: list[Token] = []
        self.indents = [0]
        self.depth = 0  # bracket nesting; newlines inside brackets are ignored

    @property
    def col(self) -> int:
        return self.pos - self.line_start + 1

    def error(self, message: str, line: int | None = None, col: int | None = None) -> LexError:
        return LexError(message, line or self.line, col or self.col)

    def emit(self, kind: TokenKind, lexeme: str, line: int, col: int) -> None:
        self.tokens.append(Token(kind, lexeme, line, col))

    def newline(self) -> None:
        self.pos += 1
        self.line += 1
        self.line_start = self.pos

    def run(self) -> list[Token]:
        at_line_start = True
        while self.pos < len(self.src):
            if at_line_start and self.depth == 0:
                if self.indentation():
                    at_line_start = False
                continue
            ch = self.src[self.pos]
            if ch == "\n":
                if self.depth == 0:
                    self.emit(TokenKind.NEWLINE, "\n", self.line, self.col)
                    at_line_start = True
                self.newline()
            elif ch == " ":
                self.pos += 1
            elif ch == "\t" or ch == "\r":
                if ch == "\r" and self.src.startswith("\r\n", self.pos):
                    self.pos += 1
                    continue
                raise self.error("tab character outside indentation is not allowed" if ch == "\t"
                                 else "stray carriage return")
            elif ch == "#":
                self.comment()
            else:
                self.token()
        if self.tokens and self.tokens[-1].kind not in (TokenKind.NEWLINE, TokenKind.DEDENT,
                                                        TokenKind.COMMENT):
            self.emit(TokenKind.NEWLINE, "", self.line, self.col)
        elif self.tokens and self.tokens[-1].kind == TokenKind.COMMENT and self._line_has_code():
            self.emit(TokenKind.NEWLINE, "", self.line, self.col)
        if self.depth:
            raise self.error("unexpected end of input inside brackets")
        while len(self.indents) > 1:
            self.indents.pop()
            self.emit(TokenKind.DEDENT, "", self.line, self.col)
        self.emit(TokenKind.EOF, "", self.line, self.col)
        return self.tokens

    def _line_has_code(self) -> bool:
        last_line = self.tokens[-1].line
        for tok in reversed(self.tokens[:-1]):
            if tok.line != last_line:
                return False
            if tok.kind not in LAYOUT_KINDS:
                return True
        return False

    def indentation(self) -> bool:
        """Measure leading spaces; return True once a line with code was found."""
        start = self.pos
        while self.pos < len(self.src) and self.src[self.pos] == " ":
            self.pos += 1
        if self.pos < len(self.src) and self.src[self.pos] == "\t":
            raise self.error("tab in indentation")
        if self.pos >= len(self.src):
            return True
        ch = self.src[self.pos]
        if ch == "\n" or ch == "\r":
            if ch == "\r":
                self.pos += 1
            if self.pos < len(self.src):
                self.newline()
            return False
        if ch == "#":
            self.comment()
            return False
        width = self.pos - start
        if width > self.indents[-1]:
            self.indents.append(width)
            self.emit(TokenKind.INDENT, self.src[start:self.pos], self.line, self.col)
        else:
            while width < self.indents[-1]:
                self.indents.pop()
                self.emit(TokenKind.DEDENT, "", self.line, self.col)
            if width != self.indents[-1]:
                raise self.error("unindent does not match any outer indentation level")
        return True

    def comment(self) -> None:
        end = self.src.find("\n", self.pos)
        if end < 0:
            end = len(self.src)
        self.emit(TokenKind.COMMENT, self.src[self.pos:end].rstrip("\r"), self.line, self.col)
        self.pos = end

    def token(self) -> None:
        src, pos = self.src, self.pos
        line, col = self.line, self.col
        ch = src[pos]
        if "0" <= ch <= "9":
            m = _NUMBER.match(src, pos)
            text = m.group(0)
            if pos + len(text) < len(src) and (src[pos + len(text)].isalpha() or src[pos + len(text)] == "_"):
                raise self.error(f"invalid number literal near {src[pos:pos + len(text) + 1]!r}")
            kind = TokenKind.FLOAT_LIT if (m.group(1) or m.group(2)) else TokenKind.INT_LIT
            self.emit(kind, text, line, col)
            self.pos += len(text)
            return
        m = _IDENT.match(src, pos)
        if m:
            text = m.group(0)
            self.emit(TokenKind.KEYWORD if text in KEYWORDS else TokenKind.IDENT, text, line, col)
            self.pos += len(text)
            return
        if ch in "\"'":
            self.string()
            return
        for p in PUNCTUATION:
            if src.startswith(p, pos):
                if p in "([":
                    self.depth += 1
                elif p in ")]":
                    if self.depth == 0:
                        raise self.error(f"unbalanced {p!r}")
                    self.depth -= 1
                self.emit(TokenKind.PUNCT, p, line, col)
                self.pos += len(p)
                return
        for op in OPERATORS:
            if src.startswith(op, pos):
                self.emit(TokenKind.OP, op, line, col)
                self.pos += len(op)
                return
        raise self.error(f"illegal character {ch!r}")

    def string(self) -> None:
        src, start = self.src, self.pos
        line, col = self.line, self.col
        quote = src[start]
        triple = src.startswith(quote * 3, start)
        delim = quote * 3 if triple else quote
        i = start + len(delim)
        while True:
            if i >= len(src):
                raise self.error("unterminated string literal", line, col)
            ch = src[i]
            if ch == "\\":
                i += 2
                continue
            if ch == "\n":
                if not triple:
                    raise self.error("unterminated string literal", line, col)
                self.line += 1
                self.line_start = i + 1
            if src.startswith(delim, i):
                i += len(delim)
                break
            i += 1
        self.emit(TokenKind.STR_LIT, src[start:i], line, col)
        self.pos = i


def tokenize(source: str) -> list[Token]:
    """Split MiniLang source into tokens, ending with EOF.

    Raises LexError on illegal characters, unterminated strings, tabs in
    indentation and dedents that match no open indentation level.
    """
    return _Lexer(source).run()
