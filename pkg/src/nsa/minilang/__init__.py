"""Lightweight static analysis front end for MiniLang."""

from . import ast
from .extract import CallSite, FunctionIndex, extract_calls, iter_calls, name_of
from .parser import ParseError, parse, parse_source
from .printer import pretty_print
from .tokens import LexError, Token, TokenKind, tokenize

__all__ = [
    "ast", "CallSite", "FunctionIndex", "LexError", "ParseError", "Token", "TokenKind",
    "extract_calls", "iter_calls", "name_of", "parse", "parse_source", "pretty_print", "tokenize",
]
