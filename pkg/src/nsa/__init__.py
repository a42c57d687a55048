"""Neural software analysis toolkit for the MiniLang language."""

__version__ = "0.1.0"
