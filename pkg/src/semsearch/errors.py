"""Exception types shared across the package."""

from __future__ import annotations


class SemSearchError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SemSearchError):
    """Input text could not be parsed.

    Carries enough position information to point a user at the problem:
    a 1-based line number for line-oriented formats, a 0-based character
    offset for query strings, and the offending source text when helpful.
    """

    def __init__(
        self,
        message: str,
        *,
        line: int | None = None,
        offset: int | None = None,
        source: str | None = None,
    ):
        self.reason = message
        self.line = line
        self.offset = offset
        self.source = source
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if offset is not None:
            parts.append(f"offset {offset}")
        prefix = ", ".join(parts)
        full = f"{prefix}: {message}" if prefix else message
        if source is not None and line is not None:
            full = f"{full}: {source.strip()!r}"
        super().__init__(full)


class NTriplesError(ParseError):
    """A statement line is not well-formed N-Triples."""


class RuleParseError(ParseError):
    """A rules-file line is not a valid rule or pattern declaration."""


class RuleSafetyError(SemSearchError):
    """A rule head uses a variable that never occurs in its body."""

    def __init__(self, message: str, variable: str):
        self.variable = variable
        super().__init__(message)


class DivergenceError(SemSearchError):
    """Forward chaining hit the iteration guard without converging."""


class QueryParseError(ParseError):
    """A query string violates the query grammar."""


class EmptyQueryError(QueryParseError):
    """The query string contains no conditions at all."""


class UnknownFieldError(QueryParseError):
    """A field prefix is not one of d, e, at, v or *."""


class NotFoundError(SemSearchError):
    """A lookup by label or identifier found nothing."""


class IndexFormatError(SemSearchError):
    """An on-disk index file is missing or corrupt."""

    def __init__(self, filename: str, message: str):
        self.filename = filename
        super().__init__(f"{filename}: {message}")


class IndexVersionError(IndexFormatError):
    """The on-disk index was written with an unsupported format version."""
