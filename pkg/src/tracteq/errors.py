"""Exception types shared across the toolkit."""


class TracteqError(Exception):
    """Base class for all toolkit errors."""


class ParseError(TracteqError):
    """An input file could not be parsed."""


class ValidationError(TracteqError):
    """Parsed input violates a documented invariant."""


class SingularityError(TracteqError):
    """A design matrix (global or local) is rank deficient."""


class SelectionError(TracteqError):
    """Bandwidth selection found no usable candidate."""


class ConsistencyError(TracteqError):
    """Internal cross-references disagree (e.g. a route edge missing from a map)."""
