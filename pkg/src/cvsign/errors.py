"""Exception types shared across the package."""


class CvsignError(Exception):
    """Base class for all package errors."""


class DomainError(CvsignError, ValueError):
    """A parameter lies outside the domain of the operation."""


class ValidationError(CvsignError, ValueError):
    """Input data does not have the required structure."""


class CapacityError(CvsignError):
    """A size cap (dense expansion, enumeration) was exceeded."""


class ParseError(CvsignError, ValueError):
    """A covariance-matrix file could not be parsed.

    ``field`` names the offending key when known, ``line`` the 1-based
    line number for syntax errors.
    """

    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line
