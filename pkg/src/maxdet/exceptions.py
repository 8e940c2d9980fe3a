"""Exception types raised by the solver."""


class MaxDetError(Exception):
    """Base class for all solver errors."""


class RankDeficient(MaxDetError, ValueError):
    pass


class DependentFixedRows(MaxDetError, ValueError):
    pass


class ZeroPivot(MaxDetError, ValueError):
    pass


class SingularWeighting(MaxDetError, ArithmeticError):
    pass


class InfeasibleNode(MaxDetError):
    pass


class Infeasible(MaxDetError):
    """No full-rank completion of the fixed rows exists."""


class InfeasibleDomain(MaxDetError, ValueError):
    pass


class StartSingular(MaxDetError, ArithmeticError):
    pass


class BadDimensions(MaxDetError, ValueError):
    pass


class BadSubset(MaxDetError, ValueError):
    pass


class ParseError(MaxDetError, ValueError):
    """Malformed input file. ``line`` and ``field`` locate the problem when known."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NonNumeric(ParseError):
    pass


class RaggedRows(ParseError):
    pass


class RankZero(MaxDetError, ValueError):
    pass


class NotTall(MaxDetError, ValueError):
    pass
