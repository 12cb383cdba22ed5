"""
Exception types raised by the jetsym engine.

All of them derive from ValueError so callers that only care about
"bad input" can keep catching that.
"""

from typing import Any, Optional, Sequence


class JetsymError(ValueError):
    """Base class for every error raised by jetsym."""


class ExpressionSyntaxError(JetsymError):
    """Malformed expression, system or field file."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class UnknownSymbolError(JetsymError):
    """A name that is neither a coordinate, a parameter nor a declared function."""

    def __init__(self, name: str, line: int = 1, column: int = 1):
        self.name = name
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: unknown symbol '{name}'")


class JetOrderError(JetsymError):
    """Jet index out of range, or a truncated total derivative applied too high."""


class NegativePowerError(JetsymError):
    """Negative exponents are not polynomial; build a FormalFraction instead."""


class ZeroDenominatorError(JetsymError):
    """A fraction or a Cramer solve met a zero denominator."""


class ExpansionLimitError(JetsymError):
    """An intermediate polynomial grew past the configured term cap."""

    def __init__(self, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(
            f"expansion produced {size} terms, above the limit of {limit} "
            f"(raise it with JETSYM_MAX_TERMS)"
        )


class IncompleteSkeletonError(JetsymError):
    """A jet needed by the restricted operators has no skeleton entry."""

    def __init__(self, missing: Sequence[Any]):
        self.missing = list(missing)
        names = ', '.join(str(m) for m in self.missing[:8])
        more = '' if len(self.missing) <= 8 else f" (+{len(self.missing) - 8} more)"
        super().__init__(f"skeleton has no entry for: {names}{more}")


class InconsistentClosureError(JetsymError):
    """Two cross differentiations produced different right-hand sides."""

    def __init__(self, jet: Any, first: Any, second: Any):
        self.jet = jet
        self.first = first
        self.second = second
        super().__init__(f"inconsistent closure for {jet}: {first} != {second}")


class NonPolynomialSystemError(JetsymError):
    """Right-hand sides depend on parametric jets through unknown functions."""


class InconsistentLinearSystem(JetsymError):
    """A linear system has no solution; `witness` is the offending row."""

    def __init__(self, message: str, witness: Optional[Any] = None):
        self.witness = witness
        super().__init__(message)


class ResidualDegreeError(JetsymError):
    """A compatibility defect kept terms of jet degree above three."""
