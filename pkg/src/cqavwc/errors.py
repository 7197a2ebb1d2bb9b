"""Exception hierarchy shared by every module."""

from __future__ import annotations


class CqavwcError(Exception):
    """Base class. ``stage`` is filled in by the experiment runner."""

    stage: str | None = None


class ValidationError(CqavwcError, ValueError):
    """An operator or distribution violated a named invariant."""

    def __init__(self, invariant: str, message: str, measured: float | None = None):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
        self.measured = measured


class ShapeError(CqavwcError, ValueError):
    pass


class PSDError(CqavwcError, ValueError):
    pass


class OperatorRangeError(CqavwcError, ValueError):
    pass


class LabelError(CqavwcError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class DegenerateInputError(CqavwcError, ValueError):
    pass


class ResourceError(CqavwcError):
    """A desk-scale resource cap would be exceeded."""

    def __init__(self, cap: str, required: int, limit: int, n: int | None = None):
        where = f" at n={n}" if n is not None else ""
        super().__init__(f"resource cap {cap} exceeded{where}: need {required}, limit {limit}")
        self.cap = cap
        self.required = required
        self.limit = limit
        self.n = n


class ParseError(CqavwcError, ValueError):
    """Malformed channel file; ``context`` names the offending key or line."""

    def __init__(self, message: str, context: str | None = None):
        super().__init__(f"{context}: {message}" if context else message)
        self.context = context


class ChannelValidationError(CqavwcError, ValueError):
    """Carries every violation found, not just the first."""

    def __init__(self, violations: list):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"{len(self.violations)} channel violation(s): {lines}{more}")
