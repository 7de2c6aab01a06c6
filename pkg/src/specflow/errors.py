"""Exception hierarchy.

Every error carries the process exit code the experiment CLI reports for it:
2 for input/schema problems, 3 for precision exhaustion, 4 for a function
outside the class an estimate needs, 5 for a numerically violated contract.
"""

from __future__ import annotations


class SpecflowError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1


class InvalidInputError(SpecflowError, ValueError):
    """An argument violates an operation's precondition."""

    exit_code = 2

    def __init__(self, what: str, reason: str) -> None:
        self.what = what
        self.reason = reason
        super().__init__(f"Invalid {what}: {reason}")


class ScenarioError(SpecflowError):
    """A scenario document failed schema validation."""

    exit_code = 2

    def __init__(self, source: str, reason: str) -> None:
        self.source = source
        self.reason = reason
        super().__init__(f"Scenario {source} rejected: {reason}")


class PrecisionError(SpecflowError):
    """Working precision, depth or a configured cap is exhausted."""

    exit_code = 3


class InsufficientDepthError(PrecisionError):
    def __init__(self, required: int, available: int) -> None:
        self.required = required
        self.available = available
        super().__init__(
            f"Continued fraction depth {available} is insufficient; "
            f"need at least {required}"
        )


class TruncationError(PrecisionError):
    def __init__(self, requested: float, achievable: float) -> None:
        self.requested = requested
        self.achievable = achievable
        super().__init__(
            f"Truncated jump tail limits accuracy to {achievable:.3e} "
            f"(requested {requested:.3e})"
        )


class CapExceededError(PrecisionError):
    def __init__(self, quantity: str, value: float, cap: float) -> None:
        self.quantity = quantity
        self.value = value
        self.cap = cap
        super().__init__(f"{quantity}={value} exceeds the configured cap {cap}")


class EnumerationCapError(PrecisionError):
    def __init__(self, size: int, cap: int) -> None:
        self.size = size
        self.cap = cap
        super().__init__(
            f"Enumeration of {size} sums exceeds cap {cap}; use a coarser truncation"
        )


class QuadratureError(PrecisionError):
    def __init__(self, estimate: float, tolerance: float, required_order: int) -> None:
        self.estimate = estimate
        self.tolerance = tolerance
        self.required_order = required_order
        super().__init__(
            f"Quadrature error {estimate:.3e} exceeds {tolerance:.3e}; "
            f"refine cells to Gauss order >= {required_order}"
        )


class HypothesisError(SpecflowError):
    """The input lies outside the class an estimate requires."""

    exit_code = 4

    def __init__(self, condition: str, detail: str) -> None:
        self.condition = condition
        self.detail = detail
        super().__init__(f"Hypothesis '{condition}' fails: {detail}")


class FalsificationError(SpecflowError):
    """A proven contract was violated numerically."""

    exit_code = 5

    def __init__(self, contract: str, detail: str) -> None:
        self.contract = contract
        self.detail = detail
        super().__init__(f"Contract '{contract}' violated: {detail}")


class ConsistencyError(FalsificationError):
    """Two independent computations of one quantity disagree."""

    def __init__(self, quantity: str, first: float, second: float, tol: float) -> None:
        self.first = first
        self.second = second
        self.tol = tol
        super().__init__(
            quantity,
            f"routes disagree: {first!r} vs {second!r} (tolerance {tol:.1e})",
        )
