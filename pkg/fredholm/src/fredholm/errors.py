"""Exception hierarchy shared by every solver module."""

from __future__ import annotations


class FredholmError(Exception):
    """Base class for all solver failures."""


class ConfigurationError(FredholmError, ValueError):
    """A count, order, angle or tolerance violates a precondition."""


class ExpressionSyntaxError(ConfigurationError):
    def __init__(self, text: str, offset: int, expected: set[str] | frozenset[str]):
        self.text = text
        self.offset = offset
        self.expected = frozenset(expected)
        wanted = ", ".join(sorted(self.expected)) or "end of input"
        super().__init__(f"syntax error at offset {offset} in {text!r}: expected {wanted}")


class EvaluationError(FredholmError, ArithmeticError):
    """Expression or integrand evaluation failed (unbound name, 0 division, non-finite value)."""

    def __init__(self, message: str, theta: float | None = None):
        self.theta = theta
        if theta is not None:
            message = f"{message} (theta={theta!r})"
        super().__init__(message)


class DegenerateKnotError(EvaluationError):
    """Two consecutive complex knots coincide."""


class InsufficientDataError(FredholmError):
    """Sampled data cannot provide the requested value or limit."""


class SingularSystemError(FredholmError, ArithmeticError):
    def __init__(self, step: int, pivot: float, threshold: float, what: str = "collocation system"):
        self.step = step
        self.pivot = pivot
        self.threshold = threshold
        super().__init__(
            f"{what} is singular: |pivot| = {pivot:.3e} at elimination step {step} "
            f"(threshold {threshold:.3e})"
        )


class InterpolationSingularError(SingularSystemError):
    def __init__(self, step: int, pivot: float, threshold: float):
        super().__init__(step, pivot, threshold, what="spline interpolation matrix")
