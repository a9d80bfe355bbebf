"""Exception hierarchy for drmdp."""

from typing import Any, Optional


class DRMDPError(Exception):
    """Base class for all drmdp errors."""


class ValidationError(DRMDPError, ValueError):
    """Problem data violates a model invariant."""


class DimensionMismatch(ValidationError):
    """Shapes of kernels, rewards or vectors disagree with the spaces."""


class MissingKernelEntry(ValidationError):
    """A transition kernel has no distribution for some (state, action)."""

    def __init__(self, state: int, action: int):
        self.state = state
        self.action = action
        super().__init__(
            f"Kernel has no entry for (state {state}, action {action})"
        )


class InvalidDiscount(ValidationError):
    """Discount factor outside the open interval (0, 1)."""


class InvalidDistribution(ValidationError):
    """Negative weights or a sum too far from one."""


class MissingTrueKernel(DRMDPError, ValueError):
    """An operation needs P^true but the problem has none."""


class DivergentSeries(DRMDPError, ArithmeticError):
    """The bound's double series diverges (alpha * L_P >= 1)."""


class TransportError(DRMDPError, RuntimeError):
    """The transport LP failed. The feasible set is never empty, so this is
    a bug rather than a data problem."""


class NonConvergence(DRMDPError, RuntimeError):
    """Value iteration hit max_iter above the stopping threshold."""

    def __init__(self, report: Any):
        self.report = report
        super().__init__(
            f"Value iteration did not converge after {report.iterations} "
            f"iterations (residual {report.residual:.3e})"
        )


class ParseError(DRMDPError, ValueError):
    """A problem file could not be turned into a ProblemSpec."""

    def __init__(
        self,
        kind: str,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
    ):
        self.kind = kind
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        location = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{kind}: {message}{location}")
