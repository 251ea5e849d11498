"""Exception hierarchy.

Validation errors (bad inputs, malformed files, guard trips) subclass
ValidationError; runtime solver breakdowns subclass SolverError.  The CLI
maps the former to exit code 1 and the latter to exit code 2.
"""

from __future__ import annotations


class TbsgError(Exception):
    """Base class for all package errors."""


class ValidationError(TbsgError, ValueError):
    """Input, format, or precondition violation."""


class SolverError(TbsgError, RuntimeError):
    """Numerical solver failure."""


class RowNotStochastic(ValidationError):
    def __init__(self, s: int, a: int, row_sum: float):
        self.s, self.a, self.row_sum = s, a, row_sum
        super().__init__(
            f"transition row (s={s}, a={a}) is not a probability distribution "
            f"(sum={row_sum!r})"
        )


class RewardOutOfRange(ValidationError):
    def __init__(self, s: int, a: int, value: float, lo: float, hi: float):
        self.s, self.a, self.value = s, a, value
        super().__init__(
            f"reward at (s={s}, a={a}) is {value!r}, outside [{lo!r}, {hi!r}]"
        )


class EmptyStateSet(ValidationError):
    def __init__(self, detail: str = "game must have at least one state and one action"):
        super().__init__(detail)


class IndexOutOfRange(ValidationError):
    def __init__(self, what: str, value: int, bound: int):
        super().__init__(f"{what} index {value} out of range [0, {bound})")


class LengthMismatch(ValidationError):
    def __init__(self, what: str, got: int, expected: int):
        super().__init__(f"{what} has length {got}, expected {expected}")


class ShapeMismatch(ValidationError):
    def __init__(self, detail: str):
        super().__init__(detail)


class NegativeXi(ValidationError):
    def __init__(self, xi: float):
        super().__init__(f"perturbation magnitude must be nonnegative, got {xi!r}")


class DegenerateParams(ValidationError):
    def __init__(self, detail: str):
        super().__init__(detail)


class DegenerateDelta(ValidationError):
    def __init__(self, delta: float):
        super().__init__(f"confidence level must lie in (0, 1), got {delta!r}")


class DegenerateSpec(ValidationError):
    def __init__(self, detail: str):
        super().__init__(detail)


class RangeViolation(ValidationError):
    def __init__(self, theorem: str, detail: str):
        self.theorem = theorem
        super().__init__(f"{theorem} precondition violated: {detail}")


class TooLarge(ValidationError):
    def __init__(self, n_strategies: float, limit: float):
        super().__init__(
            f"strategy space has {n_strategies:.3g} pure assignments, "
            f"exceeding the enumeration guard {limit:.3g}"
        )


class NotOptimalTable(ValidationError):
    def __init__(self, residual: float, limit: float):
        self.residual = residual
        super().__init__(
            f"value table is not an optimal table: fixed-point residual "
            f"{residual:.3e} exceeds {limit:.1e}"
        )


class GameFormatError(ValidationError):
    """Malformed game / counts file."""


class NoConvergence(SolverError):
    def __init__(self, max_iters: int, residual: float | None = None):
        self.max_iters = max_iters
        self.residual = residual
        msg = f"iteration budget of {max_iters} exhausted before convergence"
        if residual is not None:
            msg += f" (last residual {residual:.3e})"
        super().__init__(msg)


class SingularSystem(SolverError):
    def __init__(self, detail: str = "linear system solve failed"):
        super().__init__(detail)
