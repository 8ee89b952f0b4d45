"""Exception hierarchy for the rfis package."""


class RfisError(Exception):
    """Base class for every error raised by this package."""


class NonMonotoneNodes(RfisError, ValueError):
    pass


class ShapeMismatch(RfisError, ValueError):
    pass


class NonFiniteHeight(RfisError, ValueError):
    pass


class ExpansionViolation(RfisError, ValueError):
    pass


class IndexOutOfRange(RfisError, IndexError):
    pass


class OutOfDomain(RfisError, ValueError):
    pass


class HomogeneityRequired(RfisError):
    pass


class ScalingFactorTooLarge(RfisError, ValueError):
    pass


class InvalidPartition(RfisError, ValueError):
    pass


class UniformSumViolation(RfisError):
    """Corner sums of |S| disagree for some (r, t, alpha, beta).

    Part indices ``r`` and ``t`` are 1-based, ``alpha``/``beta`` are node
    indices and ``corner`` is the node index pair where the sum was taken.
    ``violations`` holds every offending tuple, in sorted order; the scalar
    attributes describe the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        first = self.violations[0]
        self.r, self.t = first["r"], first["t"]
        self.alpha, self.beta = first["alpha"], first["beta"]
        self.corner = first["corner"]
        self.value = first["value"]
        self.expected = first["expected"]
        super().__init__(
            f"uniform sums fail at (r,t)=({self.r},{self.t}), "
            f"domain (alpha,beta)=({self.alpha},{self.beta}), corner {self.corner}: "
            f"sum {self.value!r} != {self.expected!r}"
            + (f" (+{len(self.violations) - 1} more)" if len(self.violations) > 1 else "")
        )


class HypothesisViolation(RfisError):
    """A precondition of the dimension formula does not hold."""

    def __init__(self, hypothesis, detail):
        self.hypothesis = hypothesis
        self.detail = detail
        super().__init__(f"{hypothesis}: {detail}")


class NotNonnegative(RfisError, ValueError):
    pass


class NoConvergence(RfisError, ArithmeticError):
    pass


class CycleInPositionRecursion(RfisError):
    pass


class EmptyStartSet(RfisError, ValueError):
    pass


class LevelMismatch(RfisError, ValueError):
    pass


class DegenerateRegression(RfisError, ArithmeticError):
    pass


class ParseError(RfisError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ValidationError(RfisError, ValueError):
    def __init__(self, message, field=None, cause=None):
        self.field = field
        self.cause = cause
        super().__init__(f"[field {field!r}] {message}" if field else message)


class IoError(RfisError, OSError):
    pass
