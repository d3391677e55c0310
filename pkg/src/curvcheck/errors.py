"""Exception types shared across the package."""


class CurvcheckError(Exception):
    """Base class for all package errors."""


class JetOrderError(CurvcheckError):
    """A jet was asked for derivative data above its truncation order."""


class JetDomainError(CurvcheckError):
    """An elementary function was evaluated outside its domain."""

    def __init__(self, func, value):
        self.func = func
        self.value = value
        super().__init__(f"domain error: {func} evaluated at {value!r}")


class SingularJetError(CurvcheckError):
    """Division by a jet whose value part is (numerically) zero."""


class ParseError(CurvcheckError):
    """Syntax error while parsing a metric expression."""

    def __init__(self, message, position, expected=None):
        self.position = position
        self.expected = expected or ()
        detail = f"{message} at position {position}"
        if self.expected:
            detail += " (expected " + " or ".join(self.expected) + ")"
        super().__init__(detail)


class UnknownIdentifierError(CurvcheckError):
    pass


class UnknownFunctionError(CurvcheckError):
    pass


class ChartError(CurvcheckError):
    """Invalid chart data or point outside the chart domain."""


class NonPositiveDefiniteError(CurvcheckError):
    """Metric value matrix failed the positive-definiteness check."""

    def __init__(self, point, eigenvalues):
        self.point = point
        self.eigenvalues = eigenvalues
        super().__init__(
            f"metric not positive definite at {point}; eigenvalues {eigenvalues}"
        )


class SingularMetricError(CurvcheckError):
    """Metric value matrix is singular and cannot be inverted."""


class NormalFormError(CurvcheckError):
    """Chart is not in boundary normal form (g00 = 1, g0i = 0)."""


class PreconditionError(CurvcheckError):
    """A documented precondition of a check was violated."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class NotConstantScalarCurvatureError(PreconditionError):
    pass


class SPDLossError(CurvcheckError):
    """A varied metric g + t*v stopped being positive definite."""


class ConfigError(CurvcheckError):
    """Invalid CLI or suite configuration."""


class EvaluationError(CurvcheckError):
    """Internal evaluation failure while running a check."""

    def __init__(self, check, cause):
        self.check = check
        self.cause = cause
        super().__init__(f"evaluation failed in check '{check}': {cause}")
