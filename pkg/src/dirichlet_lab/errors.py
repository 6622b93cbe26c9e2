"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the command line
front end can emit a single parsable line.
"""


class DirichletLabError(Exception):
    code = "E_GENERIC"


class WeightSyntaxError(DirichletLabError, ValueError):
    code = "E_SYNTAX"

    def __init__(self, message, position, text=""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class WeightDomainError(DirichletLabError, ValueError):
    """A parsed weight is not strictly positive and finite at some probe."""

    code = "E_DOMAIN"

    def __init__(self, message, t):
        self.t = t
        super().__init__(f"{message} (t={t!r})")


class WeightUnderflowError(DirichletLabError, ArithmeticError):
    code = "E_UNDERFLOW"

    def __init__(self, t):
        self.t = t
        super().__init__(f"weight underflow at t={t!r}")


class IntegrandError(DirichletLabError, ArithmeticError):
    code = "E_INTEGRAND"

    def __init__(self, t, value):
        self.t = t
        self.value = value
        super().__init__(f"non-finite integrand value {value!r} at t={t!r}")


class PreconditionError(DirichletLabError, ValueError):
    code = "E_PRECONDITION"


class TraceUndefinedError(PreconditionError):
    """An endpoint quantity was requested without the matching B_p condition."""

    code = "E_TRACE_UNDEFINED"


class UndeterminedError(DirichletLabError):
    """A quadrature stage could not decide convergence."""

    code = "E_UNDETERMINED"


class DescentError(DirichletLabError, RuntimeError):
    code = "E_DESCENT"

    def __init__(self, message, grad_norm):
        self.grad_norm = grad_norm
        super().__init__(f"{message} (final gradient norm {grad_norm:.3e})")
