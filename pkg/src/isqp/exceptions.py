"""Exception hierarchy shared by the linear-algebra kernels and the solver."""


class ISQPError(Exception):
    """Base class for all errors raised by :mod:`isqp`."""


class NonFinite(ISQPError, ValueError):
    """An input matrix or vector contains NaN or Inf."""


class NotPositiveDefinite(ISQPError):
    """Cholesky factorization hit a nonpositive pivot."""


class SingularSystem(ISQPError):
    """A saddle-point system could not be solved."""


class RankDeficient(ISQPError):
    """The constraint Jacobian does not have full row rank (numerically)."""


class RegularizationFailed(ISQPError):
    """No shift in the schedule made ``B + c * J2.T @ J2`` positive definite.

    This means the Hessian approximation is not positive definite on the
    null space of the constraint Jacobian.
    """


class EvaluationFailure(ISQPError):
    """A problem callback returned a non-finite value."""


class MissingHook(ISQPError):
    """A Hessian strategy needs a problem callback that was not supplied."""


class InsufficientData(ISQPError):
    """Too few residuals to estimate a convergence rate."""
