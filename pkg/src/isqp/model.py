"""Problem definition, per-point evaluation and KKT residual."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._validation import check_matrix, check_vector
from .exceptions import EvaluationFailure, NonFinite


@dataclass
class NlpProblem:
    """Equality-constrained program ``min F1(x)  s.t.  F2(x) = 0``.

    Derivatives are supplied analytically. ``objective_gradient`` returns the
    row ``J1`` as a length-``n`` vector and ``constraint_jacobian`` returns
    ``J2`` with shape ``(m, n)``.

    Optional hooks:

    * ``exact_lagrangian_hessian(x, lam)`` -- ``(n, n)`` Hessian of
      ``F1 + lam @ F2``.
    * ``residual(x)`` / ``residual_jacobian(x)`` -- least-squares form with
      ``F1 = 0.5 * ||R(x)||^2``.

    ``ggn_scale`` multiplies ``dR^T dR`` when a Gauss-Newton Hessian is
    requested without an explicit scale.
    """

    name: str
    n: int
    m: int
    objective: Callable
    constraints: Callable
    objective_gradient: Callable
    constraint_jacobian: Callable
    initial_point: np.ndarray
    initial_multipliers: Optional[np.ndarray] = None
    exact_lagrangian_hessian: Optional[Callable] = None
    residual: Optional[Callable] = None
    residual_jacobian: Optional[Callable] = None
    ggn_scale: float = 1.0
    description: str = ""

    def __post_init__(self):
        if not 0 < self.m < self.n:
            raise ValueError(f"need 0 < m < n, got n={self.n}, m={self.m}")
        if (self.residual is None) != (self.residual_jacobian is None):
            raise ValueError("residual and residual_jacobian must be given together")
        self.initial_point = check_vector(self.initial_point, self.n, "initial_point")
        if self.initial_multipliers is None:
            self.initial_multipliers = np.zeros(self.m)
        self.initial_multipliers = check_vector(
            self.initial_multipliers, self.m, "initial_multipliers"
        )

    @property
    def has_residual(self):
        return self.residual is not None

    @property
    def has_exact_hessian(self):
        return self.exact_lagrangian_hessian is not None


@dataclass(frozen=True)
class Iterate:
    x: np.ndarray
    lam: np.ndarray


@dataclass(frozen=True)
class EvalBundle:
    """Objective, constraints and their Jacobians at a single point."""

    x: np.ndarray
    f1: float
    f2: np.ndarray
    j1: np.ndarray
    j2: np.ndarray


def _call(fn, what, *args):
    try:
        with np.errstate(all="ignore"):
            out = fn(*args)
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationFailure(f"{what} raised {exc!r}") from exc
    arr = np.asarray(out, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise EvaluationFailure(f"{what} returned a non-finite value")
    return arr


def evaluate(problem, x):
    """Evaluate ``F1, F2, J1, J2`` at `x`.

    Raises
    ------
    EvaluationFailure
        If any callback yields NaN or Inf.
    """
    try:
        x = check_vector(x, problem.n, "x")
    except NonFinite as exc:
        raise EvaluationFailure(str(exc)) from None
    f1 = float(_call(problem.objective, "objective", x))
    f2 = _call(problem.constraints, "constraints", x).reshape(problem.m)
    j1 = _call(problem.objective_gradient, "objective_gradient", x).reshape(problem.n)
    j2 = _call(problem.constraint_jacobian, "constraint_jacobian", x).reshape(
        problem.m, problem.n
    )
    return EvalBundle(x=x.copy(), f1=f1, f2=f2, j1=j1, j2=j2)


def lagrangian(problem, x, lam):
    """``F1(x) + lam @ F2(x)``."""
    return float(problem.objective(x)) + float(np.dot(lam, problem.constraints(x)))


def kkt_vector(bundle, lam):
    lam = check_vector(lam, bundle.f2.shape[0], "lam")
    return np.concatenate([bundle.j1 + bundle.j2.T @ lam, bundle.f2])


def kkt_residual(bundle, lam):
    """2-norm of the stacked KKT vector ``(J1^T + J2^T lam, F2)``."""
    return float(np.linalg.norm(kkt_vector(bundle, lam)))


def relative_error(a, b):
    """Elementwise ``|a - b| / max(1, |a|, |b|)``, maximized."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0:
        return 0.0
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / denom))


def fd_jacobian(fn, x, step=1e-6):
    """Central-difference Jacobian of `fn` at `x`; rows index outputs."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((np.atleast_1d(fn(x + e)) - np.atleast_1d(fn(x - e))) / (2 * step))
    return np.column_stack(cols)


@dataclass
class DerivativeReport:
    """Maximum relative error per derivative block."""

    errors: dict = field(default_factory=dict)
    tol: float = 1e-5

    @property
    def failed(self):
        return [name for name, err in self.errors.items() if not err <= self.tol]

    @property
    def ok(self):
        return not self.failed

    def __str__(self):
        lines = [
            f"{name:<22s} {err:.3e}  {'ok' if err <= self.tol else 'FAIL'}"
            for name, err in self.errors.items()
        ]
        return "\n".join(lines)


def check_derivatives(problem, x, step=1e-6, tol=1e-5, lam=None):
    """Compare analytic derivatives with central finite differences at `x`.

    Blocks checked: ``objective_gradient``, ``constraint_jacobian`` and,
    when the hooks exist, ``residual_jacobian``, ``residual_objective``
    (``0.5 ||R||^2`` against ``F1``) and ``lagrangian_hessian`` (at `lam`,
    default ``initial_multipliers + 1``).
    """
    if not step > 0:
        raise ValueError("step must be positive")
    bundle = evaluate(problem, x)
    x = bundle.x
    report = DerivativeReport(tol=tol)

    fd_j1 = fd_jacobian(lambda z: float(problem.objective(z)), x, step).ravel()
    report.errors["objective_gradient"] = relative_error(bundle.j1, fd_j1)
    fd_j2 = fd_jacobian(problem.constraints, x, step)
    report.errors["constraint_jacobian"] = relative_error(bundle.j2, fd_j2)

    if problem.has_residual:
        r = _call(problem.residual, "residual", x)
        dr = check_matrix(
            _call(problem.residual_jacobian, "residual_jacobian", x), (r.size, problem.n)
        )
        report.errors["residual_jacobian"] = relative_error(
            dr, fd_jacobian(problem.residual, x, step)
        )
        report.errors["residual_objective"] = relative_error(0.5 * r @ r, bundle.f1)

    if problem.has_exact_hessian:
        if lam is None:
            lam = problem.initial_multipliers + 1.0
        lam = check_vector(lam, problem.m, "lam")
        hess = _call(problem.exact_lagrangian_hessian, "exact_lagrangian_hessian", x, lam)

        def grad_lagrangian(z):
            return np.asarray(problem.objective_gradient(z)).ravel() + (
                np.asarray(problem.constraint_jacobian(z)).reshape(problem.m, problem.n).T
                @ lam
            )

        report.errors["lagrangian_hessian"] = relative_error(
            hess, fd_jacobian(grad_lagrangian, x, step)
        )
    return report
