"""Built-in test problems with reference solutions.

Each constructor returns ``(NlpProblem, ReferenceSolution)``. Problems are
addressable by name through :data:`REGISTRY`.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import NlpProblem

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class ReferenceSolution:
    x_star: np.ndarray
    lambda_star: Optional[np.ndarray]
    source: str


# Hock-Schittkowski #77

def _hs77_objective(x):
    return (
        (x[0] - 1) ** 2
        + (x[0] - x[1]) ** 2
        + (x[2] - 1) ** 2
        + (x[3] - 1) ** 4
        + (x[4] - 1) ** 6
    )


def _hs77_gradient(x):
    return np.array(
        [
            2 * (x[0] - 1) + 2 * (x[0] - x[1]),
            -2 * (x[0] - x[1]),
            2 * (x[2] - 1),
            4 * (x[3] - 1) ** 3,
            6 * (x[4] - 1) ** 5,
        ]
    )


def _hs77_constraints(x):
    return np.array(
        [
            x[0] ** 2 * x[3] + np.sin(x[3] - x[4]) - 2 * SQRT2,
            x[1] + x[2] ** 4 * x[3] ** 2 - 8 - SQRT2,
        ]
    )


def _hs77_jacobian(x):
    c = np.cos(x[3] - x[4])
    return np.array(
        [
            [2 * x[0] * x[3], 0.0, 0.0, x[0] ** 2 + c, -c],
            [0.0, 1.0, 4 * x[2] ** 3 * x[3] ** 2, 2 * x[2] ** 4 * x[3], 0.0],
        ]
    )


def _hs77_hessian(x, lam):
    h = np.zeros((5, 5))
    h[0, 0] = 4.0
    h[0, 1] = h[1, 0] = -2.0
    h[1, 1] = 2.0
    h[2, 2] = 2.0
    h[3, 3] = 12 * (x[3] - 1) ** 2
    h[4, 4] = 30 * (x[4] - 1) ** 4

    s = np.sin(x[3] - x[4])
    h1 = np.zeros((5, 5))
    h1[0, 0] = 2 * x[3]
    h1[0, 3] = h1[3, 0] = 2 * x[0]
    h1[3, 3] = -s
    h1[3, 4] = h1[4, 3] = s
    h1[4, 4] = -s

    h2 = np.zeros((5, 5))
    h2[2, 2] = 12 * x[2] ** 2 * x[3] ** 2
    h2[2, 3] = h2[3, 2] = 8 * x[2] ** 3 * x[3]
    h2[3, 3] = 2 * x[2] ** 4
    return h + lam[0] * h1 + lam[1] * h2


def _hs77_residual(x):
    return SQRT2 * np.array(
        [x[0] - 1, x[0] - x[1], x[2] - 1, (x[3] - 1) ** 2, (x[4] - 1) ** 3]
    )


def _hs77_residual_jacobian(x):
    dr = np.zeros((5, 5))
    dr[0, 0] = 1.0
    dr[1, 0], dr[1, 1] = 1.0, -1.0
    dr[2, 2] = 1.0
    dr[3, 3] = 2 * (x[3] - 1)
    dr[4, 4] = 3 * (x[4] - 1) ** 2
    return SQRT2 * dr


# Newton-refined KKT pair; rounds to the published 6-digit solution.
HS77_X_STAR = np.array(
    [1.1661721897092985, 1.1821113888027044, 1.3802570431454597,
     1.5060362736230457, 0.6109201960430908]
)
HS77_LAMBDA_STAR = np.array([-0.08553959704281994, -0.03187839818681156])


def hs77():
    """Hock-Schittkowski problem 77 (n=5, m=2) started at ``x0 = (2, ..., 2)``.

    The residual hooks use ``R = sqrt(2) * (x1-1, x1-x2, x3-1, (x4-1)^2,
    (x5-1)^3)`` so that ``0.5 ||R||^2`` equals the objective. ``ggn_scale``
    is 0.5, i.e. the Gauss-Newton matrix of the unscaled term residual; this
    is the approximation whose iteration counts match the published runs.
    """
    problem = NlpProblem(
        name="hs77",
        n=5,
        m=2,
        objective=_hs77_objective,
        constraints=_hs77_constraints,
        objective_gradient=_hs77_gradient,
        constraint_jacobian=_hs77_jacobian,
        initial_point=np.full(5, 2.0),
        initial_multipliers=np.zeros(2),
        exact_lagrangian_hessian=_hs77_hessian,
        residual=_hs77_residual,
        residual_jacobian=_hs77_residual_jacobian,
        ggn_scale=0.5,
        description="Hock-Schittkowski #77: least-squares objective, two nonlinear equalities",
    )
    ref = ReferenceSolution(
        x_star=HS77_X_STAR.copy(),
        lambda_star=HS77_LAMBDA_STAR.copy(),
        source="published solution (1.166172, 1.182111, 1.380257, 1.506036, 0.610920), "
        "refined by Newton on the KKT system; multipliers from a least-squares fit",
    )
    return problem, ref


def p_lin():
    """``min 0.5 ||x||^2  s.t.  x1 + x2 = 2``; linear constraint, solution (1, 1)."""
    problem = NlpProblem(
        name="p_lin",
        n=2,
        m=1,
        objective=lambda x: 0.5 * float(x @ x),
        constraints=lambda x: np.array([x[0] + x[1] - 2.0]),
        objective_gradient=lambda x: np.array(x, dtype=float),
        constraint_jacobian=lambda x: np.array([[1.0, 1.0]]),
        initial_point=np.zeros(2),
        exact_lagrangian_hessian=lambda x, lam: np.eye(2),
        residual=lambda x: np.array(x, dtype=float),
        residual_jacobian=lambda x: np.eye(2),
        description="minimum-norm point on the line x1 + x2 = 2",
    )
    ref = ReferenceSolution(np.array([1.0, 1.0]), np.array([-1.0]), "analytic")
    return problem, ref


def p_circle():
    """``min (x1-2)^2 + x2^2  s.t.  x1^2 + x2^2 = 1``; solution (1, 0), lambda 1."""
    problem = NlpProblem(
        name="p_circle",
        n=2,
        m=1,
        objective=lambda x: (x[0] - 2.0) ** 2 + x[1] ** 2,
        constraints=lambda x: np.array([x[0] ** 2 + x[1] ** 2 - 1.0]),
        objective_gradient=lambda x: np.array([2 * (x[0] - 2.0), 2 * x[1]]),
        constraint_jacobian=lambda x: np.array([[2 * x[0], 2 * x[1]]]),
        initial_point=np.array([0.6, 0.8]),
        exact_lagrangian_hessian=lambda x, lam: (2.0 + 2.0 * lam[0]) * np.eye(2),
        residual=lambda x: SQRT2 * np.array([x[0] - 2.0, x[1]]),
        residual_jacobian=lambda x: SQRT2 * np.eye(2),
        description="closest point on the unit circle to (2, 0)",
    )
    ref = ReferenceSolution(np.array([1.0, 0.0]), np.array([1.0]), "analytic")
    return problem, ref


REGISTRY = {"hs77": hs77, "p_lin": p_lin, "p_circle": p_circle}


def get_problem(name):
    """Return ``(problem, reference)`` for a registered problem name."""
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; available: {sorted(REGISTRY)}") from None
