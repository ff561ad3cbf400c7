"""Interpolated SQP iteration.

The step at ``x_k`` blends the SQP direction with a direction that only
restores linearized feasibility::

    dx = alpha * dx_sqp + (1 - alpha) * dx_feasible
       = -alpha * (I - T_C J2) C^{-1} J1^T - T F2

where ``T_C`` is the ``C``-weighted right inverse of ``J2`` and ``T`` its
Moore-Penrose right inverse. ``alpha = 1`` is plain SQP.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ISQPError, InsufficientData, MissingHook
from .hessian import EXACT, GGN, CbarPolicy, build_hessian, regularize
from .linalg import (
    _weighted_parts,
    moore_penrose_right_inverse,
    solve_saddle_direct,
    spectral_norm,
)
from .model import Iterate, evaluate, kkt_residual

logger = logging.getLogger(__name__)

EXPLICIT = "explicit"
SADDLE = "saddle"
DIRECTION_PATHS = (EXPLICIT, SADDLE)

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
DIVERGED = "diverged"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverConfig:
    """Iteration parameters.

    ``alpha`` is the interpolation weight in ``(0, 1]``; ``tol`` bounds the
    KKT residual at termination.
    """

    alpha: float = 1.0
    tol: float = 1e-7
    max_iter: int = 500
    divergence_threshold: float = 1e10
    direction_path: str = EXPLICIT
    cbar_policy: CbarPolicy = field(default_factory=CbarPolicy)

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 0:
            raise ValueError("max_iter must be a nonnegative integer")
        if not self.divergence_threshold > self.tol:
            raise ValueError("divergence_threshold must exceed tol")
        if self.direction_path not in DIRECTION_PATHS:
            raise ValueError(f"direction_path must be one of {DIRECTION_PATHS}")


@dataclass(frozen=True)
class StepComponents:
    dx_sqp: np.ndarray
    dx_feasible: np.ndarray
    dx: np.ndarray
    lambda_next: np.ndarray
    alpha: float
    g_term: np.ndarray


@dataclass(frozen=True)
class IterationRecord:
    """Diagnostics for the step taken at iterate ``k``.

    ``lipschitz_ratio`` is ``||B_k - B_{k-1}|| / ||x_k - x_{k-1}||`` (NaN at
    ``k = 0``). ``feasibility_defect`` is ``||J2 dx + F2||`` and
    ``interpolation_defect`` is ``||dx - (alpha dx_sqp + (1-alpha) dx_f)||``.
    """

    k: int
    f1: float
    constraint_norm: float
    kkt_residual: float
    step_norm: float
    cbar: float
    lipschitz_ratio: float
    feasibility_defect: float
    interpolation_defect: float


@dataclass
class SolveReport:
    status: str
    iterations: int
    final: Iterate
    final_kkt_residual: float
    trace: list
    wall_time: float
    message: str = ""

    @property
    def converged(self):
        return self.status == CONVERGED

    @property
    def residual_history(self):
        """KKT residual at ``x_0, ..., x_final``."""
        return np.array([r.kkt_residual for r in self.trace] + [self.final_kkt_residual])

    @property
    def step_norms(self):
        return np.array([r.step_norm for r in self.trace])


def _explicit_parts(bundle, reg):
    """Return ``T_C``, ``G = (I - T_C J2) C^{-1} J1^T`` and the multipliers."""
    j2 = bundle.j2
    cinv_jt, d = _weighted_parts(reg.c_factor, j2)
    t_c = d.solve(cinv_jt.T).T
    cinv_g = reg.c_factor.solve(bundle.j1)
    g_term = cinv_g - t_c @ (j2 @ cinv_g)
    # Shifted system C dx + J2^T mu = -J1^T gives lam = mu - cbar F2.
    mu = d.solve(bundle.f2 - j2 @ cinv_g)
    return t_c, g_term, mu - reg.cbar * bundle.f2


def sqp_direction(bundle, reg, path=EXPLICIT):
    """SQP step and next multipliers from the QP subproblem.

    ``path="explicit"`` uses ``-(I - T_C J2) C^{-1} J1^T - T_C F2``;
    ``path="saddle"`` solves the unregularized KKT matrix by LU.
    """
    if path == SADDLE:
        return solve_saddle_direct(reg.b, bundle.j2, bundle.j1, bundle.f2)
    if path != EXPLICIT:
        raise ValueError(f"unknown direction path {path!r}")
    t_c, g_term, lam = _explicit_parts(bundle, reg)
    return -g_term - t_c @ bundle.f2, lam


def feasible_direction(bundle, t_weighted, t_mp, alpha):
    """Feasible step ``-(T / (1-alpha) - alpha T_C / (1-alpha)) F2``.

    Solves ``J2 dx + F2 = 0``. At ``alpha = 1`` the step is unused and
    ``-T F2`` is returned.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    f2 = bundle.f2
    if alpha == 1.0:
        return -t_mp @ f2
    return -(t_mp @ f2 - alpha * (t_weighted @ f2)) / (1.0 - alpha)


def interpolated_step(bundle, reg, config):
    """Compute all step components at one iterate.

    With the explicit path the step is the closed form
    ``-alpha G - T F2``; with the saddle path it is assembled from its two
    parts. Both satisfy ``J2 dx + F2 = 0``.
    """
    alpha = config.alpha
    t_c, g_term, lam = _explicit_parts(bundle, reg)
    t_mp = moore_penrose_right_inverse(bundle.j2)
    if config.direction_path == SADDLE:
        dx_sqp, lam = sqp_direction(bundle, reg, SADDLE)
    else:
        dx_sqp = -g_term - t_c @ bundle.f2
    dx_f = feasible_direction(bundle, t_c, t_mp, alpha)
    if alpha == 1.0:
        dx = dx_sqp.copy()
    elif config.direction_path == SADDLE:
        dx = alpha * dx_sqp + (1.0 - alpha) * dx_f
    else:
        dx = -alpha * g_term - t_mp @ bundle.f2
    return StepComponents(
        dx_sqp=dx_sqp, dx_feasible=dx_f, dx=dx, lambda_next=lam, alpha=alpha, g_term=g_term
    )


def _check_hooks(problem, strategy):
    if strategy.kind == EXACT and not problem.has_exact_hessian:
        raise MissingHook(f"problem {problem.name!r} has no exact Lagrangian Hessian")
    if strategy.kind == GGN and not problem.has_residual:
        raise MissingHook(f"problem {problem.name!r} has no residual hooks for GGN")


def solve(problem, strategy, config=None, x0=None, lam0=None):
    """Run the interpolated SQP iteration ``x_{k+1} = x_k + dx_k``.

    Parameters
    ----------
    problem : NlpProblem
    strategy : HessianStrategy
    config : SolverConfig, optional
    x0, lam0 : array_like, optional
        Override the problem's starting point and multipliers.

    Returns
    -------
    SolveReport
        ``iterations`` counts the steps taken; ``trace[k]`` describes the
        step from ``x_k``.

    Raises
    ------
    MissingHook
        If `strategy` needs a callback `problem` lacks.
    """
    config = config or SolverConfig()
    _check_hooks(problem, strategy)
    x = np.array(problem.initial_point if x0 is None else x0, dtype=float)
    lam = np.array(problem.initial_multipliers if lam0 is None else lam0, dtype=float)
    trace = []
    b_prev = x_prev = None
    status, message, res = NUMERICAL_FAILURE, "", float("nan")
    start = time.perf_counter()
    k = 0
    while True:
        try:
            bundle = evaluate(problem, x)
            res = kkt_residual(bundle, lam)
            if not np.isfinite(res) or res > config.divergence_threshold:
                status, message = DIVERGED, f"KKT residual {res:.3e} at iteration {k}"
                break
            if res <= config.tol:
                status = CONVERGED
                break
            if k >= config.max_iter:
                status = MAX_ITERATIONS
                break
            b = build_hessian(strategy, problem, x, lam)
            reg = regularize(b, bundle.j2, config.cbar_policy)
            step = interpolated_step(bundle, reg, config)
        except ISQPError as exc:
            status, message = NUMERICAL_FAILURE, f"iteration {k}: {type(exc).__name__}: {exc}"
            break

        ratio = float("nan")
        if b_prev is not None:
            dist = np.linalg.norm(x - x_prev)
            if dist > 0:
                ratio = spectral_norm(b - b_prev) / dist
        combo = config.alpha * step.dx_sqp + (1.0 - config.alpha) * step.dx_feasible
        trace.append(
            IterationRecord(
                k=k,
                f1=bundle.f1,
                constraint_norm=float(np.linalg.norm(bundle.f2)),
                kkt_residual=res,
                step_norm=float(np.linalg.norm(step.dx)),
                cbar=reg.cbar,
                lipschitz_ratio=ratio,
                feasibility_defect=float(np.linalg.norm(bundle.j2 @ step.dx + bundle.f2)),
                interpolation_defect=float(np.linalg.norm(step.dx - combo)),
            )
        )
        logger.debug("iter %d  kkt=%.3e  |dx|=%.3e  cbar=%g", k, res, trace[-1].step_norm, reg.cbar)
        b_prev, x_prev = b, x
        x = x + step.dx
        lam = step.lambda_next
        k += 1
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam))):
            status, message = DIVERGED, f"non-finite iterate at iteration {k}"
            res = float("nan")
            break

    return SolveReport(
        status=status,
        iterations=len(trace),
        final=Iterate(x=x, lam=lam),
        final_kkt_residual=float(res),
        trace=trace,
        wall_time=time.perf_counter() - start,
        message=message,
    )


@dataclass(frozen=True)
class RateReport:
    """Fit of ``log r_{k+1} = order * log r_k + log constant``."""

    order: float
    constant: float
    classification: str
    n_points: int


def convergence_rate_estimate(history, tail=5):
    """Estimate the local order of convergence of a residual sequence.

    Parameters
    ----------
    history : SolveReport or array_like
        A solve report (its KKT residual history is used) or a positive
        sequence of residuals.
    tail : int
        Number of final residuals fitted (at least 4).

    Returns
    -------
    RateReport
        ``classification`` is ``"quadratic"`` for order >= 1.7,
        ``"superlinear"`` for order >= 1.15 or a vanishing constant,
        otherwise ``"linear"``.

    Raises
    ------
    InsufficientData
        With fewer than 4 usable residuals.
    """
    if isinstance(history, SolveReport):
        history = history.residual_history
    r = np.asarray(history, dtype=float)
    r = r[np.isfinite(r) & (r > 0)]
    tail = max(int(tail), 4)
    if r.size < 4:
        raise InsufficientData(f"need at least 4 positive residuals, got {r.size}")
    logs = np.log(r[-tail:])
    order, intercept = np.polyfit(logs[:-1], logs[1:], 1)
    constant = float(np.exp(intercept))
    if order >= 1.7:
        kind = "quadratic"
    elif order >= 1.15 or (order >= 0.95 and constant < 1e-3):
        kind = "superlinear"
    else:
        kind = "linear"
    return RateReport(float(order), constant, kind, int(logs.size))
