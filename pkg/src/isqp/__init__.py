"""Interpolated SQP for equality-constrained nonlinear programs."""

from .core import (
    CONVERGED,
    DIVERGED,
    MAX_ITERATIONS,
    NUMERICAL_FAILURE,
    RateReport,
    SolveReport,
    SolverConfig,
    StepComponents,
    convergence_rate_estimate,
    feasible_direction,
    interpolated_step,
    solve,
    sqp_direction,
)
from .estimator import InterpolatedSQP
from .exceptions import (
    EvaluationFailure,
    InsufficientData,
    ISQPError,
    MissingHook,
    NonFinite,
    NotPositiveDefinite,
    RankDeficient,
    RegularizationFailed,
    SingularSystem,
)
from .hessian import CbarPolicy, HessianStrategy, RegularizedHessian, build_hessian, regularize
from .model import EvalBundle, Iterate, NlpProblem, check_derivatives, evaluate, kkt_residual
from .problems import REGISTRY, ReferenceSolution, get_problem, hs77, p_circle, p_lin

__version__ = "0.1.0"
