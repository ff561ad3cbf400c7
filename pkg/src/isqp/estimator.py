"""Estimator-style front end with scikit-learn parameter handling."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .core import CONVERGED, SolverConfig, convergence_rate_estimate, solve
from .exceptions import InsufficientData
from .hessian import CbarPolicy, HessianStrategy
from .linalg import DEFAULT_CBAR_SCHEDULE
from .model import NlpProblem


class InterpolatedSQP(BaseEstimator):
    """Interpolated SQP solver with ``get_params``/``set_params``/``clone`` support.

    Parameters
    ----------
    alpha : float, default=1.0
        Interpolation weight in ``(0, 1]``; 1 is plain SQP.
    hessian : {"exact", "ggn", "identity", "constant"}, default="exact"
    hessian_matrix : array_like, optional
        Matrix for ``hessian="constant"``.
    ggn_scale : float, optional
        Overrides the problem's Gauss-Newton scale.
    tol : float, default=1e-7
    max_iter : int, default=500
    divergence_threshold : float, default=1e10
    direction_path : {"explicit", "saddle"}, default="explicit"
    cbar_schedule : tuple, optional

    Attributes
    ----------
    x_ : ndarray of shape (n,)
    lambda_ : ndarray of shape (m,)
    status_ : str
    n_iter_ : int
    kkt_residual_ : float
    report_ : SolveReport

    Examples
    --------
    >>> from isqp import hs77
    >>> problem, _ = hs77()
    >>> est = InterpolatedSQP(alpha=0.35, hessian="ggn").fit(problem)
    >>> est.status_
    'converged'
    """

    def __init__(
        self,
        alpha=1.0,
        hessian="exact",
        hessian_matrix=None,
        ggn_scale=None,
        tol=1e-7,
        max_iter=500,
        divergence_threshold=1e10,
        direction_path="explicit",
        cbar_schedule=None,
    ):
        self.alpha = alpha
        self.hessian = hessian
        self.hessian_matrix = hessian_matrix
        self.ggn_scale = ggn_scale
        self.tol = tol
        self.max_iter = max_iter
        self.divergence_threshold = divergence_threshold
        self.direction_path = direction_path
        self.cbar_schedule = cbar_schedule

    def _make_strategy(self):
        return HessianStrategy(self.hessian, matrix=self.hessian_matrix, scale=self.ggn_scale)

    def _make_config(self):
        schedule = DEFAULT_CBAR_SCHEDULE if self.cbar_schedule is None else self.cbar_schedule
        return SolverConfig(
            alpha=float(self.alpha),
            tol=float(self.tol),
            max_iter=int(self.max_iter),
            divergence_threshold=float(self.divergence_threshold),
            direction_path=self.direction_path,
            cbar_policy=CbarPolicy(tuple(schedule)),
        )

    def fit(self, problem, x0=None, lam0=None):
        """Solve `problem` from its initial point (or `x0`, `lam0`)."""
        if not isinstance(problem, NlpProblem):
            raise TypeError(f"expected an NlpProblem, got {type(problem).__name__}")
        report = solve(problem, self._make_strategy(), self._make_config(), x0=x0, lam0=lam0)
        self.report_ = report
        self.x_ = np.asarray(report.final.x)
        self.lambda_ = np.asarray(report.final.lam)
        self.status_ = report.status
        self.n_iter_ = report.iterations
        self.kkt_residual_ = report.final_kkt_residual
        return self

    def _check_fitted(self):
        if not hasattr(self, "report_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    @property
    def converged_(self):
        self._check_fitted()
        return self.status_ == CONVERGED

    def rate_estimate(self, tail=5):
        """Local convergence order of the last fit, or ``None`` if too short."""
        self._check_fitted()
        try:
            return convergence_rate_estimate(self.report_, tail=tail)
        except InsufficientData:
            return None
