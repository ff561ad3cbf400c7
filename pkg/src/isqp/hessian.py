"""Hessian approximations ``B_k`` and their regularization ``C_k = B_k + cbar J2^T J2``."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import check_matrix, check_symmetric
from .exceptions import MissingHook
from .linalg import DEFAULT_CBAR_SCHEDULE, regularize_shift

EXACT = "exact"
GGN = "ggn"
IDENTITY = "identity"
CONSTANT = "constant"
KINDS = (EXACT, GGN, IDENTITY, CONSTANT)


@dataclass(frozen=True)
class HessianStrategy:
    """How ``B_k`` is produced each iteration.

    Parameters
    ----------
    kind : {"exact", "ggn", "identity", "constant"}
    matrix : array_like, optional
        The fixed symmetric matrix for ``kind="constant"``.
    scale : float, optional
        Multiplier on ``dR^T dR`` for ``kind="ggn"``. Defaults to the
        problem's ``ggn_scale``.
    """

    kind: str = EXACT
    matrix: Optional[np.ndarray] = None
    scale: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Hessian strategy {self.kind!r}; choose from {KINDS}")
        if self.kind == CONSTANT:
            if self.matrix is None:
                raise ValueError("constant strategy needs a matrix")
            object.__setattr__(self, "matrix", check_symmetric(self.matrix, name="matrix"))

    @classmethod
    def exact(cls):
        return cls(EXACT)

    @classmethod
    def ggn(cls, scale=None):
        return cls(GGN, scale=scale)

    @classmethod
    def identity(cls):
        return cls(IDENTITY)

    @classmethod
    def constant(cls, matrix):
        return cls(CONSTANT, matrix=matrix)


@dataclass(frozen=True)
class CbarPolicy:
    """Increasing shifts tried, fresh at every iteration, until ``C_k`` is SPD."""

    schedule: tuple = DEFAULT_CBAR_SCHEDULE

    def __post_init__(self):
        s = tuple(float(c) for c in self.schedule)
        if not s or any(c < 0 for c in s) or any(b <= a for a, b in zip(s, s[1:])):
            raise ValueError("schedule must be a nonempty increasing sequence of shifts >= 0")
        object.__setattr__(self, "schedule", s)


@dataclass(frozen=True)
class RegularizedHessian:
    b: np.ndarray
    cbar: float
    c_factor: object  # SpdFactorization of b + cbar * j2.T @ j2


def build_hessian(strategy, problem, x, lam):
    """Return the symmetric ``(n, n)`` matrix ``B_k`` at ``(x, lam)``.

    Raises
    ------
    MissingHook
        If the strategy needs a callback the problem does not provide.
    """
    n = problem.n
    if strategy.kind == IDENTITY:
        return np.eye(n)
    if strategy.kind == CONSTANT:
        return check_matrix(strategy.matrix, (n, n), "constant Hessian").copy()
    if strategy.kind == EXACT:
        if not problem.has_exact_hessian:
            raise MissingHook(f"problem {problem.name!r} has no exact Lagrangian Hessian")
        h = check_matrix(problem.exact_lagrangian_hessian(x, lam), (n, n), "exact Hessian")
        return 0.5 * (h + h.T)
    if not problem.has_residual:
        raise MissingHook(f"problem {problem.name!r} has no residual hooks for GGN")
    dr = check_matrix(problem.residual_jacobian(x), (None, n), "residual Jacobian")
    scale = problem.ggn_scale if strategy.scale is None else strategy.scale
    return scale * (dr.T @ dr)


def regularize(b, j2, policy=None):
    """Shift `b` along ``j2^T j2`` until it is positive definite.

    Returns the first ``cbar`` in ``policy.schedule`` that works.

    Raises
    ------
    RegularizationFailed
        If the largest shift fails, i.e. `b` is not positive definite on
        the null space of `j2`.
    """
    policy = policy or CbarPolicy()
    cbar, fact = regularize_shift(b, j2, policy.schedule)
    return RegularizedHessian(b=np.array(b, dtype=float), cbar=cbar, c_factor=fact)
