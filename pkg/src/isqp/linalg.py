"""Dense kernels: SPD factorization, right inverses, saddle-point solves.

All routines are pure functions of their arguments. Matrices are plain
``numpy.ndarray`` objects; the constraint Jacobian ``j2`` is ``(m, n)`` with
``m < n``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import check_matrix, check_symmetric, check_vector
from .exceptions import (
    NotPositiveDefinite,
    RankDeficient,
    RegularizationFailed,
    SingularSystem,
)

#: Shifts tried, in order, when regularizing ``B + c * J2.T @ J2``.
DEFAULT_CBAR_SCHEDULE = (0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8)

#: Condition number above which ``J2 M J2.T`` is treated as singular.
RANK_COND_LIMIT = 1e12


@dataclass(frozen=True)
class SpdFactorization:
    """Cholesky factor ``L`` of a symmetric positive definite matrix ``A = L L^T``."""

    factor: np.ndarray

    @property
    def size(self):
        return self.factor.shape[0]

    def solve(self, b):
        """Solve ``A x = b`` for a vector or a matrix of right-hand sides."""
        return scipy.linalg.cho_solve((self.factor, True), b, check_finite=False)

    def reconstruct(self):
        return self.factor @ self.factor.T


def factorize_spd(a):
    """Cholesky-factorize a symmetric matrix.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Symmetric matrix (asymmetry at most ``1e-12`` relative).

    Returns
    -------
    SpdFactorization

    Raises
    ------
    NotPositiveDefinite
        If a pivot is nonpositive.
    NonFinite
        If `a` contains NaN or Inf.
    """
    a = check_symmetric(a, name="a")
    try:
        lower = scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    diag = np.diag(lower)
    if not np.all(diag > 0) or not np.all(np.isfinite(lower)):
        raise NotPositiveDefinite("nonpositive pivot")
    return SpdFactorization(lower)


def _inner_factor(d, what):
    # d = J2 M J2^T must be SPD and reasonably conditioned for J2 to count as full rank.
    try:
        fact = factorize_spd(0.5 * (d + d.T))
    except NotPositiveDefinite:
        raise RankDeficient(f"{what} is not positive definite") from None
    if np.linalg.cond(d) > RANK_COND_LIMIT:
        raise RankDeficient(f"{what} is ill-conditioned (cond > {RANK_COND_LIMIT:g})")
    return fact


def _weighted_parts(c, j2):
    """Return ``C^{-1} J2^T`` and the factorization of ``D = J2 C^{-1} J2^T``."""
    cinv_jt = c.solve(j2.T)
    return cinv_jt, _inner_factor(j2 @ cinv_jt, "J2 C^-1 J2^T")


def weighted_right_inverse(c, j2):
    """Right inverse ``C^{-1} J2^T (J2 C^{-1} J2^T)^{-1}`` of `j2`.

    Parameters
    ----------
    c : SpdFactorization
        Factorization of the ``(n, n)`` weight matrix.
    j2 : array_like, shape (m, n)

    Returns
    -------
    numpy.ndarray, shape (n, m)
        ``T`` with ``j2 @ T == I_m``.
    """
    j2 = check_matrix(j2, shape=(None, c.size), name="j2")
    cinv_jt, d = _weighted_parts(c, j2)
    return d.solve(cinv_jt.T).T


def moore_penrose_right_inverse(j2):
    """Minimum-norm right inverse ``J2^T (J2 J2^T)^{-1}``."""
    j2 = check_matrix(j2, name="j2")
    d = _inner_factor(j2 @ j2.T, "J2 J2^T")
    return d.solve(j2).T


def spectral_norm(a):
    """Largest singular value of `a`."""
    a = check_matrix(a, name="a")
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def regularize_shift(b, j2, schedule=DEFAULT_CBAR_SCHEDULE):
    """Find the first shift ``c`` in `schedule` making ``b + c j2^T j2`` SPD.

    Returns
    -------
    cbar : float
    factorization : SpdFactorization

    Raises
    ------
    RegularizationFailed
        If every shift in the schedule fails.
    """
    b = check_symmetric(b, rtol=1e-10, name="b")
    j2 = check_matrix(j2, shape=(None, b.shape[0]), name="j2")
    b = 0.5 * (b + b.T)
    gram = j2.T @ j2
    for cbar in schedule:
        try:
            return float(cbar), factorize_spd(b + cbar * gram)
        except NotPositiveDefinite:
            continue
    raise RegularizationFailed(
        f"B + c J2^T J2 not positive definite for c up to {schedule[-1]:g}"
    )


def solve_regularized_saddle(c, j2, g, h, cbar):
    """Solve the saddle system given the factorization of ``C = B + cbar J2^T J2``.

    The shifted system ``C dx + J2^T mu = -g, J2 dx = -h`` has the same `dx`
    as the original one, and ``lam = mu - cbar * h``.
    """
    cinv_jt, d = _weighted_parts(c, j2)
    cinv_g = c.solve(g)
    mu = d.solve(h - j2 @ cinv_g)
    dx = -(cinv_g + cinv_jt @ mu)
    return dx, mu - cbar * h


def solve_saddle(b, j2, g, h, schedule=DEFAULT_CBAR_SCHEDULE):
    """Solve ``[[B, J2^T], [J2, 0]] [dx; lam] = -[g; h]``.

    `B` only needs to be positive definite on the null space of `j2`; the
    system is regularized to ``C = B + cbar J2^T J2`` before solving.

    Returns
    -------
    dx : numpy.ndarray, shape (n,)
    lam : numpy.ndarray, shape (m,)

    Raises
    ------
    SingularSystem
        If no shift in `schedule` yields a positive definite ``C``.
    RankDeficient
        If `j2` is numerically rank deficient.
    """
    b = check_matrix(b, name="b")
    n = b.shape[0]
    j2 = check_matrix(j2, shape=(None, n), name="j2")
    g = check_vector(g, n, name="g")
    h = check_vector(h, j2.shape[0], name="h")
    try:
        cbar, c = regularize_shift(b, j2, schedule)
    except RegularizationFailed as exc:
        raise SingularSystem(str(exc)) from None
    return solve_regularized_saddle(c, j2, g, h, cbar)


def solve_saddle_direct(b, j2, g, h):
    """Solve the saddle system by LU on the full ``(n+m, n+m)`` matrix.

    Independent of the regularized route; used as a cross-check and by the
    ``saddle`` direction path.
    """
    b = check_matrix(b, name="b")
    n = b.shape[0]
    j2 = check_matrix(j2, shape=(None, n), name="j2")
    m = j2.shape[0]
    g = check_vector(g, n, name="g")
    h = check_vector(h, m, name="h")
    kkt = np.block([[b, j2.T], [j2, np.zeros((m, m))]])
    rhs = -np.concatenate([g, h])
    try:
        with np.errstate(all="raise"):
            sol = scipy.linalg.solve(kkt, rhs, check_finite=False)
    except (scipy.linalg.LinAlgError, FloatingPointError) as exc:
        raise SingularSystem(str(exc)) from None
    if np.linalg.cond(kkt) > 1e14 or not np.all(np.isfinite(sol)):
        raise SingularSystem("saddle matrix is numerically singular")
    return sol[:n], sol[n:]
