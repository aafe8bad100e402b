"""Dense complex linear algebra and scalar root finding.

Everything here is a pure function of its inputs. The LAPACK work is done by
numpy/scipy; this module pins tolerances and error behaviour.
"""

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "NumericalError",
    "BracketError",
    "pseudo_inverse",
    "hermitian_solve",
    "bisection_root",
    "sylvester_hadamard",
    "dft_matrix",
]


class NumericalError(ArithmeticError):
    """A factorization or iteration could not produce a finite answer."""


class BracketError(NumericalError):
    """The target of a monotone root search could not be bracketed."""


def pseudo_inverse(a, rcond=1e-12):
    """Moore-Penrose pseudo-inverse through the SVD.

    Singular values below ``rcond * sigma_max`` are treated as zero.

    Parameters
    ----------
    a : array_like, shape (m, n)
        Complex (or real) matrix.
    rcond : float
        Relative cut-off for small singular values.

    Returns
    -------
    ndarray, shape (n, m)
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"pseudo_inverse needs a nonempty 2-D matrix, got shape {a.shape}")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]), dtype=np.result_type(a, float))
    keep = s > rcond * s[0]
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    return (vh.conj().T * s_inv) @ u.conj().T


def hermitian_solve(a, b):
    """Solve ``a x = b`` for Hermitian positive definite ``a`` (Cholesky).

    ``b`` may be a vector or a matrix of right-hand sides.

    Raises
    ------
    NumericalError
        If ``a`` is not positive definite; the message carries the smallest
        eigenvalue.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"hermitian_solve needs a square matrix, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, matrix has {a.shape[0]}")
    herm = 0.5 * (a + a.conj().T)
    try:
        chol = np.linalg.cholesky(herm)
    except np.linalg.LinAlgError:
        lam_min = float(np.linalg.eigvalsh(herm)[0])
        raise NumericalError(
            f"matrix is not positive definite (smallest eigenvalue {lam_min:.3e})"
        ) from None
    y = solve_triangular(chol, b, lower=True)
    x = solve_triangular(chol.conj().T, y, lower=False)
    if not np.all(np.isfinite(x)):
        raise NumericalError("hermitian_solve produced non-finite entries")
    return x


def bisection_root(f, target, lo=0.0, tol=1e-8, max_doublings=200, max_iter=5000):
    """Find ``mu >= lo`` with ``f(mu) ~= target`` for a decreasing ``f``.

    If ``f(lo) <= target`` the constraint is slack and ``lo`` is returned.
    Otherwise the upper bracket is grown as ``lo + 1, lo + 2, lo + 4, ...``
    and the interval is halved until ``|f(mu) - target| <= tol``.

    Raises
    ------
    BracketError
        If ``f`` is still above ``target`` after ``max_doublings`` doublings.
    """
    f_lo = f(lo)
    if f_lo <= target:
        return lo

    step = 1.0
    hi = lo + step
    f_hi = f(hi)
    doublings = 0
    while f_hi > target:
        if doublings >= max_doublings:
            raise BracketError(
                f"f stays above {target!r} up to mu={hi:.3e} after {max_doublings} doublings"
            )
        step *= 2.0
        hi = lo + step
        f_hi = f(hi)
        doublings += 1
    if abs(f_hi - target) <= tol:
        return hi

    a, b = lo, hi
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            # interval exhausted at machine precision: the feasible side wins
            return b
        f_mid = f(mid)
        if abs(f_mid - target) <= tol:
            return mid
        if f_mid > target:
            a = mid
        else:
            b = mid
    return b


def sylvester_hadamard(order):
    """Real +/-1 Hadamard matrix of power-of-two ``order`` (Sylvester)."""
    order = int(order)
    if order < 1 or order & (order - 1):
        raise ValueError(f"Sylvester Hadamard order must be a power of two, got {order}")
    h = np.ones((1, 1))
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def dft_matrix(order):
    """DFT matrix with entry (m, n) equal to ``exp(-2j*pi*m*n/order)``."""
    order = int(order)
    if order < 1:
        raise ValueError(f"DFT order must be >= 1, got {order}")
    idx = np.arange(order)
    # reduce m*n modulo order first so large orders keep exact unit phases
    return np.exp(-2j * np.pi * (np.outer(idx, idx) % order) / order)
