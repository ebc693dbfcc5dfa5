"""
Distance matrices, U-centering and the unbiased distance covariance.

All components are univariate. The unbiased estimator of the squared
distance covariance between ``x`` and ``y`` is

    dcov_u(x, y) = 1 / (n (n - 3)) * sum_{i != j} At_ij Bt_ij

where ``At`` and ``Bt`` are the U-centered distance matrices. It is a
fourth-order U-statistic, which :func:`dcov_u_bruteforce` evaluates
directly for small ``n``.

Reductions over the ``n**2`` matrix entries use :func:`math.fsum`, which is
exactly rounded and therefore independent of the order of the
observations. Each component is U-centered in its own sorted order, so every
entry of a U-centered matrix depends only on the pair of values and on the
sample as a multiset.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError, SampleSizeError

__all__ = [
    "pairwise_abs_distance",
    "u_center",
    "u_centered_component",
    "dcov_u",
    "dvar_u",
    "dcov_u_bruteforce",
    "dcov_v",
    "offdiag_sum",
]

BRUTEFORCE_MAX_N = 12


def _as_component(x, name="x", min_n=2) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite values")
    if x.shape[0] < min_n:
        raise SampleSizeError(f"{name} needs at least {min_n} observations, got {x.shape[0]}")
    return x


def _as_pair(x, y, min_n):
    x = _as_component(x, "x", min_n)
    y = _as_component(y, "y", min_n)
    if x.shape != y.shape:
        raise InvalidInputError(f"length mismatch: {x.shape[0]} != {y.shape[0]}")
    return x, y


@lru_cache(maxsize=32)
def _upper_indices(n: int):
    return np.triu_indices(n, 1)


def offdiag_sum(M: np.ndarray) -> float:
    """Exactly rounded ``sum_{i != j} M_ij`` for a symmetric matrix."""
    iu = _upper_indices(M.shape[0])
    return 2.0 * math.fsum(M[iu].tolist())


def pairwise_abs_distance(x) -> np.ndarray:
    """Matrix of absolute differences ``|x_i - x_j|``.

    Parameters
    ----------
    x : array_like, shape (n,)
        Finite observations of one variable, ``n >= 2``.

    Returns
    -------
    numpy.ndarray, shape (n, n)
        Symmetric, nonnegative, zero diagonal.
    """
    x = _as_component(x)
    return np.abs(x[:, None] - x[None, :])


def u_center(A) -> np.ndarray:
    """U-center a distance matrix.

    ``At_ij = A_ij - r_i/(n-2) - r_j/(n-2) + T/((n-1)(n-2))`` with row sums
    ``r`` and total ``T``. Column sums are taken equal to row sums, so the
    input must be symmetric. The diagonal is set to zero; it is never part
    of any estimator, which sum over ``i != j`` only.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"distance matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if n < 4:
        raise SampleSizeError(f"U-centering needs n >= 4, got {n}")
    r = A.sum(axis=1)
    total = r.sum()
    r_scaled = r / (n - 2)
    At = A - (r_scaled[:, None] + r_scaled[None, :]) + total / ((n - 1) * (n - 2))
    np.fill_diagonal(At, 0.0)
    return At


def _centered_in_sorted_order(x: np.ndarray):
    order = np.argsort(x, kind="stable")
    xs = x[order]
    inverse = np.empty_like(order)
    inverse[order] = np.arange(x.shape[0])
    return u_center(np.abs(xs[:, None] - xs[None, :])), inverse


def u_centered_component(x, with_dvar=True):
    """U-centered distance matrix of one component and its distance variance.

    The matrix is built in the sorted order of ``x`` and mapped back, which
    makes every entry invariant to the order of the observations.

    Returns
    -------
    At : numpy.ndarray, shape (n, n)
        U-centered matrix in the original observation order.
    dvar : float or None
        ``dvar_u(x)``, or None when ``with_dvar`` is false.
    """
    x = _as_component(x, min_n=4)
    n = x.shape[0]
    At_sorted, inverse = _centered_in_sorted_order(x)
    dvar = None
    if with_dvar:
        # fsum is order independent, so this equals the sum in original order
        dvar = offdiag_sum(At_sorted * At_sorted) / (n * (n - 3))
    return At_sorted[np.ix_(inverse, inverse)], dvar


def dcov_u(x, y) -> float:
    """Unbiased estimate of the squared distance covariance.

    The estimate can be negative for finite ``n`` and is returned as is.

    Parameters
    ----------
    x, y : array_like, shape (n,)
        Paired observations, ``n >= 4``.

    Returns
    -------
    float
    """
    x, y = _as_pair(x, y, 4)
    n = x.shape[0]
    At, _ = u_centered_component(x, with_dvar=False)
    Bt, _ = u_centered_component(y, with_dvar=False)
    return offdiag_sum(At * Bt) / (n * (n - 3))


def dvar_u(x) -> float:
    """Unbiased estimate of the squared distance variance, ``dcov_u(x, x)``."""
    return u_centered_component(x)[1]


# Ordered 4-tuples (s, t, u, v) ranging over all permutations of positions.
_PERMS4 = np.array(list(itertools.permutations(range(4))), dtype=np.intp)


def dcov_u_bruteforce(x, y) -> float:
    """Fourth-order U-statistic form of :func:`dcov_u`, by enumeration.

    Averages the kernel

        h = 1/24 * sum over permutations (s, t, u, v) of
            A_st B_st + A_st B_uv - 2 A_st B_su

    over all 4-subsets of the sample. Cost is O(n**4); only ``4 <= n <= 12``
    is accepted.
    """
    x, y = _as_pair(x, y, 4)
    n = x.shape[0]
    if n > BRUTEFORCE_MAX_N:
        raise SampleSizeError(f"brute-force oracle accepts n <= {BRUTEFORCE_MAX_N}, got {n}")
    A = np.abs(x[:, None] - x[None, :])
    B = np.abs(y[:, None] - y[None, :])
    subsets = np.array(list(itertools.combinations(range(n), 4)), dtype=np.intp)
    idx = subsets[:, _PERMS4]  # (C(n,4), 24, 4)
    s, t, u, v = idx[..., 0], idx[..., 1], idx[..., 2], idx[..., 3]
    a_st = A[s, t]
    terms = a_st * B[s, t] + a_st * B[u, v] - 2.0 * a_st * B[s, u]
    kernels = terms.sum(axis=1) / 24.0
    return math.fsum(kernels.tolist()) / len(subsets)


def _double_center(A: np.ndarray) -> np.ndarray:
    row = A.mean(axis=1)
    return A - row[:, None] - row[None, :] + row.mean()


def dcov_v(x, y) -> float:
    """Squared distance covariance V-statistic with double centering.

    ``(1/n**2) sum_{i,j} Ah_ij Bh_ij`` where ``Ah`` subtracts row and column
    means of the distance matrix and adds back the grand mean.
    """
    x, y = _as_pair(x, y, 2)
    n = x.shape[0]
    Ah = _double_center(np.abs(x[:, None] - x[None, :]))
    Bh = _double_center(np.abs(y[:, None] - y[None, :]))
    return math.fsum((Ah * Bh).ravel().tolist()) / (n * n)
