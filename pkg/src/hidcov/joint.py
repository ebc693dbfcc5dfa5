"""
Joint dependence statistics calibrated by permutation.

Both statistics are V-statistics of the form

    term1 + term2 - 2 * term3,
    term1 = (1/n^2) sum_{k1,k2} prod_i K_i(k1, k2)
    term2 = prod_i (1/n^2) sum_{k,k'} K_i(k, k')
    term3 = (1/n) sum_{k1} prod_i (1/n) sum_k K_i(k1, k)

with one n x n kernel matrix ``K_i`` per component. The multi-index sums
over ``{1..n}^q`` in the defining expressions factorize across components
into these three terms, so evaluation costs O(n^2 p).

MdCov uses the distance induced kernel ``|w|^a + |w'|^a - |w - w'|^a``;
dHSIC uses a Gaussian kernel with a per-component median-heuristic
bandwidth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateBandwidthError, InvalidInputError, SampleSizeError

# bandwidth relative to the smallest gap when most pairwise distances tie
DISCRETE_BANDWIDTH_FACTOR = 1e-3

__all__ = [
    "DISCRETE_BANDWIDTH_FACTOR",
    "DistanceInducedKernel",
    "GaussianKernel",
    "KernelSpec",
    "JointTestResult",
    "distance_induced_kernel",
    "median_heuristic_bandwidth",
    "kernel_matrices",
    "statistic_from_kernels",
    "mdcov_v",
    "dhsic_v",
    "permutation_test",
]


@dataclass(frozen=True)
class DistanceInducedKernel:
    """``K(w, w'; a) = |w|^a + |w'|^a - |w - w'|^a`` with ``0 < a < 2``."""

    a: float = 1.0

    def __post_init__(self):
        _check_exponent(self.a)

    @property
    def name(self) -> str:
        return "mdcov"


@dataclass(frozen=True)
class GaussianKernel:
    """``exp(-(w - w')^2 / (2 gamma^2))`` with ``gamma = c * median distance``."""

    c: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise InvalidInputError(f"bandwidth multiplier c must be positive, got {self.c}")

    @property
    def name(self) -> str:
        return "dhsic"


KernelSpec = Union[DistanceInducedKernel, GaussianKernel]


@dataclass(frozen=True)
class JointTestResult:
    statistic: float
    p_value: float
    permutations: int
    seed: int
    per_component_bandwidths: Optional[List[float]] = field(default=None)


def _check_exponent(a):
    if not (math.isfinite(a) and 0.0 < a < 2.0):
        raise InvalidInputError(f"kernel exponent a must lie in (0, 2), got {a}")


def distance_induced_kernel(w: float, w2: float, a: float) -> float:
    """Distance induced kernel ``|w|^a + |w2|^a - |w - w2|^a``."""
    _check_exponent(a)
    return abs(w) ** a + abs(w2) ** a - abs(w - w2) ** a


def median_heuristic_bandwidth(x) -> float:
    """Median of the ``C(n, 2)`` pairwise distances ``|x_i - x_j|, i < j``.

    For discrete data more than half of the distances can be zero. The
    bandwidth then falls back to ``1e-3`` times the smallest positive
    distance, so the Gaussian kernel acts as the exact-match kernel on the
    observed values.

    Raises
    ------
    DegenerateBandwidthError
        If every pairwise distance is zero.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise InvalidInputError("median heuristic needs a vector of at least 2 values")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("component contains non-finite values")
    iu = np.triu_indices(x.shape[0], 1)
    dist = np.abs(x[:, None] - x[None, :])[iu]
    gamma = float(np.median(dist))
    if gamma == 0.0:
        positive = dist[dist > 0.0]
        if positive.size == 0:
            raise DegenerateBandwidthError("all pairwise distances are zero; bandwidth is degenerate")
        gamma = DISCRETE_BANDWIDTH_FACTOR * float(positive.min())
    return gamma


def _as_joint_data(W, allow_small_n: bool) -> np.ndarray:
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 1:
        W = W[:, None]
    if W.ndim != 2:
        raise InvalidInputError(f"data matrix must be two-dimensional, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise InvalidInputError("data matrix contains non-finite values")
    n, p = W.shape
    if n < 2:
        raise SampleSizeError(f"need at least 2 observations, got {n}")
    if not allow_small_n and n < 2 * p:
        raise SampleSizeError(
            f"the sample statistic is defined for n >= 2p; got n={n}, p={p} "
            "(pass allow_small_n=True to override)"
        )
    return W


def kernel_matrices(W, kernel: KernelSpec, allow_small_n: bool = False):
    """Per-component kernel matrices.

    Returns
    -------
    mats : list of numpy.ndarray
        One n x n matrix per column of ``W``.
    bandwidths : list of float or None
        Gaussian bandwidths ``c * gamma_0``, None for the distance kernel.
    """
    W = _as_joint_data(W, allow_small_n)
    mats = []
    if isinstance(kernel, DistanceInducedKernel):
        a = kernel.a
        for col in W.T:
            mag = np.abs(col) ** a
            mats.append(mag[:, None] + mag[None, :] - np.abs(col[:, None] - col[None, :]) ** a)
        return mats, None
    if isinstance(kernel, GaussianKernel):
        bandwidths = []
        for col in W.T:
            gamma = kernel.c * median_heuristic_bandwidth(col)
            bandwidths.append(gamma)
            mats.append(np.exp(-((col[:, None] - col[None, :]) ** 2) / (2.0 * gamma * gamma)))
        return mats, bandwidths
    raise InvalidInputError(f"unknown kernel specification {kernel!r}")


def _rowmeans(mats):
    return [K.mean(axis=1) for K in mats]


def _term2(rowmeans) -> float:
    return math.prod(float(r.mean()) for r in rowmeans)


def _combine(prod_k: np.ndarray, prod_rows: np.ndarray, term2: float) -> float:
    n = prod_rows.shape[0]
    term1 = math.fsum(prod_k.ravel().tolist()) / (n * n)
    term3 = math.fsum(prod_rows.tolist()) / n
    return term1 + term2 - 2.0 * term3


def statistic_from_kernels(mats: Sequence[np.ndarray]) -> float:
    """Factorized V-statistic ``term1 + term2 - 2 term3`` from kernel matrices."""
    rowmeans = _rowmeans(mats)
    prod_k = np.ones_like(mats[0])
    prod_rows = np.ones_like(rowmeans[0])
    for K, r in zip(mats, rowmeans):
        prod_k *= K
        prod_rows *= r
    return _combine(prod_k, prod_rows, _term2(rowmeans))


def mdcov_v(W, a: float = 1.0, allow_small_n: bool = False) -> float:
    """Multivariate distance covariance V-statistic with exponent ``a``.

    Zero exactly when any component is identically zero, whatever the
    dependence among the others.
    """
    mats, _ = kernel_matrices(W, DistanceInducedKernel(a), allow_small_n)
    return statistic_from_kernels(mats)


def dhsic_v(W, c: float = 1.0, allow_small_n: bool = False) -> float:
    """dHSIC V-statistic with Gaussian kernels of bandwidth ``c * gamma_0``."""
    mats, _ = kernel_matrices(W, GaussianKernel(c), allow_small_n)
    return statistic_from_kernels(mats)


def _replicate_permutations(seed: int, b: int, n: int, count: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
    return np.stack([rng.permutation(n) for _ in range(count)]) if count else np.empty((0, n), int)


def permutation_test(
    kernel: KernelSpec,
    W,
    B: int = 200,
    seed: int = 0,
    allow_small_n: bool = False,
) -> JointTestResult:
    """Permutation test of joint independence.

    Component 1 keeps its order; every other component receives its own
    uniform random permutation of the rows in each replicate. Replicate
    ``b`` draws its permutations from ``(seed, b)`` alone, so the result
    does not depend on evaluation order. Kernel matrices and Gaussian
    bandwidths come from the observed data and are reused for every
    replicate.

    ``p_value = (1 + #{replicate >= observed}) / (B + 1)``.
    """
    if isinstance(B, bool) or int(B) != B or B < 1:
        raise InvalidInputError(f"number of permutations must be a positive integer, got {B!r}")
    B = int(B)
    mats, bandwidths = kernel_matrices(W, kernel, allow_small_n)
    n = mats[0].shape[0]
    rowmeans = _rowmeans(mats)
    term2 = _term2(rowmeans)  # invariant under row permutations
    observed = statistic_from_kernels(mats)

    exceed = 0
    for b in range(B):
        perms = _replicate_permutations(seed, b, n, len(mats) - 1)
        prod_k = mats[0].copy()
        prod_rows = rowmeans[0].copy()
        for K, r, perm in zip(mats[1:], rowmeans[1:], perms):
            prod_k *= K[np.ix_(perm, perm)]
            prod_rows *= r[perm]
        if _combine(prod_k, prod_rows, term2) >= observed:
            exceed += 1
    return JointTestResult(
        statistic=observed,
        p_value=(1 + exceed) / (B + 1),
        permutations=B,
        seed=int(seed),
        per_component_bandwidths=bandwidths,
    )
