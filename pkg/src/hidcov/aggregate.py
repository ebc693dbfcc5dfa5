"""
Aggregated pairwise distance-covariance tests.

The mutual independence statistic sums the unbiased pairwise distance
covariances of all ``p`` components,

    D = sqrt(C(n,2)) * sum_{l<m} dcov_u(W_l, W_m) / S_hat,
    S_hat^2 = sum_{l<m} dvar_u(W_l) dvar_u(W_m),

and rejects when ``D`` exceeds the upper ``alpha`` quantile of the standard
normal. The banded statistic restricts the sum to pairs with ``|l - m| >= h``
and studentizes with the empirical second moment of the summed product
kernel.

Components are streamed: at most ``h`` U-centered matrices plus two n x n
accumulators are resident at any time. The accumulated matrix is

    G_ij = sum_{m - l >= h} At_ij(l) At_ij(m)
         = sum_m At_ij(m) * (sum_{l <= m - h} At_ij(l)),

built from a running prefix sum, so no large terms cancel.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, Iterator, List

import numpy as np

from .distance import offdiag_sum, u_centered_component
from .errors import DegenerateStudentizerError, InvalidInputError, SampleSizeError

__all__ = [
    "MutualTestResult",
    "BandedTestResult",
    "as_data_matrix",
    "mutual_statistic",
    "variance_estimator_null",
    "banded_statistic",
    "banded_sweep",
    "f_rho",
    "approx_power_equicorr",
    "normal_cdf",
    "normal_sf",
    "z_quantile",
]

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function."""
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_sf(x: float) -> float:
    """Upper tail ``1 - Phi(x)``, accurate far into the tail."""
    return 0.5 * math.erfc(x / _SQRT2)


def z_quantile(alpha: float) -> float:
    """Upper ``alpha`` quantile ``z`` with ``P(N(0,1) > z) = alpha``."""
    _check_alpha(alpha)
    return NormalDist().inv_cdf(1.0 - alpha)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")


@dataclass(frozen=True)
class MutualTestResult:
    numerator: float
    s_hat_sq: float
    statistic: float
    p_value: float
    reject: bool
    alpha: float


@dataclass(frozen=True)
class BandedTestResult:
    numerator: float
    s_hat_sq: float
    statistic: float
    p_value: float
    reject: bool
    alpha: float
    h: int


def as_data_matrix(W, min_p: int = 2) -> np.ndarray:
    """Validate an ``n x p`` data matrix and return it as float64."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise InvalidInputError(f"data matrix must be two-dimensional, got shape {W.shape}")
    n, p = W.shape
    if not np.all(np.isfinite(W)):
        raise InvalidInputError("data matrix contains non-finite values")
    if n < 4:
        raise SampleSizeError(f"need at least 4 observations, got {n}")
    if p < min_p:
        raise InvalidInputError(f"need at least {min_p} components, got {p}")
    return W


def _components(W: np.ndarray, with_dvar: bool) -> Iterator:
    for l in range(W.shape[1]):
        yield u_centered_component(W[:, l], with_dvar=with_dvar)


def _band_products(centered: Iterable[np.ndarray], n: int, h: int) -> np.ndarray:
    """``G = sum_{m - l >= h} At(l) * At(m)`` (elementwise) over a stream."""
    prefix = np.zeros((n, n))
    G = np.zeros((n, n))
    window = deque(maxlen=h)
    for m, At in enumerate(centered):
        if m >= h:
            prefix += window[0]
            G += At * prefix
        window.append(At)
    return G


def _pair_product_sum(values: Iterable[float]) -> float:
    # sum_{l<m} a_l a_m via a running prefix; exact for two terms
    total = 0.0
    acc = 0.0
    for a in values:
        acc += a * total
        total += a
    return acc


def _finish(numerator, s_hat_sq, alpha):
    if not s_hat_sq > 0.0:
        raise DegenerateStudentizerError(
            f"variance estimate is not positive (S_hat^2 = {s_hat_sq!r}); "
            "components are (nearly) constant"
        )
    statistic = numerator / math.sqrt(s_hat_sq)
    return statistic, normal_sf(statistic), bool(statistic > z_quantile(alpha))


def _numerator(G: np.ndarray) -> float:
    n = G.shape[0]
    return math.sqrt(math.comb(n, 2)) * (offdiag_sum(G) / (n * (n - 3)))


def variance_estimator_null(W) -> float:
    """Null variance estimate ``sum_{l<m} dvar_u(W_l) dvar_u(W_m)``.

    Can be nonpositive only when some distance variance estimates are
    negative or all components are constant.
    """
    W = as_data_matrix(W, min_p=1)
    return _pair_product_sum(u_centered_component(W[:, l])[1] for l in range(W.shape[1]))


def mutual_statistic(W, alpha: float = 0.05) -> MutualTestResult:
    """Test mutual independence of the columns of ``W``.

    Parameters
    ----------
    W : array_like, shape (n, p)
        Rows are observations; ``n >= 4``, ``p >= 2``.
    alpha : float
        Nominal level of the one-sided test.

    Returns
    -------
    MutualTestResult
        ``p_value`` is the upper standard normal tail of the statistic.

    Raises
    ------
    InvalidInputError
        Fewer than two non-constant components.
    DegenerateStudentizerError
        The variance estimate is not positive.
    """
    W = as_data_matrix(W)
    _check_alpha(alpha)
    if np.count_nonzero(np.ptp(W, axis=0) > 0) < 2:
        raise InvalidInputError("need at least two non-constant components")
    n = W.shape[0]
    dvars: List[float] = []

    def stream():
        for At, dvar in _components(W, with_dvar=True):
            dvars.append(dvar)
            yield At

    G = _band_products(stream(), n, 1)
    numerator = _numerator(G)
    s_hat_sq = _pair_product_sum(dvars)
    statistic, p_value, reject = _finish(numerator, s_hat_sq, alpha)
    return MutualTestResult(numerator, s_hat_sq, statistic, p_value, reject, alpha)


def _check_band(h, p):
    if isinstance(h, bool) or int(h) != h:
        raise InvalidInputError(f"bandwidth must be an integer, got {h!r}")
    if not 1 <= h <= p - 1:
        raise InvalidInputError(f"bandwidth h must lie in [1, {p - 1}], got {h}")


def _banded_result(G, h, alpha) -> BandedTestResult:
    n = G.shape[0]
    numerator = _numerator(G)
    s_hat_sq = (offdiag_sum(G * G) / 2.0) / math.comb(n, 2)
    statistic, p_value, reject = _finish(numerator, s_hat_sq, alpha)
    return BandedTestResult(numerator, s_hat_sq, statistic, p_value, reject, alpha, int(h))


def banded_statistic(W, h: int, alpha: float = 0.05) -> BandedTestResult:
    """Test that components ``h`` or more apart are independent.

    The variance estimate is the average over pairs ``i < j`` of the squared
    banded product kernel ``(sum_{|l-m|>=h} At_ij(l) At_ij(m))**2``.
    """
    W = as_data_matrix(W)
    _check_alpha(alpha)
    _check_band(h, W.shape[1])
    G = _band_products((At for At, _ in _components(W, False)), W.shape[0], int(h))
    return _banded_result(G, h, alpha)


def banded_sweep(W, h_min: int, h_max: int, alpha: float = 0.05) -> List[BandedTestResult]:
    """Banded test for every bandwidth in ``[h_min, h_max]``, ordered by ``h``.

    The U-centered matrices are computed once and shared by all bandwidths;
    each entry equals :func:`banded_statistic` at that ``h``. Results are
    marginal per bandwidth, with no multiplicity adjustment.
    """
    W = as_data_matrix(W)
    _check_alpha(alpha)
    p = W.shape[1]
    _check_band(h_min, p)
    _check_band(h_max, p)
    if h_min > h_max:
        raise InvalidInputError(f"h_min ({h_min}) exceeds h_max ({h_max})")
    centered = [At for At, _ in _components(W, False)]
    n = W.shape[0]
    return [
        _banded_result(_band_products(centered, n, h), h, alpha)
        for h in range(int(h_min), int(h_max) + 1)
    ]


def f_rho(rho: float) -> float:
    """Squared distance covariance of two standard normals with correlation ``rho``.

    ``(4/pi) [rho asin(rho) + sqrt(1-rho^2) - rho asin(rho/2) - sqrt(4-rho^2) + 1]``
    """
    if not -1.0 <= rho <= 1.0:
        raise InvalidInputError(f"correlation must lie in [-1, 1], got {rho}")
    inner = (
        rho * math.asin(rho)
        + math.sqrt(1.0 - rho * rho)
        - rho * math.asin(rho / 2.0)
        - math.sqrt(4.0 - rho * rho)
        + 1.0
    )
    return 4.0 / math.pi * inner


def approx_power_equicorr(n: int, p: int, rho: float, alpha: float = 0.05) -> float:
    """Approximate power of the mutual test under Gaussian equicorrelation.

    Uses ``Phi(-z_alpha + sqrt(C(n,2)) C(p,2) f(rho) / S)`` with ``S`` held at
    its null value ``sqrt(C(p,2)) f(1)``. This is only sensible for small
    ``rho``; no closed form for ``S`` under the alternative is used.
    """
    if n < 4 or p < 2:
        raise InvalidInputError(f"need n >= 4 and p >= 2, got n={n}, p={p}")
    pairs = math.comb(p, 2)
    s_null = math.sqrt(pairs) * f_rho(1.0)
    shift = math.sqrt(math.comb(n, 2)) * pairs * f_rho(rho) / s_null
    return normal_cdf(-z_quantile(alpha) + shift)
