"""
Data generators for the simulation designs.

Every generator is a pure function of ``(ScenarioSpec, RngSeed)``. Seeds map
to a :class:`numpy.random.SeedSequence` whose spawn key is the replication
index, so replication ``r`` of a run always sees the same stream.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "SCENARIOS",
    "NULL_SCENARIOS",
    "ScenarioSpec",
    "RngSeed",
    "covariance_matrix",
    "cholesky",
    "generate",
]

SCENARIOS = (
    "ex1_gaussian",
    "ex1_copula_cbrt",
    "ex1_copula_cube",
    "ex1_t3",
    "ex2_ar1",
    "ex2_band",
    "ex2_block",
    "ex3_trig_blocks",
    "ex4_log_square",
    "ex5_sin_harmonics",
    "ex6_bernoulli_triples",
)
NULL_SCENARIOS = frozenset(s for s in SCENARIOS if s.startswith("ex1_"))

_DIVISORS = {"ex3_trig_blocks": 5, "ex4_log_square": 2, "ex6_bernoulli_triples": 3}


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    n: int
    p: int
    rho: float = 0.25

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        object.__setattr__(self, "kind", kind)
        if kind not in SCENARIOS:
            raise InvalidInputError(f"unknown scenario {self.kind!r}; choose from {', '.join(SCENARIOS)}")
        if self.n < 1 or self.p < 1:
            raise InvalidInputError(f"n and p must be positive, got n={self.n}, p={self.p}")
        d = _DIVISORS.get(kind)
        if d is not None and self.p % d:
            raise InvalidInputError(f"{kind} requires p divisible by {d}, got p={self.p}")
        if kind.startswith("ex2_") and not -1.0 < self.rho < 1.0:
            raise InvalidInputError(f"rho must lie in (-1, 1), got {self.rho}")

    @property
    def is_null(self) -> bool:
        return self.kind in NULL_SCENARIOS


@dataclass(frozen=True)
class RngSeed:
    """A base seed plus a replication index."""

    seed: int
    replication: int = 0

    def sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=(self.replication,))

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.sequence())


def covariance_matrix(kind: str, p: int, rho: float = 0.25) -> np.ndarray:
    """Correlation matrix for the ``ar1``, ``band`` or ``block`` design.

    ``ar1``: ``rho**|i-j|``. ``band``: ``rho`` for ``0 < |i-j| < 3``, else 0.
    ``block``: ``floor(p/5)`` equicorrelated 5 x 5 blocks on the diagonal;
    trailing components beyond ``5 * floor(p/5)`` are uncorrelated.
    """
    if p < 1:
        raise InvalidInputError(f"p must be positive, got {p}")
    if not -1.0 < rho < 1.0:
        raise InvalidInputError(f"rho must lie in (-1, 1), got {rho}")
    lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    if kind == "ar1":
        return rho ** lag.astype(np.float64)
    if kind == "band":
        return np.where(lag == 0, 1.0, np.where(lag < 3, rho, 0.0))
    if kind == "block":
        block = np.full((5, 5), rho)
        np.fill_diagonal(block, 1.0)
        sigma = np.eye(p)
        k = p // 5
        sigma[: 5 * k, : 5 * k] = np.kron(np.eye(k), block)
        return sigma
    raise InvalidInputError(f"unknown covariance structure {kind!r}")


def cholesky(sigma) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == sigma``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InvalidInputError(f"covariance must be square, got shape {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-12):
        raise InvalidInputError("covariance matrix is not symmetric")
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError("covariance matrix is not positive definite") from exc


def _redraw_zeros(rng, omega):
    # log(0) has probability zero; redraw exact zeros to avoid -inf
    zero = omega == 0.0
    while zero.any():
        omega[zero] = rng.standard_normal(int(zero.sum()))
        zero = omega == 0.0
    return omega


def generate(spec: ScenarioSpec, seed: Union[RngSeed, int]) -> np.ndarray:
    """Draw an ``n x p`` data matrix for ``spec``."""
    if not isinstance(seed, RngSeed):
        seed = RngSeed(int(seed))
    rng = seed.generator()
    kind, n, p = spec.kind, spec.n, spec.p

    if kind == "ex1_gaussian":
        return rng.standard_normal((n, p))
    if kind == "ex1_copula_cbrt":
        return np.cbrt(rng.standard_normal((n, p)))
    if kind == "ex1_copula_cube":
        return rng.standard_normal((n, p)) ** 3
    if kind == "ex1_t3":
        return rng.standard_t(3, size=(n, p))
    if kind.startswith("ex2_"):
        L = cholesky(covariance_matrix(kind[4:], p, spec.rho))
        return rng.standard_normal((n, p)) @ L.T
    if kind == "ex3_trig_blocks":
        omega = rng.standard_normal((n, p // 5))
        two_pi = 2.0 * np.pi
        return np.hstack([
            omega,
            np.sin(two_pi * omega),
            np.cos(two_pi * omega),
            np.sin(2.0 * two_pi * omega),
            np.cos(2.0 * two_pi * omega),
        ])
    if kind == "ex4_log_square":
        omega = _redraw_zeros(rng, rng.standard_normal((n, p // 2)))
        return np.hstack([omega, np.log(omega**2)])
    if kind == "ex5_sin_harmonics":
        omega = rng.standard_normal(n)
        return np.sin(np.pi * np.outer(omega, np.arange(1, p + 1)))
    if kind == "ex6_bernoulli_triples":
        z1 = rng.integers(0, 2, size=(n, p // 3))
        z2 = rng.integers(0, 2, size=(n, p // 3))
        z3 = (z1 == z2).astype(np.int64)
        # triple t occupies columns 3t, 3t+1, 3t+2
        return np.stack([z1, z2, z3], axis=2).reshape(n, p).astype(np.float64)
    raise InvalidInputError(f"unhandled scenario {kind!r}")
