"""
Monte Carlo estimation of size and power.

Replication ``r`` draws its data from ``RngSeed(base_seed, r)`` and, for the
permutation tests, its permutations from a separate stream keyed by
``(base_seed, r, 1)``. Results therefore do not depend on the number of
worker processes or the order in which replications finish.
"""
from __future__ import annotations

import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .aggregate import banded_statistic, mutual_statistic
from .errors import HidcovError, InvalidInputError
from .joint import DistanceInducedKernel, GaussianKernel, permutation_test
from .simgen import RngSeed, ScenarioSpec, generate

__all__ = [
    "Method",
    "MCConfig",
    "MCResult",
    "ReplicationError",
    "estimate_rejection_rate",
    "null_statistic_sample",
    "default_workers",
]


class ReplicationError(HidcovError):
    """A single replication failed; the whole run is aborted."""

    def __init__(self, replicate: int, cause: Exception):
        super().__init__(f"replicate {replicate} failed: {cause}")
        self.replicate = replicate


_METHOD_RE = re.compile(r"^\s*(mutual|banded|mdcov|dhsic)\s*(?:\(\s*([^)]*?)\s*\))?\s*$")
_DEFAULT_PARAM = {"banded": None, "mdcov": 1.0, "dhsic": 1.0}


@dataclass(frozen=True)
class Method:
    """A test to run on each replication.

    ``param`` is the bandwidth ``h`` for ``banded``, the exponent ``a`` for
    ``mdcov`` and the bandwidth multiplier ``c`` for ``dhsic``.
    """

    kind: str
    param: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("mutual", "banded", "mdcov", "dhsic"):
            raise InvalidInputError(f"unknown test {self.kind!r}")
        if self.kind == "banded":
            if self.param is None or int(self.param) != self.param or self.param < 1:
                raise InvalidInputError("banded test needs an integer bandwidth h >= 1")
            object.__setattr__(self, "param", int(self.param))
        elif self.kind == "mutual":
            object.__setattr__(self, "param", None)
        elif self.param is None:
            object.__setattr__(self, "param", _DEFAULT_PARAM[self.kind])
        if self.kind == "mdcov":
            DistanceInducedKernel(self.param)
        elif self.kind == "dhsic":
            GaussianKernel(self.param)

    @classmethod
    def parse(cls, text: str) -> "Method":
        """Parse ``mutual``, ``banded(3)``, ``mdcov(1)`` or ``dhsic(0.5)``."""
        m = _METHOD_RE.match(text)
        if not m:
            raise InvalidInputError(f"cannot parse test {text!r}")
        kind, arg = m.groups()
        param = None
        if arg:
            param = float(arg)
            if param.is_integer() and kind == "banded":
                param = int(param)
        return cls(kind, param)

    @property
    def is_joint(self) -> bool:
        return self.kind in ("mdcov", "dhsic")

    def __str__(self) -> str:
        return self.kind if self.param is None else f"{self.kind}({self.param:g})"


@dataclass(frozen=True)
class MCConfig:
    replications: int = 1000
    alpha: float = 0.05
    base_seed: int = 0
    permutations: int = 200
    allow_small_n: bool = False
    keep_statistics: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidInputError(f"replications must be >= 1, got {self.replications}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.permutations < 1:
            raise InvalidInputError(f"permutations must be >= 1, got {self.permutations}")
        if self.workers < 1:
            raise InvalidInputError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class MCResult:
    rejection_rate: float
    mc_standard_error: float
    replications_run: int
    statistic_samples: Optional[List[float]] = field(default=None, repr=False)

    @classmethod
    def from_counts(cls, rejections: int, replications: int, samples=None) -> "MCResult":
        rate = rejections / replications
        return cls(rate, math.sqrt(rate * (1.0 - rate) / replications), replications, samples)


def default_workers() -> int:
    """Worker count from ``HIDCOV_THREADS``, falling back to all cores."""
    env = os.environ.get("HIDCOV_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InvalidInputError(f"HIDCOV_THREADS must be an integer, got {env!r}") from None
        if value < 1:
            raise InvalidInputError(f"HIDCOV_THREADS must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def _check_compatible(spec: ScenarioSpec, method: Method, config: MCConfig):
    if method.kind == "banded" and not 1 <= method.param <= spec.p - 1:
        raise InvalidInputError(f"bandwidth h={method.param} outside [1, {spec.p - 1}]")
    if method.is_joint and not config.allow_small_n and spec.n < 2 * spec.p:
        raise InvalidInputError(
            f"{method.kind} requires n >= 2p (got n={spec.n}, p={spec.p}); set allow_small_n to override"
        )
    if method.kind in ("mutual", "banded") and (spec.n < 4 or spec.p < 2):
        raise InvalidInputError(f"{method.kind} needs n >= 4 and p >= 2")


def _permutation_seed(base_seed: int, replicate: int) -> int:
    ss = np.random.SeedSequence(base_seed, spawn_key=(replicate, 1))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _replicate(spec: ScenarioSpec, method: Method, config: MCConfig, r: int):
    """Run replication ``r``; returns ``(reject, statistic)``."""
    try:
        W = generate(spec, RngSeed(config.base_seed, r))
        if method.kind == "mutual":
            res = mutual_statistic(W, config.alpha)
            return res.reject, res.statistic
        if method.kind == "banded":
            res = banded_statistic(W, method.param, config.alpha)
            return res.reject, res.statistic
        kernel = DistanceInducedKernel(method.param) if method.kind == "mdcov" else GaussianKernel(method.param)
        res = permutation_test(
            kernel, W, config.permutations, _permutation_seed(config.base_seed, r), config.allow_small_n
        )
        return res.p_value <= config.alpha, res.statistic
    except HidcovError as exc:
        raise ReplicationError(r, exc) from exc


def _run_chunk(spec, method, config, indices):
    return [_replicate(spec, method, config, r) for r in indices]


def _run_all(spec: ScenarioSpec, method: Method, config: MCConfig):
    R = config.replications
    workers = min(config.workers, R)
    if workers == 1:
        return _run_chunk(spec, method, config, range(R))
    bounds = np.linspace(0, R, workers + 1).astype(int)
    chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, spec, method, config, c) for c in chunks]
        out = []
        for fut in futures:  # submission order keeps results indexed by replicate
            out.extend(fut.result())
    return out


def estimate_rejection_rate(spec: ScenarioSpec, method: Method, config: MCConfig) -> MCResult:
    """Rejection rate of ``method`` at level ``config.alpha`` over replications of ``spec``.

    Any failing replication aborts the run with :class:`ReplicationError`.
    """
    _check_compatible(spec, method, config)
    outcomes = _run_all(spec, method, config)
    rejections = sum(1 for reject, _ in outcomes if reject)
    samples = [float(s) for _, s in outcomes] if config.keep_statistics else None
    return MCResult.from_counts(rejections, len(outcomes), samples)


def null_statistic_sample(spec: ScenarioSpec, config: MCConfig) -> np.ndarray:
    """Mutual-test statistics over ``config.replications`` null replications."""
    if not spec.is_null:
        raise InvalidInputError(f"{spec.kind} is not a null scenario")
    method = Method("mutual")
    _check_compatible(spec, method, config)
    return np.array([s for _, s in _run_all(spec, method, config)])
