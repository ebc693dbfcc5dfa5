"""Command line interface: ``hidcov <subcommand> ...``.

Subcommands
-----------
test-mutual   mutual independence test on a CSV file
test-banded   banded dependence test for one bandwidth or a sweep
test-joint    MdCov or dHSIC permutation test
simulate      Monte Carlo size/power for a scenario, or a recipe of them

Records go to standard output as JSON lines unless ``--format csv`` or
``--output`` say otherwise. The exit status is 0 whenever the test ran,
whatever its decision.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from typing import List, Optional

from . import __version__
from .aggregate import banded_statistic, banded_sweep, mutual_statistic
from .errors import HidcovError, InvalidInputError
from .io import ReportRecord, SimulationRecord, load_dataset, write_records
from .joint import DistanceInducedKernel, GaussianKernel, permutation_test
from .montecarlo import MCConfig, Method, default_workers, estimate_rejection_rate
from .simgen import ScenarioSpec


class _Timer:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self._start = time.perf_counter()

    def elapsed_ms(self) -> Optional[float]:
        # left empty unless requested so identical commands give identical bytes
        if not self.enabled:
            return None
        return round((time.perf_counter() - self._start) * 1e3, 3)


def _emit(records, args):
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_records(records, fh, args.format)
    else:
        write_records(records, sys.stdout, args.format)


def _cmd_test_mutual(args) -> List[ReportRecord]:
    timer = _Timer(args.timing)
    W, _ = load_dataset(args.input, args.transpose)
    res = mutual_statistic(W, args.alpha)
    n, p = W.shape
    return [ReportRecord(
        test="mutual", h=None, a=None, c=None, B=None,
        statistic=res.statistic, p_value=res.p_value, reject=res.reject, alpha=args.alpha,
        n=n, p=p, seed=None, wall_time_ms=timer.elapsed_ms(),
        numerator=res.numerator, s_hat_sq=res.s_hat_sq,
    )]


def _cmd_test_banded(args) -> List[ReportRecord]:
    timer = _Timer(args.timing)
    W, _ = load_dataset(args.input, args.transpose)
    if args.h is not None:
        if args.h_min is not None or args.h_max is not None:
            raise InvalidInputError("use either --h or --h-min/--h-max, not both")
        results = [banded_statistic(W, args.h, args.alpha)]
    else:
        if args.h_min is None or args.h_max is None:
            raise InvalidInputError("give --h, or both --h-min and --h-max")
        results = banded_sweep(W, args.h_min, args.h_max, args.alpha)
    n, p = W.shape
    elapsed = timer.elapsed_ms()
    return [ReportRecord(
        test="banded", h=r.h, a=None, c=None, B=None,
        statistic=r.statistic, p_value=r.p_value, reject=r.reject, alpha=args.alpha,
        n=n, p=p, seed=None, wall_time_ms=elapsed,
        numerator=r.numerator, s_hat_sq=r.s_hat_sq,
    ) for r in results]


def _cmd_test_joint(args) -> List[ReportRecord]:
    timer = _Timer(args.timing)
    W, _ = load_dataset(args.input, args.transpose)
    method = Method.parse(args.method)
    if method.kind == "mdcov":
        kernel = DistanceInducedKernel(args.a if args.a is not None else method.param)
    elif method.kind == "dhsic":
        kernel = GaussianKernel(args.c if args.c is not None else method.param)
    else:
        raise InvalidInputError(f"--method must be mdcov or dhsic, got {args.method!r}")
    res = permutation_test(kernel, W, args.B, args.seed, args.allow_small_n)
    n, p = W.shape
    return [ReportRecord(
        test=kernel.name, h=None,
        a=kernel.a if method.kind == "mdcov" else None,
        c=kernel.c if method.kind == "dhsic" else None,
        B=res.permutations,
        statistic=res.statistic, p_value=res.p_value, reject=res.p_value <= args.alpha,
        alpha=args.alpha, n=n, p=p, seed=res.seed, wall_time_ms=timer.elapsed_ms(),
    )]


def _method_from_args(test: str, h=None, a=None, c=None) -> Method:
    kind = test.split("(", 1)[0].strip()
    override = {"banded": h, "mdcov": a, "dhsic": c}.get(kind)
    if override is not None:
        return Method(kind, override)
    return Method.parse(test)


def _simulate_one(row: dict, workers: int, timing: bool) -> SimulationRecord:
    timer = _Timer(timing)
    spec = ScenarioSpec(row["scenario"], int(row["n"]), int(row["p"]), float(row.get("rho", 0.25)))
    method = _method_from_args(row["test"], row.get("h"), row.get("a"), row.get("c"))
    config = MCConfig(
        replications=int(row.get("reps", 1000)),
        alpha=float(row.get("alpha", 0.05)),
        base_seed=int(row.get("seed", 0)),
        permutations=int(row.get("B", 200)),
        allow_small_n=bool(row.get("allow_small_n", False)),
        workers=workers,
    )
    res = estimate_rejection_rate(spec, method, config)
    return SimulationRecord(
        scenario=spec.kind, test=str(method), n=spec.n, p=spec.p,
        rho=spec.rho if spec.kind.startswith("ex2_") else None,
        alpha=config.alpha, replications=res.replications_run,
        permutations=config.permutations if method.is_joint else None,
        seed=config.base_seed, rejection_rate=res.rejection_rate,
        mc_standard_error=res.mc_standard_error, wall_time_ms=timer.elapsed_ms(),
    )


def load_recipe(name_or_path: str) -> dict:
    """Load a recipe by bundled name (``desk_scale``, ``full_grid``) or file path."""
    bundled = resources.files("hidcov") / "recipes" / f"{name_or_path}.json"
    if bundled.is_file():
        return json.loads(bundled.read_text())
    with open(name_or_path) as fh:
        return json.load(fh)


def _cmd_simulate(args) -> List[SimulationRecord]:
    workers = args.threads if args.threads is not None else default_workers()
    if args.recipe:
        recipe = load_recipe(args.recipe)
        return [_simulate_one(row, workers, args.timing) for row in recipe["rows"]]
    if not (args.scenario and args.n and args.p):
        raise InvalidInputError("simulate needs --scenario, --n and --p (or --recipe)")
    row = {
        "scenario": args.scenario, "n": args.n, "p": args.p, "rho": args.rho,
        "test": args.test, "h": args.h, "a": args.a, "c": args.c,
        "reps": args.reps, "alpha": args.alpha, "seed": args.seed, "B": args.B,
        "allow_small_n": args.allow_small_n,
    }
    return [_simulate_one(row, workers, args.timing)]


def _add_output_flags(sp):
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--output", "-o", help="write records to this file instead of stdout")
    sp.add_argument("--timing", action="store_true", help="fill wall_time_ms (output then varies run to run)")


def _add_input_flags(sp):
    sp.add_argument("input", help="CSV file, rows = observations, columns = variables")
    sp.add_argument("--transpose", action="store_true", help="file has variables in rows")
    sp.add_argument("--alpha", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hidcov",
        description="Distance covariance tests of mutual, banded and joint dependence.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("test-mutual", help="mutual independence test")
    _add_input_flags(sp)
    _add_output_flags(sp)
    sp.set_defaults(func=_cmd_test_mutual)

    sp = sub.add_parser("test-banded", help="banded dependence test or bandwidth sweep")
    _add_input_flags(sp)
    sp.add_argument("--h", type=int)
    sp.add_argument("--h-min", type=int)
    sp.add_argument("--h-max", type=int)
    _add_output_flags(sp)
    sp.set_defaults(func=_cmd_test_banded)

    sp = sub.add_parser("test-joint", help="MdCov / dHSIC permutation test")
    _add_input_flags(sp)
    sp.add_argument("--method", default="dhsic", help="mdcov, dhsic, mdcov(a) or dhsic(c)")
    sp.add_argument("--a", type=float, help="distance kernel exponent in (0, 2)")
    sp.add_argument("--c", type=float, help="Gaussian bandwidth multiplier")
    sp.add_argument("--B", type=int, default=200, help="number of permutations")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--allow-small-n", action="store_true", help="permit n < 2p")
    _add_output_flags(sp)
    sp.set_defaults(func=_cmd_test_joint)

    sp = sub.add_parser("simulate", help="Monte Carlo rejection rate")
    sp.add_argument("--recipe", help="bundled recipe name (desk_scale, full_grid) or JSON file")
    sp.add_argument("--scenario", help="e.g. ex1-gaussian, ex2-ar1, ex6-bernoulli-triples")
    sp.add_argument("--test", default="mutual", help="mutual, banded, mdcov or dhsic")
    sp.add_argument("--h", type=int)
    sp.add_argument("--a", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--rho", type=float, default=0.25)
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--B", type=int, default=200)
    sp.add_argument("--threads", type=int, help="worker processes (default: HIDCOV_THREADS or all cores)")
    sp.add_argument("--allow-small-n", action="store_true")
    _add_output_flags(sp)
    sp.set_defaults(func=_cmd_simulate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        records = args.func(args)
        _emit(records, args)
    except HidcovError as exc:
        print(f"hidcov: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"hidcov: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
