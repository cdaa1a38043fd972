"""Command-line front end.

    gaussbai solve 0.9 0.8 0.6 0.4 0.4
    gaussbai ebweights 0.7,0.9 0.5,0.8 0.2,0.75 0.1,0.3
    gaussbai simulate experiment.json --out table.csv
    gaussbai trace experiment.json --out trace.csv

Exit codes: 0 success, 2 usage or validation error, 3 solver failure (also
used when ``ebweights --check-oracle`` finds a better grid point).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import jsonschema

from .complexity import (
    BanditInstance,
    DomainError,
    SolverError,
    characteristic_bounds,
    compute_gaps,
    kl_bernoulli,
    solve_allocation,
)
from .confidence import (
    ConfidenceRegion,
    RadiusScheme,
    brute_force_eb_bandit,
    exploration_biased_weights,
)
from .simulator import DEFAULT_MAX_STEPS, SimulationConfig, TrajectorySpec, monte_carlo, run_once
from .strategies import STRATEGY_IDS, StrategySpec, ThresholdSpec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3

SIMULATE_HEADER = ("strategy", "delta", "gamma", "replications", "mean_tau", "std_tau",
                   "error_rate", "truncated", "lower_bound")

_PROB = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

EXPERIMENT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["instance", "strategies"],
    "oneOf": [{"required": ["delta"]}, {"required": ["deltas"]}],
    "properties": {
        "instance": {"type": "array", "items": {"type": "number"}, "minItems": 2},
        "strategies": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id"],
                "properties": {
                    "id": {"enum": list(STRATEGY_IDS)},
                    "gamma": _PROB,
                    "threshold": {
                        "oneOf": [
                            {"const": "empirical"},
                            {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["theoretical"],
                                "properties": {
                                    "theoretical": {
                                        "type": "object",
                                        "additionalProperties": False,
                                        "properties": {
                                            "R": {"type": "number", "exclusiveMinimum": 0},
                                            "alpha": {"type": "number", "minimum": 1, "maximum": 2},
                                        },
                                    }
                                },
                            },
                        ]
                    },
                    "tracking": {"enum": ["C", "D"]},
                    "radius": {"enum": ["empirical", "theoretical"]},
                    "elimination": {"enum": ["worst", "all"]},
                    "clamp": {"type": "boolean"},
                },
            },
        },
        "delta": _PROB,
        "deltas": {"type": "array", "items": _PROB, "minItems": 1},
        "replications": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "max_steps": {"type": "integer", "minimum": 2},
        "trajectory": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "stride": {"type": "integer", "minimum": 1},
                "dense_until": {"type": "integer", "minimum": 0},
            },
        },
    },
}

DEFAULT_REPLICATIONS = 100


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".10g")


def _vec(xs, digits: int = 6) -> str:
    return " ".join(f"{x:.{digits}f}" for x in xs)


# ---------------------------------------------------------------- experiments

def load_experiment(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(doc, EXPERIMENT_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"{path}: {where}: {exc.message}") from exc
    return doc


def strategy_from_entry(entry: dict, delta: float, clamp: bool = False) -> StrategySpec:
    sid = entry["id"]
    kwargs = {}
    if "tracking" in entry:
        if sid[-2:] not in ("-c", "-d"):
            raise UsageError(f"strategy {sid!r} does not track weights; drop 'tracking'")
        if entry["tracking"] != sid[-1].upper():
            raise UsageError(f"strategy {sid!r} conflicts with tracking {entry['tracking']!r}")
    thr = entry.get("threshold", "empirical")
    if thr == "empirical":
        threshold = ThresholdSpec("empirical", delta)
    else:
        th = thr["theoretical"]
        threshold = ThresholdSpec("theoretical", delta, R=th.get("R", 1.0), alpha=th.get("alpha", 1.0))
    kwargs["threshold"] = threshold
    kwargs["scheme"] = RadiusScheme(entry.get("radius", "empirical"), entry.get("gamma", 0.1))
    kwargs["clamp"] = bool(entry.get("clamp", clamp))
    kwargs["racing_test_all"] = entry.get("elimination", "worst") == "all"
    return StrategySpec.from_id(sid, **kwargs)


def _deltas(doc: dict) -> list[float]:
    return list(doc["deltas"]) if "deltas" in doc else [doc["delta"]]


def simulate_rows(doc: dict, seed: int | None = None, reps: int | None = None,
                  n_jobs: int = 1, clamp: bool = False) -> list[tuple]:
    inst = BanditInstance(tuple(doc["instance"]))
    alloc = solve_allocation(inst)
    replications = reps if reps is not None else doc.get("replications", DEFAULT_REPLICATIONS)
    seed = seed if seed is not None else doc.get("seed", 0)
    rows = []
    for entry in doc["strategies"]:
        for delta in _deltas(doc):
            spec = strategy_from_entry(entry, delta, clamp)
            cfg = SimulationConfig(inst, spec, replications=replications, master_seed=seed,
                                   max_steps=doc.get("max_steps", DEFAULT_MAX_STEPS))
            stats = monte_carlo(cfg, n_jobs=n_jobs)
            lb = alloc.characteristic_time * kl_bernoulli(delta, 1.0 - delta)
            rows.append((spec.id, delta, spec.scheme.gamma, stats.replications, stats.mean_tau,
                         stats.std_tau, stats.error_rate, stats.truncation_count, lb))
    return rows


def trace_rows(doc: dict, seed: int | None = None, run_index: int = 0, clamp: bool = False):
    if len(doc["strategies"]) != 1:
        raise UsageError("trace needs exactly one strategy")
    deltas = _deltas(doc)
    if len(deltas) != 1:
        raise UsageError("trace needs a single delta")
    inst = BanditInstance(tuple(doc["instance"]))
    tj = doc.get("trajectory", {})
    traj = TrajectorySpec(stride=tj.get("stride", 10), dense_until=tj.get("dense_until", 1200))
    spec = strategy_from_entry(doc["strategies"][0], deltas[0], clamp)
    cfg = SimulationConfig(inst, spec, master_seed=seed if seed is not None else doc.get("seed", 0),
                           max_steps=doc.get("max_steps", DEFAULT_MAX_STEPS), trajectory=traj)
    res = run_once(cfg, run_index)
    K = inst.K
    header = ["t"] + [f"freq_{a + 1}" for a in range(K)] + [f"target_{a + 1}" for a in range(K)]
    tr = res.trajectory
    rows = [[int(t), *f.tolist(), *w.tolist()] for t, f, w in zip(tr.t, tr.frequencies, tr.targets)]
    return header, rows, res


def _write_csv(header, rows, out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) if isinstance(x, float) else x for x in row])
    if out is None or out == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())


# ------------------------------------------------------------------- commands

def cmd_solve(args) -> int:
    inst = BanditInstance(tuple(args.means))
    gaps = compute_gaps(inst)
    alloc = solve_allocation(inst, tol=args.tol)
    print(f"K = {inst.K}")
    print(f"gaps = {_vec(gaps.gaps)}")
    if alloc.degenerate:
        print(f"best arms = {' '.join(str(a + 1) for a in sorted(gaps.best_arms))} (tied)")
        print(f"w = {_vec(alloc.weights)}  (uniform over best arms)")
        print("T = inf")
        return EXIT_OK
    b = characteristic_bounds(gaps)
    print(f"r = {alloc.r:.6f}  (Newton iterations: {alloc.iterations})")
    print(f"w = {_vec(alloc.weights)}")
    print(f"T = {alloc.characteristic_time:.6f}")
    print(f"r bounds = [{b.r_lo:.6f}, {b.r_hi:.6f}]")
    print(f"w_max bounds = [{b.wmax_lo:.6f}, {b.wmax_hi:.6f}]")
    print(f"T bounds = [{b.T_lo:.6f}, {b.T_hi:.6f}]")
    return EXIT_OK


def _parse_interval(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"interval {text!r} is not of the form lo,hi")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise UsageError(f"interval {text!r} is not numeric") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError(f"interval {text!r} is not finite")
    if lo > hi:
        raise UsageError(f"interval {text!r} has lo > hi")
    return lo, hi


def cmd_ebweights(args) -> int:
    ivs = [_parse_interval(s) for s in args.intervals]
    if len(ivs) < 2:
        raise UsageError("need at least 2 intervals")
    if args.clamp:
        ivs = [(min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)) for lo, hi in ivs]
    region = ConfidenceRegion(tuple(ivs))
    out = exploration_biased_weights(region, tol=args.tol)
    print(f"K = {region.K}")
    print(f"mu_tilde = {_vec(out.biased_bandit.means)}")
    print(f"w = {_vec(out.weights)}")
    print(f"w_min = {out.w_min:.6f}")
    if out.uniform:
        print("uniform: all intervals share a point")
    if args.check_oracle is not None:
        grid = brute_force_eb_bandit(region, args.check_oracle)
        grid_wmin = solve_allocation(grid).w_min
        ok = grid_wmin <= out.w_min + args.check_oracle
        print(f"oracle w_min = {grid_wmin:.6f} at {_vec(grid.means)}: {'agree' if ok else 'DISAGREE'}")
        if not ok:
            return EXIT_SOLVER
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = load_experiment(args.experiment)
    rows = simulate_rows(doc, seed=args.seed, reps=args.reps, n_jobs=args.jobs, clamp=args.clamp)
    _write_csv(SIMULATE_HEADER, rows, args.out)
    return EXIT_OK


def cmd_trace(args) -> int:
    doc = load_experiment(args.experiment)
    header, rows, res = trace_rows(doc, seed=args.seed, run_index=args.run_index, clamp=args.clamp)
    _write_csv(header, rows, args.out)
    if res.truncated:
        print(f"warning: run truncated at t={res.tau}", file=sys.stderr)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gaussbai", description="Best-arm identification for Gaussian bandits.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="optimal weights and characteristic time")
    s.add_argument("means", type=float, nargs="+")
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("ebweights", help="exploration-biased weights of a box region")
    e.add_argument("intervals", nargs="+", help="lo,hi per arm (put -- before the first interval if it starts with a minus sign)")
    e.add_argument("--tol", type=float, default=1e-10)
    e.add_argument("--clamp", action="store_true", help="project intervals onto [0, 1]")
    e.add_argument("--check-oracle", type=float, metavar="STEP", default=None,
                   help="compare with the grid oracle (K <= 3) at this step")
    e.set_defaults(func=cmd_ebweights)

    for name, func, helptext in (("simulate", cmd_simulate, "Monte-Carlo table as CSV"),
                                 ("trace", cmd_trace, "one run's trajectory as CSV")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("experiment", help="experiment file (JSON)")
        c.add_argument("--out", default=None, help="output CSV (default stdout)")
        c.add_argument("--seed", type=int, default=None)
        c.add_argument("--clamp", action="store_true", help="clamp confidence regions to [0, 1]")
        if name == "simulate":
            c.add_argument("--reps", type=int, default=None)
            c.add_argument("--jobs", type=int, default=1)
        else:
            c.add_argument("--run-index", type=int, default=0)
        c.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "reps", None) is not None and args.reps < 1:
            raise UsageError("--reps must be >= 1")
        if getattr(args, "seed", None) is not None and args.seed < 0:
            raise UsageError("--seed must be >= 0")
        if getattr(args, "tol", 1.0) <= 0:
            raise UsageError("--tol must be positive")
        return args.func(args)
    except UsageError as exc:
        print(f"gaussbai: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"gaussbai: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"gaussbai: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
