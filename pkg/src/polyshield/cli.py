"""Command-line front end: train, cegis, simulate, report.

Every command takes a registered benchmark name, drives the corresponding
pipeline stage, and writes versioned artifacts (weight files, shield files,
JSON/CSV reports).  All randomness flows from a single --seed so any report
can be regenerated from its command line.  Exit codes: 0 success, 1 runtime
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import benchmarks, cegis as cegis_mod, oracle, shield
from .synthesis import LinearSketch

REPORT_VERSION = "polyshield-report-1"


class UsageError(Exception):
    pass


def _benchmark(name: str) -> benchmarks.BenchmarkDef:
    try:
        return benchmarks.get_benchmark(name)
    except KeyError as exc:
        raise UsageError(str(exc)) from None


def _config_hash(args: argparse.Namespace) -> str:
    payload = json.dumps({k: v for k, v in sorted(vars(args).items())
                          if k != "func"}, default=str, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _write_report(path, command: str, args, payload: dict) -> None:
    record = {
        "version": REPORT_VERSION,
        "command": command,
        "config_hash": _config_hash(args),
        "seed": getattr(args, "seed", None),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        **payload,
    }
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2)
    print(f"wrote {path}")


# -- train -------------------------------------------------------------


def cmd_train(args) -> int:
    bench = _benchmark(args.benchmark)
    hidden = [int(h) for h in args.hidden.split(",")] if args.hidden \
        else list(bench.hidden)
    if any(h <= 0 for h in hidden):
        raise UsageError("hidden layer sizes must be positive")
    cfg = dataclasses.replace(bench.train, seed=args.seed)
    t0 = time.time()
    result = oracle.train(bench.env, hidden, cfg, bench.action_scale)
    out = args.out or f"{bench.name}-weights.txt"
    oracle.save_weights(result.policy, out)
    curve_path = out + ".curve.csv"
    with open(curve_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "best_eval_reward"])
        w.writerows(enumerate(result.curve))
    print(f"trained {bench.name} in {time.time() - t0:.1f}s, "
          f"final eval reward {result.curve[-1]:.3f}")
    print(f"wrote {out} and {curve_path}")
    return 0


# -- cegis -------------------------------------------------------------


def cmd_cegis(args) -> int:
    bench = _benchmark(args.benchmark)
    cfg = dataclasses.replace(bench.cegis, seed=args.seed)
    if args.degree is not None:
        if args.degree < 2 or args.degree % 2 != 0:
            raise UsageError("--degree must be even and >= 2")
        cfg = dataclasses.replace(cfg, degree_bound=args.degree)
    policy = oracle.load_weights(args.weights)
    if args.max_iterations is not None:
        cfg = dataclasses.replace(cfg, max_outer_iterations=args.max_iterations)
    sketch = LinearSketch(bench.env.n, bench.env.m)
    out = args.out or f"{bench.name}-shield.json"
    t0 = time.time()
    try:
        sp = cegis_mod.cegis(policy, sketch, bench.env, cfg)
    except cegis_mod.CegisError as exc:
        # keep whatever was verified so the failure can be inspected
        cegis_mod.save_shield(exc.partial, out + ".partial")
        print(f"cegis failed after {time.time() - t0:.1f}s: {exc.reason}",
              file=sys.stderr)
        print(f"wrote partial shield {out}.partial", file=sys.stderr)
        return 1
    cegis_mod.save_shield(sp, out)
    entries = [{
        "theta": p.theta.tolist(),
        "degree": c.degree,
        "mult_degree": c.mult_degree,
        "invariant": c.E.to_string(),
        "region_lo": c.region.lo.tolist(),
        "region_hi": c.region.hi.tolist(),
        "solver_stats": c.solver_stats,
    } for p, c in sp.entries]
    _write_report(out + ".report.json", "cegis", args, {
        "benchmark": bench.name,
        "elapsed_seconds": time.time() - t0,
        "entries": entries,
        "artifacts": [out],
    })
    print(f"verified shield with {len(sp.entries)} entries "
          f"in {time.time() - t0:.1f}s")
    return 0


# -- simulate ----------------------------------------------------------


def _plot_grid(bench, sp, path, per_dim: int = 60) -> None:
    """Min invariant value on a state-box grid, for contour plotting."""
    if bench.env.n != 2:
        raise UsageError("--plot-data requires a 2-D state space")
    S = bench.env.unsafe.safe_box.inflate(0.2).grid(per_dim)
    vals = np.min(np.stack([c.E.eval_many(S) for _, c in sp.entries]), axis=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s0", "s1", "min_invariant_value"])
        w.writerows(np.column_stack([S, vals]).tolist())
    print(f"wrote {path}")


def cmd_simulate(args) -> int:
    bench = _benchmark(args.benchmark)
    policy = oracle.load_weights(args.weights)
    if policy.n_in != bench.env.n or policy.n_out != bench.env.m:
        raise UsageError("weight file does not match benchmark dimensions")
    out = args.out or f"{bench.name}-simulate.json"
    if args.no_shield:
        rng = np.random.default_rng(args.seed)
        starts = bench.env.s0_set.sample(rng, args.episodes)
        unsafe = 0
        steady = []
        for ep in range(args.episodes):
            states, bad, _, _ = shield._episode(
                bench.env, lambda s: (policy(s), None), starts[ep],
                args.steps, np.random.default_rng(args.seed + 7 * ep))
            unsafe += bad
            steady.append(shield._steady_at(states, bench.env, args.steps))
        payload = {
            "benchmark": bench.name,
            "shielded": False,
            "episodes": args.episodes,
            "steps_per_episode": args.steps,
            "unsafe_entries_unshielded": unsafe,
            "steps_to_steady_unshielded": float(np.mean(steady)),
        }
    else:
        if not args.shield:
            raise UsageError("--shield FILE is required unless --no-shield")
        sp = cegis_mod.load_shield(args.shield)
        if sp.entries and sp.n != bench.env.n:
            raise UsageError("shield file does not match benchmark dimensions")
        metrics = shield.run_shielded(bench.env, policy, sp, args.episodes,
                                     args.steps, args.seed,
                                     log_path=args.step_log)
        payload = {"benchmark": bench.name, "shielded": True,
                   **metrics.as_record()}
        if args.plot_data:
            _plot_grid(bench, sp, args.plot_data)
    _write_report(out, "simulate", args, payload)
    return 0


# -- report ------------------------------------------------------------

_TABLE_COLUMNS = [
    ("benchmark", "Benchmark"),
    ("unsafe_entries_shielded", "Failures"),
    ("unsafe_entries_unshielded", "Failures-NoShield"),
    ("interventions", "Interventions"),
    ("overhead_fraction", "Overhead"),
    ("steps_to_steady_shielded", "Steady-NN"),
    ("steps_to_steady_program", "Steady-Program"),
]


def cmd_report(args) -> int:
    rows = []
    for path in args.reports:
        with open(path) as fh:
            data = json.load(fh)
        if data.get("version") != REPORT_VERSION:
            raise UsageError(f"{path}: not a recognized report file")
        rows.append(data)
    rows.sort(key=lambda r: (r.get("benchmark", ""), r.get("timestamp", "")))
    cells = [[str(r.get(key, "-")) if not isinstance(r.get(key), float)
              else f"{r[key]:.4g}" for key, _ in _TABLE_COLUMNS] for r in rows]
    headers = [h for _, h in _TABLE_COLUMNS]
    widths = [max(len(h), *(len(c[i]) for c in cells))
              for i, h in enumerate(headers)]
    print("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    for c in cells:
        print("  ".join(v.ljust(w) for v, w in zip(c, widths)))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([k for k, _ in _TABLE_COLUMNS])
            for r in rows:
                w.writerow([r.get(k, "") for k, _ in _TABLE_COLUMNS])
        print(f"wrote {args.out}")
    return 0


# -- entry point -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyshield",
        description="distill, verify, and shield neural control policies")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the neural oracle")
    p.add_argument("benchmark")
    p.add_argument("--hidden", default=None,
                   help="comma-separated hidden layer sizes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="weight file path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cegis",
                       help="distill and verify a guarded shield program")
    p.add_argument("benchmark")
    p.add_argument("--weights", required=True)
    p.add_argument("--degree", type=int, default=None,
                   help="invariant degree bound (even)")
    p.add_argument("--max-iterations", type=int, default=None,
                   help="outer loop budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="shield file path")
    p.set_defaults(func=cmd_cegis)

    p = sub.add_parser("simulate", help="run shielded or baseline episodes")
    p.add_argument("benchmark")
    p.add_argument("--weights", required=True)
    p.add_argument("--shield", default=None, help="shield file from cegis")
    p.add_argument("--no-shield", action="store_true",
                   help="unshielded neural baseline")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plot-data", default=None,
                   help="CSV of invariant values on a state grid")
    p.add_argument("--step-log", default=None,
                   help="per-step CSV log of the shielded run")
    p.add_argument("--out", default=None, help="report path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="aggregate simulation reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", default=None, help="CSV output path")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
