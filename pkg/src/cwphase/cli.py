"""Command line: ``cwphase {sweep,trace,check,asymptote}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigurationError
from .experiment import DEFAULT_N_GRID, SweepSpec, load_spec, report, resolve_params, rows_to_csv, run_sweep
from .metrics import ASYMPTOTES, FOUR_OVER_PI, SQRT2
from .schemes import SchemeKind, run_trajectory, write_trace


def _schemes(text):
    return tuple(SchemeKind.parse(s) for s in text.split(",") if s.strip())


def _grid(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def cmd_sweep(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else None
    spec = load_spec(text, {
        "seed": args.seed, "jobs": args.jobs, "out": args.out, "schemes": args.schemes,
        "n_grid": args.n_grid, "n_traj": args.n_traj, "steady_time": args.steady_time,
    })
    rows = run_sweep(spec)
    if not spec.out:
        sys.stdout.write(rows_to_csv(rows))
    sys.stdout.write(report(rows))
    bad = [r for r in rows if not r.ok]
    for r in bad:
        print(f"cell {r.scheme} N={r.N:g}: {r.status}", file=sys.stderr)
    return 2 if bad else 0


def cmd_trace(args) -> int:
    kind = SchemeKind.parse(args.scheme)
    spec = SweepSpec(schemes=(kind,), n_grid=(args.N,), seed=args.seed, steady_time=args.steady_time,
                     chi=args.chi, burn_in=args.burn_in)
    params = resolve_params(args.N, spec)
    res = run_trajectory(kind, params, args.stream)
    out = args.out or f"trace_{kind.value}_N{args.N:g}.csv"
    write_trace(res, out, args.stride)
    print(f"{kind.value} N={args.N:g}: {res.t.size} steps (dt={params.dt:.3g}), V_H_SS={res.holevo():.5g}; wrote {out}")
    return 0


def cmd_check(args) -> int:
    from .acceptance import AcceptanceRunner

    numbers = [int(x) for x in args.criteria.split(",")] if args.criteria else None
    runner = AcceptanceRunner(seed=args.seed, scale=args.scale)
    results = runner.run(numbers, echo=print)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return 0 if n_pass == len(results) else 1


def cmd_asymptote(args) -> int:
    grid = args.n_grid or DEFAULT_N_GRID
    names = list(ASYMPTOTES)
    print("N," + ",".join(names) + ",ratio_small,ratio_large")
    for N in grid:
        vals = [ASYMPTOTES[k](N) for k in names]
        print(f"{N!r}," + ",".join(repr(v) for v in vals)
              + f",{vals[0] / vals[2]!r},{vals[1] / vals[3]!r}")
    print(f"# 4/pi = {FOUR_OVER_PI!r}, sqrt(2) = {SQRT2!r}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cwphase", description="Phase estimation of a diffusing coherent beam.")
    sub = ap.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="V_H_SS versus N for a set of schemes")
    sw.add_argument("--config", help="key = value file; flags override it")
    sw.add_argument("--seed", type=int)
    sw.add_argument("--jobs", type=int)
    sw.add_argument("--out", help="CSV path; report and timings go next to it")
    sw.add_argument("--schemes", type=_schemes, help="comma-separated, e.g. OptimalHeterodyne,SimpleAdaptive")
    sw.add_argument("--n-grid", type=_grid, help="comma-separated increasing N values")
    sw.add_argument("--n-traj", type=int)
    sw.add_argument("--steady-time", type=float, help="steady-state time per trajectory (coherence times)")
    sw.set_defaults(func=cmd_sweep)

    tr = sub.add_parser("trace", help="per-step CSV of one trajectory")
    tr.add_argument("--scheme", default="SimpleAdaptive")
    tr.add_argument("--N", type=float, default=1000.0)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--stream", type=int, default=0)
    tr.add_argument("--steady-time", type=float, default=20.0)
    tr.add_argument("--burn-in", type=float, default=None)
    tr.add_argument("--chi", type=float, default=None)
    tr.add_argument("--stride", type=int, default=1, help="keep every stride-th step")
    tr.add_argument("--out")
    tr.set_defaults(func=cmd_trace)

    ck = sub.add_parser("check", help="run the acceptance criteria")
    ck.add_argument("--criteria", help="comma-separated numbers (default: all)")
    ck.add_argument("--seed", type=int, default=20240)
    ck.add_argument("--scale", type=float, default=1.0, help="shrink run lengths (verdicts need 1.0)")
    ck.set_defaults(func=cmd_check)

    asy = sub.add_parser("asymptote", help="print the closed-form asymptotes as CSV")
    asy.add_argument("--n-grid", type=_grid)
    asy.set_defaults(func=cmd_asymptote)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 64


if __name__ == "__main__":
    sys.exit(main())
