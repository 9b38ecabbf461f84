"""Compare the two sign choices in the two-functional adaptive estimate arg(A -+ chi B A*).

Runs the windowed adaptive scheme with each sign over a few N and prints the
steady Holevo variance next to the simple adaptive loop, which shares its
feedback law.
"""

from __future__ import annotations

import argparse

import cwphase.schemes as schemes
from cwphase.experiment import SweepSpec, resolve_params
from cwphase.schemes import SchemeKind as K, run_ensemble


def main(grid, steady_time, seed):
    print(f"{'N':>8} {'sign -':>10} {'sign +':>10} {'simple':>10}")
    for N in grid:
        p = resolve_params(N, SweepSpec(schemes=(K.BW_ADAPTIVE,), n_grid=(N,), steady_time=steady_time, seed=seed))
        vals = []
        for sign in (-1.0, 1.0):
            schemes.BW_ADAPTIVE_SIGN = sign
            vals.append(run_ensemble(K.BW_ADAPTIVE, p, 1).V)
        simple = run_ensemble(K.SIMPLE_ADAPTIVE, p, 1).V
        print(f"{N:>8g} {vals[0]:>10.4g} {vals[1]:>10.4g} {simple:>10.4g}")
    schemes.BW_ADAPTIVE_SIGN = -1.0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-grid", default="0.1,1,10,100,1000")
    ap.add_argument("--steady-time", type=float, default=500.0)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    main([float(x) for x in a.n_grid.split(",")], a.steady_time, a.seed)
