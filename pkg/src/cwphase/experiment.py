"""Sweeps over photon flux N: parameter resolution, CSV output and the asymptote report.

Time is in coherence times (kappa = 1) and |alpha| = sqrt(N), so N is the
only physical knob.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericalInstabilityError
from .ks_filter import default_truncation
from .metrics import FOUR_OVER_PI, SQRT2, asymptote, steady_start
from .schemes import SchemeKind, run_ensemble, run_trajectory
from .stochastic import SimParams

DEFAULT_N_GRID = tuple(float(10.0**e) for e in np.arange(-2.0, 3.51, 0.5))
CSV_COLUMNS = ["scheme", "N", "V_H_SS", "stderr", "V_H_errors", "stderr_errors",
               "n_samples", "J_used", "dt_used", "status"]

DT_MAX = 1e-3
# per-step caps on |alpha| sqrt(kappa) dt and, for the Euler filter update,
# on |alpha|^2 dt. The filter's sharpness is biased low by roughly
# 0.1 |alpha|^2 dt (relative, in V), so 2.5e-3 keeps the bias near 0.2%.
LOCK_DT = 1e-2
FILTER_DT = 2.5e-3
TRUNCATION_TOL = 0.005
MAX_DOUBLINGS = 3


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and how long to run each cell.

    ``steady_time`` is the steady-state duration per trajectory (coherence
    times). ``dt``, ``n_modes`` and ``burn_in`` override the resolution rule
    when set.
    """

    schemes: tuple = (SchemeKind.OPTIMAL_HETERODYNE, SchemeKind.SEMI_OPTIMAL_ADAPTIVE)
    n_grid: tuple = DEFAULT_N_GRID
    out: str | None = None
    n_traj: int = 4
    seed: int = 0
    jobs: int = 1
    steady_time: float = 200.0
    eta: float = 1.0
    chi: float | None = None
    dt: float | None = None
    n_modes: int | None = None
    burn_in: float | None = None
    check_truncation: bool = True

    def __post_init__(self):
        schemes = tuple(SchemeKind.parse(s) if isinstance(s, str) else SchemeKind(s) for s in self.schemes)
        if not schemes:
            raise ConfigurationError("no schemes selected")
        object.__setattr__(self, "schemes", schemes)
        grid = tuple(float(n) for n in self.n_grid)
        if not grid or any(not (n > 0 and math.isfinite(n)) for n in grid):
            raise ConfigurationError("N grid must be non-empty with finite positive values")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("N grid must be strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        if self.n_traj < 1 or self.jobs < 1:
            raise ConfigurationError("n_traj and jobs must be at least 1")
        if not self.steady_time > 0:
            raise ConfigurationError("steady_time must be positive")


@dataclass
class SweepRow:
    scheme: str
    N: float
    V_H_SS: float
    stderr: float
    V_H_errors: float
    stderr_errors: float
    n_samples: int
    J_used: int
    dt_used: float
    status: str = "ok"
    wall_time: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def resolve_dt(N: float, schemes) -> float:
    """min(1e-3, 1e-2/|alpha|, canonical bound / 4, 2.5e-3/|alpha|^2), the last two only when needed."""
    a = math.sqrt(N)
    dt = min(DT_MAX, LOCK_DT / a)
    kinds = [SchemeKind(s) for s in schemes]
    if SchemeKind.CANONICAL in kinds:
        dt = min(dt, 1.0 / (16.0 * N))
    if any(k.uses_filter for k in kinds):
        dt = min(dt, FILTER_DT / N)
    return dt


def resolve_params(N: float, spec: SweepSpec | None = None, schemes=None) -> SimParams:
    """SimParams for one N: kappa = 1, |alpha| = sqrt(N), burn-in from the steady-state rule."""
    if not (N > 0 and math.isfinite(N)):
        raise ConfigurationError(f"N must be finite and positive, got {N}")
    spec = spec or SweepSpec()
    schemes = spec.schemes if schemes is None else schemes
    a = math.sqrt(N)
    dt = spec.dt if spec.dt is not None else resolve_dt(N, schemes)
    J = spec.n_modes if spec.n_modes is not None else default_truncation(N)
    burn = spec.burn_in if spec.burn_in is not None else steady_start(1.0, a, spec.chi)
    steady = max(spec.steady_time, burn)
    return SimParams(kappa=1.0, alpha_mag=a, eta=spec.eta, dt=dt, n_modes=J, seed=spec.seed,
                     burn_in=burn, horizon=burn + steady, chi=spec.chi)


def pilot_params(params: SimParams) -> SimParams:
    """Short run used to compare truncations: 5 coherence times of burn-in, 5 of steady state."""
    burn = 5.0 / params.kappa
    return replace(params, burn_in=burn, horizon=2.0 * burn)


def converge_truncation(kind: SchemeKind, params: SimParams, stream=(0,)) -> tuple[SimParams, bool]:
    """Double J until the steady mean sharpness moves by less than 0.5%.

    Both truncations see the same noise, so the comparison is nearly exact.
    Returns the params with the accepted J and whether convergence was reached.
    """
    kind = SchemeKind(kind)
    if not kind.uses_filter:
        return params, True
    pilot = pilot_params(params)

    def mean_sharpness(J):
        r = run_trajectory(kind, replace(pilot, n_modes=J), stream, keep_records=False)
        s = r.summary
        return s.sharpness.sum() / s.counts.sum()

    J = params.n_modes
    cur = mean_sharpness(J)
    for _ in range(MAX_DOUBLINGS):
        nxt = mean_sharpness(2 * J)
        if abs(nxt - cur) <= TRUNCATION_TOL * abs(nxt):
            return replace(params, n_modes=J), True
        J, cur = 2 * J, nxt
    return replace(params, n_modes=J), False


def _cell(args) -> SweepRow:
    spec, kind, N, idx = args
    t_start = time.perf_counter()
    params = resolve_params(N, spec)
    stream_base = (list(SchemeKind).index(kind), idx)
    status = "ok"
    try:
        if spec.check_truncation and spec.n_modes is None:
            params, converged = converge_truncation(kind, params, stream_base + (0,))
            if not converged:
                status = "truncation-not-converged"
        res = run_ensemble(kind, params, spec.n_traj, stream_base)
    except NumericalInstabilityError as exc:
        nan = math.nan
        return SweepRow(kind.value, N, nan, nan, nan, nan, 0, params.n_modes, params.dt,
                        f"unstable: {exc}", time.perf_counter() - t_start)
    return SweepRow(kind.value, N, res.V, res.stderr, res.V_errors, res.stderr_errors, res.n_samples,
                    params.n_modes, params.dt, status, time.perf_counter() - t_start)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[SweepRow]:
    rows = []
    for d in csv.DictReader(io.StringIO(text)):
        rows.append(SweepRow(
            d["scheme"], float(d["N"]), float(d["V_H_SS"]), float(d["stderr"]), float(d["V_H_errors"]),
            float(d["stderr_errors"]), int(d["n_samples"]), int(d["J_used"]), float(d["dt_used"]), d["status"],
        ))
    return rows


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """One row per (N, scheme), ordered by N then by the order of ``spec.schemes``.

    With ``spec.out`` set, writes the CSV there, the asymptote report to
    ``<out>.report.txt`` and wall times to ``<out>.timing.csv`` (kept apart so
    the main CSV is byte-identical across reruns).
    """
    cells = [(spec, kind, N, i) for i, N in enumerate(spec.n_grid) for kind in spec.schemes]
    if spec.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as ex:
            rows = list(ex.map(_cell, cells))
    else:
        rows = [_cell(c) for c in cells]
    if spec.out:
        out = Path(spec.out)
        out.write_text(rows_to_csv(rows), encoding="utf-8")
        Path(f"{out}.report.txt").write_text(report(rows), encoding="utf-8")
        timing = "scheme,N,wall_time\n" + "".join(f"{r.scheme},{r.N!r},{r.wall_time:.3f}\n" for r in rows)
        Path(f"{out}.timing.csv").write_text(timing, encoding="utf-8")
    return rows


RATIO_TOL = 0.1
SMALL_N, LARGE_N = 0.1, 100.0
SMALL_TOL, LARGE_TOL = 0.15, 0.10
HET_PREFERENCE = (SchemeKind.OPTIMAL_HETERODYNE, SchemeKind.CANONICAL)
ADAPTIVE_PREFERENCE = (SchemeKind.SEMI_OPTIMAL_ADAPTIVE, SchemeKind.SIMPLE_ADAPTIVE)


def regime(N: float) -> str | None:
    if N <= SMALL_N:
        return "small"
    if N >= LARGE_N:
        return "large"
    return None


def ratio_table(rows) -> list[tuple[float, str, str, float]]:
    """(N, heterodyne scheme, adaptive scheme, V_het / V_adaptive) for every N covered by both classes."""
    by_n: dict[float, dict[str, SweepRow]] = {}
    for r in rows:
        if r.ok:
            by_n.setdefault(r.N, {})[r.scheme] = r
    out = []
    for N in sorted(by_n):
        cell = by_n[N]
        het = next((k for k in HET_PREFERENCE if k.value in cell), None)
        ad = next((k for k in ADAPTIVE_PREFERENCE if k.value in cell), None)
        if het and ad:
            out.append((N, het.value, ad.value, cell[het.value].V_H_SS / cell[ad.value].V_H_SS))
    return out


def report(rows) -> str:
    """Heterodyne/adaptive ratios against [4/pi, sqrt(2)] and each row against its asymptote."""
    rows = list(rows)
    lines = []
    ratios = ratio_table(rows)
    if ratios:
        lo, hi = FOUR_OVER_PI - RATIO_TOL, SQRT2 + RATIO_TOL
        lines.append(f"V_het / V_adaptive (expected within [{lo:.3f}, {hi:.3f}]; 4/pi at small N, sqrt(2) at large N)")
        lines.append(f"{'N':>10}  {'heterodyne':<18} {'adaptive':<20} {'ratio':>8}  flag")
        for N, het, ad, q in ratios:
            flag = "ok" if lo <= q <= hi else "OUT"
            lines.append(f"{N:>10.4g}  {het:<18} {ad:<20} {q:>8.4f}  {flag}")
    else:
        have = sorted({r.scheme for r in rows})
        lines.append(
            "no ratio table: need an ok row from a heterodyne-class scheme "
            f"({', '.join(k.value for k in HET_PREFERENCE)}) and an adaptive one "
            f"({', '.join(k.value for k in ADAPTIVE_PREFERENCE)}) at a shared N; have {have}"
        )
    lines.append("")
    lines.append(f"asymptote checks (small N <= {SMALL_N:g}: {SMALL_TOL:.0%}, large N >= {LARGE_N:g}: {LARGE_TOL:.0%})")
    lines.append(f"{'scheme':<20} {'N':>10} {'V_H_SS':>12} {'asymptote':>12} {'rel.dev':>8}  result")
    for r in rows:
        reg = regime(r.N)
        cls = SchemeKind(r.scheme).asymptote_class(reg) if reg else None
        if cls is None:
            verdict, ref, dev = "n/a", math.nan, math.nan
        elif not r.ok:
            verdict, ref, dev = f"skipped ({r.status.split(':')[0]})", asymptote(cls, r.N), math.nan
        else:
            ref = asymptote(cls, r.N)
            dev = r.V_H_SS / ref - 1.0
            verdict = "pass" if abs(dev) <= (SMALL_TOL if reg == "small" else LARGE_TOL) else "FAIL"
        lines.append(f"{r.scheme:<20} {r.N:>10.4g} {r.V_H_SS:>12.5g} {ref:>12.5g} {dev:>8.3f}  {verdict}")
    return "\n".join(lines) + "\n"


CONFIG_KEYS = {f.name for f in fields(SweepSpec)}


def _parse_list(text: str) -> list[str]:
    return [x for x in (t.strip() for t in text.replace(";", ",").split(",")) if x]


def _coerce(key: str, value: str):
    if key == "schemes":
        return tuple(SchemeKind.parse(s) for s in _parse_list(value))
    if key == "n_grid":
        return tuple(float(x) for x in _parse_list(value))
    if key in ("n_traj", "seed", "jobs", "n_modes"):
        return int(value)
    if key in ("steady_time", "eta", "chi", "dt", "burn_in"):
        return float(value)
    if key == "check_truncation":
        v = value.strip().lower()
        if v not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigurationError(f"check_truncation must be a boolean, got {value!r}")
        return v in ("true", "1", "yes")
    return value.strip()


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}; known keys: {sorted(CONFIG_KEYS)}")
        try:
            out[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigurationError(f"line {lineno}: bad value for {key}: {exc}") from None
    return out


def load_spec(config_text: str | None = None, overrides: dict | None = None) -> SweepSpec:
    values = parse_config(config_text) if config_text else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return SweepSpec(**values)
