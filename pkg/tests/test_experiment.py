import math

import pytest

from cwphase.errors import ConfigurationError
from cwphase.experiment import (
    CSV_COLUMNS,
    DEFAULT_N_GRID,
    SweepRow,
    SweepSpec,
    load_spec,
    parse_config,
    ratio_table,
    report,
    resolve_dt,
    resolve_params,
    rows_from_csv,
    rows_to_csv,
    run_sweep,
)
from cwphase.schemes import SchemeKind

K = SchemeKind


def spec_for(*kinds, **kw):
    return SweepSpec(schemes=kinds, **kw)


def test_resolve_params_examples():
    p = resolve_params(1.0, spec_for(K.SIMPLE_ADAPTIVE))
    assert (p.kappa, p.alpha_mag, p.dt) == (1.0, 1.0, 1e-3)
    assert resolve_params(1000.0, spec_for(K.SIMPLE_ADAPTIVE)).dt == pytest.approx(1e-2 / math.sqrt(1000))
    assert resolve_params(1000.0, spec_for(K.SIMPLE_ADAPTIVE)).dt == pytest.approx(3.16e-4, rel=1e-3)
    assert resolve_params(0.01, spec_for(*K)).dt == 1e-3


def test_resolve_dt_extra_clauses():
    # canonical sampling bound and the Euler filter-step cap
    assert resolve_dt(100.0, [K.CANONICAL]) == pytest.approx(min(1e-3, 1 / 1600, 2.5e-5))
    assert resolve_dt(10.0, [K.OPTIMAL_HETERODYNE]) == pytest.approx(2.5e-4)
    assert resolve_dt(10.0, [K.BW_HETERODYNE]) == pytest.approx(1e-3)
    for N in DEFAULT_N_GRID:
        p = resolve_params(N, spec_for(*K))
        p.check_canonical()
        assert p.horizon >= 2 * p.burn_in


def test_resolve_params_window_and_overrides():
    p = resolve_params(1.0, spec_for(K.SIMPLE_ADAPTIVE, steady_time=100.0))
    assert p.burn_in == 20.0 and p.horizon == 120.0
    p = resolve_params(4.0, spec_for(K.SIMPLE_ADAPTIVE, dt=1e-4, n_modes=40, burn_in=7.0, steady_time=50.0))
    assert (p.dt, p.n_modes, p.burn_in, p.horizon) == (1e-4, 40, 7.0, 57.0)
    with pytest.raises(ConfigurationError):
        resolve_params(0.0)


@pytest.mark.parametrize("grid", [(), (1.0, 1.0), (2.0, 1.0), (-1.0, 1.0), (math.inf,)])
def test_grid_validation(grid):
    with pytest.raises(ConfigurationError):
        SweepSpec(n_grid=grid)


def test_default_grid():
    assert DEFAULT_N_GRID[0] == pytest.approx(0.01)
    assert DEFAULT_N_GRID[-1] == pytest.approx(10**3.5)
    assert len(DEFAULT_N_GRID) == 12


def test_config_parsing():
    text = """
    # sweep config
    schemes = OptimalHeterodyne, SimpleAdaptive
    n_grid = 0.1, 1, 10   # three points
    seed = 7
    steady_time = 50
    check_truncation = no
    """
    d = parse_config(text)
    assert d["schemes"] == (K.OPTIMAL_HETERODYNE, K.SIMPLE_ADAPTIVE)
    assert d["n_grid"] == (0.1, 1.0, 10.0)
    assert d["seed"] == 7 and d["steady_time"] == 50.0 and d["check_truncation"] is False
    spec = load_spec(text, {"seed": 9, "jobs": None})
    assert spec.seed == 9 and spec.jobs == 1


@pytest.mark.parametrize("text", ["bogus = 1", "seed 3", "seed = x", "check_truncation = maybe"])
def test_config_errors(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def small_spec(**kw):
    base = dict(schemes=(K.OPTIMAL_HETERODYNE, K.SIMPLE_ADAPTIVE), n_grid=(1.0, 10.0), n_traj=2,
                steady_time=20.0, seed=3)
    base.update(kw)
    return SweepSpec(**base)


def test_sweep_is_byte_identical(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    rows = run_sweep(small_spec(out=str(a)))
    run_sweep(small_spec(out=str(b), jobs=2))
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.report.txt").exists() and (tmp_path / "a.csv.timing.csv").exists()
    text = a.read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert [(r.scheme, r.N) for r in rows] == [
        ("OptimalHeterodyne", 1.0), ("SimpleAdaptive", 1.0), ("OptimalHeterodyne", 10.0), ("SimpleAdaptive", 10.0)]
    assert rows_from_csv(text) == rows


def test_failing_cell_is_flagged_not_fatal():
    rows = run_sweep(small_spec(schemes=(K.OPTIMAL_HETERODYNE, K.SIMPLE_ADAPTIVE), n_grid=(100.0,),
                                dt=2e-3, n_modes=8, steady_time=20.0))
    het, simple = rows
    assert het.status.startswith("unstable") and math.isnan(het.V_H_SS)
    assert simple.ok and math.isfinite(simple.V_H_SS)
    assert "skipped (unstable)" in report(rows)


def test_adaptive_schemes_agree_at_unit_flux():
    rows = run_sweep(small_spec(schemes=(K.SEMI_OPTIMAL_ADAPTIVE, K.SIMPLE_ADAPTIVE), n_grid=(1.0,),
                                steady_time=2000.0))
    a, b = rows
    lo_a, hi_a = a.V_H_SS - 2 * a.stderr, a.V_H_SS + 2 * a.stderr
    lo_b, hi_b = b.V_H_SS - 2 * b.stderr, b.V_H_SS + 2 * b.stderr
    assert lo_a <= hi_b and lo_b <= hi_a


def test_ratio_between_extremes_at_unit_flux():
    rows = run_sweep(small_spec(schemes=(K.OPTIMAL_HETERODYNE, K.SEMI_OPTIMAL_ADAPTIVE), n_grid=(1.0,),
                                steady_time=2000.0, seed=1))
    (_, _, _, q), = ratio_table(rows)
    assert 1.2 < q < 1.5


def row(scheme, N, V):
    return SweepRow(scheme, N, V, 0.01, V, 0.01, 1000, 16, 1e-3)


def test_report_ratio_flags():
    rows = [
        row("OptimalHeterodyne", 0.01, 4 / (math.pi * 0.01)), row("SemiOptimalAdaptive", 0.01, 100.0),
        row("Canonical", 1000.0, 1 / math.sqrt(2000)), row("SimpleAdaptive", 1000.0, 0.5 / math.sqrt(1000)),
        row("OptimalHeterodyne", 1.0, 3.0), row("SimpleAdaptive", 1.0, 1.0),
    ]
    table = ratio_table(rows)
    assert [round(q, 4) for _, _, _, q in table] == [1.2732, 3.0, 1.4142]
    text = report(rows)
    lines = [l for l in text.splitlines() if l.strip().startswith(("0.01", "1 ", "1000"))]
    assert lines[0].endswith("ok") and lines[1].endswith("OUT") and lines[2].endswith("ok")
    assert text.count("pass") == 4


def test_report_prefers_optimal_filters():
    rows = [row("Canonical", 1.0, 2.0), row("OptimalHeterodyne", 1.0, 1.5),
            row("SimpleAdaptive", 1.0, 1.2), row("SemiOptimalAdaptive", 1.0, 1.0)]
    assert ratio_table(rows) == [(1.0, "OptimalHeterodyne", "SemiOptimalAdaptive", 1.5)]


def test_report_explains_missing_coverage():
    text = report([row("SimpleAdaptive", 1.0, 1.0)])
    assert "no ratio table" in text and "SimpleAdaptive" in text


def test_report_asymptote_failures():
    text = report([row("OptimalHeterodyne", 100.0, 0.1)])
    assert "FAIL" in text
