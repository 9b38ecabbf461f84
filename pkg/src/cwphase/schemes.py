"""Closed-loop trajectories for the six phase-estimation schemes.

Each step the true phase diffuses, the detector produces an outcome (using
the local oscillator phase set after the previous step), the estimator is
updated and, for adaptive schemes, the local oscillator phase is fed back.
The true phase path and the non-adaptive records do not depend on the
estimator, so they are drawn a chunk at a time with numpy; the estimator
and feedback loops run in compiled kernels.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as kern
from .errors import ConfigurationError, NumericalInstabilityError
from .functionals import BW_ADAPTIVE_SIGN
from .ks_filter import damping_factors, init_uniform
from .measurement import canonical_pseudo_current, canonical_record, heterodyne_record
from .metrics import BlockSummary
from .stochastic import RngStream, SimParams, phase_path

CHUNK = 1 << 15
BLOCK_WINDOWS = 5.0
LO_START = 0.5 * math.pi


class SchemeKind(str, Enum):
    CANONICAL = "Canonical"
    OPTIMAL_HETERODYNE = "OptimalHeterodyne"
    BW_HETERODYNE = "BWHeterodyne"
    BW_ADAPTIVE = "BWAdaptive"
    SEMI_OPTIMAL_ADAPTIVE = "SemiOptimalAdaptive"
    SIMPLE_ADAPTIVE = "SimpleAdaptive"

    @property
    def uses_filter(self) -> bool:
        return self in (SchemeKind.CANONICAL, SchemeKind.OPTIMAL_HETERODYNE, SchemeKind.SEMI_OPTIMAL_ADAPTIVE)

    @property
    def adaptive(self) -> bool:
        return self in (SchemeKind.BW_ADAPTIVE, SchemeKind.SEMI_OPTIMAL_ADAPTIVE, SchemeKind.SIMPLE_ADAPTIVE)

    @property
    def detection(self) -> str:
        if self is SchemeKind.CANONICAL:
            return "canonical"
        return "homodyne" if self.adaptive else "heterodyne"

    def asymptote_class(self, regime: str) -> str | None:
        """Asymptote family for ``regime`` in {"small", "large"}, or None if none applies."""
        if self in (SchemeKind.CANONICAL, SchemeKind.OPTIMAL_HETERODYNE):
            return f"heterodyne-{regime}"
        if self in (SchemeKind.SEMI_OPTIMAL_ADAPTIVE, SchemeKind.SIMPLE_ADAPTIVE):
            return f"adaptive-{regime}"
        return None

    @classmethod
    def parse(cls, name: str) -> SchemeKind:
        key = name.strip().replace("-", "").replace("_", "").lower()
        for k in cls:
            if key in (k.value.lower(), k.name.replace("_", "").lower()):
                return k
        raise ConfigurationError(f"unknown scheme {name!r}; choose from {[k.value for k in cls]}")


def feedback_gain(params: SimParams) -> float:
    """Gain g of dPhi = g I_r dt for the simple and BW adaptive loops.

    A window rate chi corresponds to g = chi / (2 |alpha|); the default
    chi = 2 |alpha| sqrt(kappa) gives g = sqrt(kappa).
    """
    if params.chi is None:
        return math.sqrt(params.kappa)
    if params.alpha_mag == 0:
        raise ConfigurationError("a custom chi needs alpha_mag > 0 to set the feedback gain")
    return params.chi / (2.0 * params.alpha_mag)


def block_steps(params: SimParams) -> int:
    """Bootstrap block length, 5 window times, in steps."""
    rate = params.window_rate
    if rate <= 0:
        rate = params.kappa if params.kappa > 0 else 1.0 / params.horizon
    return max(1, int(round(BLOCK_WINDOWS / (rate * params.dt))))


@dataclass
class TrajectoryResult:
    """Per-step records (when kept) and the steady-state block summary.

    Record k belongs to time ``(k + 1) * dt``. ``sharpness`` is None for
    schemes without a filter and ``lo_phase`` is None for non-adaptive ones.
    """

    kind: SchemeKind
    params: SimParams
    stream_index: tuple
    summary: BlockSummary
    t: np.ndarray | None = None
    phi_true: np.ndarray | None = None
    phi_hat: np.ndarray | None = None
    sharpness: np.ndarray | None = None
    lo_phase: np.ndarray | None = None

    def holevo(self, estimator: str = "auto") -> float:
        return self.summary.holevo(estimator)


class _Engine:
    """Holds the running estimator state of one trajectory between chunks."""

    def __init__(self, kind: SchemeKind, params: SimParams):
        self.kind = kind
        self.p = params
        a = params.alpha_mag
        if kind is SchemeKind.CANONICAL:
            params.check_canonical()
        if kind in (SchemeKind.BW_HETERODYNE, SchemeKind.BW_ADAPTIVE) and not params.window_rate > 0:
            raise ConfigurationError(f"{kind.value} needs a positive window rate (alpha_mag > 0 or chi)")
        if kind.uses_filter:
            self.b = init_uniform(params.n_modes).b.copy()
            self.damp = damping_factors(params.n_modes, params.kappa, params.dt)
        self.state = np.array([0.0, LO_START])
        self.fstate = np.zeros(2, dtype=np.complex128)
        self.alpha = a
        self.gain = feedback_gain(params) if kind in (SchemeKind.SIMPLE_ADAPTIVE, SchemeKind.BW_ADAPTIVE) else 0.0

    def run(self, phi, det_rng: RngStream, phi_hat, sharp, lo):
        p, kind, a, dt = self.p, self.kind, self.alpha, self.p.dt
        K = SchemeKind
        if kind.adaptive:
            dW = math.sqrt(dt) * det_rng.gen.standard_normal(phi.size)
        elif kind is K.CANONICAL:
            dI = canonical_pseudo_current(canonical_record(phi, p, det_rng), dt)
        else:
            dI = heterodyne_record(phi, p, det_rng)

        if kind in (K.CANONICAL, K.OPTIMAL_HETERODYNE):
            return kern.run_heterodyne_filter(self.b, self.damp, a, dt, dI, self.state, phi_hat, sharp)
        if kind is K.BW_HETERODYNE:
            return kern.run_bw_heterodyne(p.window_rate, dt, dI, self.fstate, self.state, phi_hat)
        if kind is K.SEMI_OPTIMAL_ADAPTIVE:
            return kern.run_semi_optimal(self.b, self.damp, a, p.eta, dt, phi, dW, self.state, phi_hat, sharp, lo)
        if kind is K.SIMPLE_ADAPTIVE:
            # the loop only carries Phi; state[1:] is a view onto it
            return kern.run_simple_adaptive(a, p.eta, dt, self.gain, phi, dW, self.state[1:], phi_hat, lo)
        return kern.run_bw_adaptive(a, p.eta, dt, p.window_rate, self.gain, BW_ADAPTIVE_SIGN,
                                    phi, dW, self.fstate, self.state, phi_hat, lo)


def _as_key(stream_index) -> tuple:
    return tuple(stream_index) if isinstance(stream_index, tuple) else (int(stream_index),)


def run_trajectory(kind: SchemeKind, params: SimParams, stream_index=0, keep_records: bool = True,
                   chunk: int = CHUNK) -> TrajectoryResult:
    """Simulate one trajectory of ``params.horizon`` and summarise its steady state.

    The steady state starts at ``params.burn_in``. The phase starts uniform
    on [-pi, pi), the filter uniform, the functionals at zero and the local
    oscillator at pi/2. Raises NumericalInstabilityError if the filter leaves
    its valid region.
    """
    kind = SchemeKind(kind)
    key = _as_key(stream_index)
    rng = RngStream(params.seed, key)
    phase_rng, det_rng = rng.child(0), rng.child(1)
    eng = _Engine(kind, params)

    n, burn, L = params.n_steps, params.burn_in_steps, block_steps(params)
    n_blocks = max(0, -(-(n - burn) // L))
    bp = np.zeros(n_blocks, complex)
    bs = np.zeros(n_blocks)
    bc = np.zeros(n_blocks, np.int64)

    if keep_records:
        rec_phi, rec_hat = np.empty(n), np.empty(n)
        rec_s = np.empty(n) if kind.uses_filter else None
        rec_lo = np.empty(n) if kind.adaptive else None

    phi_last = float(phase_rng.gen.uniform(-math.pi, math.pi))
    buf_hat, buf_s, buf_lo = np.empty(chunk), np.zeros(chunk), np.zeros(chunk)
    k0 = 0
    while k0 < n:
        m = min(chunk, n - k0)
        phi = phase_path(phi_last, m, params, phase_rng)
        phi_last = float(phi[-1])
        hat, s, lo = buf_hat[:m], buf_s[:m], buf_lo[:m]
        fail = eng.run(phi, det_rng, hat, s, lo)
        if fail >= 0:
            t_fail = (k0 + fail + 1) * params.dt
            raise NumericalInstabilityError(
                f"{kind.value}: filter left the valid region at t={t_fail:.6g} "
                f"(J={params.n_modes}, dt={params.dt:.3g}); reduce dt or increase J"
            )
        if keep_records:
            rec_phi[k0:k0 + m] = phi
            rec_hat[k0:k0 + m] = hat
            if rec_s is not None:
                rec_s[k0:k0 + m] = s
            if rec_lo is not None:
                rec_lo[k0:k0 + m] = lo
        lo_k = max(burn, k0)
        if lo_k < k0 + m:
            sl = slice(lo_k - k0, m)
            blk = (np.arange(lo_k, k0 + m) - burn) // L
            err = phi[sl] - hat[sl]
            bp += np.bincount(blk, np.cos(err), n_blocks) + 1j * np.bincount(blk, np.sin(err), n_blocks)
            if kind.uses_filter:
                bs += np.bincount(blk, s[sl], n_blocks)
            bc += np.bincount(blk, minlength=n_blocks)
        k0 += m

    stream_id = key[-1]
    summary = BlockSummary(
        bp, bs, bc, np.full(n_blocks, stream_id, np.int64), np.arange(n_blocks, dtype=np.int64),
        has_sharpness=kind.uses_filter,
    )
    res = TrajectoryResult(kind, params, key, summary)
    if keep_records:
        res.t = params.dt * np.arange(1, n + 1)
        res.phi_true, res.phi_hat, res.sharpness, res.lo_phase = rec_phi, rec_hat, rec_s, rec_lo
    return res


@dataclass
class EnsembleResult:
    kind: SchemeKind
    params: SimParams
    n_traj: int
    summary: BlockSummary
    V: float
    stderr: float
    V_errors: float
    stderr_errors: float

    @property
    def n_samples(self) -> int:
        return int(self.summary.counts.sum())


def _summary_job(args):
    kind, params, key = args
    return run_trajectory(kind, params, key, keep_records=False).summary


def summarize(kind: SchemeKind, params: SimParams, summary: BlockSummary, n_traj: int,
              n_boot: int = 400) -> EnsembleResult:
    bseed = params.seed % (2**32)
    V = summary.holevo("auto")
    se = summary.stderr("auto", n_boot, bseed)
    Ve = summary.holevo("errors")
    see = summary.stderr("errors", n_boot, bseed)
    return EnsembleResult(SchemeKind(kind), params, n_traj, summary, V, se, Ve, see)


def run_ensemble(kind: SchemeKind, params: SimParams, n_traj: int, stream_base: tuple = (),
                 jobs: int = 1, n_boot: int = 400) -> EnsembleResult:
    """Run ``n_traj`` independent trajectories and merge their steady-state blocks.

    Trajectory i uses stream ``stream_base + (i,)``. ``V`` uses the sharpness
    estimator for filter schemes and the error phasors otherwise; ``V_errors``
    always uses the error phasors. Standard errors are block bootstraps.
    """
    if int(n_traj) != n_traj or n_traj < 1:
        raise ConfigurationError(f"n_traj must be a positive integer, got {n_traj}")
    kind = SchemeKind(kind)
    jobs_args = [(kind, params, tuple(stream_base) + (i,)) for i in range(n_traj)]
    if jobs > 1 and n_traj > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_summary_job, jobs_args))
    else:
        parts = [_summary_job(a) for a in jobs_args]
    summary = BlockSummary()
    for part in parts:
        summary = summary.merge(part)
    return summarize(kind, params, summary, n_traj, n_boot)


TRACE_COLUMNS = ["t", "phi_true", "phi_hat", "Phi", "sharpness"]


def write_trace(result: TrajectoryResult, path, stride: int = 1) -> None:
    """CSV of every ``stride``-th step; Phi and sharpness are empty when the scheme has none."""
    if result.t is None:
        raise ConfigurationError("trajectory was run without keep_records")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for k in range(0, result.t.size, stride):
            w.writerow([
                repr(float(result.t[k])),
                repr(float(result.phi_true[k])),
                repr(float(result.phi_hat[k])),
                "" if result.lo_phase is None else repr(float(result.lo_phase[k])),
                "" if result.sharpness is None else repr(float(result.sharpness[k])),
            ])
