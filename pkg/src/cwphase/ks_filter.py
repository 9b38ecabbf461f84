"""Conditional phase distribution: truncated-Fourier KS filter and grid-Bayes oracle.

P(phi) = sum_{|j| <= J} b_j e^{i j phi}, so <e^{i phi}>_P = 2 pi b_{-1}. Each
filter step first diffuses the distribution over one step (the phase moves
before it is measured) and then folds in the measurement. Diffusion is
applied exactly, ``b_j *= exp(-kappa j^2 dt / 2)``; the measurement term is
an explicit Euler step, followed by renormalisation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as kern
from .errors import ConfigurationError, NumericalInstabilityError
from .measurement import HeterodyneSample, HomodyneSample
from .stochastic import SimParams

TWO_PI = 2.0 * math.pi
SHARPNESS_TOL = kern.SHARPNESS_TOL


@dataclass(frozen=True, eq=False)
class FourierFilterState:
    b: np.ndarray

    def __post_init__(self):
        b = np.ascontiguousarray(self.b, dtype=np.complex128)
        if b.ndim != 1 or b.size < 3 or b.size % 2 == 0:
            raise ConfigurationError(f"need 2J+1 coefficients with J >= 1, got shape {b.shape}")
        object.__setattr__(self, "b", b)

    @property
    def J(self) -> int:
        return (self.b.size - 1) // 2

    def coeff(self, j: int) -> complex:
        return complex(self.b[self.J + j]) if abs(j) <= self.J else 0j

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    def density(self, phi) -> np.ndarray:
        """P evaluated at the given angles (real part; the imaginary part is rounding)."""
        phi = np.asarray(phi, dtype=float)
        return np.real(np.exp(1j * np.multiply.outer(phi, self.modes)) @ self.b)


@dataclass(frozen=True, eq=False)
class GridFilterState:
    """P sampled on phi_m = -pi + 2 pi m / M."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size < 4:
            raise ConfigurationError("grid needs at least 4 points")
        object.__setattr__(self, "p", p)

    @property
    def M(self) -> int:
        return self.p.size

    @property
    def phis(self) -> np.ndarray:
        return grid_points(self.M)

    def first_moment(self) -> complex:
        return complex(np.sum(self.p * np.exp(1j * self.phis)) * TWO_PI / self.M)


@dataclass(frozen=True)
class PhaseEstimate:
    phi_hat: float
    sharpness: float


def grid_points(M: int) -> np.ndarray:
    return -math.pi + TWO_PI * np.arange(M) / M


def default_truncation(N: float) -> int:
    """Starting J for photon flux N; steady widths ~ (2N)^(-1/4) need modes up to ~(2N)^(1/4)."""
    return max(16, math.ceil(6.0 * (2.0 * N) ** 0.25))


def damping_factors(J: int, kappa: float, dt: float) -> np.ndarray:
    j = np.arange(-J, J + 1)
    return np.exp(-0.5 * kappa * dt * j.astype(float) ** 2)


def init_uniform(J: int) -> FourierFilterState:
    if int(J) != J or J < 1:
        raise ConfigurationError(f"J must be a positive integer, got {J}")
    b = np.zeros(2 * J + 1, dtype=np.complex128)
    b[J] = 1.0 / TWO_PI
    return FourierFilterState(b)


def wrapped_normal(J: int, mean: float, var: float) -> FourierFilterState:
    """Coefficients of a wrapped normal density, b_j = e^{-i j mean - j^2 var / 2} / 2pi."""
    j = np.arange(-J, J + 1)
    return FourierFilterState(np.exp(-1j * j * mean - 0.5 * var * j.astype(float) ** 2) / TWO_PI)


def _finish(b: np.ndarray) -> FourierFilterState:
    s = kern.renormalize(b)
    if not 0.0 <= s <= 1.0 + SHARPNESS_TOL:
        raise NumericalInstabilityError(
            f"filter left the valid region (sharpness {s:.6g}); reduce dt or increase J"
        )
    return FourierFilterState(b)


def ks_step_heterodyne(state: FourierFilterState, meas: HeterodyneSample, params: SimParams) -> FourierFilterState:
    b = state.b.copy()
    kern.diffuse(b, damping_factors(state.J, params.kappa, params.dt))
    kern.het_update(b, complex(meas.i_c_dt), params.alpha_mag, params.dt, np.empty_like(b))
    return _finish(b)


def ks_step_homodyne(
    state: FourierFilterState, meas: HomodyneSample, Phi: float, params: SimParams
) -> FourierFilterState:
    """Homodyne KS step. The filter assumes unit detector efficiency whatever ``params.eta`` is."""
    b = state.b.copy()
    kern.diffuse(b, damping_factors(state.J, params.kappa, params.dt))
    kern.hom_update(b, float(meas.i_r_dt), float(Phi), params.alpha_mag, params.dt, np.empty_like(b))
    return _finish(b)


def zakai_step_then_normalize(
    state: FourierFilterState, meas, params: SimParams, Phi: float | None = None
) -> FourierFilterState:
    """Linear (Zakai) update followed by explicit normalisation by the zeroth coefficient.

    Only used to cross-check the KS steps.
    """
    b = state.b.copy()
    kern.diffuse(b, damping_factors(state.J, params.kappa, params.dt))
    if isinstance(meas, HeterodyneSample):
        kern.zakai_het_update(b, complex(meas.i_c_dt), params.alpha_mag, np.empty_like(b))
    elif isinstance(meas, HomodyneSample):
        if Phi is None:
            raise ConfigurationError("homodyne Zakai step needs the local oscillator phase")
        kern.zakai_hom_update(b, float(meas.i_r_dt), float(Phi), params.alpha_mag, np.empty_like(b))
    else:
        raise ConfigurationError(f"unsupported measurement {type(meas).__name__}")
    return _finish(b)


def estimate(state: FourierFilterState) -> PhaseEstimate:
    c1 = TWO_PI * state.coeff(-1)
    s = abs(c1)
    if s == 0.0:
        return PhaseEstimate(0.0, 0.0)
    return PhaseEstimate(float(kern.wrap(math.atan2(c1.imag, c1.real))), s)


def grid_from_fourier(state: FourierFilterState, M: int = 512) -> GridFilterState:
    return GridFilterState(state.density(grid_points(M)))


def fourier_from_grid(grid: GridFilterState, J: int) -> FourierFilterState:
    j = np.arange(-J, J + 1)
    b = np.exp(-1j * np.multiply.outer(j, grid.phis)) @ grid.p / grid.M
    return FourierFilterState(b)


def grid_uniform(M: int) -> GridFilterState:
    return GridFilterState(np.full(M, 1.0 / TWO_PI))


def grid_estimate(grid: GridFilterState) -> PhaseEstimate:
    c1 = grid.first_moment()
    if c1 == 0:
        return PhaseEstimate(0.0, 0.0)
    return PhaseEstimate(float(kern.wrap(math.atan2(c1.imag, c1.real))), abs(c1))


def _grid_diffuse(p: np.ndarray, kappa: float, dt: float) -> np.ndarray:
    # circular convolution with the wrapped normal of variance kappa dt,
    # applied through its Fourier series
    f = np.fft.rfft(p)
    j = np.arange(f.size)
    out = np.fft.irfft(f * np.exp(-0.5 * kappa * dt * j**2), n=p.size)
    return np.maximum(out, 0.0)


def heterodyne_log_likelihood(phis: np.ndarray, i_c_dt: complex, alpha: float) -> np.ndarray:
    """log P(I_c | phi) up to a phi-independent constant (Gaussian quadratures of variance dt/2)."""
    return 2.0 * alpha * np.real(np.exp(-1j * phis) * i_c_dt)


def homodyne_log_likelihood(phis: np.ndarray, i_r_dt: float, Phi: float, alpha: float, dt: float) -> np.ndarray:
    """log P(I_r | phi) up to a constant, unit efficiency, noise variance dt."""
    c = np.cos(phis - Phi)
    return 2.0 * alpha * c * i_r_dt - 2.0 * alpha**2 * c**2 * dt


def canonical_likelihood(phis: np.ndarray, theta: float, alpha: float, dt: float) -> np.ndarray:
    return (1.0 + 2.0 * alpha * math.sqrt(dt) * np.cos(theta - phis)) / TWO_PI


def grid_bayes_step(
    state: GridFilterState,
    likelihood=None,
    params: SimParams | None = None,
    *,
    log_likelihood=None,
) -> GridFilterState:
    """Brute-force Bayes: diffuse one step, multiply by the likelihood, renormalise.

    Pass ``log_likelihood`` instead of ``likelihood`` for long products; it is
    shifted by its maximum before exponentiation so weights cannot all underflow.
    """
    if params is None:
        raise ConfigurationError("grid_bayes_step needs params")
    if (likelihood is None) == (log_likelihood is None):
        raise ConfigurationError("give exactly one of likelihood / log_likelihood")
    if log_likelihood is not None:
        ll = np.asarray(log_likelihood, dtype=float)
        if not np.all(np.isfinite(ll)):
            raise ConfigurationError("log-likelihood must be finite")
        w = np.exp(ll - ll.max())
    else:
        w = np.asarray(likelihood, dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ConfigurationError("likelihood weights must be positive and finite")
    if w.shape != state.p.shape:
        raise ConfigurationError(f"likelihood shape {w.shape} does not match grid {state.p.shape}")
    post = _grid_diffuse(state.p, params.kappa, params.dt) * w
    z = post.sum() * TWO_PI / post.size
    if not (z > 0 and math.isfinite(z)):
        raise NumericalInstabilityError("posterior underflowed to zero; pass log_likelihood instead")
    return GridFilterState(post / z)


def to_csv(state: FourierFilterState) -> str:
    """Debug dump: rows ``j, re, im`` for j = -J..J."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "re", "im"])
    for j, c in zip(state.modes, state.b):
        w.writerow([int(j), repr(float(c.real)), repr(float(c.imag))])
    return buf.getvalue()


def from_csv(text: str) -> FourierFilterState:
    rows = list(csv.reader(io.StringIO(text)))[1:]
    rows.sort(key=lambda r: int(r[0]))
    return FourierFilterState(np.array([complex(float(r[1]), float(r[2])) for r in rows]))
