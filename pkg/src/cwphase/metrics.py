"""Holevo variance estimators, steady-state windowing and closed-form results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .errors import ConfigurationError
from .stochastic import SimParams

FOUR_OVER_PI = 4.0 / math.pi
SQRT2 = math.sqrt(2.0)


@dataclass
class HolevoAccumulator:
    """Running sums of error phasors e^{i(phi - phi_hat)} and filter sharpness."""

    sum_phasor: complex = 0j
    sum_sharpness: float = 0.0
    count: int = 0

    def add(self, errors, sharpness=None) -> HolevoAccumulator:
        errors = np.asarray(errors, dtype=float)
        self.sum_phasor += complex(np.exp(1j * errors).sum())
        if sharpness is not None:
            self.sum_sharpness += float(np.sum(sharpness))
        self.count += errors.size
        return self

    def merge(self, other: HolevoAccumulator) -> HolevoAccumulator:
        return HolevoAccumulator(
            self.sum_phasor + other.sum_phasor,
            self.sum_sharpness + other.sum_sharpness,
            self.count + other.count,
        )


def _holevo(mean_modulus: float) -> float:
    if mean_modulus == 0:
        return math.inf
    return mean_modulus**-2 - 1.0


def holevo_from_errors(acc: HolevoAccumulator) -> float:
    """|<e^{i(phi - phi_hat)}>|^-2 - 1; infinity when the mean phasor vanishes."""
    if acc.count <= 0:
        raise ConfigurationError("empty accumulator")
    return _holevo(abs(acc.sum_phasor / acc.count))


def holevo_from_sharpness(acc: HolevoAccumulator) -> float:
    """<|<e^{i phi}>_P|>^-2 - 1, valid for the filter-based schemes."""
    if acc.count <= 0:
        raise ConfigurationError("empty accumulator")
    return _holevo(acc.sum_sharpness / acc.count)


@dataclass
class BlockSummary:
    """Steady-state sums cut into fixed-length time blocks, keyed by (stream, block).

    Blocks are the resampling unit of the bootstrap. Merging keeps blocks
    sorted by key, so totals do not depend on merge order.
    """

    phasor: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    sharpness: np.ndarray = field(default_factory=lambda: np.zeros(0))
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    stream: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    block: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    has_sharpness: bool = False

    def __len__(self):
        return self.counts.size

    def merge(self, other: BlockSummary) -> BlockSummary:
        if len(self) and len(other) and self.has_sharpness != other.has_sharpness:
            raise ConfigurationError("cannot merge filter and non-filter summaries")
        cat = [np.concatenate([getattr(self, f), getattr(other, f)])
               for f in ("phasor", "sharpness", "counts", "stream", "block")]
        order = np.lexsort((cat[4], cat[3]))
        keys = np.stack([cat[3][order], cat[4][order]])
        if keys.shape[1] > 1 and np.any(np.all(keys[:, 1:] == keys[:, :-1], axis=0)):
            raise ConfigurationError("duplicate (stream, block) keys in merge")
        return BlockSummary(*(c[order] for c in cat), has_sharpness=self.has_sharpness or other.has_sharpness)

    def accumulator(self) -> HolevoAccumulator:
        return HolevoAccumulator(
            complex(self.phasor.sum()),
            float(self.sharpness.sum()) if self.has_sharpness else 0.0,
            int(self.counts.sum()),
        )

    def holevo(self, estimator: str = "auto") -> float:
        acc = self.accumulator()
        if self._use_sharpness(estimator):
            return holevo_from_sharpness(acc)
        return holevo_from_errors(acc)

    def _use_sharpness(self, estimator: str) -> bool:
        if estimator == "auto":
            return self.has_sharpness
        if estimator == "sharpness":
            if not self.has_sharpness:
                raise ConfigurationError("no sharpness data for this scheme")
            return True
        if estimator == "errors":
            return False
        raise ConfigurationError(f"unknown estimator {estimator!r}")

    def bootstrap(self, estimator: str = "auto", n_boot: int = 400, seed: int = 0) -> np.ndarray:
        """Holevo variances of ``n_boot`` block-resampled replicates."""
        n = len(self)
        if n == 0:
            raise ConfigurationError("no steady-state blocks to resample")
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, n, size=(n_boot, n))
        cnt = self.counts[idx].sum(axis=1)
        if self._use_sharpness(estimator):
            mod = self.sharpness[idx].sum(axis=1) / cnt
        else:
            mod = np.abs(self.phasor[idx].sum(axis=1)) / cnt
        with np.errstate(divide="ignore"):
            return np.where(mod > 0, mod**-2.0 - 1.0, np.inf)

    def stderr(self, estimator: str = "auto", n_boot: int = 400, seed: int = 0) -> float:
        reps = self.bootstrap(estimator, n_boot, seed)
        if not np.all(np.isfinite(reps)):
            return math.inf
        return float(np.std(reps, ddof=1))


def two_sample_z(v1: float, se1: float, v2: float, se2: float) -> tuple[float, float]:
    """z statistic and two-sided p-value for equality of two estimates with independent errors."""
    se = math.hypot(se1, se2)
    if se == 0:
        return (0.0, 1.0) if v1 == v2 else (math.inf, 0.0)
    z = (v1 - v2) / se
    return z, float(2.0 * stats.norm.sf(abs(z)))


ASYMPTOTES = {
    "heterodyne-small": lambda N: 4.0 / (math.pi * N),
    "heterodyne-large": lambda N: 1.0 / math.sqrt(2.0 * N),
    "adaptive-small": lambda N: 1.0 / N,
    "adaptive-large": lambda N: 1.0 / (2.0 * math.sqrt(N)),
}


def asymptote(kind_class: str, N: float) -> float:
    """Steady-state Holevo variance in the small- or large-N limit.

    ``kind_class`` is ``"heterodyne-small"``, ``"heterodyne-large"``,
    ``"adaptive-small"`` or ``"adaptive-large"``. The heterodyne classes
    cover the optimal heterodyne and canonical schemes, the adaptive ones
    the semi-optimal and simple adaptive schemes.
    """
    if not N > 0:
        raise ConfigurationError(f"N must be positive, got {N}")
    try:
        return ASYMPTOTES[kind_class](N)
    except KeyError:
        raise ConfigurationError(f"unknown asymptote class {kind_class!r}") from None


def asymptote_ratio(regime: str) -> float:
    """Limit of V_heterodyne / V_adaptive: 4/pi for small N, sqrt(2) for large N."""
    if regime == "small":
        return FOUR_OVER_PI
    if regime == "large":
        return SQRT2
    raise ConfigurationError(f"regime must be 'small' or 'large', got {regime!r}")


def gaussian_sigma2(t: float, params: SimParams) -> float:
    """Posterior variance of the linearised (Gaussian) heterodyne filter started from a flat prior.

    sigma^2(t) = coth(sqrt(2) |alpha|^2 t / sqrt(N)) / sqrt(2N); only meaningful for N >> 1.
    """
    if not t > 0:
        raise ConfigurationError(f"t must be positive, got {t}")
    N = params.photon_flux
    if not (N > 0 and math.isfinite(N)):
        raise ConfigurationError("gaussian_sigma2 needs 0 < N < inf")
    x = math.sqrt(2.0) * params.alpha_mag**2 * t / math.sqrt(N)
    return 1.0 / (math.sqrt(2.0 * N) * math.tanh(x))


def loop_variance(chi: float, params: SimParams) -> float:
    """Large-N steady variance of the first-order adaptive loop with window rate chi.

    chi / (8 alpha^2) (detector noise) + kappa / (2 chi) (phase diffusion); the
    minimum over chi is 1/(2 sqrt(N)) at chi = 2 |alpha| sqrt(kappa).
    """
    if not chi > 0:
        raise ConfigurationError(f"chi must be positive, got {chi}")
    return chi / (8.0 * params.alpha_mag**2) + params.kappa / (2.0 * chi)


def mismatch_variance(a: float, params: SimParams) -> float:
    """Reference closed form for the gain chi = 2 sqrt(kappa) a, with a a lower bound on |alpha|.

    Returns 2 sqrt(kappa) a / (8 alpha^2) + sqrt(kappa) / (2 a). Note its second
    term is twice the phase-diffusion term of ``loop_variance`` at the same chi.
    """
    if not a > 0:
        raise ConfigurationError(f"a must be positive, got {a}")
    if a > params.alpha_mag:
        raise ConfigurationError(f"a must not exceed alpha_mag ({params.alpha_mag}), got {a}")
    rk = math.sqrt(params.kappa)
    return 2.0 * rk * a / (8.0 * params.alpha_mag**2) + rk / (2.0 * a)


def _best_guess_success(p_plus, p_minus, lo, hi, breaks) -> float:
    """Success probability of the maximum-likelihood guess between equiprobable hypotheses."""
    f = lambda x: 0.5 * max(p_plus(x), p_minus(x))
    val, _ = integrate.quad(f, lo, hi, points=breaks, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def discrimination_probs(gamma: float, phi: float) -> tuple[float, float]:
    """Probabilities of identifying which of |0> + gamma e^{+-i phi}|1> was sent.

    First order in gamma. The Y-quadrature outcome density is
    g(x)(1 +- 2 gamma x sin phi) with g the vacuum quadrature density; the
    canonical density is (1 + 2 gamma cos(theta -+ phi)) / 2pi. Returns
    (p_Y, p_canonical), each from numerical integration of the optimal guess.
    """
    if not 0 <= gamma <= 0.1:
        raise ConfigurationError(f"gamma must lie in [0, 0.1] for the first-order densities, got {gamma}")
    s = math.sin(phi)
    g = stats.norm.pdf
    p_y = _best_guess_success(
        lambda x: g(x) * (1 + 2 * gamma * x * s),
        lambda x: g(x) * (1 - 2 * gamma * x * s),
        -12.0, 12.0, [0.0],
    )
    p_can = _best_guess_success(
        lambda t: (1 + 2 * gamma * math.cos(t - phi)) / (2 * math.pi),
        lambda t: (1 + 2 * gamma * math.cos(t + phi)) / (2 * math.pi),
        -math.pi, math.pi, [0.0],
    )
    return p_y, p_can


def discrimination_slopes(gamma: float = 1e-3, phi: float = 0.7) -> tuple[float, float]:
    """(p - 1/2) / (gamma sin phi) for both measurements."""
    p_y, p_can = discrimination_probs(gamma, phi)
    d = gamma * math.sin(phi)
    return (p_y - 0.5) / d, (p_can - 0.5) / d


STEADY_KAPPA_TIMES = 20.0
STEADY_LOCK_TIMES = 20.0
STEADY_WINDOW_TIMES = 10.0


def steady_start(kappa: float, alpha_mag: float, chi: float | None = None) -> float:
    """max(20/kappa, 20/(|alpha| sqrt(kappa)), 10/chi), chi defaulting to 2 |alpha| sqrt(kappa)."""
    if not (kappa > 0 and alpha_mag > 0):
        raise ConfigurationError("steady window needs kappa > 0 and alpha_mag > 0")
    if chi is None:
        chi = 2.0 * alpha_mag * math.sqrt(kappa)
    return max(STEADY_KAPPA_TIMES / kappa, STEADY_LOCK_TIMES / (alpha_mag * math.sqrt(kappa)),
               STEADY_WINDOW_TIMES / chi)


def steady_window(params: SimParams) -> tuple[float, float]:
    """(t0_ss, t_f): start of the steady-state regime and the final time."""
    t0 = steady_start(params.kappa, params.alpha_mag, params.window_rate)
    tf = params.horizon
    if tf < 2.0 * t0:
        raise ConfigurationError(f"horizon {tf:g} is shorter than twice the burn-in {t0:g}")
    return t0, tf
