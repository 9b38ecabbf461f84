"""Seeded random streams, Wiener increments and the diffusing true phase.

Time is measured in the same units as ``1/kappa``; with the experiment
defaults (``kappa = 1``) one time unit is one coherence time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

_U64 = 2**64


@dataclass(frozen=True)
class SimParams:
    """Physical and numerical configuration of one simulation.

    ``chi`` overrides the window rate of the exponentially weighted
    functionals (and the gain of the simple adaptive loop); ``None`` means
    the large-N optimum ``2 * alpha_mag * sqrt(kappa)``.
    """

    kappa: float = 1.0
    alpha_mag: float = 1.0
    eta: float = 1.0
    dt: float = 1e-3
    n_modes: int = 16
    seed: int = 0
    burn_in: float = 20.0
    horizon: float = 60.0
    chi: float | None = None

    def __post_init__(self):
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ConfigurationError(f"kappa must be finite and >= 0, got {self.kappa}")
        if not (self.alpha_mag >= 0 and math.isfinite(self.alpha_mag)):
            raise ConfigurationError(f"alpha_mag must be finite and >= 0, got {self.alpha_mag}")
        if not 0 < self.eta <= 1:
            raise ConfigurationError(f"eta must lie in (0, 1], got {self.eta}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ConfigurationError(f"n_modes must be a positive integer, got {self.n_modes}")
        if int(self.seed) != self.seed or not 0 <= self.seed < _U64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not 0 <= self.burn_in < self.horizon:
            raise ConfigurationError(
                f"need horizon > burn_in >= 0, got burn_in={self.burn_in}, horizon={self.horizon}"
            )
        if self.chi is not None and not self.chi > 0:
            raise ConfigurationError(f"chi must be positive, got {self.chi}")

    @property
    def photon_flux(self) -> float:
        """N = |alpha|^2 / kappa, photons per coherence time."""
        if self.kappa == 0:
            return math.inf
        return self.alpha_mag**2 / self.kappa

    @property
    def window_rate(self) -> float:
        if self.chi is not None:
            return self.chi
        return 2.0 * self.alpha_mag * math.sqrt(self.kappa)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def burn_in_steps(self) -> int:
        return int(round(self.burn_in / self.dt))

    def check_canonical(self) -> None:
        """The first-order canonical outcome density is positive only if 2|alpha|sqrt(dt) < 1."""
        if not 2.0 * self.alpha_mag * math.sqrt(self.dt) < 1.0:
            bound = 1.0 / (4.0 * self.alpha_mag**2)
            raise ConfigurationError(
                f"canonical sampling needs dt < 1/(4 alpha_mag^2) = {bound:.6g}, got dt={self.dt:.6g}"
            )


class RngStream:
    """Deterministic generator addressed by ``(seed, stream_index)``.

    Distinct keys give independent streams (numpy ``SeedSequence`` spawn
    keys); the same key replays the same numbers bit for bit. ``child(k)``
    derives a sub-stream, used to separate phase noise from detector noise
    within one trajectory.
    """

    def __init__(self, seed: int, stream_index: int | tuple[int, ...] = 0):
        key = tuple(stream_index) if isinstance(stream_index, tuple) else (int(stream_index),)
        if any(k < 0 for k in key):
            raise ConfigurationError(f"stream index must be non-negative, got {stream_index}")
        self.seed = int(seed)
        self.key = key
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=key)))

    def child(self, k: int) -> RngStream:
        return RngStream(self.seed, self.key + (int(k),))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def _check_dt(dt: float) -> None:
    # dt = 0 is allowed and yields a zero increment
    if not dt >= 0:
        raise ConfigurationError(f"dt must be non-negative, got {dt}")


def wiener_real(rng: RngStream, dt: float) -> float:
    """Real Wiener increment: Gaussian, mean 0, variance dt."""
    _check_dt(dt)
    return math.sqrt(dt) * float(rng.gen.standard_normal())


def wiener_complex(rng: RngStream, dt: float) -> complex:
    """Complex Wiener increment with <dW dW*> = dt and <dW dW> = 0."""
    _check_dt(dt)
    re, im = rng.gen.standard_normal(2)
    s = math.sqrt(dt / 2.0)
    return complex(s * re, s * im)


@dataclass(frozen=True)
class TruePhase:
    """The beam phase, kept unwrapped on the real line."""

    phi: float
    t: float = 0.0


def evolve_true_phase(state: TruePhase, params: SimParams, rng: RngStream) -> TruePhase:
    dphi = math.sqrt(params.kappa) * wiener_real(rng, params.dt)
    return TruePhase(state.phi + dphi, state.t + params.dt)


def phase_path(phi0: float, n: int, params: SimParams, rng: RngStream) -> np.ndarray:
    """``n`` successive phases after ``phi0``, identical to repeated ``evolve_true_phase``."""
    z = rng.gen.standard_normal(n)
    incr = math.sqrt(params.kappa) * (math.sqrt(params.dt) * z)
    incr[0] += phi0
    return np.cumsum(incr)
