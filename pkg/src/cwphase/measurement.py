"""Detector models: homodyne, heterodyne and canonical phase measurement.

Currents are returned as increments over one step (``I dt``); white noise
has no pointwise value, the increment is the well-defined object.

The scalar samplers take one step at a time. The ``*_record`` variants
produce a whole block of outcomes for a known phase path and are what the
trajectory engine uses for the non-adaptive detectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .stochastic import RngStream, SimParams, wiener_complex, wiener_real


@dataclass(frozen=True)
class HomodyneSample:
    i_r_dt: float


@dataclass(frozen=True)
class HeterodyneSample:
    i_c_dt: complex


@dataclass(frozen=True)
class CanonicalSample:
    theta: float


def sample_homodyne(phi: float, Phi: float, params: SimParams, rng: RngStream) -> HomodyneSample:
    mean = 2.0 * params.eta * params.alpha_mag * math.cos(phi - Phi) * params.dt
    return HomodyneSample(mean + math.sqrt(params.eta) * wiener_real(rng, params.dt))


def sample_heterodyne(phi: float, params: SimParams, rng: RngStream) -> HeterodyneSample:
    signal = params.alpha_mag * complex(math.cos(phi), math.sin(phi)) * params.dt
    return HeterodyneSample(signal + wiener_complex(rng, params.dt))


def canonical_strength(params: SimParams) -> float:
    """eps = 2|alpha|sqrt(dt); the outcome density is (1 + eps cos(theta - phi)) / 2pi."""
    params.check_canonical()
    return 2.0 * params.alpha_mag * math.sqrt(params.dt)


def sample_canonical(phi: float, params: SimParams, rng: RngStream) -> CanonicalSample:
    """Rejection sampler: uniform proposal, acceptance (1 + eps cos) / (1 + eps)."""
    eps = canonical_strength(params)
    while True:
        theta, u = rng.gen.random(2)
        theta = 2.0 * math.pi * theta - math.pi
        if u * (1.0 + eps) < 1.0 + eps * math.cos(theta - phi):
            return CanonicalSample(theta)


def heterodyne_record(phi: np.ndarray, params: SimParams, rng: RngStream) -> np.ndarray:
    """Complex current increments for every phase in ``phi``."""
    phi = np.asarray(phi, dtype=float)
    z = rng.gen.standard_normal((phi.size, 2))
    s = math.sqrt(params.dt / 2.0)
    noise = s * z[:, 0] + 1j * (s * z[:, 1])
    return params.alpha_mag * params.dt * np.exp(1j * phi) + noise


def canonical_record(phi: np.ndarray, params: SimParams, rng: RngStream) -> np.ndarray:
    """Canonical outcomes in [-pi, pi) for every phase in ``phi`` (vectorised rejection)."""
    eps = canonical_strength(params)
    phi = np.asarray(phi, dtype=float)
    theta = np.empty(phi.size)
    todo = np.arange(phi.size)
    while todo.size:
        prop = 2.0 * math.pi * rng.gen.random(todo.size) - math.pi
        u = rng.gen.random(todo.size)
        ok = u * (1.0 + eps) < 1.0 + eps * np.cos(prop - phi[todo])
        theta[todo[ok]] = prop[ok]
        todo = todo[~ok]
    return theta


def canonical_pseudo_current(theta: np.ndarray | float, dt: float):
    """Map canonical outcomes onto the heterodyne current they mimic, e^{i theta} sqrt(dt).

    Its first two moments match a heterodyne increment (mean |alpha| e^{i phi} dt,
    <|dI|^2> = dt, <dI^2> = 0 to first order), so the heterodyne filter step
    applies unchanged.
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    return np.exp(1j * np.asarray(theta)) * math.sqrt(dt)
