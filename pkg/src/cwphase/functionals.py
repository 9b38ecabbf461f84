"""Exponentially windowed functionals A_t, B_t and the estimates built on them."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

from .errors import ConfigurationError

# Sign in front of chi B A* in the two-functional estimate. With
# A = int w(u) e^{i Phi} I_r du and B = int w(u) e^{2 i Phi} du the signal part of A
# is a + chi B a* (a = |alpha| e^{i phi} / chi), which is inverted by A - chi B A*.
BW_ADAPTIVE_SIGN = -1.0


@dataclass(frozen=True)
class WindowedFunctionals:
    A: complex = 0j
    B: complex = 0j
    chi: float = 1.0

    def __post_init__(self):
        if not self.chi > 0:
            raise ConfigurationError(f"chi must be positive, got {self.chi}")


def default_chi(alpha_mag: float, kappa: float) -> float:
    return 2.0 * alpha_mag * math.sqrt(kappa)


def update_A(state: WindowedFunctionals, inp: complex, dt: float) -> WindowedFunctionals:
    """One step of A <- A e^{-chi dt} + input.

    ``inp`` is the heterodyne increment ``i_c_dt``, or ``e^{i Phi} i_r_dt`` for
    the adaptive schemes.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    return replace(state, A=state.A * math.exp(-state.chi * dt) + inp)


def update_B(state: WindowedFunctionals, Phi: float, dt: float) -> WindowedFunctionals:
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    return replace(state, B=state.B * math.exp(-state.chi * dt) + cmath.exp(2j * Phi) * dt)


def _arg(z: complex) -> float:
    return 0.0 if z == 0 else math.atan2(z.imag, z.real)


def bw_het_estimate(state: WindowedFunctionals) -> float:
    return _arg(state.A)


def bw_adaptive_estimate(state: WindowedFunctionals) -> float:
    z = state.A + BW_ADAPTIVE_SIGN * state.chi * state.B * state.A.conjugate()
    return _arg(z)
