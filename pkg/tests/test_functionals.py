import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cwphase.errors import ConfigurationError
from cwphase.functionals import (
    BW_ADAPTIVE_SIGN,
    WindowedFunctionals,
    bw_adaptive_estimate,
    bw_het_estimate,
    default_chi,
    update_A,
    update_B,
)


def drive_A(state, inputs, dt):
    for x in inputs:
        state = update_A(state, x, dt)
    return state


def test_constant_input_limit():
    chi, dt, c = 2.0, 1e-3, 0.7 - 0.2j
    n = int(round(10 / chi / dt))
    s = drive_A(WindowedFunctionals(chi=chi), [c * dt] * n, dt)
    assert abs(s.A - c / chi) < 0.01 * abs(c / chi)


def test_zero_input_decays_exponentially():
    chi, dt = 3.0, 1e-3
    s = drive_A(WindowedFunctionals(A=1 + 1j, chi=chi), [0j] * 500, dt)
    assert s.A == pytest.approx((1 + 1j) * math.exp(-chi * 0.5), rel=1e-12)


def test_noiseless_heterodyne_phase_preserved():
    chi, dt, phi = 2.0, 1e-3, 2.0
    s = drive_A(WindowedFunctionals(chi=chi), [1.3 * cmath.exp(1j * phi) * dt] * 5000, dt)
    assert abs(bw_het_estimate(s) - phi) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=1, max_size=40),
       st.floats(0.1, 20), st.floats(1e-4, 1e-1))
def test_update_equals_windowed_sum(inputs, chi, dt):
    s = drive_A(WindowedFunctionals(chi=chi), inputs, dt)
    n = len(inputs)
    exact = sum(x * math.exp(-chi * dt * (n - 1 - k)) for k, x in enumerate(inputs))
    assert abs(s.A - exact) <= 1e-12 * (1 + sum(abs(x) for x in inputs))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(min_magnitude=0.01, max_magnitude=5, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=20),
       st.floats(-3, 3))
def test_rotation_equivariance(inputs, delta):
    dt, chi = 1e-2, 1.5
    a = drive_A(WindowedFunctionals(chi=chi), inputs, dt)
    b = drive_A(WindowedFunctionals(chi=chi), [x * cmath.exp(1j * delta) for x in inputs], dt)
    if abs(a.A) > 1e-6:
        assert math.remainder(bw_het_estimate(b) - bw_het_estimate(a) - delta, 2 * math.pi) == pytest.approx(0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-1, 1)), min_size=1, max_size=20), st.floats(-3, 3))
def test_adaptive_estimate_equivariance(steps, delta):
    # shifting every Phi by delta rotates A by delta and B by 2 delta
    dt, chi = 1e-2, 1.5
    a = b = WindowedFunctionals(chi=chi)
    for Phi, ir in steps:
        a = update_B(update_A(a, cmath.exp(1j * Phi) * ir, dt), Phi, dt)
        b = update_B(update_A(b, cmath.exp(1j * (Phi + delta)) * ir, dt), Phi + delta, dt)
    z = a.A + BW_ADAPTIVE_SIGN * chi * a.B * a.A.conjugate()
    if abs(z) > 1e-6:
        d = bw_adaptive_estimate(b) - bw_adaptive_estimate(a) - delta
        assert math.remainder(d, 2 * math.pi) == pytest.approx(0, abs=1e-8)


def test_B_constant_phase_limit():
    chi, dt, Phi = 2.0, 1e-3, 0.4
    s = WindowedFunctionals(chi=chi)
    for _ in range(int(20 / chi / dt)):
        s = update_B(s, Phi, dt)
    # discrete window weight exceeds 1/chi by a factor ~ 1 + chi dt / 2
    assert s.B == pytest.approx(cmath.exp(2j * Phi) / chi, rel=chi * dt)


def test_B_alternating_phase_cancels():
    chi, dt = 2.0, 1e-3
    s = WindowedFunctionals(chi=chi)
    vals = []
    for k in range(20000):
        s = update_B(s, 0.3 + 0.5 * math.pi * k, dt)
        vals.append(s.B)
    assert abs(np.mean(vals[10000:])) < 1e-3 / chi


def test_B_bounded_by_discrete_window():
    # the discrete window has total weight dt / (1 - e^{-chi dt}), slightly above 1/chi
    chi, dt = 5.0, 1e-2
    bound = dt / (1 - math.exp(-chi * dt))
    rng = np.random.default_rng(0)
    s = WindowedFunctionals(chi=chi)
    for Phi in rng.uniform(-4, 4, 3000):
        s = update_B(s, Phi, dt)
        assert abs(s.B) <= bound * (1 + 1e-12)
    assert bound == pytest.approx(1 / chi, rel=chi * dt)


def test_het_estimate_arithmetic():
    assert bw_het_estimate(WindowedFunctionals(A=1 + 1j)) == pytest.approx(math.pi / 4)
    assert bw_het_estimate(WindowedFunctionals(A=0j)) == 0.0


def test_adaptive_estimate_special_cases():
    s = WindowedFunctionals(A=-1 + 2j, B=0j, chi=2.0)
    assert bw_adaptive_estimate(s) == bw_het_estimate(s)
    assert bw_adaptive_estimate(WindowedFunctionals(A=0.8 + 0j, B=0.3 + 0j, chi=2.0)) == 0.0


def test_adaptive_estimate_inverts_signal():
    # A = a + chi B a* (signal part), so A - chi B A* is proportional to a
    a = 0.9 * cmath.exp(0.7j)
    chi, B = 2.0, 0.2 * cmath.exp(1.1j)
    s = WindowedFunctionals(A=a + chi * B * a.conjugate(), B=B, chi=chi)
    assert bw_adaptive_estimate(s) == pytest.approx(0.7, abs=1e-12)


def test_default_chi():
    assert default_chi(3.0, 4.0) == 12.0


def test_validation():
    with pytest.raises(ConfigurationError):
        WindowedFunctionals(chi=0.0)
    with pytest.raises(ConfigurationError):
        update_A(WindowedFunctionals(), 1j, 0.0)
    with pytest.raises(ConfigurationError):
        update_B(WindowedFunctionals(), 0.0, -1.0)
