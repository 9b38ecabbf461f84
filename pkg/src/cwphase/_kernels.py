"""Compiled inner loops.

Fourier coefficients are stored as ``b[J + j]`` for ``j = -J..J``. Every
routine here mutates its array arguments in place; the public modules wrap
them with value semantics. Trajectory loops return the index of the first
step at which the filter became invalid, or -1.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi
SHARPNESS_TOL = 1e-9


@njit(cache=True)
def wrap(x):
    """Map onto [-pi, pi)."""
    return (x + math.pi) % TWO_PI - math.pi


@njit(cache=True)
def follow(prev, angle):
    """Unwrapped continuation of ``prev`` that is congruent to ``angle``."""
    return prev + wrap(angle - prev)


@njit(cache=True)
def diffuse(b, damp):
    for k in range(b.shape[0]):
        b[k] *= damp[k]


@njit(cache=True)
def het_update(b, dI, alpha, dt, scratch):
    """Euler step of the heterodyne KS measurement term.

    ``zeta`` below is the conjugate innovation, conj(dI - alpha c1 dt), which
    is the form under which the mode equation
    db_j = alpha (zeta b_{j-1} + zeta* b_{j+1}) - 4 pi alpha b_j Re(zeta* b_1)
    holds with P = sum b_j e^{i j phi} and c1 = <e^{i phi}> = 2 pi b_{-1}.
    """
    n = b.shape[0]
    J = (n - 1) // 2
    c1 = TWO_PI * b[J - 1]
    zeta = (dI - alpha * c1 * dt).conjugate()
    zc = zeta.conjugate()
    nl = 2.0 * TWO_PI * alpha * (zc * b[J + 1]).real
    for k in range(n):
        acc = -nl * b[k]
        if k > 0:
            acc += alpha * zeta * b[k - 1]
        if k < n - 1:
            acc += alpha * zc * b[k + 1]
        scratch[k] = b[k] + acc
    for k in range(n):
        b[k] = scratch[k]


@njit(cache=True)
def hom_update(b, dy, Phi, alpha, dt, scratch):
    """Euler step of the homodyne KS measurement term (detector efficiency taken as 1)."""
    n = b.shape[0]
    J = (n - 1) // 2
    e = complex(math.cos(Phi), -math.sin(Phi))
    ec = e.conjugate()
    m = (TWO_PI * b[J - 1] * e).real
    g = alpha * (dy - 2.0 * alpha * m * dt)
    for k in range(n):
        acc = -2.0 * m * b[k]
        if k > 0:
            acc += e * b[k - 1]
        if k < n - 1:
            acc += ec * b[k + 1]
        scratch[k] = b[k] + g * acc
    for k in range(n):
        b[k] = scratch[k]


@njit(cache=True)
def zakai_het_update(b, dI, alpha, scratch):
    """Unnormalised heterodyne update: dP~ = 2 alpha Re(e^{-i phi} dI) P~."""
    n = b.shape[0]
    dc = dI.conjugate()
    for k in range(n):
        acc = 0j
        if k > 0:
            acc += dc * b[k - 1]
        if k < n - 1:
            acc += dI * b[k + 1]
        scratch[k] = b[k] + alpha * acc
    for k in range(n):
        b[k] = scratch[k]


@njit(cache=True)
def zakai_hom_update(b, dy, Phi, alpha, scratch):
    n = b.shape[0]
    e = complex(math.cos(Phi), -math.sin(Phi))
    ec = e.conjugate()
    for k in range(n):
        acc = 0j
        if k > 0:
            acc += e * b[k - 1]
        if k < n - 1:
            acc += ec * b[k + 1]
        scratch[k] = b[k] + alpha * dy * acc
    for k in range(n):
        b[k] = scratch[k]


@njit(cache=True)
def renormalize(b):
    """Impose b_{-j} = conj(b_j) and b_0 = 1/(2 pi); return the sharpness 2 pi |b_1|.

    Returns -1.0 if the zeroth coefficient is not positive.
    """
    n = b.shape[0]
    J = (n - 1) // 2
    for j in range(1, J + 1):
        avg = 0.5 * (b[J + j] + b[J - j].conjugate())
        b[J + j] = avg
        b[J - j] = avg.conjugate()
    b0 = b[J].real
    if not b0 > 0.0:
        return -1.0
    scale = 1.0 / (TWO_PI * b0)
    for k in range(n):
        b[k] *= scale
    b[J] = 1.0 / TWO_PI
    return TWO_PI * abs(b[J + 1])


@njit(cache=True)
def _estimate(b, J):
    c1 = TWO_PI * b[J - 1]
    if c1.real == 0.0 and c1.imag == 0.0:
        return 0.0
    return math.atan2(c1.imag, c1.real)


@njit(cache=True)
def run_heterodyne_filter(b, damp, alpha, dt, dI, state, phi_hat, sharp):
    """Optimal heterodyne (and canonical, via pseudo-currents) filter over a block.

    ``state[0]`` carries the unwrapped estimate between blocks.
    """
    n = b.shape[0]
    J = (n - 1) // 2
    scratch = np.empty(n, dtype=np.complex128)
    est = state[0]
    for k in range(dI.shape[0]):
        diffuse(b, damp)
        het_update(b, dI[k], alpha, dt, scratch)
        s = renormalize(b)
        if not (0.0 <= s <= 1.0 + SHARPNESS_TOL):
            state[0] = est
            return k
        est = follow(est, _estimate(b, J))
        phi_hat[k] = est
        sharp[k] = s
    state[0] = est
    return -1


@njit(cache=True)
def run_semi_optimal(b, damp, alpha, eta, dt, phi, dW, state, phi_hat, sharp, lo_phase):
    """KS homodyne filter with the local oscillator locked to estimate + pi/2.

    ``state = [estimate, Phi]``; the Phi used at step k was set after step k-1.
    """
    n = b.shape[0]
    J = (n - 1) // 2
    scratch = np.empty(n, dtype=np.complex128)
    est = state[0]
    Phi = state[1]
    amp = 2.0 * eta * alpha * dt
    seta = math.sqrt(eta)
    for k in range(phi.shape[0]):
        dy = amp * math.cos(phi[k] - Phi) + seta * dW[k]
        diffuse(b, damp)
        hom_update(b, dy, Phi, alpha, dt, scratch)
        s = renormalize(b)
        if not (0.0 <= s <= 1.0 + SHARPNESS_TOL):
            state[0] = est
            state[1] = Phi
            return k
        est = follow(est, _estimate(b, J))
        Phi = est + HALF_PI
        phi_hat[k] = est
        sharp[k] = s
        lo_phase[k] = Phi
    state[0] = est
    state[1] = Phi
    return -1


@njit(cache=True)
def run_simple_adaptive(alpha, eta, dt, gain, phi, dW, state, phi_hat, lo_phase):
    """dPhi = gain * I_r dt, estimate = Phi - pi/2. ``state = [Phi]``."""
    Phi = state[0]
    amp = 2.0 * eta * alpha * dt
    seta = math.sqrt(eta)
    for k in range(phi.shape[0]):
        dy = amp * math.cos(phi[k] - Phi) + seta * dW[k]
        Phi += gain * dy
        phi_hat[k] = Phi - HALF_PI
        lo_phase[k] = Phi
    state[0] = Phi
    return -1


@njit(cache=True)
def run_bw_heterodyne(chi, dt, dI, fstate, state, phi_hat):
    """A <- A e^{-chi dt} + dI, estimate arg A. ``fstate = [A]``, ``state = [estimate]``."""
    decay = math.exp(-chi * dt)
    A = fstate[0]
    est = state[0]
    for k in range(dI.shape[0]):
        A = A * decay + dI[k]
        if A.real != 0.0 or A.imag != 0.0:
            est = follow(est, math.atan2(A.imag, A.real))
        phi_hat[k] = est
    fstate[0] = A
    state[0] = est
    return -1


@njit(cache=True)
def run_bw_adaptive(alpha, eta, dt, chi, gain, sign, phi, dW, fstate, state, phi_hat, lo_phase):
    """Simple-adaptive feedback with the two-functional estimate arg(A + sign chi B A*).

    ``fstate = [A, B]``, ``state = [estimate, Phi]``.
    """
    decay = math.exp(-chi * dt)
    A = fstate[0]
    B = fstate[1]
    est = state[0]
    Phi = state[1]
    amp = 2.0 * eta * alpha * dt
    seta = math.sqrt(eta)
    for k in range(phi.shape[0]):
        dy = amp * math.cos(phi[k] - Phi) + seta * dW[k]
        A = A * decay + complex(math.cos(Phi), math.sin(Phi)) * dy
        B = B * decay + complex(math.cos(2.0 * Phi), math.sin(2.0 * Phi)) * dt
        Phi += gain * dy
        z = A + sign * chi * B * A.conjugate()
        if z.real != 0.0 or z.imag != 0.0:
            est = follow(est, math.atan2(z.imag, z.real))
        phi_hat[k] = est
        lo_phase[k] = Phi
    fstate[0] = A
    fstate[1] = B
    state[0] = est
    state[1] = Phi
    return -1
