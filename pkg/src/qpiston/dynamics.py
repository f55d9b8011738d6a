"""Time evolution in oscillator periods: d/dtau X = -2 pi i H(tau) X.

Piston strokes are integrated with a fixed-step fifth-order Runge-Kutta
scheme (the Dormand-Prince 5th-order weights, no step control), by default
in the frame rotating with the diagonal of H. Bath contacts use a
time-independent Hamiltonian and go through an exact spectral exponential
instead.
"""

import math

import numpy as np

from .errors import StepSizeError
from .operators import check_square, symmetrize, unitarity_error

DEFAULT_DTAU = 1e-3
NORM_TOL = 1e-5

# Dormand-Prince tableau, fifth-order solution row
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)


def _step_count(length, dtau):
    if not dtau > 0:
        raise ValueError(f"dtau must be positive, got {dtau!r}")
    return max(1, math.ceil(length / dtau - 1e-9))


def _rk5_steps(rhs, y, t0, h, n):
    k = [None] * 6
    for step in range(n):
        t = t0 + step * h
        for s in range(6):
            ys = y
            for a, ki in zip(_A[s], k):
                if a:
                    ys = ys + (h * a) * ki
            k[s] = rhs(t + _C[s] * h, ys)
        for b, ki in zip(_B, k):
            if b:
                y = y + (h * b) * ki
    return y


def rk5_integrate(hamiltonian_of_tau, y0, tau_span, dtau=DEFAULT_DTAU, frame="diagonal"):
    """Integrate dY/dtau = -2 pi i H(tau) Y from ``tau_span[0]`` to ``tau_span[1]``.

    ``Y`` may be a vector or a matrix. The span is cut into equal steps no
    longer than ``dtau``.

    With ``frame="diagonal"`` the equation is integrated in the frame rotating
    with D = diag H(tau0): Y = exp(-2 pi i D (tau - tau0)) Y_I, and RK5 is
    applied to dY_I/dtau = -2 pi i V_I(tau) Y_I. The transformation is exact;
    it only removes the large bare-oscillator phases from the step-size
    budget. ``frame=None`` integrates the lab-frame equation directly.
    """
    t0, t1 = map(float, tau_span)
    y = np.array(y0, dtype=complex)
    length = t1 - t0
    if length == 0:
        return y
    n = _step_count(abs(length), dtau)
    h = length / n
    fac = -2j * np.pi

    if frame is None:
        def rhs(t, ys):
            return fac * (hamiltonian_of_tau(t) @ ys)

        return _rk5_steps(rhs, y, t0, h, n)
    if frame != "diagonal":
        raise ValueError(f"unknown frame {frame!r}")

    d = np.real(np.diag(hamiltonian_of_tau(t0))).copy()
    eye_mask = np.eye(len(d), dtype=bool)

    def rhs(t, ys):
        v = np.array(hamiltonian_of_tau(t), dtype=complex)
        v[eye_mask] -= d
        ph = np.exp(2j * np.pi * d * (t - t0))
        v *= ph[:, None]
        v *= ph.conj()[None, :]
        return fac * (v @ ys)

    y = _rk5_steps(rhs, y, t0, h, n)
    rot = np.exp(-2j * np.pi * d * length)
    return rot[:, None] * y if y.ndim == 2 else rot * y


def evolve_state(psi0, hamiltonian_of_tau, tau_span, dtau=DEFAULT_DTAU, norm_tol=NORM_TOL,
                 frame="diagonal"):
    """Solve the Schrodinger equation for a state vector.

    The state is never renormalized; a norm drift above ``norm_tol`` raises
    ``StepSizeError``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.ndim != 1:
        raise ValueError("psi0 must be a vector")
    psi = rk5_integrate(hamiltonian_of_tau, psi0, tau_span, dtau, frame)
    drift = abs(np.linalg.norm(psi) - np.linalg.norm(psi0))
    if not drift <= norm_tol:  # NaN counts as failure
        raise StepSizeError(f"norm drifted by {drift:.3e}; reduce dtau (now {dtau})")
    return psi


def propagator(hamiltonian_of_tau, tau_span, dtau=DEFAULT_DTAU, dim=None,
               unitarity_tol=1e-8, frame="diagonal", project=False):
    """Time-evolution operator U(tau1, tau0) with U(tau0, tau0) = 1.

    ``project=True`` replaces the integrated matrix by its unitary polar
    factor after the drift check, so repeated conjugations keep the trace to
    machine precision.
    """
    if dim is None:
        dim = check_square(hamiltonian_of_tau(float(tau_span[0]))).shape[0]
    u = rk5_integrate(hamiltonian_of_tau, np.eye(dim, dtype=complex), tau_span, dtau, frame)
    err = unitarity_error(u)
    if not err <= unitarity_tol:
        raise StepSizeError(
            f"propagator unitarity error {err:.3e}; reduce dtau (now {dtau})")
    if project:
        u = nearest_unitary(u)
    return u


def nearest_unitary(u):
    """Unitary polar factor of ``u`` (closest unitary in Frobenius norm)."""
    w, _, vh = np.linalg.svd(u)
    return w @ vh


def hermitian_expm(h, duration):
    """exp(-2 pi i * duration * h) through the eigendecomposition of ``h``."""
    h = check_square(h)
    if duration == 0:
        return np.eye(h.shape[0], dtype=complex)
    w, v = np.linalg.eigh(h)
    phases = np.exp(-2j * np.pi * duration * w)
    if np.isrealobj(v):
        return (v * phases) @ v.T
    return (v * phases) @ v.conj().T


def conjugate_density(rho, u):
    """U rho U^dag, re-symmetrized."""
    rho = check_square(rho, "rho")
    u = check_square(u, "u")
    if rho.shape != u.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape} vs u {u.shape}")
    return symmetrize(u @ rho @ u.conj().T)
