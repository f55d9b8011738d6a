"""Engine Hamiltonians: oscillator + Gaussian piston, and fluid + bath."""

from dataclasses import asdict, dataclass, fields
from functools import lru_cache

import numpy as np

from .fock import FockSpace, bare_hamiltonian, gaussian_coupling_matrix


@dataclass(frozen=True)
class PistonTrajectory:
    """Constant-speed ramp from ``y_init`` to ``y_final`` over ``tau_p``."""

    y_init: float
    y_final: float
    tau_p: float

    def __post_init__(self):
        if not self.tau_p > 0:
            raise ValueError(f"tau_p must be positive, got {self.tau_p!r}")

    @property
    def speed(self):
        return (self.y_final - self.y_init) / self.tau_p

    def reversed(self):
        return PistonTrajectory(self.y_final, self.y_init, self.tau_p)


def piston_position(traj, tau):
    if not 0.0 <= tau <= traj.tau_p:
        raise ValueError(f"tau={tau!r} outside [0, {traj.tau_p}]")
    return traj.y_init + tau * traj.speed


@dataclass(frozen=True)
class EngineParams:
    """Physical parameters of the engine.

    ``y_retracted`` and ``tau_b`` default to ``10 * sigma`` and ``tau_p``.
    ``bath_width`` is the Gaussian width of the fluid-bath coupling; ``x0`` and
    ``z0`` are its offsets on the fluid and bath coordinates and ``y_amp`` its
    amplitude.
    """

    sigma: float
    tau_p: float = 10.0
    phi0: float = -5.0
    y_advanced: float = 0.0
    y_retracted: float = None
    x0: float = 1.0
    z0: float = 1.0
    bath_width: float = 1.0
    y_amp: float = 1.0
    omega_hot: float = 5.0
    omega_cold: float = 0.1
    tau_b: float = None
    cutoff: int = 51

    def __post_init__(self):
        if self.y_retracted is None:
            object.__setattr__(self, "y_retracted", 10.0 * self.sigma)
        if self.tau_b is None:
            object.__setattr__(self, "tau_b", self.tau_p)
        for name in ("sigma", "bath_width", "tau_p", "tau_b", "omega_hot", "omega_cold"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0 and np.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise ValueError(f"cutoff must be an integer >= 2, got {self.cutoff!r}")
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value!r}")

    @property
    def space(self):
        return FockSpace(self.cutoff)

    def retraction(self):
        return PistonTrajectory(self.y_advanced, self.y_retracted, self.tau_p)

    def as_dict(self):
        return asdict(self)


@lru_cache(maxsize=64)
def _cached_coupling(cutoff, width, center):
    m = gaussian_coupling_matrix(FockSpace(cutoff), width, center)
    m.flags.writeable = False
    return m


def piston_coupling(params):
    """x-part of the piston Gaussian, computed once per (cutoff, sigma)."""
    return _cached_coupling(params.cutoff, float(params.sigma), 0.0)


def bath_couplings(params):
    """Single-oscillator factors of the fluid-bath Gaussian (fluid, bath)."""
    w = float(params.bath_width)
    return (_cached_coupling(params.cutoff, w, float(params.x0)),
            _cached_coupling(params.cutoff, w, float(params.z0)))


def piston_interaction(params, coupling_matrix, y):
    """Phi0 * exp(-y**2 / 2 sigma**2) * coupling_matrix."""
    return params.phi0 * np.exp(-y * y / (2.0 * params.sigma ** 2)) * coupling_matrix


def engine_hamiltonian(params, y, coupling_matrix=None):
    """Fluid Hamiltonian with the piston held at ``y``."""
    if coupling_matrix is None:
        coupling_matrix = piston_coupling(params)
    return bare_hamiltonian(params.space) + piston_interaction(params, coupling_matrix, y)


def ramp_hamiltonian(params, traj):
    """Callable ``tau -> H(tau)`` for the piston moving along ``traj``."""
    h0 = bare_hamiltonian(params.space)
    g = piston_coupling(params)

    def hamiltonian(tau):
        y = traj.y_init + tau * traj.speed
        return h0 + piston_interaction(params, g, y)

    return hamiltonian


def composite_bath_hamiltonian(params, y, fock=None):
    """Fluid (x) bath Hamiltonian during a bath contact, fluid index slow.

    [H0 + Phi(y)] (x) 1 + 1 (x) H0 + Y0 * Ys(x0) (x) Ys(z0)
    """
    space = fock if fock is not None else params.space
    if space.cutoff != params.cutoff:
        raise ValueError("fock space cutoff disagrees with params.cutoff")
    n = space.cutoff
    eye = np.eye(n)
    h_fluid = engine_hamiltonian(params, y)
    h_bath = bare_hamiltonian(space)
    ys_fluid, ys_bath = bath_couplings(params)
    h = np.kron(h_fluid, eye) + np.kron(eye, h_bath)
    if params.y_amp != 0:
        h += params.y_amp * np.kron(ys_fluid, ys_bath)
    return 0.5 * (h + h.T)
