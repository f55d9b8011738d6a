"""Thermal states, composite-system algebra and the fluid channels."""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ChannelError, CutoffError, CutoffWarning
from .fock import FockSpace
from .model import piston_coupling, piston_interaction
from .operators import check_density, check_square, symmetrize

LEAK_WARN = 1e-10
LEAK_ERROR = 1e-4


@dataclass(frozen=True)
class ThermalSpec:
    omega_T: float

    def __post_init__(self):
        if not self.omega_T > 0:
            raise ValueError(f"omega_T must be positive, got {self.omega_T!r}")


def thermal_populations(cutoff, omega_T):
    """Normalized Boltzmann weights exp(-j / omega_T), j = 0..cutoff-1."""
    p = np.exp(-np.arange(cutoff) / omega_T)
    return p / p.sum()


def check_leakage(populations, leak_warn=LEAK_WARN, leak_error=LEAK_ERROR, cycle=None):
    """Warn or raise when the top Fock state is noticeably occupied.

    ``leak_error=None`` disables the hard failure (reduced-cutoff runs).
    """
    top = float(np.real(populations[-1]))
    where = f" at cycle {cycle}" if cycle is not None else ""
    if leak_error is not None and top > leak_error:
        raise CutoffError(
            f"top Fock state population {top:.3e} exceeds {leak_error:.0e}{where}; "
            f"increase the cutoff", cycle=cycle)
    if top > leak_warn:
        warnings.warn(f"top Fock state population {top:.3e}{where}", CutoffWarning,
                      stacklevel=3)
    return top


def thermal_state(space, spec, leak_error=LEAK_ERROR):
    """Diagonal thermal state of the bare oscillator.

    The zero-point 1/2 drops out of the normalization, so populations are
    proportional to exp(-j / omega_T).
    """
    if not isinstance(spec, ThermalSpec):
        spec = ThermalSpec(float(spec))
    p = thermal_populations(space.cutoff, spec.omega_T)
    check_leakage(p, leak_error=leak_error)
    return np.diag(p).astype(complex)


def tensor_product(a, b):
    """Kronecker product, first factor (the fluid) slow."""
    return np.kron(a, b)


def _split_dims(total, fluid_dim):
    if fluid_dim <= 0 or total % fluid_dim:
        raise ValueError(
            f"composite dimension {total} is not a multiple of fluid_dim {fluid_dim}")
    return fluid_dim, total // fluid_dim


def partial_trace_bath(rho_composite, fluid_dim):
    """Trace out the second (bath) factor of a fluid (x) bath operator."""
    rho = check_square(rho_composite, "rho_composite")
    nf, nb = _split_dims(rho.shape[0], fluid_dim)
    return np.einsum("ikjk->ij", rho.reshape(nf, nb, nf, nb))


class CollisionChannel:
    """Fluid map rho -> tr_b[B (rho (x) bath) B^dag] for a fixed bath state.

    Built once per (B, bath) pair as an N^2 x N^2 transfer matrix acting on
    the flattened fluid density operator. With bath = sum_q p_q |v_q><v_q|
    and blocks X[(j, j'), (k, q)] = sqrt(p_q) <j, k| B |j', v_q>,

        T[(j, l), (j', l')] = sum_{k, q} X[(j, j'), (k, q)] conj(X[(l, l'), (k, q)])

    which is a single dense product; applying the channel is then a
    matrix-vector product.
    """

    def __init__(self, bath, b_unitary, fluid_dim=None, prob_floor=1e-17):
        bath = check_square(bath, "bath")
        nb = bath.shape[0]
        b_unitary = check_square(b_unitary, "b_unitary")
        nf = b_unitary.shape[0] // nb if fluid_dim is None else int(fluid_dim)
        if b_unitary.shape[0] != nf * nb:
            raise ValueError(
                f"inconsistent dimensions: bath {bath.shape}, B {b_unitary.shape}, "
                f"fluid_dim {fluid_dim}")
        if np.count_nonzero(bath - np.diag(np.diag(bath))) == 0:
            probs = np.real(np.diag(bath))
            vecs = None
        else:
            probs, vecs = np.linalg.eigh(symmetrize(bath))
        # populations below prob_floor contribute below double precision
        keep = np.flatnonzero(probs > prob_floor)
        b4 = b_unitary.reshape(nf, nb, nf, nb)
        if vecs is None:
            x = b4[:, :, :, keep]
        else:
            x = b4 @ vecs[:, keep]
        x = x * np.sqrt(probs[keep])
        # x[j, k, j', q] -> rows (j, j'), columns (k, q)
        x = np.ascontiguousarray(x.transpose(0, 2, 1, 3)).reshape(nf * nf, nb * keep.size)
        t = (x @ x.conj().T).reshape(nf, nf, nf, nf)
        self.transfer = np.ascontiguousarray(t.transpose(0, 2, 1, 3)).reshape(nf * nf, nf * nf)
        self.fluid_dim = nf
        self.bath_dim = nb

    def __call__(self, rho, check=True):
        rho = check_square(rho, "rho")
        if rho.shape[0] != self.fluid_dim:
            raise ValueError(f"rho has dimension {rho.shape[0]}, channel expects {self.fluid_dim}")
        out = symmetrize((self.transfer @ rho.ravel()).reshape(rho.shape))
        if check:
            try:
                check_density(out)
            except ChannelError as exc:
                raise ChannelError(f"bath collision: {exc}") from None
        return out


def bath_collision(rho, bath, b_unitary, fluid_dim=None, check=True):
    """tr_b[B (rho (x) bath) B^dag] for a freshly reset bath.

    For repeated collisions with the same bath build a ``CollisionChannel``
    once instead.
    """
    rho = check_square(rho, "rho")
    nf = rho.shape[0] if fluid_dim is None else fluid_dim
    if rho.shape[0] != nf:
        raise ValueError(f"rho has dimension {rho.shape[0]}, fluid_dim is {nf}")
    return CollisionChannel(bath, b_unitary, nf)(rho, check=check)


def bath_collision_dense(rho, bath, b_unitary):
    """Reference route through the full composite density operator."""
    composite = tensor_product(rho, bath)
    composite = b_unitary @ composite @ b_unitary.conj().T
    return symmetrize(partial_trace_bath(composite, rho.shape[0]))


def measure(rho):
    """Unselective number-basis measurement: drop all coherences."""
    rho = check_square(rho, "rho")
    return np.diag(np.diag(rho)).astype(complex)


def expected_energy(rho, h, imag_tol=1e-10):
    """Re tr(rho h); the imaginary residue must vanish."""
    rho = np.asarray(rho)
    h = np.asarray(h)
    if rho.shape != h.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape} vs h {h.shape}")
    e = np.sum(rho * h.T)
    if abs(e.imag) > imag_tol:
        raise ChannelError(f"tr(rho H) has imaginary part {e.imag:.3e}")
    return float(e.real)


def interaction_energy_map(params, omega_grid, y_grid, leak_error=LEAK_ERROR):
    """tr(Phi(y) rho_thermal(omega_T)) on an omega_T x y grid.

    Returns an array of shape ``(len(omega_grid), len(y_grid))``.
    """
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    y_grid = np.atleast_1d(np.asarray(y_grid, dtype=float))
    if omega_grid.size == 0 or y_grid.size == 0:
        raise ValueError("omega_grid and y_grid must be non-empty")
    space = FockSpace(params.cutoff)
    g = piston_coupling(params)
    diag_g = np.diag(g)
    out = np.empty((omega_grid.size, y_grid.size))
    for i, w in enumerate(omega_grid):
        p = np.real(np.diag(thermal_state(space, ThermalSpec(w), leak_error=leak_error)))
        base = float(p @ diag_g)
        for k, y in enumerate(y_grid):
            out[i, k] = piston_interaction(params, base, y)
    return out
