"""Structural checks for the dense matrices passed around the package.

Operators are plain numpy arrays; these helpers verify the invariants a
Hermitian, unitary or density operator must satisfy and raise on failure.
"""

import numpy as np

from .errors import ChannelError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-8
DENSITY_TOL = 1e-10
POSITIVITY_TOL = 1e-8


def hermiticity_error(m):
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def unitarity_error(u):
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def check_square(m, name="operator"):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    return m


def check_hermitian(m, tol=HERMITIAN_TOL):
    m = check_square(m)
    err = hermiticity_error(m)
    if not err <= tol:
        raise ValueError(f"matrix is not Hermitian: max |M - M^dag| = {err:.3e}")
    return m


def check_unitary(u, tol=UNITARY_TOL):
    u = check_square(u)
    err = unitarity_error(u)
    if not err <= tol:
        raise ValueError(f"matrix is not unitary: max |U^dag U - 1| = {err:.3e}")
    return u


def density_errors(rho):
    """(trace error, Hermiticity error, most negative eigenvalue)."""
    rho = check_square(rho, "density operator")
    herm = hermiticity_error(rho)
    tr = abs(np.trace(rho) - 1.0)
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return float(tr), herm, float(lam[0])


def check_density(rho, tol=DENSITY_TOL, positivity_tol=POSITIVITY_TOL):
    """Raise ``ChannelError`` unless ``rho`` is a valid density operator."""
    tr, herm, lam_min = density_errors(rho)
    if not (tr <= tol and herm <= tol and lam_min >= -positivity_tol):
        raise ChannelError(
            f"invalid density operator: trace error {tr:.3e}, "
            f"Hermiticity error {herm:.3e}, min eigenvalue {lam_min:.3e}")
    return rho


def basis_state(dim, j):
    psi = np.zeros(dim, dtype=complex)
    psi[j] = 1.0
    return psi


def projector(psi):
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())


def symmetrize(m):
    return 0.5 * (m + m.conj().T)
