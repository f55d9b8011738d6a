"""Truncated Fock basis and single-oscillator operator matrices.

Units throughout the package: lengths in oscillator lengths, energies in
units of hbar*Omega, times in oscillator periods.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite

from .errors import BasisOverflowError, ConvergenceError

MAX_HERMITE_ORDER = 500
#: node_count = 2 * cutoff + QUADRATURE_PADDING for the default rule
QUADRATURE_PADDING = 64
SELF_CHECK_TOL = 1e-10


@dataclass(frozen=True)
class FockSpace:
    """Number states ``|0>, ..., |cutoff - 1>`` of a single oscillator."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise ValueError(f"cutoff must be an integer >= 2, got {self.cutoff!r}")
        if self.cutoff > MAX_HERMITE_ORDER:
            raise BasisOverflowError(
                f"cutoff {self.cutoff} exceeds supported order {MAX_HERMITE_ORDER}")

    @property
    def dim(self):
        return self.cutoff


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes and weights for the weight function exp(-x**2)."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def node_count(self):
        return len(self.nodes)


def _check_order(n):
    if n < 0:
        raise ValueError(f"order must be non-negative, got {n}")
    if n > MAX_HERMITE_ORDER:
        raise BasisOverflowError(
            f"Hermite order {n} exceeds supported order {MAX_HERMITE_ORDER}")


def _hermite_table(nmax, x, seed):
    # normalized three-term recurrence, rows 0..nmax
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = seed
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, nmax):
        out[n + 1] = (x * np.sqrt(2.0 / (n + 1)) * out[n]
                      - np.sqrt(n / (n + 1)) * out[n - 1])
    return out


def hermite_function(n, x):
    """Normalized oscillator eigenfunction psi_n(x).

    Evaluated with the stable normalized recurrence rather than through
    Hermite polynomials, which overflow long before ``n = 50``.
    """
    _check_order(n)
    x = np.asarray(x, dtype=float)
    seed = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    val = _hermite_table(n, x, seed)[n]
    return float(val) if val.ndim == 0 else val


def hermite_functions(nmax, x):
    """Table ``T[n, i] = psi_n(x[i])`` for ``n = 0..nmax``."""
    _check_order(nmax)
    x = np.asarray(x, dtype=float)
    return _hermite_table(nmax, x, np.pi ** -0.25 * np.exp(-0.5 * x * x))


def scaled_hermite_functions(nmax, x):
    """Table of ``psi_n(x) * exp(x**2 / 2)``.

    These are polynomials; they pair with the Gauss-Hermite weight, which
    carries the full exp(-x**2).
    """
    _check_order(nmax)
    x = np.asarray(x, dtype=float)
    return _hermite_table(nmax, x, np.full(x.shape, np.pi ** -0.25))


def build_quadrature(node_count):
    """Gauss-Hermite rule with ``node_count`` nodes.

    The rule integrates against exp(-x**2); callers must divide that weight
    out of their integrand.
    """
    if int(node_count) != node_count or node_count < 1:
        raise ValueError(f"node_count must be a positive integer, got {node_count!r}")
    nodes, weights = roots_hermite(int(node_count))
    return QuadratureRule(nodes=np.asarray(nodes), weights=np.asarray(weights))


def default_quadrature(space):
    return build_quadrature(2 * space.cutoff + QUADRATURE_PADDING)


def _coupling_from_rule(n, width, center, rule):
    # exp(-x^2) * exp(-(x-c)^2/2w^2) = exp(-a (x-m)^2 + shift); the rule is
    # mapped onto that combined weight so the remaining integrand is the
    # polynomial phi_j * phi_k (exact once node_count >= n).
    inv = 1.0 / (2.0 * width ** 2)
    a = 1.0 + inv
    m = center * inv / a
    shift = a * m * m - center * center * inv
    x = m + rule.nodes / np.sqrt(a)
    phi = scaled_hermite_functions(n - 1, x)
    w = rule.weights * (np.exp(shift) / np.sqrt(a))
    mat = (phi * w) @ phi.T
    return 0.5 * (mat + mat.T)


def gaussian_coupling_matrix(space, width, center=0.0, rule=None, self_check=True):
    """Matrix of exp(-(x - center)**2 / (2 width**2)) in the Fock basis.

    Parameters
    ----------
    space : FockSpace
    width : float
        Gaussian width, must be positive.
    center : float
        Offset of the Gaussian in oscillator lengths.
    rule : QuadratureRule, optional
        Defaults to ``2 * cutoff + 64`` Gauss-Hermite nodes.
    self_check : bool
        Recompute with twice the nodes and raise ``ConvergenceError`` if any
        element moves by more than 1e-10.

    Returns
    -------
    ndarray
        Real symmetric ``cutoff x cutoff`` array.
    """
    if not width > 0:
        raise ValueError(f"width must be positive, got {width!r}")
    if rule is None:
        rule = default_quadrature(space)
    n = space.cutoff
    if rule.node_count < n:
        raise ConvergenceError(
            f"{rule.node_count} quadrature nodes cannot resolve {n} Fock states")
    m = _coupling_from_rule(n, width, center, rule)
    if self_check:
        ref = _coupling_from_rule(n, width, center, build_quadrature(2 * rule.node_count))
        err = np.max(np.abs(ref - m))
        if err > SELF_CHECK_TOL:
            raise ConvergenceError(
                f"quadrature self-check failed: doubling nodes moved elements by {err:.3e}")
    return m


def bare_hamiltonian(space):
    """diag(j + 1/2): the uncoupled oscillator."""
    return np.diag(np.arange(space.cutoff) + 0.5)


def number_operator(space):
    return np.diag(np.arange(space.cutoff, dtype=float))
