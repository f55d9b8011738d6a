"""Engine cycles, thermodynamic bookkeeping and the adiabaticity scan.

A cycle starts with the piston advanced and runs

    heat addition -> retraction -> heat rejection -> advance

The retraction is integrated once per configuration and reused every
cycle; the advance runs it backwards (rho -> U^dag rho U). Bath contacts
use the exact spectral exponential of the composite Hamiltonian, folded
into a precomputed fluid channel. By default one contact unitary, built
with the piston retracted, serves both baths.
"""

import warnings
from dataclasses import asdict, dataclass, field, fields
from typing import NamedTuple, Optional

import numpy as np

from .dynamics import (DEFAULT_DTAU, conjugate_density, evolve_state,
                       hermitian_expm, propagator)
from .errors import CutoffError, UndefinedEfficiencyError
from .fock import bare_hamiltonian
from .model import (EngineParams, PistonTrajectory, composite_bath_hamiltonian,
                    engine_hamiltonian, piston_coupling, piston_interaction,
                    ramp_hamiltonian)
from .thermo import (LEAK_ERROR, CollisionChannel, ThermalSpec, expected_energy,
                     measure, thermal_state)

BATH = "bath"
MEASUREMENT = "measurement"
MODES = (BATH, MEASUREMENT)

STEADY_WINDOW = 10
STEADY_TOL = 1e-3


@dataclass(frozen=True)
class CycleRecord:
    """Energies at the four phase boundaries of one cycle and derived work/heat.

    Signs: ``q_in`` is heat added during phase 1, ``w_retract`` work done on
    the fluid while retracting, ``q_out`` heat removed in phase 3,
    ``w_advance`` work done by the fluid during the power stroke.
    ``e_advanced_cold_next`` is the energy after the advance, i.e. the first
    energy of the following cycle.
    """

    cycle_index: int
    e_advanced_cold: float
    e_advanced_hot: float
    e_retracted_hot: float
    e_retracted_cold: float
    e_advanced_cold_next: float
    q_in: float
    w_retract: float
    q_out: float
    w_advance: float
    net_work: float
    efficiency: float
    power: float
    state_change: float = float("nan")

    @classmethod
    def from_energies(cls, index, e_ac, e_ah, e_rh, e_rc, e_next, tau_p, mode,
                      state_change=float("nan")):
        q_in = e_ah - e_ac
        w_retract = e_rh - e_ah
        q_out = e_rh - e_rc
        w_advance = e_rc - e_next
        net = w_advance - w_retract
        eff = net / q_in if q_in != 0 else float("nan")
        return cls(index, e_ac, e_ah, e_rh, e_rc, e_next, q_in, w_retract, q_out,
                   w_advance, net, eff, net / (cycle_duration(tau_p, mode)), state_change)

    @property
    def energies(self):
        return (self.e_advanced_cold, self.e_advanced_hot,
                self.e_retracted_hot, self.e_retracted_cold)

    @property
    def bookkeeping_residual(self):
        """q_in - q_out - net_work minus the cycle-to-cycle energy change."""
        return (self.q_in - self.q_out - self.net_work
                - (self.e_advanced_cold_next - self.e_advanced_cold))

    def as_dict(self):
        return asdict(self)


RECORD_FIELDS = tuple(f.name for f in fields(CycleRecord))


def cycle_duration(tau_p, mode):
    """Four strokes for the bath engine; the measurement stroke is instantaneous."""
    if mode == BATH:
        return 4.0 * tau_p
    if mode == MEASUREMENT:
        return 3.0 * tau_p
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


@dataclass
class EngineAssets:
    """Everything a cycle needs, precomputed once per configuration."""

    u_retract: np.ndarray
    b_hot: Optional[np.ndarray]
    b_cold: np.ndarray
    rho_hot: Optional[np.ndarray]
    rho_cold: np.ndarray
    h_advanced: np.ndarray
    h_retracted: np.ndarray
    tau_p: float
    u_advance: Optional[np.ndarray] = None
    hot_channel: Optional[CollisionChannel] = field(default=None, repr=False)
    cold_channel: Optional[CollisionChannel] = field(default=None, repr=False)

    def __post_init__(self):
        if self.hot_channel is None and self.b_hot is not None and self.rho_hot is not None:
            self.hot_channel = CollisionChannel(self.rho_hot, self.b_hot)
        if self.cold_channel is None:
            self.cold_channel = CollisionChannel(self.rho_cold, self.b_cold)


ADVANCES = ("adjoint", "integrated")
CONTACTS = ("retracted", "split", "advanced")


def build_assets(params, mode=BATH, dtau=DEFAULT_DTAU, bath_contact="retracted",
                 advance="adjoint", leak_error=LEAK_ERROR):
    """Precompute propagators, bath unitaries, bath states and channels.

    ``advance="adjoint"`` applies the retraction propagator backwards,
    rho -> U^dag rho U. ``advance="integrated"`` instead integrates the
    advance stroke forward in time (y_retracted -> y_advanced); for a real
    Hamiltonian that propagator is U^T, so the two differ only through the
    imaginary part of the coherences.

    ``bath_contact`` picks the piston position entering the contact
    unitary B. ``"retracted"`` builds one B at y_retracted and uses it for
    both baths; ``"split"`` builds the hot contact at y_advanced and the
    cold one at y_retracted, following the piston; ``"advanced"`` shares
    one B built at y_advanced.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if bath_contact not in CONTACTS:
        raise ValueError(f"bath_contact must be one of {CONTACTS}, got {bath_contact!r}")
    if advance not in ADVANCES:
        raise ValueError(f"advance must be one of {ADVANCES}, got {advance!r}")
    space = params.space
    traj = params.retraction()
    span = (0.0, params.tau_p)
    u = propagator(ramp_hamiltonian(params, traj), span, dtau, project=True)
    u_adv = None
    if advance == "integrated":
        u_adv = propagator(ramp_hamiltonian(params, traj.reversed()), span, dtau, project=True)

    def contact_unitary(y):
        return hermitian_expm(composite_bath_hamiltonian(params, y), params.tau_b)

    if bath_contact == "advanced":
        b_cold = contact_unitary(params.y_advanced)
    else:
        b_cold = contact_unitary(params.y_retracted)
    b_hot = rho_hot = None
    if mode == BATH:
        b_hot = contact_unitary(params.y_advanced) if bath_contact == "split" else b_cold
        rho_hot = thermal_state(space, ThermalSpec(params.omega_hot), leak_error=leak_error)
    rho_cold = thermal_state(space, ThermalSpec(params.omega_cold), leak_error=leak_error)
    return EngineAssets(
        u_retract=u, b_hot=b_hot, b_cold=b_cold, rho_hot=rho_hot, rho_cold=rho_cold,
        h_advanced=engine_hamiltonian(params, params.y_advanced),
        h_retracted=engine_hamiltonian(params, params.y_retracted),
        tau_p=params.tau_p, u_advance=u_adv)


def _advance(rho, assets):
    if assets.u_advance is not None:
        return conjugate_density(rho, assets.u_advance)
    return conjugate_density(rho, assets.u_retract.conj().T)


def _finish_cycle(rho, heated, assets, mode, index):
    e_ac = expected_energy(rho, assets.h_advanced)
    e_ah = expected_energy(heated, assets.h_advanced)
    retracted = conjugate_density(heated, assets.u_retract)
    e_rh = expected_energy(retracted, assets.h_retracted)
    cooled = assets.cold_channel(retracted)
    e_rc = expected_energy(cooled, assets.h_retracted)
    new = _advance(cooled, assets)
    e_next = expected_energy(new, assets.h_advanced)
    change = float(np.max(np.abs(new - rho)))
    record = CycleRecord.from_energies(index, e_ac, e_ah, e_rh, e_rc, e_next,
                                       assets.tau_p, mode, change)
    return new, record


def run_bath_cycle(rho, assets, index=0):
    """One bath-powered cycle; returns (next state, CycleRecord)."""
    if assets.hot_channel is None:
        raise ValueError("bath cycle needs hot-bath assets (build with mode='bath')")
    heated = assets.hot_channel(rho)
    return _finish_cycle(rho, heated, assets, BATH, index)


def run_measurement_cycle(rho, assets, index=0):
    """One measurement-powered cycle: the hot bath is replaced by diag(rho)."""
    return _finish_cycle(rho, measure(rho), assets, MEASUREMENT, index)


@dataclass
class EngineRun:
    params: EngineParams
    mode: str
    n_cycles: int
    records: list = field(default_factory=list)
    final_state: Optional[np.ndarray] = None

    def energies(self):
        """(n_cycles, 4) array of phase-boundary energies."""
        return np.array([r.energies for r in self.records])

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def steady_state_index(self, window=STEADY_WINDOW, tol=STEADY_TOL):
        return detect_steady_state(self.records, window, tol)

    def summary(self, window=STEADY_WINDOW, tol=STEADY_TOL):
        return steady_state_summary(self, window, tol)


def default_initial_state(params, leak_error=LEAK_ERROR):
    """Bare-oscillator thermal state at the cold-bath temperature."""
    return thermal_state(params.space, ThermalSpec(params.omega_cold), leak_error=leak_error)


def run_engine(params, mode=BATH, n_cycles=80, initial=None, assets=None,
               dtau=DEFAULT_DTAU, leak_error=LEAK_ERROR, bath_contact="retracted",
               advance="adjoint"):
    """Take the engine ``n_cycles`` times through its cycle.

    Raises ``CutoffError`` carrying the cycle index when the fluid leaks
    into the top Fock state.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if int(n_cycles) != n_cycles or n_cycles < 1:
        raise ValueError(f"n_cycles must be a positive integer, got {n_cycles!r}")
    if assets is None:
        assets = build_assets(params, mode, dtau, bath_contact=bath_contact,
                              advance=advance, leak_error=leak_error)
    rho = default_initial_state(params, leak_error) if initial is None else np.asarray(initial)
    if rho.shape != (params.cutoff, params.cutoff):
        raise ValueError(f"initial state has shape {rho.shape}, expected cutoff {params.cutoff}")
    step = run_bath_cycle if mode == BATH else run_measurement_cycle
    run = EngineRun(params=params, mode=mode, n_cycles=int(n_cycles))
    for i in range(int(n_cycles)):
        rho, rec = step(rho, assets, i)
        top = float(np.real(rho[-1, -1]))
        if leak_error is not None and top > leak_error:
            raise CutoffError(
                f"top Fock state population {top:.3e} exceeds {leak_error:.0e} "
                f"at cycle {i}", cycle=i)
        run.records.append(rec)
    run.final_state = rho
    return run


def cycle_efficiency(record):
    """Net work over heat input for one cycle."""
    if record.q_in == 0:
        raise UndefinedEfficiencyError(f"cycle {record.cycle_index} has zero heat input")
    return record.net_work / record.q_in


def cumulative_efficiency(records):
    q = sum(r.q_in for r in records)
    if q == 0:
        raise UndefinedEfficiencyError("zero total heat input")
    return sum(r.net_work for r in records) / q


def cycle_power(record, mode, tau_p):
    return record.net_work / cycle_duration(tau_p, mode)


class TheoreticalEfficiency(NamedTuple):
    exact: float
    approx: float


def theoretical_efficiency(rho_H, rho_L, phi_close, phi_far, h0):
    """Efficiency of an idealized cycle with adiabatic piston strokes.

    ``exact`` keeps the far-piston interaction; ``approx`` drops it.
    """
    delta = np.asarray(rho_H) - np.asarray(rho_L)

    def tr(op):
        return float(np.real(np.sum(delta * np.asarray(op).T)))

    close = tr(phi_close)
    far = tr(phi_far)
    denom = tr(h0) + close
    if denom == 0:
        raise UndefinedEfficiencyError("no energy contrast between rho_H and rho_L")
    return TheoreticalEfficiency(exact=(close - far) / denom, approx=close / denom)


def engine_theoretical_efficiency(params, leak_error=LEAK_ERROR):
    """Idealized efficiency with thermal states at the two bath temperatures."""
    space = params.space
    g = piston_coupling(params)
    return theoretical_efficiency(
        thermal_state(space, ThermalSpec(params.omega_hot), leak_error=leak_error),
        thermal_state(space, ThermalSpec(params.omega_cold), leak_error=leak_error),
        piston_interaction(params, g, params.y_advanced),
        piston_interaction(params, g, params.y_retracted),
        bare_hamiltonian(space))


def detect_steady_state(records, window=STEADY_WINDOW, tol=STEADY_TOL):
    """First record index whose trailing ``window`` cycles are flat.

    Flat means every phase energy varies by less than ``tol`` over records
    ``i - window .. i``. Returns None when that never happens.
    """
    if window < 1:
        raise ValueError("window must be positive")
    e = np.array([r.energies for r in records], dtype=float).reshape(-1, 4)
    for i in range(window, len(e)):
        chunk = e[i - window:i + 1]
        if np.all(chunk.max(axis=0) - chunk.min(axis=0) < tol):
            return i
    return None


def steady_state_summary(run, window=STEADY_WINDOW, tol=STEADY_TOL):
    """Averages over the steady part of a run.

    When the detector never fires the last ``window`` cycles are averaged and
    ``steady`` is False.
    """
    idx = detect_steady_state(run.records, window, tol)
    start = idx if idx is not None else max(0, len(run.records) - window)
    tail = run.records[start:]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        eff = float(np.mean([r.efficiency for r in tail]))
    try:
        cum = cumulative_efficiency(tail)
    except UndefinedEfficiencyError:
        cum = float("nan")
    return {
        "mode": run.mode,
        "n_cycles": run.n_cycles,
        "steady_state_index": idx,
        "steady": idx is not None,
        "averaged_from": start,
        "mean_efficiency": eff,
        "cumulative_efficiency": cum,
        "mean_power": float(np.mean([r.power for r in tail])),
        "mean_net_work": float(np.mean([r.net_work for r in tail])),
        "mean_q_in": float(np.mean([r.q_in for r in tail])),
        "mean_q_out": float(np.mean([r.q_out for r in tail])),
    }


@dataclass
class AdiabaticityScan:
    direction: str
    tau_p: np.ndarray
    final_energy: np.ndarray
    adiabatic_bound: float
    sudden_bound: float

    def rows(self):
        for t, e in zip(self.tau_p, self.final_energy):
            yield float(t), float(e), self.adiabatic_bound, self.sudden_bound, self.direction


def _ground_state(h):
    w, v = np.linalg.eigh(h)
    return w[0], v[:, 0].astype(complex)


def adiabaticity_scan(params, tau_p_values, direction="retract", dtau=DEFAULT_DTAU):
    """Final energy after one constant-speed stroke, for several durations.

    The stroke starts from the ground state of the initial Hamiltonian. The
    adiabatic bound is the ground energy of the final Hamiltonian; the sudden
    bound is the initial ground state's energy under the final Hamiltonian.
    """
    taus = np.atleast_1d(np.asarray(tau_p_values, dtype=float))
    if taus.size == 0:
        raise ValueError("tau_p_values must be non-empty")
    if np.any(taus <= 0):
        raise ValueError("every tau_p must be positive")
    if direction == "retract":
        y0, y1 = params.y_advanced, params.y_retracted
    elif direction == "advance":
        y0, y1 = params.y_retracted, params.y_advanced
    else:
        raise ValueError(f"direction must be 'retract' or 'advance', got {direction!r}")
    h_start = engine_hamiltonian(params, y0)
    h_end = engine_hamiltonian(params, y1)
    _, psi0 = _ground_state(h_start)
    e_adiabatic, _ = _ground_state(h_end)
    e_sudden = float(np.real(psi0.conj() @ h_end @ psi0))
    finals = []
    for tau_p in taus:
        traj = PistonTrajectory(y0, y1, float(tau_p))
        psi = evolve_state(psi0, ramp_hamiltonian(params, traj), (0.0, tau_p), dtau)
        finals.append(float(np.real(psi.conj() @ h_end @ psi)))
    return AdiabaticityScan(direction, taus, np.array(finals), float(e_adiabatic), e_sudden)
