"""Single-piston quantum engine: a harmonic-oscillator working fluid coupled
to a classical piston through an attractive Gaussian potential, powered by
single-mode collision baths or by number-basis measurements."""

__version__ = "0.1.0"

from .dynamics import (conjugate_density, evolve_state, hermitian_expm,
                       propagator)
from .engine import (BATH, MEASUREMENT, CycleRecord, EngineRun, adiabaticity_scan, build_assets,
                     cycle_efficiency, cycle_power, detect_steady_state,
                     engine_theoretical_efficiency, run_bath_cycle, run_engine,
                     run_measurement_cycle, steady_state_summary, theoretical_efficiency)
from .fock import (FockSpace, QuadratureRule, bare_hamiltonian, build_quadrature,
                   gaussian_coupling_matrix, hermite_function)
from .model import (EngineParams, PistonTrajectory, composite_bath_hamiltonian,
                    engine_hamiltonian, piston_interaction, piston_position)
from .thermo import (ThermalSpec, bath_collision, expected_energy,
                     interaction_energy_map, measure, partial_trace_bath,
                     tensor_product, thermal_state)
