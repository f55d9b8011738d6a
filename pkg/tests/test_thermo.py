import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpiston.dynamics import hermitian_expm
from qpiston.errors import ChannelError, CutoffError, CutoffWarning
from qpiston.fock import FockSpace, bare_hamiltonian
from qpiston.model import EngineParams, composite_bath_hamiltonian, engine_hamiltonian
from qpiston.operators import basis_state, check_density, density_errors, projector
from qpiston.thermo import (CollisionChannel, ThermalSpec, bath_collision, bath_collision_dense,
                            check_leakage, expected_energy, interaction_energy_map, measure,
                            partial_trace_bath, tensor_product, thermal_populations,
                            thermal_state)

# small test cutoffs with warm baths trip the leakage warning on purpose
pytestmark = pytest.mark.filterwarnings("ignore::qpiston.errors.CutoffWarning")


def random_density(n, rng, rank=None):
    k = n if rank is None else rank
    a = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_unitary(n, rng):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


# thermal states

def test_cold_thermal_state_is_nearly_ground():
    rho = thermal_state(FockSpace(51), ThermalSpec(0.1))
    assert rho[0, 0].real == pytest.approx(1 - np.exp(-10), rel=1e-9)
    assert np.count_nonzero(rho - np.diag(np.diag(rho))) == 0


def test_hot_population_ratio():
    p = thermal_populations(51, 5.0)
    assert p[1] / p[0] == pytest.approx(np.exp(-0.2), rel=1e-14)
    assert p[1] / p[0] == pytest.approx(0.8187, abs=1e-4)
    assert p.sum() == pytest.approx(1.0, abs=1e-15)


def test_hot_mean_occupation_matches_bose_einstein():
    # N=51 truncation shifts the infinite-basis value by ~2e-3
    p = thermal_populations(51, 5.0)
    n_mean = p @ np.arange(51)
    assert n_mean == pytest.approx(1 / np.expm1(0.2), abs=3e-3)
    assert 1 / np.expm1(0.2) == pytest.approx(4.5167, abs=1e-4)
    # energy with zero point: geometric series truncated at 51 terms
    r = np.exp(-0.2)
    exact = r / (1 - r) - 51 * r ** 51 / (1 - r ** 51) + 0.5
    assert expected_energy(thermal_state(FockSpace(51), 5.0, leak_error=None),
                           bare_hamiltonian(FockSpace(51))) == pytest.approx(exact, rel=1e-12)


def test_leakage_matches_geometric_tail():
    p = thermal_populations(51, 5.0)
    r = np.exp(-0.2)
    assert p[-1] == pytest.approx(r ** 50 * (1 - r) / (1 - r ** 51), rel=1e-12)


def test_hot_bath_at_full_cutoff_warns_but_passes():
    with pytest.warns(CutoffWarning):
        thermal_state(FockSpace(51), ThermalSpec(5.0))


def test_hot_bath_at_small_cutoff_raises():
    with pytest.raises(CutoffError):
        thermal_state(FockSpace(11), ThermalSpec(5.0))


def test_leak_error_none_disables_raise():
    with pytest.warns(CutoffWarning):
        top = check_leakage(thermal_populations(11, 5.0), leak_error=None)
    assert top > 1e-4


def test_cold_state_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        thermal_state(FockSpace(51), ThermalSpec(0.1))


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_thermal_spec_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        ThermalSpec(bad)


# tensor / partial trace

def test_partial_trace_of_product():
    rng = np.random.default_rng(1)
    a, b = random_density(3, rng), random_density(4, rng)
    assert np.allclose(partial_trace_bath(tensor_product(a, b), 3), a, atol=1e-14)


def test_partial_trace_index_loop_oracle():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    ref = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(3):
                ref[i, j] += m[i * 3 + k, j * 3 + k]
    assert np.allclose(partial_trace_bath(m, 2), ref, atol=1e-14)


def test_bell_state_marginal_is_maximally_mixed():
    psi = (basis_state(4, 0) + basis_state(4, 3)) / np.sqrt(2)
    assert np.allclose(partial_trace_bath(projector(psi), 2), np.eye(2) / 2, atol=1e-15)


def test_tensor_product_ordering():
    out = tensor_product(projector(basis_state(2, 1)), projector(basis_state(3, 0)))
    assert out[3, 3] == 1 and np.trace(out) == 1


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(ValueError):
        partial_trace_bath(np.eye(6), 4)


# collision channel

@pytest.fixture(scope="module")
def small_contact():
    p = EngineParams(sigma=0.5, cutoff=9, tau_p=2.0)
    b = hermitian_expm(composite_bath_hamiltonian(p, 0.0), p.tau_b)
    return p, b


def test_channel_matches_dense_route(small_contact):
    p, b = small_contact
    rng = np.random.default_rng(4)
    for bath in (thermal_state(p.space, 1.0, leak_error=None), random_density(9, rng)):
        rho = random_density(9, rng)
        assert np.max(np.abs(bath_collision(rho, bath, b) - bath_collision_dense(rho, bath, b))) < 1e-13


def test_channel_at_production_cutoff_matches_dense():
    p = EngineParams(sigma=0.5, cutoff=21, tau_p=1.0)
    b = hermitian_expm(composite_bath_hamiltonian(p, 0.0), p.tau_b)
    bath = thermal_state(p.space, 5.0, leak_error=None)
    rho = thermal_state(p.space, 0.1)
    got = CollisionChannel(bath, b)(rho)
    assert np.max(np.abs(got - bath_collision_dense(rho, bath, b))) < 1e-13
    check_density(got)


def test_identity_contact_leaves_fluid_alone():
    rng = np.random.default_rng(5)
    rho, bath = random_density(4, rng), random_density(3, rng)
    assert np.allclose(bath_collision(rho, bath, np.eye(12)), rho, atol=1e-14)


def test_swap_contact_imports_bath_state():
    n = 3
    swap = np.zeros((n * n, n * n))
    for j in range(n):
        for k in range(n):
            swap[k * n + j, j * n + k] = 1.0
    rng = np.random.default_rng(6)
    rho, bath = random_density(n, rng), random_density(n, rng)
    assert np.allclose(bath_collision(rho, bath, swap), bath, atol=1e-14)


def _fluid_energy_change(p, omega):
    b = hermitian_expm(composite_bath_hamiltonian(p, 0.0), p.tau_b)
    rho = thermal_state(p.space, 1.0, leak_error=None)
    bath = thermal_state(p.space, omega, leak_error=None)
    h = engine_hamiltonian(p, 0.0)
    return expected_energy(bath_collision(rho, bath, b), h) - expected_energy(rho, h)


def test_hot_bath_heats_and_cold_bath_cools():
    p = EngineParams(sigma=0.5, cutoff=25, tau_p=3.0)
    assert _fluid_energy_change(p, 3.0) > 0
    assert _fluid_energy_change(p, 0.1) < 0


def test_channel_rejects_unphysical_output():
    # a non-unitary "contact" breaks trace preservation
    with pytest.raises(ChannelError):
        bath_collision(np.eye(2) / 2, np.eye(2) / 2, 2 * np.eye(4))


def test_channel_dimension_checks():
    with pytest.raises(ValueError):
        CollisionChannel(np.eye(3) / 3, np.eye(10))
    ch = CollisionChannel(np.eye(2) / 2, np.eye(6))
    with pytest.raises(ValueError):
        ch(np.eye(2) / 2)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), nf=st.integers(2, 5), nb=st.integers(1, 4),
       rank=st.integers(1, 4))
def test_random_channels_preserve_density(seed, nf, nb, rank):
    rng = np.random.default_rng(seed)
    rho = random_density(nf, rng, rank=min(rank, nf))
    bath = random_density(nb, rng, rank=min(rank, nb))
    u = random_unitary(nf * nb, rng)
    out = bath_collision(rho, bath, u)
    tr, herm, lam = density_errors(out)
    assert tr < 1e-12 and herm < 1e-14 and lam > -1e-12
    assert np.allclose(out, bath_collision_dense(rho, bath, u), atol=1e-12)


# measurement

def test_measure_drops_coherences_and_is_idempotent():
    rng = np.random.default_rng(7)
    rho = random_density(6, rng)
    m = measure(rho)
    assert np.array_equal(np.diag(m), np.diag(rho))
    assert np.count_nonzero(m - np.diag(np.diag(m))) == 0
    assert np.array_equal(measure(m), m)


def test_measure_leaves_number_energy_but_not_coupled_energy():
    rng = np.random.default_rng(8)
    rho = random_density(10, rng)
    h0 = bare_hamiltonian(FockSpace(10))
    assert expected_energy(measure(rho), h0) == pytest.approx(expected_energy(rho, h0), abs=1e-14)
    h = engine_hamiltonian(EngineParams(sigma=0.5, cutoff=10), 0.0)
    _, v = np.linalg.eigh(h)
    ground = projector(v[:, 0])
    assert expected_energy(measure(ground), h) > expected_energy(ground, h) + 1e-3


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 10))
def test_measurement_never_lowers_entropy(seed, n):
    rng = np.random.default_rng(seed)
    rho = random_density(n, rng)

    def entropy(r):
        lam = np.clip(np.linalg.eigvalsh(r), 1e-300, None)
        return -np.sum(lam * np.log(lam))

    assert entropy(measure(rho)) >= entropy(rho) - 1e-10


def test_expected_energy_checks():
    with pytest.raises(ValueError):
        expected_energy(np.eye(2), np.eye(3))
    with pytest.raises(ChannelError):
        expected_energy(np.eye(2), 1j * np.eye(2))


# interaction energy map

@pytest.fixture(scope="module")
def energy_map():
    p = EngineParams(sigma=0.5)
    omegas = np.array([0.1, 0.5, 1.0, 2.0, 5.0])
    ys = np.array([0.0, 0.5, 1.0, 2.0, 5.0]) * p.sigma
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CutoffWarning)
        return p, omegas, ys, interaction_energy_map(p, omegas, ys)


def test_map_shape_and_sign(energy_map):
    p, omegas, ys, m = energy_map
    assert m.shape == (5, 5)
    assert np.all(m < 0)


def test_map_retracted_column_vanishes(energy_map):
    p, omegas, ys, m = energy_map
    assert np.max(np.abs(m[:, -1])) < 1e-4


def test_map_weakens_with_temperature_and_distance(energy_map):
    _, _, _, m = energy_map
    assert np.all(np.diff(m[:, 0]) > 0)
    assert np.all(np.diff(m, axis=1) > 0)


def test_map_cold_limit_is_ground_state_element():
    p = EngineParams(sigma=0.5)
    m = interaction_energy_map(p, [0.01], [0.0])
    assert m[0, 0] == pytest.approx(-5 / np.sqrt(3), rel=1e-12)


def test_map_hot_limit_at_small_cutoff_raises():
    with pytest.raises(CutoffError):
        interaction_energy_map(EngineParams(sigma=0.5, cutoff=11), [5.0], [0.0])


def test_map_rejects_empty_grid():
    with pytest.raises(ValueError):
        interaction_energy_map(EngineParams(sigma=0.5, cutoff=5), [], [0.0])


def test_thermal_energy_approaches_bose_einstein_for_large_cutoff():
    e = expected_energy(thermal_state(FockSpace(200), 5.0), bare_hamiltonian(FockSpace(200)))
    assert e == pytest.approx(0.5 + 1 / np.expm1(0.2), rel=1e-12)
    assert e == pytest.approx(5.0166, abs=1e-4)


def test_ground_projector_energy():
    h = bare_hamiltonian(FockSpace(5))
    assert expected_energy(projector(basis_state(5, 0)), h) == 0.5


def test_tensor_product_identity_and_diagonals():
    assert np.array_equal(tensor_product(np.eye(3), np.eye(3)), np.eye(9))
    a, b = np.array([1.0, 2.0]), np.array([3.0, 5.0, 7.0])
    out = tensor_product(np.diag(a), np.diag(b))
    assert np.array_equal(np.diag(out), [3, 5, 7, 6, 10, 14])


def test_tensor_product_index_loop_oracle():
    rng = np.random.default_rng(11)
    a, b = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(2))
    a, b = a + a.conj().T, b + b.conj().T
    ref = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for m in range(2):
                    ref[i * 2 + k, j * 2 + m] = a[i, j] * b[k, m]
    assert np.max(np.abs(tensor_product(a, b) - ref)) < 1e-15


def test_partial_trace_after_random_unitary():
    rng = np.random.default_rng(12)
    comp = random_unitary(9, rng) @ tensor_product(random_density(3, rng), random_density(3, rng))
    comp = comp @ comp.conj().T
    comp /= np.trace(comp)
    out = partial_trace_bath(comp, 3)
    ref = np.array([[sum(comp[i * 3 + k, j * 3 + k] for k in range(3)) for j in range(3)]
                    for i in range(3)])
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.max(np.abs(out - ref)) < 1e-12


def test_uncoupled_contact_is_free_evolution():
    p = EngineParams(sigma=0.5, cutoff=8, y_amp=0.0, tau_p=1.3)
    b = hermitian_expm(composite_bath_hamiltonian(p, 0.0), p.tau_b)
    rho = random_density(8, np.random.default_rng(13))
    out = bath_collision(rho, thermal_state(p.space, 1.0, leak_error=None), b)
    free = hermitian_expm(engine_hamiltonian(p, 0.0), p.tau_b)
    assert np.allclose(out, free @ rho @ free.conj().T, atol=1e-12)
    assert np.allclose(np.linalg.eigvalsh(out), np.linalg.eigvalsh(rho), atol=1e-12)


@pytest.fixture(scope="module")
def full_size_contacts():
    p = EngineParams(sigma=0.5, tau_p=5.0)
    hot = hermitian_expm(composite_bath_hamiltonian(p, p.y_advanced), p.tau_b)
    cold = hermitian_expm(composite_bath_hamiltonian(p, p.y_retracted), p.tau_b)
    return p, hot, cold


def test_hot_bath_heats_cold_fluid_full_size(full_size_contacts):
    p, hot, _ = full_size_contacts
    rho = thermal_state(p.space, 0.1)
    h = engine_hamiltonian(p, p.y_advanced)
    out = bath_collision(rho, thermal_state(p.space, 5.0), hot)
    assert expected_energy(out, h) > expected_energy(rho, h)


def test_cold_bath_cools_hot_fluid_full_size(full_size_contacts):
    p, _, cold = full_size_contacts
    rho = thermal_state(p.space, 5.0)
    h = engine_hamiltonian(p, p.y_retracted)
    out = bath_collision(rho, thermal_state(p.space, 0.1), cold)
    assert expected_energy(out, h) < expected_energy(rho, h)


def test_measure_superposition():
    psi = (basis_state(2, 0) + basis_state(2, 1)) / np.sqrt(2)
    assert np.allclose(measure(projector(psi)), np.eye(2) / 2, atol=1e-15)
    diag = np.diag([0.7, 0.2, 0.1]).astype(complex)
    assert np.array_equal(measure(diag), diag)


def test_wide_well_cold_limit_approaches_phi0():
    values = [interaction_energy_map(EngineParams(sigma=s), [0.01], [0.0])[0, 0]
              for s in (2.0, 5.0, 20.0)]
    assert all(v > -5 for v in values)
    assert values[0] > values[1] > values[2] > -5.0
    assert values[2] == pytest.approx(-5.0, abs=0.01)
