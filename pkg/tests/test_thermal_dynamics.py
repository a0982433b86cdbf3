import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import linalg

from hamiltonians import (
    HamiltonianSpec,
    InteractionNormalization,
    Side,
    couple,
    learned_hamiltonian,
    perturbation,
    syk_sample,
)
from majorana_algebra import MajoranaMonomial, monomial_matrix
from thermal_dynamics import (
    DenseOperator,
    FloquetSchedule,
    StateVector,
    ThermalConfig,
    build_dense,
    evolve,
    fermion_operator,
    floquet_evolve,
    floquet_heisenberg,
    floquet_propagator,
    heisenberg_evolve,
    infinite_temperature_tfd,
    interaction_operator,
    register_size,
    tfd_overlap_scan,
    tfd_prepare,
    thermal_state,
)


@pytest.fixture(scope="module")
def learned_dense():
    return build_dense(learned_hamiltonian())


def random_state(dim, seed=0):
    rng = np.random.default_rng(seed)
    vector = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(vector / np.linalg.norm(vector))


def test_empty_spec_is_zero_matrix():
    H = build_dense(HamiltonianSpec(()))
    assert H.dim == 16
    assert_allclose(H.matrix, 0)


def test_register_sizes():
    assert register_size(learned_hamiltonian()) == 4
    assert register_size(learned_hamiltonian().on_side(Side.LEFT)) == 7
    assert register_size(couple(learned_hamiltonian(), 1.0)) == 7


def test_register_too_small_rejected():
    with pytest.raises(ValueError):
        build_dense(learned_hamiltonian().on_side(Side.LEFT), n_qubits=4)


@pytest.mark.parametrize("spec", [learned_hamiltonian(), syk_sample(seed=1),
                                  couple(learned_hamiltonian(), -12.0)])
def test_built_hamiltonians_are_hermitian(spec):
    assert build_dense(spec).is_hermitian()


def test_single_term_spectrum_scales_with_majorana_square():
    spec = HamiltonianSpec.from_pairs([(0.7, (1, 2, 3, 4))])
    for s in (0.5, 1.0):
        energies = np.linalg.eigvalsh(build_dense(spec, majorana_square=s).matrix)
        assert_allclose(np.abs(energies), 0.7 * s * s, atol=1e-12)


def test_spectrum_matches_simultaneous_diagonalization(learned_dense):
    spec = learned_hamiltonian()
    terms = [monomial_matrix(MajoranaMonomial.from_indices(s, 8), 4) * 0.25 for s in spec.supports]
    rng = np.random.default_rng(0)
    generic = sum(r * t for r, t in zip(rng.normal(size=len(terms)), terms))
    _, vectors = np.linalg.eigh(generic)
    joint = [np.real(np.diag(vectors.conj().T @ t @ vectors)) for t in terms]
    predicted = np.sort(sum(c * j for c, j in zip(spec.coefficients, joint)))
    assert_allclose(predicted, np.linalg.eigvalsh(learned_dense.matrix), atol=1e-12)


def test_left_and_right_hamiltonians_commute():
    coupled = couple(learned_hamiltonian(), 0.0)
    left = build_dense(coupled.left, n_qubits=7).matrix
    right = build_dense(coupled.right, n_qubits=7).matrix
    assert_allclose(left @ right, right @ left, atol=1e-12)


def test_fermion_operators_square_to_majorana_square():
    for side in (Side.SINGLE, Side.LEFT, Side.RIGHT):
        for s in (0.5, 1.0):
            psi = fermion_operator(3, 7, side, s).matrix
            assert_allclose(psi @ psi, s * np.eye(psi.shape[0]), atol=1e-12)


def test_fermion_operator_rejects_bad_index():
    with pytest.raises(ValueError):
        fermion_operator(8, 7)


def test_infinite_temperature_tfd_annihilation():
    state = infinite_temperature_tfd(7).amplitudes
    for j in range(1, 8):
        psi_l = fermion_operator(j, 7, Side.LEFT).matrix
        psi_r = fermion_operator(j, 7, Side.RIGHT).matrix
        assert_allclose((psi_l + 1j * psi_r) @ state, 0, atol=1e-12)


def test_tfd_is_top_state_of_interaction():
    H = interaction_operator(7)
    state = infinite_temperature_tfd(7).amplitudes
    energies = np.linalg.eigvalsh(H.matrix)
    assert_allclose(H.matrix @ state, 3.5 * state, atol=1e-12)
    assert energies[-1] == pytest.approx(3.5)
    assert energies[-2] < 3.5 - 0.5


def test_negative_coupling_makes_tfd_the_ground_state():
    empty = HamiltonianSpec(())
    H = build_dense(couple(empty, -1.0, InteractionNormalization.BARE))
    state = infinite_temperature_tfd(7).amplitudes
    energies = np.linalg.eigvalsh(H.matrix)
    assert np.vdot(state, H.matrix @ state).real == pytest.approx(energies[0])
    assert energies[1] > energies[0] + 0.5


def test_tfd_prepare_limits():
    spec = learned_hamiltonian()
    base = infinite_temperature_tfd(7)
    assert_allclose(tfd_prepare(spec, 0.0).amplitudes, base.amplitudes)
    assert abs(tfd_prepare(spec, 1e-3).overlap(base)) ** 2 > 0.999
    with pytest.raises(ValueError):
        tfd_prepare(spec, -1.0)


def test_tfd_is_invariant_under_left_minus_right():
    coupled = couple(learned_hamiltonian(), 0.0)
    difference = build_dense(coupled.left, n_qubits=7).matrix - build_dense(coupled.right, n_qubits=7).matrix
    state = tfd_prepare(learned_hamiltonian(), 2.0).amplitudes
    assert_allclose(difference @ state, 0, atol=1e-12)


def test_thermal_state_trace_and_infinite_temperature(learned_dense):
    rho = thermal_state(learned_dense, 3.0)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert_allclose(thermal_state(learned_dense, 0.0), np.eye(16) / 16, atol=1e-12)


def test_thermal_config_rejects_negative_beta():
    ThermalConfig(0.0)
    with pytest.raises(ValueError):
        ThermalConfig(-0.1)


def test_state_vector_requires_unit_norm():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        StateVector(np.ones(3) / np.sqrt(3))


def test_operator_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        DenseOperator(np.eye(3))


def test_evolution_matches_expm(learned_dense):
    state = random_state(16)
    expected = linalg.expm(-1j * learned_dense.matrix * 1.3) @ state.amplitudes
    assert_allclose(evolve(state, learned_dense, 1.3).amplitudes, expected, atol=1e-10)


def test_evolution_group_law_and_conservation():
    H = build_dense(syk_sample(seed=2))
    state = random_state(16, seed=1)
    assert_allclose(evolve(state, H, 0.0).amplitudes, state.amplitudes, atol=1e-12)
    direct = evolve(state, H, 1.7)
    stepped = evolve(evolve(state, H, 0.5), H, 1.2)
    assert_allclose(direct.amplitudes, stepped.amplitudes, atol=1e-10)
    assert np.linalg.norm(direct.amplitudes) == pytest.approx(1.0)
    assert direct.expectation(H).real == pytest.approx(state.expectation(H).real)


def test_propagator_is_unitary(learned_dense):
    assert DenseOperator(learned_dense.propagator(2.8)).is_unitary(atol=1e-10)


def test_heisenberg_evolution(learned_dense):
    psi = fermion_operator(1, 7)
    assert_allclose(heisenberg_evolve(psi, learned_dense, 0.0).matrix, psi.matrix, atol=1e-12)
    term = DenseOperator(monomial_matrix(MajoranaMonomial.from_indices((1, 2, 4, 5), 8), 4))
    assert_allclose(heisenberg_evolve(term, learned_dense, 3.1).matrix, term.matrix, atol=1e-10)
    U = learned_dense.propagator(0.9)
    expected = U.conj().T @ psi.matrix @ U
    assert_allclose(heisenberg_evolve(psi, learned_dense, 0.9).matrix, expected, atol=1e-10)


def test_dimension_mismatch_rejected(learned_dense):
    with pytest.raises(ValueError):
        evolve(infinite_temperature_tfd(7), learned_dense, 1.0)


def test_floquet_schedule_segments():
    schedule = FloquetSchedule(2.0)
    assert list(schedule.segments(5.0)) == [("h0", 2.0), ("h1", 2.0), ("h0", 1.0)]
    assert list(FloquetSchedule(2.0, "h1").segments(3.0)) == [("h1", 2.0), ("h0", 1.0)]
    assert list(schedule.segments(0.0)) == []
    with pytest.raises(ValueError):
        FloquetSchedule(0.0)
    with pytest.raises(ValueError):
        FloquetSchedule(1.0, "h2")
    with pytest.raises(ValueError):
        list(schedule.segments(-1.0))


def test_floquet_within_first_segment_matches_h0(learned_dense):
    H1 = build_dense(perturbation())
    schedule = FloquetSchedule()
    for t in (0.0, 1.0, 2.8):
        assert_allclose(floquet_propagator(schedule, learned_dense, H1, t), learned_dense.propagator(t), atol=1e-10)


def test_floquet_full_period_ordering(learned_dense):
    H1 = build_dense(perturbation())
    schedule = FloquetSchedule(2.8)
    expected = H1.propagator(2.8) @ learned_dense.propagator(2.8)
    assert_allclose(floquet_propagator(schedule, learned_dense, H1, 5.6), expected, atol=1e-10)
    assert DenseOperator(floquet_propagator(schedule, learned_dense, H1, 7.0)).is_unitary(atol=1e-10)


def test_floquet_h0_time():
    schedule = FloquetSchedule(2.8)
    assert schedule.h0_time(0.0) == 0.0
    assert schedule.h0_time(2.0) == pytest.approx(2.0)
    assert schedule.h0_time(4.0) == pytest.approx(2.8)
    assert schedule.h0_time(6.5) == pytest.approx(3.7)
    assert FloquetSchedule(2.8, "h1").h0_time(4.0) == pytest.approx(1.2)


@pytest.mark.parametrize("t", [1.3, 4.0, 6.5])
def test_floquet_with_zero_perturbation_runs_h0_on_its_own_clock(learned_dense, t):
    zero = build_dense(HamiltonianSpec(()))
    state = random_state(16, seed=3)
    schedule = FloquetSchedule()
    h0_time = schedule.h0_time(t)
    assert_allclose(floquet_evolve(state, schedule, learned_dense, zero, t).amplitudes,
                    evolve(state, learned_dense, h0_time).amplitudes, atol=1e-10)
    psi = fermion_operator(2, 7)
    assert_allclose(floquet_heisenberg(psi, schedule, learned_dense, zero, t).matrix,
                    heisenberg_evolve(psi, learned_dense, h0_time).matrix, atol=1e-10)


def test_tfd_overlap_scan_reports_bounded_overlaps():
    scan = tfd_overlap_scan(learned_hamiltonian(), -12.0, [0.0, 2.0, 4.0])
    assert all(0.0 <= o <= 1.0 + 1e-12 for o in scan.overlaps)
    assert scan.best_overlap == max(scan.overlaps)
    assert scan.gap >= 0.0
    with pytest.raises(ValueError):
        tfd_overlap_scan(learned_hamiltonian(), -12.0, [])


def test_ground_state_at_negative_coupling_is_a_tfd():
    betas = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0]
    attractive = tfd_overlap_scan(learned_hamiltonian(), -12.0, betas, normalization=InteractionNormalization.BARE)
    repulsive = tfd_overlap_scan(learned_hamiltonian(), 12.0, betas, normalization=InteractionNormalization.BARE)
    assert attractive.best_overlap > 0.9
    assert attractive.gap > 0.0
    assert repulsive.best_overlap < 0.1
