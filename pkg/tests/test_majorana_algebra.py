import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hamiltonians import LEARNED_TERMS, learned_hamiltonian
from majorana_algebra import (
    MajoranaMonomial,
    OperatorExpansion,
    PauliString,
    expand_in_monomials,
    generator_matrix,
    jordan_wigner,
    monomial_matrix,
    monomial_product,
    monomials_commute,
    support_profile,
    tfd_partner_phase,
)
from observables import operator_spread

N_GEN = 7
N_QUBITS = 4


def mono(*indices, n=N_GEN):
    return MajoranaMonomial.from_indices(indices, n)


def dense(monomial, n_qubits=N_QUBITS):
    return monomial_matrix(monomial, n_qubits)


def mask_of(indices):
    return sum(1 << (i - 1) for i in indices)


def test_generator_squares_to_identity():
    product = mono(1) * mono(1)
    assert product.mask == 0
    assert product.sign == 1


def test_anticommuting_generators_have_opposite_signs():
    ab, ba = mono(1) * mono(2), mono(2) * mono(1)
    assert ab.indices == ba.indices == (1, 2)
    assert ab.sign == -ba.sign


def test_from_indices_reorders_with_sign():
    assert mono(2, 1).indices == (1, 2)
    assert mono(2, 1).sign == -1
    assert mono(3, 1, 2).sign == 1


def test_product_of_learned_terms_matches_dense():
    a, b = mono(1, 2, 4, 5), mono(1, 3, 4, 7)
    product = monomial_product(a, b)
    assert product.indices == (2, 3, 5, 7)
    assert_allclose(dense(product), dense(a) @ dense(b), atol=1e-12)


def test_product_exhaustive_small_sizes_matches_dense():
    small = [mono(*c) for k in range(3) for c in itertools.combinations(range(1, N_GEN + 1), k)]
    for a in small:
        for b in small:
            assert_allclose(dense(a * b), dense(a) @ dense(b), atol=1e-12)


def test_product_associative_on_random_triples():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a, b, c = (MajoranaMonomial(int(m), N_GEN, int(p))
                   for m, p in zip(rng.integers(0, 1 << N_GEN, 3), rng.integers(0, 4, 3)))
        left, right = (a * b) * c, a * (b * c)
        assert left == right
        assert_allclose(dense(left), dense(a) @ dense(b) @ dense(c), atol=1e-12)


def test_mismatched_generator_counts_rejected():
    with pytest.raises(ValueError):
        monomial_product(mono(1, n=7), mono(1, n=8))
    with pytest.raises(ValueError):
        monomials_commute(mono(1, n=7), mono(1, n=8))


@pytest.mark.parametrize("a, b, expected", [
    ((1, 2, 4, 5), (1, 3, 4, 7), True),
    ((1,), (1, 2, 3, 5), False),
    ((1,), (2,), False),
    ((1, 2), (3, 4), True),
])
def test_monomials_commute_examples(a, b, expected):
    assert monomials_commute(mono(*a), mono(*b)) is expected


def test_monomials_commute_agrees_with_dense():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a, b = (MajoranaMonomial(int(m), N_GEN) for m in rng.integers(0, 1 << N_GEN, 2))
        commutator = dense(a) @ dense(b) - dense(b) @ dense(a)
        assert monomials_commute(a, b) == np.allclose(commutator, 0, atol=1e-12)


def test_learned_terms_pairwise_commute():
    monomials = [mono(*support) for _, support in LEARNED_TERMS]
    assert all(monomials_commute(a, b) for a, b in itertools.combinations(monomials, 2))


def test_jordan_wigner_first_pair():
    x = np.array([[0, 1], [1, 0]])
    y = np.array([[0, -1j], [1j, 0]])
    rest = np.eye(1 << 6)
    assert_allclose(generator_matrix(1, 7), np.kron(x, rest) / np.sqrt(2), atol=1e-12)
    assert_allclose(generator_matrix(2, 7), np.kron(y, rest) / np.sqrt(2), atol=1e-12)


def test_jordan_wigner_anticommutation_all_generators():
    mats = [generator_matrix(i, 7) for i in range(1, 15)]
    identity = np.eye(1 << 7)
    for i, a in enumerate(mats):
        for j, b in enumerate(mats):
            expected = identity if i == j else 0 * identity
            assert_allclose(a @ b + b @ a, expected, atol=1e-12)


def test_jordan_wigner_rejects_out_of_range():
    with pytest.raises(ValueError):
        jordan_wigner(0, 3)
    with pytest.raises(ValueError):
        jordan_wigner(7, 3)


def test_pauli_product_matches_matrices():
    rng = np.random.default_rng(11)
    for _ in range(50):
        x1, z1, x2, z2 = (int(v) for v in rng.integers(0, 8, 4))
        a, b = PauliString(x1, z1, 3, 1), PauliString(x2, z2, 3, 2)
        assert_allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-12)
        commutes = np.allclose(a.to_matrix() @ b.to_matrix(), b.to_matrix() @ a.to_matrix())
        assert a.commutes_with(b) == commutes


def test_pauli_apply_to_basis_matches_matrix():
    pauli = PauliString(0b101, 0b011, 3, 3)
    matrix = pauli.to_matrix()
    for index in range(8):
        amplitude, target = pauli.apply_to_basis(index)
        assert matrix[target, index] == pytest.approx(amplitude)


def test_expand_single_generator():
    expansion = expand_in_monomials(generator_matrix(1, N_QUBITS) * np.sqrt(2), N_GEN).normalized()
    assert expansion.terms.keys() == {1}
    assert expansion.terms[1] == pytest.approx(1.0)


def test_expand_round_trip_random_expansion():
    rng = np.random.default_rng(5)
    masks = rng.choice(1 << N_GEN, size=20, replace=False)
    amplitudes = rng.normal(size=20) + 1j * rng.normal(size=20)
    expansion = OperatorExpansion({int(m): complex(a) for m, a in zip(masks, amplitudes)}, N_GEN)
    recovered = expand_in_monomials(expansion.to_dense(N_QUBITS), N_GEN)
    assert recovered.terms.keys() == expansion.terms.keys()
    for mask, amplitude in expansion.terms.items():
        assert recovered.terms[mask] == pytest.approx(amplitude, abs=1e-10)


def test_expand_rejects_too_many_generators():
    with pytest.raises(ValueError):
        expand_in_monomials(np.eye(4), 5)


def test_support_profile_unevolved_fermion():
    expansion = operator_spread(learned_hamiltonian(), 1, 0.0)
    assert support_profile(expansion) == (1, 1)


def test_learned_evolution_spreads_onto_eight_monomials():
    expansion = operator_spread(learned_hamiltonian(), 1, 2.8)
    assert support_profile(expansion, 1e-8) == (8, 5)

    anticommuting = [mask_of(s) for _, s in LEARNED_TERMS if 1 in s]
    expected = set()
    for k in range(len(anticommuting) + 1):
        for subset in itertools.combinations(anticommuting, k):
            mask = 1
            for m in subset:
                mask ^= m
            expected.add(mask)
    assert set(expansion.terms) == expected
    assert expansion.norm_squared() == pytest.approx(1.0, abs=1e-10)


def test_evolved_fermion_has_only_odd_sizes():
    expansion = expand_in_monomials(
        operator_spread(learned_hamiltonian(), 3, 1.7, threshold=0.0).to_dense(N_QUBITS), N_GEN, threshold=0.0)
    for mask, amplitude in expansion.terms.items():
        if bin(mask).count("1") % 2 == 0:
            assert abs(amplitude) < 1e-12


def test_tfd_partner_phase_of_four_body_terms():
    for _, support in LEARNED_TERMS:
        assert tfd_partner_phase(support, 7) == pytest.approx(1.0)


def test_tfd_partner_phase_single_fermion():
    # psi_R |I> = i psi_L |I>
    assert tfd_partner_phase([2], 7) == pytest.approx(1j)
