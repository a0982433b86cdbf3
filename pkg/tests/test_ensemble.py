import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ensemble import (
    ComparisonPolicy,
    binomial_standard_error,
    ensemble_stats,
    qualifies,
    verify_uniqueness,
    winding_profile,
)
from hamiltonians import HamiltonianSpec, learned_hamiltonian


@pytest.mark.parametrize("policy", list(ComparisonPolicy))
def test_reference_qualifies_against_itself(policy):
    reference = winding_profile(learned_hamiltonian(), 2.8)
    assert qualifies(reference, reference, policy) == (True, True)


def test_sorted_dominance():
    reference = np.array([0.1, 0.2, 0.5, 0.9])
    assert qualifies(np.array([0.05, 0.15, 1.0, 2.0]), reference) == (True, False)
    assert qualifies(np.array([0.05, 0.25, 0.3, 0.5]), reference) == (False, False)
    assert qualifies(np.array([0.3, 0.05, 0.2, 0.1]), reference) == (True, True)
    assert qualifies(np.array([math.inf] * 4), reference) == (False, False)


def test_policies_differ():
    reference = np.array([0.1, 0.2, 0.3])
    sample = np.array([0.0, 0.25, 0.3])
    assert qualifies(sample, reference, "sorted_dominance")[0] is False
    assert qualifies(sample, reference, "mean")[0] is True
    assert qualifies(sample, reference, ComparisonPolicy.MAX_BOUND)[0] is False


def test_winding_profile_of_trivial_hamiltonian_is_undefined():
    profile = winding_profile(HamiltonianSpec(()), 2.8)
    assert profile.shape == (7,)
    assert np.all(np.isinf(profile))


def test_binomial_standard_error():
    assert binomial_standard_error(0.5, 100) == pytest.approx(0.05)
    assert binomial_standard_error(0.0, 10) == 0.0


def test_ensemble_stats_is_deterministic():
    first = ensemble_stats(4, seed=11, workers=2)
    second = ensemble_stats(4, seed=11, workers=1)
    assert_allclose(first.sample_qualities, second.sample_qualities)
    assert first.fraction_best_two == second.fraction_best_two
    assert first.sample_qualities.shape == (4, 7)
    assert 0.0 <= first.fraction_all <= first.fraction_best_two <= 1.0
    assert first.standard_error_best_two <= math.sqrt(0.25 / 4)
    assert set(first.policy_fractions) == {p.value for p in ComparisonPolicy}
    assert len(first.summary_rows()) == 3


def test_ensemble_stats_rejects_empty_ensemble():
    with pytest.raises(ValueError):
        ensemble_stats(0)
    with pytest.raises(ValueError):
        ensemble_stats(2, comparison="median")


def test_learned_structure_is_unique():
    report = verify_uniqueness()
    assert report.is_unique
    assert report.matches_learned
    assert len(report.unconstrained) == 1


def test_ensemble_against_a_custom_reference():
    report = ensemble_stats(3, seed=5, workers=1, reference=HamiltonianSpec((), label="empty"))
    assert all(np.isinf(report.reference_quality))
    assert report.fraction_best_two == 1.0
    assert report.fraction_all == 1.0
    with pytest.raises(ValueError):
        ensemble_stats(3, reference=HamiltonianSpec((), n_fermions=6))
