"""
Random commuting-ensemble statistics and the uniqueness check of the
commuting structure.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from hamiltonians import (
    COMMUTING_SUPPORTS,
    DEFAULT_FERMIONS,
    HamiltonianSpec,
    canonical_form,
    commuting_ensemble_sample,
    enumerate_commuting_structures,
    learned_hamiltonian,
)
from observables import DEFAULT_WEIGHT_FLOOR, DEFAULT_WINDING_BETA, size_distributions, winding_quality
from thermal_dynamics import DEFAULT_MAJORANA_SQUARE

logger = logging.getLogger(__name__)

BEST_TWO = 2


class ComparisonPolicy(str, Enum):
    SORTED_DOMINANCE = "sorted_dominance"
    MAX_BOUND = "max_bound"
    MEAN = "mean"


def winding_profile(spec: HamiltonianSpec, t: float, beta: float = DEFAULT_WINDING_BETA,
                    majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                    weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> np.ndarray:
    """Winding std of every fermion at time t; undefined qualities count as +inf."""
    values = []
    for j in range(1, spec.n_fermions + 1):
        quality = winding_quality(size_distributions(spec, beta, j, t, majorana_square), weight_floor)
        values.append(quality.std if quality.is_defined else math.inf)
    return np.array(values)


def qualifies(sample: np.ndarray, reference: np.ndarray,
              policy: ComparisonPolicy = ComparisonPolicy.SORTED_DOMINANCE) -> Tuple[bool, bool]:
    """(as good on the best two fermions, as good on all fermions) relative to the reference."""
    sample, reference = np.sort(sample), np.sort(reference)
    policy = ComparisonPolicy(policy)
    if policy == ComparisonPolicy.SORTED_DOMINANCE:
        return (bool(np.all(sample[:BEST_TWO] <= reference[:BEST_TWO])),
                bool(np.all(sample <= reference)))
    if policy == ComparisonPolicy.MAX_BOUND:
        return (bool(sample[:BEST_TWO].max() <= reference[:BEST_TWO].max()),
                bool(sample.max() <= reference.max()))
    return (bool(sample[:BEST_TWO].mean() <= reference[:BEST_TWO].mean()),
            bool(sample.mean() <= reference.mean()))


def binomial_standard_error(fraction: float, n: int) -> float:
    return math.sqrt(fraction * (1 - fraction) / n)


@dataclass(frozen=True, eq=False)
class EnsembleReport:
    n_samples: int
    fraction_best_two: float
    fraction_all: float
    standard_error_best_two: float
    standard_error_all: float
    reference_quality: Tuple[float, ...]
    seed: int
    time: float
    policy: ComparisonPolicy
    policy_fractions: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    sample_qualities: np.ndarray = field(default=None, repr=False)

    def summary_rows(self) -> List[tuple]:
        rows = []
        for name, (best_two, every) in self.policy_fractions.items():
            rows.append((name, best_two, every,
                         binomial_standard_error(best_two, self.n_samples),
                         binomial_standard_error(every, self.n_samples)))
        return rows


def ensemble_stats(n: int, t: float = 2.8, seed: int = 0,
                   comparison: str = ComparisonPolicy.SORTED_DOMINANCE.value,
                   beta: float = DEFAULT_WINDING_BETA,
                   majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                   weight_floor: float = DEFAULT_WEIGHT_FLOOR,
                   workers: int = 4, relabel: bool = True,
                   reference: Optional[HamiltonianSpec] = None) -> EnsembleReport:
    """Fractions of random commuting models whose size winding is as good as the reference (default: learned)."""
    if n < 1:
        raise ValueError(f"Need at least one sample, got {n}")
    policy = ComparisonPolicy(comparison)
    reference_spec = learned_hamiltonian() if reference is None else reference
    if reference_spec.n_fermions != DEFAULT_FERMIONS:
        raise ValueError(f"Reference must have {DEFAULT_FERMIONS} fermions, got {reference_spec.n_fermions}")
    reference = winding_profile(reference_spec, t, beta, majorana_square, weight_floor)
    sample_seeds = np.random.SeedSequence(seed).generate_state(n).tolist()

    def evaluate(sample_seed: int) -> np.ndarray:
        spec = commuting_ensemble_sample(sample_seed, relabel=relabel)
        return winding_profile(spec, t, beta, majorana_square, weight_floor)

    logger.info(f"Evaluating {n} ensemble samples at t={t} with {workers} workers")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        qualities = np.array(list(pool.map(evaluate, sample_seeds)))

    policy_fractions = {}
    for candidate in ComparisonPolicy:
        verdicts = np.array([qualifies(q, reference, candidate) for q in qualities])
        policy_fractions[candidate.value] = (float(verdicts[:, 0].mean()), float(verdicts[:, 1].mean()))
        logger.info(f"Policy {candidate.value}: best two {policy_fractions[candidate.value][0]:.3f}, "
                    f"all {policy_fractions[candidate.value][1]:.3f}")

    best_two, every = policy_fractions[policy.value]
    return EnsembleReport(
        n_samples=n,
        fraction_best_two=best_two,
        fraction_all=every,
        standard_error_best_two=binomial_standard_error(best_two, n),
        standard_error_all=binomial_standard_error(every, n),
        reference_quality=tuple(float(v) for v in np.sort(reference)),
        seed=seed,
        time=t,
        policy=policy,
        policy_fractions=policy_fractions,
        sample_qualities=qualities,
    )


@dataclass(frozen=True)
class UniquenessReport:
    constrained: Tuple[Tuple[Tuple[int, ...], ...], ...]
    unconstrained: Tuple[Tuple[Tuple[int, ...], ...], ...]
    learned_canonical: Tuple[Tuple[int, ...], ...]
    ensemble_canonical: Tuple[Tuple[int, ...], ...]

    @property
    def is_unique(self) -> bool:
        return len(self.constrained) == 1

    @property
    def matches_learned(self) -> bool:
        return self.is_unique and self.constrained[0] == self.learned_canonical == self.ensemble_canonical


def verify_uniqueness(n_fermions: int = 7, n_terms: int = 5) -> UniquenessReport:
    constrained = enumerate_commuting_structures(n_fermions, n_terms, require_all_touched=True)
    unconstrained = enumerate_commuting_structures(n_fermions, n_terms, require_all_touched=False)
    report = UniquenessReport(
        constrained=tuple(constrained),
        unconstrained=tuple(unconstrained),
        learned_canonical=canonical_form(learned_hamiltonian().supports, n_fermions),
        ensemble_canonical=canonical_form(COMMUTING_SUPPORTS, n_fermions),
    )
    logger.info(f"Commuting structures ({n_fermions}, {n_terms}): {len(constrained)} orbits touching "
                f"every fermion, {len(unconstrained)} without that constraint")
    return report
