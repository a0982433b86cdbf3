"""
Hamiltonian constructors, samplers and structural analysis.

Every Hamiltonian here is a sum of 4-body Majorana terms c * psi^a psi^b psi^c psi^d
with a < b < c < d. A spec is tagged with the side of a two-sided system it
lives on (or `single` for the one-sided register).
"""
import itertools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from majorana_algebra import (
    MajoranaMonomial,
    NumericalInvariantError,
    monomials_commute,
    tfd_partner_phase,
)

logger = logging.getLogger(__name__)

# Learned commuting Hamiltonian
LEARNED_TERMS = (
    (-0.36, (1, 2, 4, 5)),
    (0.19, (1, 3, 4, 7)),
    (-0.71, (1, 3, 5, 6)),
    (0.22, (2, 3, 4, 6)),
    (0.49, (2, 3, 5, 7)),
)
# Non-commuting perturbation added on top of the learned model
PERTURBATION_TERMS = ((0.3, (1, 2, 3, 5)),)
# Displayed form of the unique 7-fermion 5-term commuting structure
COMMUTING_SUPPORTS = (
    (1, 2, 3, 4),
    (1, 2, 5, 6),
    (3, 4, 5, 6),
    (1, 3, 5, 7),
    (2, 4, 5, 7),
)

DEFAULT_FERMIONS = 7
MAX_ENUMERATION_FERMIONS = 8
MAX_ENUMERATION_TERMS = 6


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    SINGLE = "single"


@dataclass(frozen=True)
class HamiltonianTerm:
    coefficient: float
    support: Tuple[int, int, int, int]

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        if len(support) != 4 or len(set(support)) != 4:
            raise ValueError(f"Support must be 4 distinct fermions, got {self.support}")
        if not math.isfinite(self.coefficient):
            raise ValueError(f"Coefficient must be finite, got {self.coefficient}")
        object.__setattr__(self, "support", tuple(sorted(support)))
        object.__setattr__(self, "coefficient", float(self.coefficient))

    def monomial(self, n_fermions: int) -> MajoranaMonomial:
        """Unit monomial over fermion indices (single-sided numbering)."""
        return MajoranaMonomial.from_indices(self.support, n_fermions)


@dataclass(frozen=True)
class HamiltonianSpec:
    terms: Tuple[HamiltonianTerm, ...]
    n_fermions: int = DEFAULT_FERMIONS
    side: Side = Side.SINGLE
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "side", Side(self.side))
        if self.n_fermions < 1:
            raise ValueError(f"Need at least one fermion, got {self.n_fermions}")
        seen = set()
        for term in self.terms:
            if term.support[-1] > self.n_fermions or term.support[0] < 1:
                raise ValueError(f"Support {term.support} outside 1..{self.n_fermions}")
            if term.support in seen:
                raise ValueError(f"Duplicated support {term.support}")
            seen.add(term.support)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, Sequence[int]]],
                   n_fermions: int = DEFAULT_FERMIONS, side: Side = Side.SINGLE,
                   label: str = "") -> "HamiltonianSpec":
        """Build from (coefficient, indices) pairs; unsorted indices pick up their reordering sign."""
        terms = []
        for coefficient, indices in pairs:
            sign = _reordering_sign(indices, n_fermions)
            terms.append(HamiltonianTerm(sign * coefficient, tuple(indices)))
        return cls(tuple(terms), n_fermions, side, label)

    @property
    def supports(self) -> Tuple[Tuple[int, int, int, int], ...]:
        return tuple(term.support for term in self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([term.coefficient for term in self.terms])

    def fermions_touched(self) -> frozenset:
        return frozenset(i for term in self.terms for i in term.support)

    def on_side(self, side: Union[Side, str]) -> "HamiltonianSpec":
        return replace(self, side=Side(side))

    def scaled(self, factor: float) -> "HamiltonianSpec":
        return replace(self, terms=tuple(HamiltonianTerm(factor * t.coefficient, t.support) for t in self.terms))

    def combined(self, other: "HamiltonianSpec", label: str = "") -> "HamiltonianSpec":
        if other.n_fermions != self.n_fermions or other.side != self.side:
            raise ValueError("Cannot combine specs with different fermion counts or sides")
        return HamiltonianSpec(self.terms + other.terms, self.n_fermions, self.side,
                               label or f"{self.label}+{other.label}")

    def relabeled(self, permutation: Sequence[int]) -> "HamiltonianSpec":
        """Apply fermion relabeling i -> permutation[i-1], keeping the operator identity.

        Each term is re-sorted into increasing order and its coefficient picks up
        the anticommutation sign of that reordering.
        """
        permutation = tuple(int(p) for p in permutation)
        if sorted(permutation) != list(range(1, self.n_fermions + 1)):
            raise ValueError(f"Not a permutation of 1..{self.n_fermions}: {permutation}")
        return HamiltonianSpec.from_pairs(
            ((t.coefficient, [permutation[i - 1] for i in t.support]) for t in self.terms),
            self.n_fermions, self.side, self.label,
        )


class InteractionNormalization(str, Enum):
    PER_FLAVOR = "per_flavor"
    BARE = "bare"


def interaction_scale(normalization: Union[InteractionNormalization, str], n_fermions: int) -> float:
    """1/N for the per-flavor convention, 1 for the bare one."""
    if InteractionNormalization(normalization) == InteractionNormalization.PER_FLAVOR:
        return 1.0 / n_fermions
    return 1.0


@dataclass(frozen=True)
class CoupledSpec:
    """H_tot = H_L + H_R + mu * scale * i sum_j psi_R^j psi_L^j.

    The bilinear is ordered right-then-left so that |I> is its top state and
    mu < 0 makes the thermofield double the ground state.
    """
    left: HamiltonianSpec
    right: HamiltonianSpec
    mu: float
    normalization: InteractionNormalization = InteractionNormalization.PER_FLAVOR

    def __post_init__(self):
        object.__setattr__(self, "normalization", InteractionNormalization(self.normalization))
        if self.left.side != Side.LEFT or self.right.side != Side.RIGHT:
            raise ValueError("CoupledSpec needs a left-tagged and a right-tagged spec")
        if self.left.n_fermions != self.right.n_fermions:
            raise ValueError("Left and right fermion counts differ")

    @property
    def n_fermions(self) -> int:
        return self.left.n_fermions

    @property
    def interaction_scale(self) -> float:
        return interaction_scale(self.normalization, self.n_fermions)


def _reordering_sign(indices: Sequence[int], n_fermions: int) -> int:
    if len(set(indices)) != len(indices):
        raise ValueError(f"Repeated fermion in {tuple(indices)}")
    monomial = MajoranaMonomial.from_indices(indices, n_fermions)
    return 1 if monomial.phase == 0 else -1


def learned_hamiltonian() -> HamiltonianSpec:
    return HamiltonianSpec.from_pairs(LEARNED_TERMS, label="learned")


def perturbation() -> HamiltonianSpec:
    return HamiltonianSpec.from_pairs(PERTURBATION_TERMS, label="perturbation")


def perturbed_hamiltonian(base: Optional[HamiltonianSpec] = None) -> HamiltonianSpec:
    base = learned_hamiltonian() if base is None else base
    return base.combined(perturbation(), label=f"{base.label or 'spec'}+perturbation")


def default_syk_scale(n_fermions: int = DEFAULT_FERMIONS) -> float:
    """J such that the r.m.s. SYK coupling equals the r.m.s. of the learned couplings."""
    rms = math.sqrt(sum(c * c for c, _ in LEARNED_TERMS) / len(LEARNED_TERMS))
    return rms * math.sqrt(n_fermions ** 3 / math.factorial(3))


def syk_sample(n_fermions: int = DEFAULT_FERMIONS, coupling_scale: Optional[float] = None,
               seed: int = 0) -> HamiltonianSpec:
    """Dense SYK_4 instance with couplings ~ N(0, 3! J^2 / N^3) on every 4-subset."""
    if n_fermions < 4:
        raise ValueError(f"SYK needs at least 4 fermions, got {n_fermions}")
    if coupling_scale is None:
        coupling_scale = default_syk_scale(n_fermions)
    sigma = math.sqrt(math.factorial(3) * coupling_scale ** 2 / n_fermions ** 3)
    rng = np.random.default_rng(seed)
    supports = list(itertools.combinations(range(1, n_fermions + 1), 4))
    couplings = rng.normal(0.0, sigma, size=len(supports))
    terms = tuple(HamiltonianTerm(float(c), s) for c, s in zip(couplings, supports))
    logger.debug(f"Sampled SYK n={n_fermions} J={coupling_scale:.4f} seed={seed}")
    return HamiltonianSpec(terms, n_fermions, label=f"syk-{seed}")


def commuting_ensemble_sample(seed: int = 0, relabel: bool = True) -> HamiltonianSpec:
    """Commuting structure with standard-normal couplings, optionally randomly relabeled."""
    rng = np.random.default_rng(seed)
    couplings = rng.standard_normal(len(COMMUTING_SUPPORTS))
    spec = HamiltonianSpec.from_pairs(zip(couplings.tolist(), COMMUTING_SUPPORTS),
                                      label=f"ensemble-{seed}")
    if relabel:
        permutation = rng.permutation(DEFAULT_FERMIONS) + 1
        spec = spec.relabeled(permutation.tolist())
    return spec


def is_mutually_commuting(spec: HamiltonianSpec) -> bool:
    monomials = [term.monomial(spec.n_fermions) for term in spec.terms]
    return all(monomials_commute(a, b) for a, b in itertools.combinations(monomials, 2))


def canonical_form(supports: Iterable[Sequence[int]], n_fermions: int) -> Tuple[Tuple[int, ...], ...]:
    """Lexicographically minimal image of a support set over all fermion relabelings."""
    supports = [tuple(s) for s in supports]
    return min(_orbit(supports, _permutations(n_fermions)))


def _permutations(n_fermions: int) -> List[Tuple[int, ...]]:
    # index 0 unused so perm[i] relabels fermion i
    return [(0,) + p for p in itertools.permutations(range(1, n_fermions + 1))]


def _orbit(supports, permutations):
    for perm in permutations:
        yield tuple(sorted(tuple(sorted(perm[i] for i in s)) for s in supports))


def enumerate_commuting_structures(n_fermions: int = DEFAULT_FERMIONS, n_terms: int = 5,
                                   require_all_touched: bool = True) -> List[Tuple[Tuple[int, ...], ...]]:
    """Canonical representatives of pairwise-commuting sets of n_terms 4-subsets.

    With require_all_touched the union of supports must cover every fermion.
    """
    if n_fermions > MAX_ENUMERATION_FERMIONS or n_terms > MAX_ENUMERATION_TERMS:
        raise ValueError(
            f"Enumeration budget exceeded: n_fermions <= {MAX_ENUMERATION_FERMIONS}, "
            f"n_terms <= {MAX_ENUMERATION_TERMS}"
        )
    if n_fermions < 4 or n_terms < 1:
        return []

    supports = list(itertools.combinations(range(1, n_fermions + 1), 4))
    monomials = [MajoranaMonomial.from_indices(s, n_fermions) for s in supports]
    compatible = [
        [monomials_commute(a, b) for b in monomials] for a in monomials
    ]
    full_mask = (1 << n_fermions) - 1

    structures = []

    def extend(chosen: List[int], start: int):
        if len(chosen) == n_terms:
            structures.append(tuple(chosen))
            return
        for k in range(start, len(supports)):
            if all(compatible[k][c] for c in chosen):
                chosen.append(k)
                extend(chosen, k + 1)
                chosen.pop()

    extend([], 0)
    if require_all_touched:
        structures = [s for s in structures
                      if _union_mask((monomials[k] for k in s)) == full_mask]
    logger.info(f"Found {len(structures)} labeled commuting structures "
                f"(n_fermions={n_fermions}, n_terms={n_terms}, all_touched={require_all_touched})")

    permutations = _permutations(n_fermions)
    seen = set()
    representatives = []
    for structure in structures:
        key = tuple(sorted(supports[k] for k in structure))
        if key in seen:
            continue
        orbit = set(_orbit(key, permutations))
        seen |= orbit
        representatives.append(min(orbit))
    representatives.sort()
    logger.info(f"Reduced to {len(representatives)} orbits under relabeling")
    return representatives


def _union_mask(monomials: Iterable[MajoranaMonomial]) -> int:
    mask = 0
    for monomial in monomials:
        mask |= monomial.mask
    return mask


def couple(left: HamiltonianSpec, mu: float,
           normalization: Union[InteractionNormalization, str] = InteractionNormalization.PER_FLAVOR) -> CoupledSpec:
    """Attach a TFD-compatible right copy and the all-flavor bilinear coupling.

    The right coupling of each term is sign-adjusted so that (H_L - H_R)|I> = 0.
    """
    if left.side == Side.RIGHT:
        raise ValueError("couple() expects a single-sided or left spec")
    right_terms = []
    for term in left.terms:
        eta = tfd_partner_phase(term.support, left.n_fermions)
        if abs(eta.imag) > 1e-12 or abs(abs(eta.real) - 1) > 1e-12:
            raise NumericalInvariantError(f"TFD partner phase {eta} of {term.support} is not real")
        right_terms.append(HamiltonianTerm(eta.real * term.coefficient, term.support))
    right = HamiltonianSpec(tuple(right_terms), left.n_fermions, Side.RIGHT, left.label)
    return CoupledSpec(left.on_side(Side.LEFT), right, float(mu), InteractionNormalization(normalization))
