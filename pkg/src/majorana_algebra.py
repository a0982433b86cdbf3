"""
Majorana monomial algebra and its Jordan-Wigner qubit realization.

Generators are numbered 1..2N and multiply as unit generators (gamma^2 = 1).
A monomial is stored as a bitmask (bit i-1 for generator i) plus a phase
power of i. Physical Majoranas obey {psi^i, psi^j} = delta^{ij}, so
psi = gamma / sqrt(2); that scale is applied by the dense layer.

Jordan-Wigner is interleaved: generator 2j-1 maps to Z...Z X on qubit j and
generator 2j to Z...Z Y on qubit j. For a two-sided system psi_L^j is
generator 2j-1 and psi_R^j is generator 2j, so fermion pair j lives on qubit j.
"""
import functools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_SUPPORT_THRESHOLD = 1e-8
PHASES = (1, 1j, -1, -1j)


class NumericalInvariantError(RuntimeError):
    """Raised when a numerical invariant the library relies on does not hold."""


def _popcount(value: int) -> int:
    return bin(value).count("1")


def phase_power(value: complex) -> int:
    """Map a unit phase (1, i, -1, -i) to its power of i."""
    for power, phase in enumerate(PHASES):
        if abs(value - phase) < 1e-12:
            return power
    raise ValueError(f"Not a unit phase: {value}")


@dataclass(frozen=True)
class MajoranaMonomial:
    """Ordered product of distinct unit generators with a unit phase.

    The product is always kept in strictly increasing index order; the phase
    absorbs the anticommutation signs. An empty mask is the identity.
    """
    mask: int
    n_generators: int
    phase: int = 0

    def __post_init__(self):
        if self.n_generators < 0:
            raise ValueError(f"Generator count must be non-negative, got {self.n_generators}")
        if self.mask < 0 or self.mask >> self.n_generators:
            raise ValueError(f"Mask {self.mask:#b} does not fit {self.n_generators} generators")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_indices(cls, indices: Iterable[int], n_generators: int, phase: int = 0) -> "MajoranaMonomial":
        """Multiply generators in the given order and reduce to canonical form."""
        mask = 0
        for index in indices:
            if not 1 <= index <= n_generators:
                raise ValueError(f"Generator index {index} outside 1..{n_generators}")
            # gamma_index passes every generator already present with a larger index
            phase += 2 * _popcount(mask >> index)
            mask ^= 1 << (index - 1)
        return cls(mask, n_generators, phase)

    @classmethod
    def identity(cls, n_generators: int) -> "MajoranaMonomial":
        return cls(0, n_generators)

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(i + 1 for i in range(self.n_generators) if self.mask >> i & 1)

    @property
    def sign(self) -> complex:
        return PHASES[self.phase]

    def size(self) -> int:
        return _popcount(self.mask)

    def normalized(self) -> "MajoranaMonomial":
        """Same index set with phase +1."""
        return MajoranaMonomial(self.mask, self.n_generators)

    def __mul__(self, other: "MajoranaMonomial") -> "MajoranaMonomial":
        return monomial_product(self, other)

    def __str__(self) -> str:
        body = "".join(f"g{i}" for i in self.indices) or "I"
        prefix = ("", "i*", "-", "-i*")[self.phase]
        return prefix + body


def monomial_product(a: MajoranaMonomial, b: MajoranaMonomial) -> MajoranaMonomial:
    """Sign-tracked product a*b in canonical (increasing) order."""
    if a.n_generators != b.n_generators:
        raise ValueError(f"Generator counts differ: {a.n_generators} vs {b.n_generators}")
    swaps = sum(_popcount(a.mask >> index) for index in b.indices)
    return MajoranaMonomial(a.mask ^ b.mask, a.n_generators, a.phase + b.phase + 2 * swaps)


def monomials_commute(a: MajoranaMonomial, b: MajoranaMonomial) -> bool:
    """True iff a*b == b*a, i.e. size(a)*size(b) - overlap is even."""
    if a.n_generators != b.n_generators:
        raise ValueError(f"Generator counts differ: {a.n_generators} vs {b.n_generators}")
    overlap = _popcount(a.mask & b.mask)
    return (a.size() * b.size() - overlap) % 2 == 0


@dataclass(frozen=True)
class PauliString:
    """Phase times a tensor product of X^x Z^z factors.

    Masks live in state-index space: qubit q (1-based, qubit 1 leftmost in
    the tensor product) is bit n_qubits - q, so X^x Z^z maps basis index c
    to c ^ x_mask with sign (-1)^popcount(z_mask & c).
    """
    x_mask: int
    z_mask: int
    n_qubits: int
    phase: int = 0

    def __post_init__(self):
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError(f"Masks do not fit {self.n_qubits} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(0, 0, n_qubits)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n_qubits != other.n_qubits:
            raise ValueError(f"Qubit counts differ: {self.n_qubits} vs {other.n_qubits}")
        # Z^z1 X^x2 = (-1)^(z1.x2) X^x2 Z^z1 on every qubit
        phase = self.phase + other.phase + 2 * _popcount(self.z_mask & other.x_mask)
        return PauliString(self.x_mask ^ other.x_mask, self.z_mask ^ other.z_mask, self.n_qubits, phase)

    def commutes_with(self, other: "PauliString") -> bool:
        symplectic = _popcount(self.x_mask & other.z_mask) + _popcount(self.z_mask & other.x_mask)
        return symplectic % 2 == 0

    def apply_to_basis(self, index: int) -> Tuple[complex, int]:
        """Act on computational basis state |index>; returns (amplitude, new index)."""
        sign = -1 if _popcount(self.z_mask & index) % 2 else 1
        return PHASES[self.phase] * sign, index ^ self.x_mask

    def to_matrix(self) -> np.ndarray:
        return _pauli_matrix(self.x_mask, self.z_mask, self.n_qubits, self.phase)

    def label(self) -> str:
        chars = []
        for q in range(1, self.n_qubits + 1):
            bit = self.n_qubits - q
            x, z = self.x_mask >> bit & 1, self.z_mask >> bit & 1
            chars.append("IZXY"[2 * x + z] if not (x and z) else "W")
        # W marks X*Z = -iY; keeps the label exact without folding phases
        return ("", "i", "-", "-i")[self.phase] + "".join(chars)


def _parity_vector(mask: int, dim: int) -> np.ndarray:
    columns = np.arange(dim)
    parity = np.zeros(dim, dtype=np.int64)
    bit = 0
    while mask >> bit:
        if mask >> bit & 1:
            parity ^= (columns >> bit) & 1
        bit += 1
    return parity


@functools.lru_cache(maxsize=4096)
def _pauli_matrix(x_mask: int, z_mask: int, n_qubits: int, phase: int) -> np.ndarray:
    dim = 1 << n_qubits
    columns = np.arange(dim)
    signs = 1 - 2 * _parity_vector(z_mask, dim)
    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[columns ^ x_mask, columns] = PHASES[phase] * signs
    matrix.setflags(write=False)
    return matrix


def jordan_wigner(index: int, n_qubits: int) -> PauliString:
    """Unit-generator image of Majorana `index` (1..2*n_qubits)."""
    if not 1 <= index <= 2 * n_qubits:
        raise ValueError(f"Generator index {index} outside 1..{2 * n_qubits}")
    qubit = (index + 1) // 2
    bit = 1 << (n_qubits - qubit)
    z_string = ((1 << n_qubits) - 1) ^ ((bit << 1) - 1)  # qubits 1..qubit-1
    if index % 2:
        return PauliString(bit, z_string, n_qubits)
    # Y = i X Z
    return PauliString(bit, z_string | bit, n_qubits, phase=1)


def left_generator(fermion: int) -> int:
    return 2 * fermion - 1


def right_generator(fermion: int) -> int:
    return 2 * fermion


def qubits_for_generators(n_generators: int) -> int:
    return (n_generators + 1) // 2


@functools.lru_cache(maxsize=65536)
def _monomial_pauli(mask: int, phase: int, n_qubits: int) -> PauliString:
    result = PauliString.identity(n_qubits)
    index = 1
    remaining = mask
    while remaining:
        if remaining & 1:
            result = result * jordan_wigner(index, n_qubits)
        remaining >>= 1
        index += 1
    return PauliString(result.x_mask, result.z_mask, n_qubits, result.phase + phase)


def monomial_pauli(monomial: MajoranaMonomial, n_qubits: int) -> PauliString:
    if monomial.n_generators > 2 * n_qubits:
        raise ValueError(f"{monomial.n_generators} generators do not fit {n_qubits} qubits")
    return _monomial_pauli(monomial.mask, monomial.phase, n_qubits)


def monomial_matrix(monomial: MajoranaMonomial, n_qubits: int) -> np.ndarray:
    return monomial_pauli(monomial, n_qubits).to_matrix()


def generator_matrix(index: int, n_qubits: int, majorana_square: float = 0.5) -> np.ndarray:
    """Dense Majorana with psi^2 = majorana_square."""
    return np.sqrt(majorana_square) * jordan_wigner(index, n_qubits).to_matrix()


def tfd_partner_phase(fermions: Sequence[int], n_fermions: int) -> complex:
    """Phase eta with Gamma_R(fermions)|I> = eta * Gamma_L(fermions)|I>.

    |I> is the all-zero basis state of the interleaved two-sided register,
    annihilated by psi_L^j + i psi_R^j.
    """
    n_generators = 2 * n_fermions
    left = MajoranaMonomial.from_indices([left_generator(f) for f in fermions], n_generators)
    right = MajoranaMonomial.from_indices([right_generator(f) for f in fermions], n_generators)
    left_amp, left_index = monomial_pauli(left, n_fermions).apply_to_basis(0)
    right_amp, right_index = monomial_pauli(right, n_fermions).apply_to_basis(0)
    if left_index != right_index:
        raise NumericalInvariantError("Left and right strings flip different qubits of |I>")
    return right_amp / left_amp


@functools.lru_cache(maxsize=16)
def _expansion_tables(n_generators: int, n_qubits: int):
    dim = 1 << n_qubits
    count = 1 << n_generators
    x_masks = np.empty(count, dtype=np.int64)
    signs = np.empty((count, dim), dtype=np.int8)
    phases = np.empty(count, dtype=complex)
    for mask in range(count):
        pauli = _monomial_pauli(mask, 0, n_qubits)
        x_masks[mask] = pauli.x_mask
        signs[mask] = 1 - 2 * _parity_vector(pauli.z_mask, dim)
        phases[mask] = PHASES[pauli.phase]
    for table in (x_masks, signs, phases):
        table.setflags(write=False)
    return x_masks, signs, phases


@dataclass(frozen=True)
class OperatorExpansion:
    """Amplitudes over unit monomials, keyed by index bitmask (phase +1).

    Unit monomials are orthonormal under Tr(A^dagger B) / D, so the squared
    amplitudes of a unit-normalized operator sum to one.
    """
    terms: Dict[int, complex] = field(compare=True)
    n_generators: int

    def __post_init__(self):
        for mask in self.terms:
            if mask >> self.n_generators:
                raise ValueError(f"Monomial {mask:#b} outside {self.n_generators} generators")

    def __len__(self) -> int:
        return len(self.terms)

    def items(self) -> Iterator[Tuple[MajoranaMonomial, complex]]:
        for mask in sorted(self.terms):
            yield MajoranaMonomial(mask, self.n_generators), self.terms[mask]

    def amplitude(self, monomial: MajoranaMonomial) -> complex:
        return self.terms.get(monomial.mask, 0.0) * np.conj(monomial.sign)

    def norm_squared(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.terms.values()))

    def normalized(self) -> "OperatorExpansion":
        norm = np.sqrt(self.norm_squared())
        if norm == 0:
            raise ValueError("Cannot normalize an empty expansion")
        return OperatorExpansion({m: c / norm for m, c in self.terms.items()}, self.n_generators)

    def truncated(self, threshold: float) -> "OperatorExpansion":
        return OperatorExpansion(
            {m: c for m, c in self.terms.items() if abs(c) > threshold}, self.n_generators
        )

    def sizes(self) -> Dict[int, int]:
        return {mask: _popcount(mask) for mask in self.terms}

    def to_dense(self, n_qubits: Optional[int] = None) -> np.ndarray:
        n_qubits = n_qubits or qubits_for_generators(self.n_generators)
        dim = 1 << n_qubits
        matrix = np.zeros((dim, dim), dtype=complex)
        for mask, amplitude in self.terms.items():
            matrix += amplitude * _monomial_pauli(mask, 0, n_qubits).to_matrix()
        return matrix


def expand_in_monomials(op: np.ndarray, n_generators: int,
                        threshold: float = DEFAULT_SUPPORT_THRESHOLD) -> OperatorExpansion:
    """Expand a dense operator in the unit monomials of the first n_generators generators.

    c_P = Tr(Gamma_P^dagger op) / D; entries with |c_P| <= threshold are dropped.
    """
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {op.shape}")
    dim = op.shape[0]
    n_qubits = dim.bit_length() - 1
    if 1 << n_qubits != dim:
        raise ValueError(f"Dimension {dim} is not a power of two")
    if n_generators > 2 * n_qubits:
        raise ValueError(f"{n_generators} generators do not fit {n_qubits} qubits")

    x_masks, signs, phases = _expansion_tables(n_generators, n_qubits)
    columns = np.arange(dim)
    gathered = op[x_masks[:, None] ^ columns[None, :], columns[None, :]]
    coefficients = np.conj(phases) * np.einsum("kc,kc->k", signs, gathered) / dim
    keep = np.flatnonzero(np.abs(coefficients) > threshold)
    return OperatorExpansion({int(m): complex(coefficients[m]) for m in keep}, n_generators)


def support_profile(expansion: OperatorExpansion,
                    threshold: float = DEFAULT_SUPPORT_THRESHOLD) -> Tuple[int, int]:
    """(number of monomials with |amplitude| > threshold, largest size among them)."""
    sizes = [_popcount(m) for m, c in expansion.terms.items() if abs(c) > threshold]
    return len(sizes), max(sizes, default=0)


def union_support(expansions: Iterable[OperatorExpansion],
                  threshold: float = DEFAULT_SUPPORT_THRESHOLD) -> Tuple[int, int]:
    """Support profile of the union of supports of several expansions."""
    masks = set()
    for expansion in expansions:
        masks.update(m for m, c in expansion.terms.items() if abs(c) > threshold)
    return len(masks), max((_popcount(m) for m in masks), default=0)
