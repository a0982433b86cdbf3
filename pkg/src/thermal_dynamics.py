"""
Dense Hilbert-space machinery: Hamiltonian matrices, thermal states,
thermofield doubles and exact, Floquet and Heisenberg-picture evolution.

Single-sided specs build on ceil(N/2) qubits (7 fermions use 4 qubits with a
padded 8th Majorana no term touches). Side-tagged and coupled specs build on
the N-qubit two-sided register with interleaved Jordan-Wigner.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from hamiltonians import CoupledSpec, HamiltonianSpec, InteractionNormalization, Side, couple
from majorana_algebra import (
    MajoranaMonomial,
    NumericalInvariantError,
    left_generator,
    monomial_matrix,
    qubits_for_generators,
    right_generator,
)

logger = logging.getLogger(__name__)

__all__ = [
    "DenseOperator", "StateVector", "ThermalConfig", "FloquetSchedule", "NumericalInvariantError",
    "build_dense", "interaction_operator", "fermion_operator", "register_size", "tfd_prepare",
    "infinite_temperature_tfd", "thermal_state", "thermal_power", "evolve", "heisenberg_evolve",
    "floquet_propagator", "floquet_evolve", "floquet_heisenberg", "tfd_overlap_scan",
]

HERMITIAN_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-10
DEFAULT_MAJORANA_SQUARE = 0.5


def _as_matrix(matrix) -> np.ndarray:
    array = np.array(matrix, dtype=complex)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {array.shape}")
    dim = array.shape[0]
    if dim < 1 or dim & (dim - 1):
        raise ValueError(f"Dimension {dim} is not a power of two")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Read-only square matrix on a qubit register.

    The Hermitian eigendecomposition is computed lazily and cached on the instance.
    """
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_matrix(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def is_hermitian(self, atol: float = HERMITIAN_TOLERANCE) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, rtol=0, atol=atol))

    def is_unitary(self, atol: float = HERMITIAN_TOLERANCE) -> bool:
        return bool(np.allclose(self.matrix @ self.matrix.conj().T, np.eye(self.dim), rtol=0, atol=atol))

    @cached_property
    def eigensystem(self) -> Tuple[np.ndarray, np.ndarray]:
        if not self.is_hermitian(atol=1e-10):
            raise NumericalInvariantError("Eigendecomposition requested for a non-Hermitian operator")
        energies, vectors = linalg.eigh(self.matrix)
        energies.setflags(write=False)
        vectors.setflags(write=False)
        return energies, vectors

    def propagator(self, t: float) -> np.ndarray:
        """e^{-iHt}"""
        energies, vectors = self.eigensystem
        return (vectors * np.exp(-1j * energies * t)) @ vectors.conj().T

    def function(self, f) -> np.ndarray:
        """f(H) applied through the eigendecomposition"""
        energies, vectors = self.eigensystem
        return (vectors * f(energies)) @ vectors.conj().T

    def dagger(self) -> "DenseOperator":
        return DenseOperator(self.matrix.conj().T)

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.matrix + other.matrix)

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.matrix - other.matrix)

    def __mul__(self, factor: float) -> "DenseOperator":
        return DenseOperator(factor * self.matrix)

    __rmul__ = __mul__

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    qubit_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        array = np.array(self.amplitudes, dtype=complex).reshape(-1)
        dim = array.shape[0]
        if dim < 1 or dim & (dim - 1):
            raise ValueError(f"Dimension {dim} is not a power of two")
        norm = np.linalg.norm(array)
        if abs(norm - 1) > NORM_TOLERANCE:
            raise ValueError(f"State must have unit norm, got {norm}")
        array.setflags(write=False)
        object.__setattr__(self, "amplitudes", array)
        labels = tuple(self.qubit_labels)
        if labels and len(labels) != dim.bit_length() - 1:
            raise ValueError(f"{len(labels)} labels for {dim.bit_length() - 1} qubits")
        object.__setattr__(self, "qubit_labels", labels)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def qubit_index(self, label: str) -> int:
        return self.qubit_labels.index(label)

    def expectation(self, op: Union[DenseOperator, np.ndarray]) -> complex:
        matrix = op.matrix if isinstance(op, DenseOperator) else op
        return complex(np.vdot(self.amplitudes, matrix @ self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class ThermalConfig:
    beta: float = 0.0

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")


@dataclass(frozen=True)
class FloquetSchedule:
    """Strict alternation of H0 and H1 in segments of fixed length.

    H1 segments run H1 alone, so with H1 = 0 the clock of H0 stands still
    during them and U(t) = e^{-i H0 h0_time(t)}.
    """
    segment_length: float = 2.8
    start_phase: str = "h0"

    def __post_init__(self):
        if not self.segment_length > 0:
            raise ValueError(f"segment_length must be positive, got {self.segment_length}")
        if self.start_phase not in ("h0", "h1"):
            raise ValueError(f"start_phase must be 'h0' or 'h1', got {self.start_phase!r}")

    def segments(self, t: float) -> Iterator[Tuple[str, float]]:
        """(phase, duration) pieces covering [0, t] in time order."""
        if t < 0:
            raise ValueError(f"Floquet time must be non-negative, got {t}")
        phases = ("h0", "h1") if self.start_phase == "h0" else ("h1", "h0")
        elapsed, k = 0.0, 0
        while t - elapsed > 1e-12:
            duration = min(self.segment_length, t - elapsed)
            yield phases[k % 2], duration
            elapsed += duration
            k += 1

    def h0_time(self, t: float) -> float:
        """Total duration of the H0 segments in [0, t]."""
        return sum(duration for phase, duration in self.segments(t) if phase == "h0")


def register_size(spec: Union[HamiltonianSpec, CoupledSpec]) -> int:
    """Minimal qubit count for a spec."""
    if isinstance(spec, CoupledSpec) or spec.side != Side.SINGLE:
        return spec.n_fermions
    return qubits_for_generators(spec.n_fermions)


def _generator_map(side: Side):
    if side == Side.LEFT:
        return left_generator
    if side == Side.RIGHT:
        return right_generator
    return lambda fermion: fermion


def _spec_matrix(spec: HamiltonianSpec, n_qubits: int, majorana_square: float) -> np.ndarray:
    to_generator = _generator_map(spec.side)
    n_generators = 2 * n_qubits
    scale = majorana_square ** 2
    matrix = np.zeros((1 << n_qubits, 1 << n_qubits), dtype=complex)
    for term in spec.terms:
        generators = [to_generator(f) for f in term.support]
        if max(generators) > n_generators:
            raise ValueError(f"Term {term.support} does not fit a {n_qubits}-qubit register")
        monomial = MajoranaMonomial.from_indices(generators, n_generators)
        matrix += term.coefficient * scale * monomial_matrix(monomial, n_qubits)
    return matrix


def interaction_operator(n_fermions: int, majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                         n_qubits: Optional[int] = None) -> DenseOperator:
    """H_int = i sum_j psi_R^j psi_L^j on the two-sided register; |I> is its top state, energy N psi^2."""
    n_qubits = n_qubits or n_fermions
    if n_qubits < n_fermions:
        raise ValueError(f"{n_fermions} fermion pairs do not fit {n_qubits} qubits")
    matrix = np.zeros((1 << n_qubits, 1 << n_qubits), dtype=complex)
    for j in range(1, n_fermions + 1):
        pair = MajoranaMonomial.from_indices([right_generator(j), left_generator(j)], 2 * n_qubits)
        matrix += 1j * majorana_square * monomial_matrix(pair, n_qubits)
    return DenseOperator(matrix)


def build_dense(spec: Union[HamiltonianSpec, CoupledSpec], n_qubits: Optional[int] = None,
                majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> DenseOperator:
    """Dense Hermitian matrix of a spec; psi^2 = majorana_square sets the term scale."""
    minimal = register_size(spec)
    n_qubits = minimal if n_qubits is None else n_qubits
    if n_qubits < minimal:
        raise ValueError(f"Spec needs {minimal} qubits, register has {n_qubits}")

    if isinstance(spec, CoupledSpec):
        matrix = (_spec_matrix(spec.left, n_qubits, majorana_square)
                  + _spec_matrix(spec.right, n_qubits, majorana_square)
                  + spec.mu * spec.interaction_scale
                  * interaction_operator(spec.n_fermions, majorana_square, n_qubits).matrix)
    else:
        matrix = _spec_matrix(spec, n_qubits, majorana_square)

    operator = DenseOperator(matrix)
    if not operator.is_hermitian():
        raise NumericalInvariantError("Built Hamiltonian is not Hermitian")
    logger.debug(f"Built {operator.dim}-dim operator for {getattr(spec, 'label', 'coupled')}")
    return operator


def fermion_operator(fermion: int, n_fermions: int, side: Union[Side, str] = Side.SINGLE,
                     majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                     n_qubits: Optional[int] = None) -> DenseOperator:
    """Dense psi^j (or psi_L^j / psi_R^j) with psi^2 = majorana_square."""
    side = Side(side)
    if not 1 <= fermion <= n_fermions:
        raise ValueError(f"Fermion index {fermion} outside 1..{n_fermions}")
    if n_qubits is None:
        n_qubits = qubits_for_generators(n_fermions) if side == Side.SINGLE else n_fermions
    generator = _generator_map(side)(fermion)
    monomial = MajoranaMonomial.from_indices([generator], 2 * n_qubits)
    return DenseOperator(math.sqrt(majorana_square) * monomial_matrix(monomial, n_qubits))


def infinite_temperature_tfd(n_fermions: int) -> StateVector:
    """|I>: the all-zero state, annihilated by psi_L^j + i psi_R^j for every j."""
    amplitudes = np.zeros(1 << n_fermions, dtype=complex)
    amplitudes[0] = 1.0
    return StateVector(amplitudes, tuple(f"tfd{j}" for j in range(1, n_fermions + 1)))


def tfd_prepare(spec: HamiltonianSpec, beta: float,
                majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> StateVector:
    """normalize((e^{-beta H_L / 2} (x) I)|I>) on the two-sided register."""
    ThermalConfig(beta)
    base = infinite_temperature_tfd(spec.n_fermions)
    if beta == 0:
        return base
    h_left = build_dense(spec.on_side(Side.LEFT), majorana_square=majorana_square)
    energies, _ = h_left.eigensystem
    shift = energies.min()
    damped = h_left.function(lambda e: np.exp(-beta * (e - shift) / 2)) @ base.amplitudes
    return StateVector(damped / np.linalg.norm(damped), base.qubit_labels)


def thermal_power(H: DenseOperator, beta: float, power: float = 1.0) -> np.ndarray:
    """rho_beta^power with rho_beta = e^{-beta H} / Z."""
    ThermalConfig(beta)
    energies, _ = H.eigensystem
    weights = np.exp(-beta * (energies - energies.min()))
    weights /= weights.sum()
    return H.function(lambda _: weights ** power)


def thermal_state(H: DenseOperator, beta: float) -> np.ndarray:
    return thermal_power(H, beta, 1.0)


def _check_dims(a: int, b: int):
    if a != b:
        raise ValueError(f"Dimension mismatch: {a} vs {b}")


def evolve(state: StateVector, H: DenseOperator, t: float) -> StateVector:
    """e^{-iHt}|state>"""
    _check_dims(state.dim, H.dim)
    energies, vectors = H.eigensystem
    coefficients = vectors.conj().T @ state.amplitudes
    amplitudes = vectors @ (np.exp(-1j * energies * t) * coefficients)
    return StateVector(amplitudes, state.qubit_labels)


def heisenberg_evolve(op: DenseOperator, H: DenseOperator, t: float) -> DenseOperator:
    """e^{iHt} op e^{-iHt}"""
    _check_dims(op.dim, H.dim)
    energies, vectors = H.eigensystem
    in_basis = vectors.conj().T @ op.matrix @ vectors
    phases = np.exp(1j * np.subtract.outer(energies, energies) * t)
    return DenseOperator(vectors @ (phases * in_basis) @ vectors.conj().T)


def floquet_propagator(schedule: FloquetSchedule, H0: DenseOperator, H1: DenseOperator,
                       t: float) -> np.ndarray:
    """U(t) for the alternating schedule; later segments multiply on the left."""
    _check_dims(H0.dim, H1.dim)
    hamiltonians = {"h0": H0, "h1": H1}
    unitary = np.eye(H0.dim, dtype=complex)
    for phase, duration in schedule.segments(t):
        unitary = hamiltonians[phase].propagator(duration) @ unitary
    return unitary


def floquet_evolve(state: StateVector, schedule: FloquetSchedule, H0: DenseOperator,
                   H1: DenseOperator, t: float) -> StateVector:
    _check_dims(state.dim, H0.dim)
    amplitudes = floquet_propagator(schedule, H0, H1, t) @ state.amplitudes
    return StateVector(amplitudes, state.qubit_labels)


def floquet_heisenberg(op: DenseOperator, schedule: FloquetSchedule, H0: DenseOperator,
                       H1: DenseOperator, t: float) -> DenseOperator:
    """U(t)^dagger op U(t) under the alternating schedule."""
    _check_dims(op.dim, H0.dim)
    unitary = floquet_propagator(schedule, H0, H1, t)
    return DenseOperator(unitary.conj().T @ op.matrix @ unitary)


@dataclass(frozen=True)
class OverlapScan:
    best_beta: float
    best_overlap: float
    gap: float
    betas: Tuple[float, ...] = field(repr=False)
    overlaps: Tuple[float, ...] = field(repr=False)


def tfd_overlap_scan(spec: HamiltonianSpec, mu: float, betas: Sequence[float],
                     majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                     normalization: InteractionNormalization = InteractionNormalization.PER_FLAVOR,
                     degeneracy_tolerance: float = 1e-9) -> OverlapScan:
    """Best overlap between the ground space of H_tot and TFD_beta of H_L over a beta grid."""
    if len(betas) == 0:
        raise ValueError("Empty beta grid")
    h_total = build_dense(couple(spec, mu, normalization), majorana_square=majorana_square)
    energies, vectors = h_total.eigensystem
    ground = vectors[:, energies < energies[0] + degeneracy_tolerance]
    excited = energies[energies >= energies[0] + degeneracy_tolerance]
    gap = float(excited[0] - energies[0]) if excited.size else 0.0

    overlaps = []
    for beta in betas:
        tfd = tfd_prepare(spec, beta, majorana_square)
        projection = ground.conj().T @ tfd.amplitudes
        overlaps.append(float(np.vdot(projection, projection).real))
    best = int(np.argmax(overlaps))
    logger.info(f"TFD overlap scan mu={mu}: best beta={betas[best]} overlap={overlaps[best]:.4f} gap={gap:.4f}")
    return OverlapScan(float(betas[best]), overlaps[best], gap, tuple(float(b) for b in betas), tuple(overlaps))
