"""
Diagnostics: two-point functions, OTOCs, size distributions and size
winding, entropies and mutual information.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from hamiltonians import CoupledSpec, HamiltonianSpec, Side
from majorana_algebra import (
    DEFAULT_SUPPORT_THRESHOLD,
    OperatorExpansion,
    expand_in_monomials,
    union_support,
)
from thermal_dynamics import (
    DEFAULT_MAJORANA_SQUARE,
    DenseOperator,
    FloquetSchedule,
    StateVector,
    ThermalConfig,
    build_dense,
    evolve,
    fermion_operator,
    floquet_heisenberg,
    floquet_propagator,
    heisenberg_evolve,
    tfd_prepare,
    thermal_power,
)

logger = logging.getLogger(__name__)

DEFAULT_WEIGHT_FLOOR = 1e-6
DEFAULT_WINDING_THRESHOLD = 0.8
DEFAULT_WINDING_BETA = 4.0
MIN_WINDING_SIZES = 3


@dataclass(frozen=True)
class TimeGrid:
    start: float = 0.0
    stop: float = 50.0
    step: float = 0.05

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"Grid must start at t >= 0, got {self.start}")
        if not self.step > 0:
            raise ValueError(f"Grid step must be positive, got {self.step}")
        if self.stop < self.start:
            raise ValueError(f"Empty grid [{self.start}, {self.stop}]")

    def times(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)

    def __len__(self) -> int:
        return len(self.times())


def _check_fermion(j: int, n_fermions: int):
    if not 1 <= j <= n_fermions:
        raise ValueError(f"Fermion index {j} outside 1..{n_fermions}")


def _operator_system(spec: Union[HamiltonianSpec, CoupledSpec], j: int, majorana_square: float):
    """Hamiltonian matrix and psi^j (psi_L^j for two-sided systems) on the matching register."""
    _check_fermion(j, spec.n_fermions)
    H = build_dense(spec, majorana_square=majorana_square)
    if isinstance(spec, CoupledSpec) or spec.side != Side.SINGLE:
        psi = fermion_operator(j, spec.n_fermions, Side.LEFT, majorana_square, n_qubits=H.n_qubits)
    else:
        psi = fermion_operator(j, spec.n_fermions, Side.SINGLE, majorana_square, n_qubits=H.n_qubits)
    return H, psi


def two_point_series(spec: Union[HamiltonianSpec, CoupledSpec], beta: float, j: int,
                     times: Sequence[float],
                     majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> np.ndarray:
    """G_j(t) = Tr[rho psi^j(t) psi^j] / psi^2 over a set of times.

    In the energy basis G(t) = sum_mn rho_m |psi_mn|^2 e^{i(E_m - E_n)t} / psi^2.
    """
    ThermalConfig(beta)
    H, psi = _operator_system(spec, j, majorana_square)
    energies, vectors = H.eigensystem
    weights = np.exp(-beta * (energies - energies.min()))
    weights /= weights.sum()
    psi_energy = vectors.conj().T @ psi.matrix @ vectors
    intensity = weights[:, None] * np.abs(psi_energy) ** 2
    times = np.asarray(times, dtype=float)
    gaps = np.subtract.outer(energies, energies)
    values = np.array([np.sum(intensity * np.exp(1j * gaps * t)) for t in times])
    return values / majorana_square


def two_point(spec: Union[HamiltonianSpec, CoupledSpec], beta: float, j: int, t: float,
              majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> complex:
    return complex(two_point_series(spec, beta, j, [t], majorana_square)[0])


def two_point_via_tfd(spec: HamiltonianSpec, beta: float, j: int, t: float,
                      majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> complex:
    """Same correlator as two_point for a single-sided spec, read off the TFD state.

    <TFD| e^{iH_L t} psi_L e^{-iH_L t} psi_L |TFD> / psi^2, evaluated with state evolution.
    """
    _check_fermion(j, spec.n_fermions)
    tfd = tfd_prepare(spec, beta, majorana_square)
    h_left = build_dense(spec.on_side(Side.LEFT), majorana_square=majorana_square)
    psi = fermion_operator(j, spec.n_fermions, Side.LEFT, majorana_square)
    kicked = psi.matrix @ tfd.amplitudes
    norm = np.linalg.norm(kicked)
    evolved_kicked = evolve(StateVector(kicked / norm), h_left, t).amplitudes * norm
    evolved_tfd = evolve(tfd, h_left, t).amplitudes
    return complex(np.vdot(evolved_tfd, psi.matrix @ evolved_kicked)) / majorana_square


def floquet_two_point_series(h0: HamiltonianSpec, h1: HamiltonianSpec, schedule: FloquetSchedule,
                             beta: float, j: int, times: Sequence[float],
                             majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> np.ndarray:
    """Single-sided G_j(t) under alternating evolution; rho is thermal for H0."""
    H0, psi = _operator_system(h0, j, majorana_square)
    H1 = build_dense(h1, n_qubits=H0.n_qubits, majorana_square=majorana_square)
    rho = thermal_power(H0, beta)
    values = []
    for t in times:
        unitary = floquet_propagator(schedule, H0, H1, t)
        evolved = unitary.conj().T @ psi.matrix @ unitary
        values.append(np.trace(rho @ evolved @ psi.matrix))
    return np.array(values) / majorana_square


def otoc(spec: HamiltonianSpec, beta: float, i: int, j: int, t: float,
         majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> float:
    """Regularized OTOC Tr[r psi^i(t) r psi^j r psi^i(t) r psi^j], r = rho^{1/4}, divided by its t=0 value."""
    return float(otoc_series(spec, beta, i, j, [0.0, t], majorana_square)[1])


def otoc_series(spec: HamiltonianSpec, beta: float, i: int, j: int, times: Sequence[float],
                majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> np.ndarray:
    if i == j:
        raise ValueError("OTOC needs two distinct fermions")
    H, psi_i = _operator_system(spec, i, majorana_square)
    _, psi_j = _operator_system(spec, j, majorana_square)
    quarter = thermal_power(H, beta, 0.25)

    def correlator(t: float) -> float:
        moved = heisenberg_evolve(psi_i, H, t).matrix
        chain = quarter @ moved @ quarter @ psi_j.matrix @ quarter @ moved @ quarter @ psi_j.matrix
        return float(np.trace(chain).real)

    reference = correlator(0.0)
    return np.array([correlator(t) for t in times]) / reference


def pair_averaged_otoc_series(spec: HamiltonianSpec, beta: float, times: Sequence[float],
                              majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                              pairs: Optional[Sequence[Tuple[int, int]]] = None):
    """OTOC per fermion pair i < j and their mean; returns (mean, {pair: series})."""
    if pairs is None:
        fermions = range(1, spec.n_fermions + 1)
        pairs = [(i, j) for i in fermions for j in fermions if i < j]
    if not pairs:
        raise ValueError("No fermion pairs to average over")
    per_pair = {tuple(pair): otoc_series(spec, beta, pair[0], pair[1], times, majorana_square) for pair in pairs}
    return np.mean(list(per_pair.values()), axis=0), per_pair


@dataclass(frozen=True, eq=False)
class SizeWindingData:
    """p(l) and q(l) of rho^{1/2} psi^j(t) for sizes l = 0..N."""
    time: float
    fermion: int
    p: np.ndarray
    q: np.ndarray
    n_monomials: int = 0

    @property
    def sizes(self) -> np.ndarray:
        return np.arange(len(self.p))

    @property
    def odd_sizes(self) -> np.ndarray:
        return self.sizes[1::2]

    def ratio(self, weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> np.ndarray:
        """|q(l)| / p(l), NaN where p(l) is below the floor."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.p > weight_floor, np.abs(self.q) / self.p, np.nan)

    def phases(self, weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> Tuple[np.ndarray, np.ndarray]:
        """(sizes, arg q) over sizes with p(l) above the floor."""
        sizes = self.sizes[self.p > weight_floor]
        return sizes, np.angle(self.q[sizes])


def _winding_operators(spec: HamiltonianSpec, beta: float, j: int, majorana_square: float):
    H, psi = _operator_system(spec, j, majorana_square)
    return H, psi, thermal_power(H, beta, 0.5)


def _size_data(root_rho: np.ndarray, evolved: DenseOperator, n_fermions: int, j: int, t: float) -> SizeWindingData:
    expansion = expand_in_monomials(root_rho @ evolved.matrix, n_fermions, threshold=0.0).normalized()
    p = np.zeros(n_fermions + 1)
    q = np.zeros(n_fermions + 1, dtype=complex)
    for mask, amplitude in expansion.terms.items():
        size = bin(mask).count("1")
        p[size] += abs(amplitude) ** 2
        q[size] += amplitude ** 2
    return SizeWindingData(float(t), j, p, q, len(expansion))


def size_distributions(spec: HamiltonianSpec, beta: float, j: int, t: float,
                       majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> SizeWindingData:
    """Expand rho^{1/2} psi^j(t), unit-normalized, and aggregate |c_P|^2 and c_P^2 by size."""
    return size_distribution_series(spec, beta, j, [t], majorana_square)[0]


def size_distribution_series(spec: HamiltonianSpec, beta: float, j: int, times: Sequence[float],
                             majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> List[SizeWindingData]:
    if spec.side != Side.SINGLE:
        raise ValueError("Size distributions are defined on the single-sided register")
    H, psi, root_rho = _winding_operators(spec, beta, j, majorana_square)
    return [_size_data(root_rho, heisenberg_evolve(psi, H, t), spec.n_fermions, j, t) for t in times]


def floquet_size_series(h0: HamiltonianSpec, h1: HamiltonianSpec, schedule: FloquetSchedule,
                        beta: float, j: int, times: Sequence[float],
                        majorana_square: float = DEFAULT_MAJORANA_SQUARE) -> List[SizeWindingData]:
    H0, psi, root_rho = _winding_operators(h0, beta, j, majorana_square)
    H1 = build_dense(h1, n_qubits=H0.n_qubits, majorana_square=majorana_square)
    return [_size_data(root_rho, floquet_heisenberg(psi, schedule, H0, H1, t), h0.n_fermions, j, t)
            for t in times]


@dataclass(frozen=True)
class WindingQuality:
    std: Optional[float]
    threshold: float = DEFAULT_WINDING_THRESHOLD
    time_of_best: Optional[float] = None
    sizes: Tuple[int, ...] = ()
    phases: Tuple[float, ...] = ()

    @property
    def is_defined(self) -> bool:
        return self.std is not None

    @property
    def passes(self) -> bool:
        return self.is_defined and self.std < self.threshold


def wrap_phase(delta):
    """Map phase differences into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(delta, dtype=float), 2 * np.pi)


def winding_quality(data: SizeWindingData, weight_floor: float = DEFAULT_WEIGHT_FLOOR,
                    threshold: float = DEFAULT_WINDING_THRESHOLD) -> WindingQuality:
    """Population std of adjacent arg q(l) differences over qualifying odd sizes."""
    sizes = [int(l) for l in data.odd_sizes if data.p[l] > weight_floor]
    if len(sizes) < MIN_WINDING_SIZES:
        return WindingQuality(None, threshold, sizes=tuple(sizes))
    phases = np.angle(data.q[sizes])
    differences = wrap_phase(np.diff(phases))
    return WindingQuality(float(np.std(differences)), threshold,
                          sizes=tuple(sizes), phases=tuple(float(p) for p in phases))


def winding_std_series(spec: HamiltonianSpec, j: int, times: Sequence[float],
                       beta: float = DEFAULT_WINDING_BETA,
                       majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                       weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> np.ndarray:
    """Winding std over a time grid; NaN where the quality is undefined."""
    series = size_distribution_series(spec, beta, j, times, majorana_square)
    values = [winding_quality(data, weight_floor).std for data in series]
    return np.array([np.nan if v is None else v for v in values])


def first_local_minimum(values: Sequence[float], threshold: float) -> Optional[int]:
    """First interior index i with v[i] < v[i-1], v[i] <= v[i+1] and v[i] < threshold."""
    values = np.asarray(values, dtype=float)
    for i in range(1, len(values) - 1):
        here = values[i]
        if np.isnan(here) or np.isnan(values[i - 1]) or np.isnan(values[i + 1]):
            continue
        if here < values[i - 1] and here <= values[i + 1] and here < threshold:
            return i
    return None


def best_winding_time(spec: HamiltonianSpec, j: int, grid: Union[TimeGrid, Sequence[float]],
                      threshold: float = DEFAULT_WINDING_THRESHOLD,
                      beta: float = DEFAULT_WINDING_BETA,
                      majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                      weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> Optional[float]:
    times = grid.times() if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    if len(times) == 0:
        raise ValueError("Empty time grid")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("Time grid must be increasing and start at t >= 0")
    stds = winding_std_series(spec, j, times, beta, majorana_square, weight_floor)
    index = first_local_minimum(stds, threshold)
    best = None if index is None else float(times[index])
    logger.debug(f"Best winding time for fermion {j} of {spec.label or 'spec'}: {best}")
    return best


def von_neumann_entropy(rho: np.ndarray, base: float = 2.0) -> float:
    """-Tr rho log rho with 0 log 0 = 0."""
    eigenvalues = linalg.eigvalsh(rho)
    eigenvalues = eigenvalues[eigenvalues > 1e-15]
    return float(-np.sum(eigenvalues * np.log(eigenvalues)) / np.log(base))


def _check_parts(part_a: Sequence[int], part_b: Sequence[int], n_qubits: int):
    if set(part_a) & set(part_b):
        raise ValueError(f"Qubit sets overlap: {sorted(set(part_a) & set(part_b))}")
    for q in list(part_a) + list(part_b):
        if not 0 <= q < n_qubits:
            raise ValueError(f"Qubit {q} outside register of {n_qubits}")
    if not part_a or not part_b:
        raise ValueError("Both qubit sets must be non-empty")


def reduced_density_matrix(amplitudes: np.ndarray, keep: Sequence[int], n_qubits: int) -> np.ndarray:
    """Partial trace of |psi><psi| onto the kept qubits (0-based, qubit 0 most significant)."""
    keep = list(keep)
    traced = [q for q in range(n_qubits) if q not in keep]
    tensor = np.asarray(amplitudes).reshape([2] * n_qubits).transpose(keep + traced)
    matrix = tensor.reshape(1 << len(keep), -1)
    return matrix @ matrix.conj().T


def partial_trace(rho: np.ndarray, keep: Sequence[int], n_qubits: int) -> np.ndarray:
    """Partial trace of a density matrix onto the kept qubits, in the given order."""
    keep = list(keep)
    traced = [q for q in range(n_qubits) if q not in keep]
    tensor = np.asarray(rho).reshape([2] * (2 * n_qubits))
    order = keep + traced
    tensor = tensor.transpose(order + [n_qubits + q for q in order])
    dim_keep, dim_traced = 1 << len(keep), 1 << len(traced)
    tensor = tensor.reshape(dim_keep, dim_traced, dim_keep, dim_traced)
    return np.einsum("ajbj->ab", tensor)


def mutual_information(state: Union[StateVector, np.ndarray], part_a: Sequence[int],
                       part_b: Sequence[int]) -> float:
    """I(A;B) = S(A) + S(B) - S(AB) in bits."""
    amplitudes = state.amplitudes if isinstance(state, StateVector) else np.asarray(state).reshape(-1)
    n_qubits = amplitudes.shape[0].bit_length() - 1
    _check_parts(part_a, part_b, n_qubits)
    joint = reduced_density_matrix(amplitudes, list(part_a) + list(part_b), n_qubits)
    return _mutual_information_from_joint(joint, len(part_a), len(part_b))


def mutual_information_from_density(rho: np.ndarray, part_a: Sequence[int],
                                    part_b: Sequence[int]) -> float:
    n_qubits = rho.shape[0].bit_length() - 1
    _check_parts(part_a, part_b, n_qubits)
    joint = partial_trace(rho, list(part_a) + list(part_b), n_qubits)
    return _mutual_information_from_joint(joint, len(part_a), len(part_b))


def _mutual_information_from_joint(joint: np.ndarray, size_a: int, size_b: int) -> float:
    n = size_a + size_b
    rho_a = partial_trace(joint, range(size_a), n)
    rho_b = partial_trace(joint, range(size_a, n), n)
    value = von_neumann_entropy(rho_a) + von_neumann_entropy(rho_b) - von_neumann_entropy(joint)
    return max(value, 0.0) if value > -1e-10 else value


def gap_ratio(energies: Sequence[float], degeneracy_tolerance: float = 1e-9) -> float:
    """Mean adjacent gap ratio <min(s_n, s_n+1) / max(s_n, s_n+1)> over non-degenerate levels."""
    levels = np.sort(np.asarray(energies, dtype=float))
    gaps = np.diff(levels)
    gaps = gaps[gaps > degeneracy_tolerance]
    if len(gaps) < 2:
        raise ValueError("Need at least three distinct levels for a gap ratio")
    ratios = np.minimum(gaps[:-1], gaps[1:]) / np.maximum(gaps[:-1], gaps[1:])
    return float(np.mean(ratios))


def operator_spread(spec: HamiltonianSpec, j: int, t: float,
                    majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                    threshold: float = DEFAULT_SUPPORT_THRESHOLD) -> OperatorExpansion:
    """Unit-normalized monomial expansion of psi^j(t) (no thermal factor)."""
    H, psi = _operator_system(spec, j, majorana_square)
    evolved = heisenberg_evolve(psi, H, t).matrix / math.sqrt(majorana_square)
    return expand_in_monomials(evolved, spec.n_fermions, threshold)


def floquet_spread(h0: HamiltonianSpec, h1: HamiltonianSpec, schedule: FloquetSchedule, j: int,
                   times: Sequence[float], majorana_square: float = DEFAULT_MAJORANA_SQUARE,
                   threshold: float = DEFAULT_SUPPORT_THRESHOLD) -> Tuple[int, int]:
    """Union support profile of psi^j(t) under alternating evolution over the given times."""
    H0, psi = _operator_system(h0, j, majorana_square)
    H1 = build_dense(h1, n_qubits=H0.n_qubits, majorana_square=majorana_square)
    expansions = [
        expand_in_monomials(floquet_heisenberg(psi, schedule, H0, H1, t).matrix / math.sqrt(majorana_square),
                            h0.n_fermions, threshold)
        for t in times
    ]
    return union_support(expansions, threshold)


def revival_time(times: Sequence[float], values: Sequence[float], level: float = 0.8) -> Optional[float]:
    """First time the series returns to >= level after having dropped below it."""
    dropped = False
    for t, value in zip(times, values):
        if value < level:
            dropped = True
        elif dropped:
            return float(t)
    return None
