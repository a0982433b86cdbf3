"""
Wormhole-teleportation protocol on a 10-qubit register.

Register layout (most significant first): 7 TFD qubits, reference,
injection, readout. The state is held as an array of shape (2^N, 2, 2, 2)
so system operators and single-qubit operators act on separate axes.

Steps: TFD_beta of H_L; Bell pair (reference, injection); left backward t0;
swap injection into inject_pair; left forward t0; e^{i mu V}; right forward
t1; swap readout_pair into a fresh readout qubit; I(reference; readout).
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from hamiltonians import (
    HamiltonianSpec,
    InteractionNormalization,
    Side,
    interaction_scale,
    learned_hamiltonian,
    perturbation,
)
from majorana_algebra import MajoranaMonomial, left_generator, monomial_matrix, right_generator
from observables import (
    mutual_information,
    mutual_information_from_density,
    partial_trace,
    reduced_density_matrix,
)
from thermal_dynamics import (
    DEFAULT_MAJORANA_SQUARE,
    FloquetSchedule,
    build_dense,
    floquet_propagator,
    interaction_operator,
    tfd_prepare,
)

logger = logging.getLogger(__name__)

MAX_TFD_QUBITS = 7
REFERENCE, INJECTION, READOUT = 1, 2, 3

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class EvolutionMode(str, Enum):
    EXACT_COUPLED = "exact_coupled"
    TROTTER_SINGLE_STEP = "trotter_single_step"
    FLOQUET = "floquet"


@dataclass(frozen=True)
class ProtocolConfig:
    beta: float = 4.0
    t0: float = 2.8
    t1: float = 2.8
    mu: float = -12.0
    inject_pair: Tuple[int, int] = (1, 2)
    readout_pair: Tuple[int, int] = (1, 2)
    mode: EvolutionMode = EvolutionMode.TROTTER_SINGLE_STEP
    floquet: Optional[FloquetSchedule] = None
    hamiltonian: HamiltonianSpec = field(default_factory=learned_hamiltonian)
    floquet_perturbation: HamiltonianSpec = field(default_factory=perturbation)
    majorana_square: float = DEFAULT_MAJORANA_SQUARE
    normalization: InteractionNormalization = InteractionNormalization.PER_FLAVOR
    coupling_window: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "mode", EvolutionMode(self.mode))
        object.__setattr__(self, "normalization", InteractionNormalization(self.normalization))
        object.__setattr__(self, "inject_pair", tuple(self.inject_pair))
        object.__setattr__(self, "readout_pair", tuple(self.readout_pair))
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if self.t0 < 0 or self.t1 < 0:
            raise ValueError(f"t0 and t1 must be non-negative, got {self.t0}, {self.t1}")
        if self.hamiltonian.n_fermions > MAX_TFD_QUBITS:
            raise ValueError(f"Register holds at most {MAX_TFD_QUBITS} fermion pairs, "
                             f"got {self.hamiltonian.n_fermions}")
        for name, pair in (("inject_pair", self.inject_pair), ("readout_pair", self.readout_pair)):
            if len(pair) != 2 or pair[0] == pair[1]:
                raise ValueError(f"{name} must be two distinct fermions, got {pair}")
            for fermion in pair:
                if not 1 <= fermion <= self.hamiltonian.n_fermions:
                    raise ValueError(f"{name} fermion {fermion} outside 1..{self.hamiltonian.n_fermions}")
        if self.mode == EvolutionMode.FLOQUET and self.floquet is None:
            object.__setattr__(self, "floquet", FloquetSchedule())
        if not self.coupling_window > 0:
            raise ValueError(f"coupling_window must be positive, got {self.coupling_window}")

    @property
    def n_fermions(self) -> int:
        return self.hamiltonian.n_fermions

    def with_mu(self, mu: float) -> "ProtocolConfig":
        return replace(self, mu=mu)

    def with_t1(self, t1: float) -> "ProtocolConfig":
        return replace(self, t1=t1)


@dataclass(frozen=True)
class TeleportResult:
    mutual_info: float
    config: ProtocolConfig


@dataclass(frozen=True, eq=False)
class TeleportSeries:
    """I(t1) per coupling value; row k of `values` belongs to mus[k]."""
    config: ProtocolConfig
    times: np.ndarray
    mus: Tuple[float, ...]
    values: np.ndarray

    def branch(self, mu: float) -> np.ndarray:
        return self.values[self.mus.index(mu)]

    def results(self):
        for mu, row in zip(self.mus, self.values):
            for t1, value in zip(self.times, row):
                yield TeleportResult(float(value), replace(self.config, mu=mu, t1=float(t1)))


class _ProtocolOperators:
    """Dense operators shared by every run with the same Hamiltonian, mode and beta."""

    def __init__(self, config: ProtocolConfig):
        n, s = config.n_fermions, config.majorana_square
        self.n_fermions = n
        self.h_left = build_dense(config.hamiltonian.on_side(Side.LEFT), n_qubits=n, majorana_square=s)
        self.h_right = build_dense(config.hamiltonian.on_side(Side.RIGHT), n_qubits=n, majorana_square=s)
        self.coupling = interaction_scale(config.normalization, n) * interaction_operator(n, s, n_qubits=n)
        self.config = config
        if config.mode == EvolutionMode.FLOQUET:
            perturbation_spec = config.floquet_perturbation
            self.p_left = build_dense(perturbation_spec.on_side(Side.LEFT), n_qubits=n, majorana_square=s)
            self.p_right = build_dense(perturbation_spec.on_side(Side.RIGHT), n_qubits=n, majorana_square=s)

    def left_forward(self, t: float) -> np.ndarray:
        if self.config.mode == EvolutionMode.FLOQUET:
            return floquet_propagator(self.config.floquet, self.h_left, self.p_left, t)
        return self.h_left.propagator(t)

    def right_forward(self, t: float) -> np.ndarray:
        if self.config.mode == EvolutionMode.FLOQUET:
            return floquet_propagator(self.config.floquet, self.h_right, self.p_right, t)
        return self.h_right.propagator(t)

    def interaction(self, mu: float) -> np.ndarray:
        if self.config.mode == EvolutionMode.EXACT_COUPLED:
            window = self.config.coupling_window
            generator = self.h_left + self.h_right - (mu / window) * self.coupling
            return generator.propagator(window)
        # e^{i mu V}
        return self.coupling.propagator(-mu)

    def pair_operators(self, pair: Tuple[int, int], side: Side) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """X~, Y~, Z~ of the qubit carried by a fermion pair: gamma_a, gamma_b, -i gamma_a gamma_b."""
        to_generator = left_generator if side == Side.LEFT else right_generator
        a, b = (to_generator(f) for f in pair)
        n_generators = 2 * self.n_fermions
        x = monomial_matrix(MajoranaMonomial.from_indices([a], n_generators), self.n_fermions)
        y = monomial_matrix(MajoranaMonomial.from_indices([b], n_generators), self.n_fermions)
        return x, y, -1j * (x @ y)


def _apply_system(state: np.ndarray, unitary: np.ndarray) -> np.ndarray:
    return np.tensordot(unitary, state, axes=([1], [0]))


def _apply_qubit(state: np.ndarray, gate: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(gate, state, axes=([1], [axis])), 0, axis)


def _apply_pair_swap(state: np.ndarray, pair_ops, axis: int) -> np.ndarray:
    """1/2 (I (x) I + X~ (x) X + Y~ (x) Y + Z~ (x) Z) between the pair qubit and a register qubit."""
    result = state.copy()
    for system_op, pauli in zip(pair_ops, (PAULI_X, PAULI_Y, PAULI_Z)):
        result = result + _apply_qubit(_apply_system(state, system_op), pauli, axis)
    return 0.5 * result


def _initial_register(config: ProtocolConfig) -> np.ndarray:
    tfd = tfd_prepare(config.hamiltonian, config.beta, config.majorana_square).amplitudes
    bell = np.array([[1, 0], [0, 1]], dtype=complex) / np.sqrt(2)
    fresh = np.array([1, 0], dtype=complex)
    return np.einsum("a,bc,d->abcd", tfd, bell, fresh)


def _inject(config: ProtocolConfig, operators: _ProtocolOperators) -> np.ndarray:
    """State after steps 1-5 (insertion completed, before the coupling)."""
    state = _initial_register(config)
    forward = operators.left_forward(config.t0)
    state = _apply_system(state, forward.conj().T)
    state = _apply_pair_swap(state, operators.pair_operators(config.inject_pair, Side.LEFT), INJECTION)
    return _apply_system(state, forward)


def _readout(state: np.ndarray, config: ProtocolConfig, operators: _ProtocolOperators, t1: float) -> np.ndarray:
    state = _apply_system(state, operators.right_forward(t1))
    return _apply_pair_swap(state, operators.pair_operators(config.readout_pair, Side.RIGHT), READOUT)


def _register_qubits(config: ProtocolConfig) -> Tuple[int, int, int]:
    n = config.n_fermions
    return n, n + 1, n + 2


def _final_state(config: ProtocolConfig, operators: Optional[_ProtocolOperators] = None) -> np.ndarray:
    operators = operators or _ProtocolOperators(config)
    state = _inject(config, operators)
    state = _apply_system(state, operators.interaction(config.mu))
    return _readout(state, config, operators, config.t1).reshape(-1)


def teleport(config: ProtocolConfig) -> TeleportResult:
    """Run the protocol once and return I(reference; readout) in bits."""
    amplitudes = _final_state(config)
    reference, _, readout = _register_qubits(config)
    value = mutual_information(amplitudes, [reference], [readout])
    logger.debug(f"teleport mode={config.mode.value} mu={config.mu} t0={config.t0} t1={config.t1}: I={value:.6f}")
    return TeleportResult(value, config)


def reference_readout_state(config: ProtocolConfig) -> np.ndarray:
    """Reduced density matrix on (reference, readout) at the end of the protocol."""
    reference, _, readout = _register_qubits(config)
    return reduced_density_matrix(_final_state(config), [reference, readout], config.n_fermions + 3)


def teleport_sweep(config: ProtocolConfig, times: Sequence[float], both_signs: bool = True) -> TeleportSeries:
    """I(t1) over a grid of readout times, for mu and (optionally) -mu."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("Empty t1 grid")
    if np.any(times < 0):
        raise ValueError("Readout times must be non-negative")
    operators = _ProtocolOperators(config)
    inserted = _inject(config, operators)
    reference, _, readout = _register_qubits(config)

    mus = (config.mu, -config.mu) if both_signs else (config.mu,)
    rows = []
    for mu in mus:
        coupled = _apply_system(inserted, operators.interaction(mu))
        values = np.array([
            mutual_information(_readout(coupled, config, operators, t1).reshape(-1), [reference], [readout])
            for t1 in times
        ])
        rows.append(values)
        logger.info(f"Sweep mode={config.mode.value} mu={mu}: peak I={values.max():.4f} "
                    f"at t1={times[values.argmax()]:.2f}")
    return TeleportSeries(config, times, tuple(float(m) for m in mus), np.array(rows))


def asymmetry_score(series: TeleportSeries) -> float:
    """max_t I_{-|mu|}(t) - max_t I_{+|mu|}(t)."""
    if len(series.mus) < 2:
        raise ValueError("Asymmetry needs both coupling signs in the series")
    first, second = series.values[0], series.values[1]
    negative, positive = (first, second) if series.mus[0] < 0 else (second, first)
    return float(negative.max() - positive.max())


def _embed_system(op: np.ndarray) -> np.ndarray:
    return np.kron(op, np.eye(8))


def _embed_pair_swap(pair_ops, position: int) -> np.ndarray:
    """Full-register swap between the pair qubit and register qubit `position` (1..3)."""
    system_dim = pair_ops[0].shape[0]
    total = np.eye(system_dim * 8, dtype=complex)
    for system_op, pauli in zip(pair_ops, (PAULI_X, PAULI_Y, PAULI_Z)):
        factors = [np.eye(2)] * 3
        factors[position - 1] = pauli
        total = total + np.kron(system_op, np.kron(factors[0], np.kron(factors[1], factors[2])))
    return 0.5 * total


def density_matrix_oracle(config: ProtocolConfig) -> np.ndarray:
    """Reduced (reference, readout) state from direct density-matrix evolution with full-register matrices."""
    operators = _ProtocolOperators(config)
    tfd = tfd_prepare(config.hamiltonian, config.beta, config.majorana_square).amplitudes
    bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    initial = np.kron(tfd, np.kron(bell, np.array([1, 0], dtype=complex)))
    rho = np.outer(initial, initial.conj())

    forward = operators.left_forward(config.t0)
    steps = [
        _embed_system(forward.conj().T),
        _embed_pair_swap(operators.pair_operators(config.inject_pair, Side.LEFT), INJECTION),
        _embed_system(forward),
        _embed_system(operators.interaction(config.mu)),
        _embed_system(operators.right_forward(config.t1)),
        _embed_pair_swap(operators.pair_operators(config.readout_pair, Side.RIGHT), READOUT),
    ]
    for unitary in steps:
        rho = unitary @ rho @ unitary.conj().T
    reference, _, readout = _register_qubits(config)
    return partial_trace(rho, [reference, readout], config.n_fermions + 3)


def oracle_mutual_information(config: ProtocolConfig) -> float:
    rho = density_matrix_oracle(config)
    return mutual_information_from_density(rho, [0], [1])


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))
