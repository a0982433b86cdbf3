from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hamiltonians import learned_hamiltonian, syk_sample
from wormhole_protocol import (
    EvolutionMode,
    InteractionNormalization,
    ProtocolConfig,
    TeleportSeries,
    asymmetry_score,
    density_matrix_oracle,
    oracle_mutual_information,
    reference_readout_state,
    teleport,
    teleport_sweep,
    trace_distance,
)

TIMES = np.array([0.0, 1.4, 2.8, 4.2])


def test_config_defaults():
    config = ProtocolConfig()
    assert config.mode == EvolutionMode.TROTTER_SINGLE_STEP
    assert config.normalization == InteractionNormalization.PER_FLAVOR
    assert config.floquet is None
    assert ProtocolConfig(mode="floquet").floquet is not None
    assert config.with_mu(3.0).mu == 3.0
    assert config.with_t1(1.0).t1 == 1.0


@pytest.mark.parametrize("overrides", [
    {"inject_pair": (1, 1)},
    {"readout_pair": (1, 8)},
    {"inject_pair": (1, 2, 3)},
    {"beta": -1.0},
    {"t0": -0.5},
    {"coupling_window": 0.0},
    {"mode": "sideways"},
])
def test_config_rejects_invalid_values(overrides):
    with pytest.raises(ValueError):
        ProtocolConfig(**overrides)


def test_mutual_information_is_bounded():
    for mode in EvolutionMode:
        value = teleport(ProtocolConfig(mode=mode)).mutual_info
        assert 0.0 <= value <= 2.0 + 1e-10


def test_reference_readout_state_is_a_density_matrix():
    rho = reference_readout_state(ProtocolConfig())
    assert rho.shape == (4, 4)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert_allclose(rho, rho.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


@pytest.mark.parametrize("mu", [0.0, -12.0])
def test_state_evolution_matches_density_matrix_oracle(mu):
    config = ProtocolConfig(mu=mu, t1=1.9)
    assert trace_distance(reference_readout_state(config), density_matrix_oracle(config)) < 1e-10
    assert oracle_mutual_information(config) == pytest.approx(teleport(config).mutual_info, abs=1e-9)


def test_zero_coupling_branches_agree():
    series = teleport_sweep(ProtocolConfig(mu=0.0), TIMES)
    assert series.values.shape == (2, len(TIMES))
    assert_allclose(series.values[0], series.values[1], atol=1e-12)
    assert asymmetry_score(series) == pytest.approx(0.0, abs=1e-12)


def test_sweep_matches_single_runs():
    config = ProtocolConfig(mu=-6.0)
    series = teleport_sweep(config, TIMES)
    assert series.mus == (-6.0, 6.0)
    for mu in series.mus:
        for t1, value in zip(TIMES, series.branch(mu)):
            assert value == pytest.approx(teleport(replace(config, mu=mu, t1=t1)).mutual_info, abs=1e-10)
    assert len(list(series.results())) == 2 * len(TIMES)


def test_sweep_rejects_bad_grids():
    with pytest.raises(ValueError):
        teleport_sweep(ProtocolConfig(), [])
    with pytest.raises(ValueError):
        teleport_sweep(ProtocolConfig(), [-1.0, 1.0])


def test_asymmetry_sign_convention():
    times = np.array([0.0, 1.0])
    values = np.array([[0.5, 0.9], [0.2, 0.3]])
    negative_first = TeleportSeries(ProtocolConfig(), times, (-1.0, 1.0), values)
    positive_first = TeleportSeries(ProtocolConfig(), times, (1.0, -1.0), values)
    assert asymmetry_score(negative_first) == pytest.approx(0.6)
    assert asymmetry_score(positive_first) == pytest.approx(-0.6)
    with pytest.raises(ValueError):
        asymmetry_score(TeleportSeries(ProtocolConfig(), times, (-1.0,), values[:1]))


def test_spectator_relabeling_leaves_signal_unchanged():
    # swap fermions 3 and 6, which are neither injected nor read out
    relabeled = learned_hamiltonian().relabeled([1, 2, 6, 4, 5, 3, 7])
    for mu in (-12.0, 12.0):
        original = teleport(ProtocolConfig(mu=mu)).mutual_info
        moved = teleport(ProtocolConfig(mu=mu, hamiltonian=relabeled)).mutual_info
        assert moved == pytest.approx(original, abs=1e-9)


def test_exact_coupled_approaches_single_step_for_short_windows():
    base = ProtocolConfig(mu=-12.0)
    trotter = teleport(base).mutual_info
    exact = teleport(replace(base, mode=EvolutionMode.EXACT_COUPLED, coupling_window=1e-6)).mutual_info
    assert exact == pytest.approx(trotter, abs=1e-3)


def test_bare_normalization_changes_coupling_strength():
    per_flavor = teleport(ProtocolConfig(mu=-7.0)).mutual_info
    bare = teleport(ProtocolConfig(mu=-1.0, normalization=InteractionNormalization.BARE)).mutual_info
    assert bare == pytest.approx(per_flavor, abs=1e-10)


def test_works_with_non_commuting_hamiltonian():
    value = teleport(ProtocolConfig(hamiltonian=syk_sample(seed=0))).mutual_info
    assert 0.0 <= value <= 2.0 + 1e-10


ASYMMETRY_TIMES = np.round(np.arange(0.0, 10.05, 0.1), 10)


@pytest.mark.parametrize("overrides", [
    {"t0": 2.8, "t1": 2.8},
    {"t0": 4.0, "t1": 4.0, "inject_pair": (4, 7), "readout_pair": (4, 7)},
    {"t0": 2.8, "mode": EvolutionMode.FLOQUET},
], ids=["pair12", "pair47", "floquet"])
def test_negative_coupling_teleports_better(overrides):
    config = replace(ProtocolConfig(beta=4.0, mu=-12.0), **overrides)
    assert asymmetry_score(teleport_sweep(config, ASYMMETRY_TIMES)) > 0


def test_coupling_sign_swaps_sweep_branches():
    config = ProtocolConfig(mu=-12.0)
    forward = teleport_sweep(config, TIMES)
    backward = teleport_sweep(config.with_mu(12.0), TIMES)
    assert_allclose(forward.branch(-12.0), backward.branch(-12.0), atol=1e-12)
    assert asymmetry_score(forward) == pytest.approx(asymmetry_score(backward), abs=1e-12)
