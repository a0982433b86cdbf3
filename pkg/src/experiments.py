"""
Experiment registry: each experiment writes the CSV panels of one figure
(or the ensemble, enumeration and acceptance reports) plus a manifest.
"""
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional

import numpy as np

from acceptance import run_acceptance
from ensemble import ensemble_stats, verify_uniqueness
from hamiltonians import (
    CoupledSpec,
    HamiltonianSpec,
    Side,
    couple,
    learned_hamiltonian,
    perturbation,
    perturbed_hamiltonian,
    syk_sample,
)
from observables import (
    TimeGrid,
    best_winding_time,
    floquet_two_point_series,
    gap_ratio,
    pair_averaged_otoc_series,
    size_distribution_series,
    size_distributions,
    two_point_series,
    winding_quality,
)
from results_writer import PROTOCOL_COLUMNS, SCAN_COLUMNS, ResultsWriter, protocol_rows, scan_rows
from settings import DEFAULTS, ConfigError
from thermal_dynamics import FloquetSchedule, build_dense, tfd_overlap_scan
from wormhole_protocol import EvolutionMode, ProtocolConfig, asymmetry_score, teleport_sweep

logger = logging.getLogger(__name__)

FERMIONS = tuple(range(1, 8))
WINDING_SEARCH_STOP = 6.0
PROTOCOL_STOP = 10.0
OVERLAP_BETAS = tuple(0.25 * k for k in range(33))


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    output_dir: Path
    settings: Mapping[str, Any] = field(default_factory=lambda: dict(DEFAULTS))
    beta: Optional[float] = None
    grid: Optional[TimeGrid] = None
    hamiltonian: HamiltonianSpec = field(default_factory=learned_hamiltonian)

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"Unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.beta is not None and self.beta < 0:
            raise ConfigError(f"beta must be non-negative, got {self.beta}")
        if not isinstance(self.hamiltonian, HamiltonianSpec) or self.hamiltonian.side != Side.SINGLE:
            raise ConfigError("Experiments take a single-sided Hamiltonian; couple() is applied per experiment")
        if self.hamiltonian.n_fermions != len(FERMIONS):
            raise ConfigError(f"Experiments are laid out for {len(FERMIONS)} fermions, "
                              f"got {self.hamiltonian.n_fermions}")

    def __getitem__(self, key: str) -> Any:
        return self.settings[key]

    def grid_or(self, stop: float) -> TimeGrid:
        return self.grid or TimeGrid(0.0, stop, self.settings["grid_step"])

    def beta_or(self, key: str) -> float:
        return self.settings[key] if self.beta is None else self.beta

    def coupled(self) -> CoupledSpec:
        return couple(self.hamiltonian, self.settings["mu"], self.settings["interaction_normalization"])

    @property
    def schedule(self) -> FloquetSchedule:
        return FloquetSchedule(self.settings["floquet_segment"], self.settings["floquet_start"])


@dataclass(frozen=True)
class ExperimentOutcome:
    paths: List[Path]
    passed: Optional[bool] = None


def _best_times(config: ExperimentConfig, spec) -> Dict[int, Optional[float]]:
    grid = config.grid_or(WINDING_SEARCH_STOP)
    return {
        j: best_winding_time(spec, j, grid, config["winding_threshold"], config.beta_or("winding_beta"),
                             config["majorana_square"], config["weight_floor"])
        for j in FERMIONS
    }


def _winding_rows(config: ExperimentConfig, spec, kind: str) -> List[tuple]:
    """arg q(l) or |q(l)|/p(l) per fermion at its best winding time."""
    beta = config.beta_or("winding_beta")
    rows = []
    for j, best in _best_times(config, spec).items():
        if best is None:
            logger.warning(f"Fermion {j} has no winding minimum below {config['winding_threshold']}")
            continue
        data = size_distributions(spec, beta, j, best, config["majorana_square"])
        for l in data.odd_sizes:
            if data.p[l] <= config["weight_floor"]:
                continue
            if kind == "phase":
                rows.append((f"arg_q_l{l}", j, best, float(np.angle(data.q[l])), 0.0))
            else:
                rows.append((f"q_over_p_l{l}", j, best, float(abs(data.q[l]) / data.p[l]), 0.0))
    return rows


def _protocol_config(config: ExperimentConfig, **overrides) -> ProtocolConfig:
    base = ProtocolConfig(
        hamiltonian=config.hamiltonian,
        beta=config.beta_or("winding_beta"),
        t0=config["teleport_time"],
        t1=config["teleport_time"],
        mu=config["mu"],
        majorana_square=config["majorana_square"],
        normalization=config["interaction_normalization"],
        coupling_window=config["coupling_window"],
        floquet=config.schedule,
    )
    return replace(base, **overrides)


def _fig1a(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    grid = config.grid_or(config["grid_stop"])
    system = config.coupled()
    beta = config.beta_or("coupled_beta")
    times = grid.times()
    rows = []
    for j in FERMIONS:
        rows += scan_rows("two_point", j, times, two_point_series(system, beta, j, times, config["majorana_square"]))
    writer.write_csv("fig1a", SCAN_COLUMNS, rows)
    return {"beta": beta, "grid": grid}


def _fig1b(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    grid = config.grid_or(WINDING_SEARCH_STOP)
    beta = config.beta_or("coupled_beta")
    times = grid.times()
    rows = []
    for j in FERMIONS:
        series = size_distribution_series(config.hamiltonian, beta, j, times, config["majorana_square"])
        for size in (3, 5):
            rows += scan_rows(f"p_l{size}", j, times, [data.p[size] for data in series])
    writer.write_csv("fig1b", SCAN_COLUMNS, rows)
    return {"beta": beta, "grid": grid}


def _fig2a(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    spec = config.hamiltonian
    t = config["teleport_time"]
    coupled_beta = config["coupled_beta"]
    system = config.coupled()
    rows = []
    for j, best in _best_times(config, spec).items():
        if best is None:
            rows.append(("best_winding_time", j, float("nan"), float("nan"), 0.0))
        else:
            data = size_distributions(spec, config.beta_or("winding_beta"), j, best, config["majorana_square"])
            rows.append(("best_winding_time", j, best, winding_quality(data, config["weight_floor"]).std, 0.0))
        value = two_point_series(system, coupled_beta, j, [t], config["majorana_square"])[0]
        rows.append(("two_point_coupled", j, t, value.real, value.imag))
        rows.append(("two_point_coupled_abs", j, t, abs(value), 0.0))
    writer.write_csv("fig2a", SCAN_COLUMNS, rows)
    return {"winding_grid": config.grid_or(WINDING_SEARCH_STOP), "coupled_beta": coupled_beta}


def _fig2b(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    writer.write_csv("fig2b", SCAN_COLUMNS, _winding_rows(config, config.hamiltonian, "phase"))
    return {"winding_grid": config.grid_or(WINDING_SEARCH_STOP)}


def _fig2c(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    writer.write_csv("fig2c", SCAN_COLUMNS, _winding_rows(config, config.hamiltonian, "ratio"))
    return {"winding_grid": config.grid_or(WINDING_SEARCH_STOP)}


def _fig2d(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    grid = config.grid_or(PROTOCOL_STOP)
    protocol = _protocol_config(config, inject_pair=(4, 7), readout_pair=(4, 7), t0=4.0, t1=4.0)
    series = teleport_sweep(protocol, grid.times())
    writer.write_csv("fig2d", PROTOCOL_COLUMNS, protocol_rows(series))
    return {"grid": grid, "t0": protocol.t0, "pair": "4,7", "asymmetry": asymmetry_score(series)}


def _fig3(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    two_point_grid = config.grid_or(config["grid_stop"])
    protocol_grid = config.grid_or(PROTOCOL_STOP)
    beta = config.beta_or("coupled_beta")
    times = two_point_grid.times()
    perturbed = perturbed_hamiltonian(config.hamiltonian)
    rows = []
    for label, spec in (("two_point_h0", config.hamiltonian), ("two_point_h0_h1", perturbed)):
        for j in FERMIONS:
            rows += scan_rows(label, j, times, two_point_series(spec, beta, j, times, config["majorana_square"]))
    writer.write_csv("fig3a", SCAN_COLUMNS, rows)

    series = teleport_sweep(_protocol_config(config, hamiltonian=perturbed), protocol_grid.times())
    writer.write_csv("fig3b", PROTOCOL_COLUMNS, protocol_rows(series))

    writer.write_csv("fig3c", SCAN_COLUMNS,
                     _winding_rows(config, perturbed, "phase") + _winding_rows(config, perturbed, "ratio"))
    return {"two_point_grid": two_point_grid, "protocol_grid": protocol_grid, "beta": beta,
            "asymmetry": asymmetry_score(series)}


def _fig4a(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    grid = config.grid_or(config["grid_stop"])
    beta = config.beta_or("coupled_beta")
    times = grid.times()
    syk = syk_sample(seed=config["seed"])
    rows = []
    for j in FERMIONS:
        rows += scan_rows("two_point_h0", j, times,
                          two_point_series(config.hamiltonian, beta, j, times, config["majorana_square"]))
        rows += scan_rows("two_point_floquet", j, times,
                          floquet_two_point_series(config.hamiltonian, perturbation(), config.schedule,
                                                   beta, j, times, config["majorana_square"]))
        rows += scan_rows("two_point_syk", j, times, two_point_series(syk, beta, j, times, config["majorana_square"]))
    writer.write_csv("fig4a", SCAN_COLUMNS, rows)
    return {"grid": grid, "beta": beta, "syk_seed": config["seed"]}


def _fig4b(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    grid = config.grid_or(PROTOCOL_STOP)
    series = teleport_sweep(_protocol_config(config, mode=EvolutionMode.FLOQUET), grid.times())
    writer.write_csv("fig4b", PROTOCOL_COLUMNS, protocol_rows(series))
    return {"grid": grid, "asymmetry": asymmetry_score(series)}


def _diagnostics(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    """Pair-averaged OTOC decay, TFD overlap of the coupled ground state and level statistics."""
    grid = config.grid_or(PROTOCOL_STOP)
    beta = config.beta_or("coupled_beta")
    s = config["majorana_square"]
    times = grid.times()
    mean, per_pair = pair_averaged_otoc_series(config.hamiltonian, beta, times, s)
    rows = scan_rows("otoc_pair_mean", 0, times, mean)
    for (i, j), series in per_pair.items():
        rows += scan_rows(f"otoc_with_{j}", i, times, series)
    writer.write_csv("otoc", SCAN_COLUMNS, rows)

    overlap_rows = []
    for mu in sorted({-abs(config["mu"]), abs(config["mu"])}):
        scan = tfd_overlap_scan(config.hamiltonian, mu, OVERLAP_BETAS, s, config["interaction_normalization"])
        overlap_rows += [(mu, b, o, scan.best_beta, scan.gap) for b, o in zip(scan.betas, scan.overlaps)]
    writer.write_csv("tfd_overlap", ("mu", "beta", "overlap", "best_beta", "gap"), overlap_rows)

    spectra = {
        "h0": config.hamiltonian,
        "h0_h1": perturbed_hamiltonian(config.hamiltonian),
        f"syk_{config['seed']}": syk_sample(seed=config["seed"]),
        "h_total": config.coupled(),
    }
    gap_rows = []
    for label, spec in spectra.items():
        energies, _ = build_dense(spec, majorana_square=s).eigensystem
        try:
            ratio = gap_ratio(energies)
        except ValueError as e:
            logger.warning(f"No gap ratio for {label}: {e}")
            ratio = float("nan")
        gap_rows.append((label, len(energies), ratio))
    writer.write_csv("gap_ratio", ("hamiltonian", "levels", "gap_ratio"), gap_rows)
    return {"grid": grid, "beta": beta, "syk_seed": config["seed"],
            "otoc_pair_mean_final": float(mean[-1])}


def _ensemble(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    report = ensemble_stats(
        config["ensemble_samples"], config["ensemble_time"], config["seed"], config["ensemble_policy"],
        beta=config.beta_or("winding_beta"), majorana_square=config["majorana_square"],
        weight_floor=config["weight_floor"], workers=config["workers"], reference=config.hamiltonian,
    )
    columns = ("sample",) + tuple(f"std_rank{k}" for k in FERMIONS)
    writer.write_csv("ensemble_samples", columns,
                     [(i,) + tuple(np.sort(row)) for i, row in enumerate(report.sample_qualities)])
    writer.write_csv("ensemble_summary",
                     ("policy", "fraction_best_two", "fraction_all", "stderr_best_two", "stderr_all"),
                     report.summary_rows())
    return {"reference_quality": ",".join(repr(v) for v in report.reference_quality),
            "fraction_best_two": report.fraction_best_two, "fraction_all": report.fraction_all}


def _enumerate(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    report = verify_uniqueness()
    rows = []
    for constrained, orbits in ((True, report.constrained), (False, report.unconstrained)):
        for index, orbit in enumerate(orbits):
            rows.append((constrained, index, " ".join("".join(map(str, s)) for s in orbit)))
    writer.write_csv("enumerate", ("all_fermions_touched", "orbit", "supports"), rows)
    return {"constrained_orbits": len(report.constrained), "unconstrained_orbits": len(report.unconstrained),
            "matches_learned": report.matches_learned}


def _acceptance(config: ExperimentConfig, writer: ResultsWriter) -> Dict[str, Any]:
    checks = run_acceptance(config.settings)
    writer.write_csv("acceptance", ("check", "passed", "measured", "expected"),
                     [(c.name, c.passed, c.measured, c.expected) for c in checks])
    return {"passed": all(c.passed for c in checks)}


EXPERIMENTS: Dict[str, Callable[[ExperimentConfig, ResultsWriter], Dict[str, Any]]] = {
    "fig1a": _fig1a,
    "fig1b": _fig1b,
    "fig2a": _fig2a,
    "fig2b": _fig2b,
    "fig2c": _fig2c,
    "fig2d": _fig2d,
    "fig3": _fig3,
    "fig4a": _fig4a,
    "fig4b": _fig4b,
    "diagnostics": _diagnostics,
    "ensemble": _ensemble,
    "enumerate": _enumerate,
    "acceptance": _acceptance,
}


def _manifest_value(value: Any) -> Any:
    if isinstance(value, TimeGrid):
        return f"{value.start!r}:{value.stop!r}:{value.step!r}"
    return value


def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    """Run one experiment and write its CSV panels and manifest into config.output_dir."""
    writer = ResultsWriter(config.output_dir)
    logger.info(f"Running experiment {config.name} into {config.output_dir}")
    extra = EXPERIMENTS[config.name](config, writer)
    parameters = {"experiment": config.name, "hamiltonian": config.hamiltonian.label or "custom", **config.settings}
    if config.beta is not None:
        parameters["beta_override"] = config.beta
    parameters.update({key: _manifest_value(value) for key, value in extra.items()})
    writer.write_manifest(parameters)
    passed = extra.get("passed") if config.name == "acceptance" else None
    return ExperimentOutcome(list(writer.written), passed)
