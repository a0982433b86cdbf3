#!/usr/bin/env python3
import argparse
import logging
import sys
from dataclasses import replace
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List, Optional

from experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from hamiltonian_files import HAM_SUFFIX, HamiltonianFileManager
from hamiltonians import CoupledSpec, HamiltonianSpec, Side, learned_hamiltonian
from observables import TimeGrid
from settings import ConfigError, LabSettings, default_output_dir

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_ACCEPTANCE_FAILED = 3

LOG_DIR = Path.home() / ".local" / "share" / "wormhole-lab"
HAM_DIR = LOG_DIR / "hamiltonians"

logger = logging.getLogger(__name__)


def setup_logging(level: str = "INFO"):
    handlers = [logging.StreamHandler()]
    try:
        LOG_DIR.mkdir(parents=True, exist_ok=True)
        handlers.append(RotatingFileHandler(LOG_DIR / "wormhole_lab.log", maxBytes=5*1024*1024, backupCount=3))
    except OSError:
        pass
    logging.basicConfig(
        level=getattr(logging, level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wormhole-lab",
        description="Majorana Hamiltonians, size winding and wormhole teleportation by exact computation",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="output directory (default: $WORMHOLE_LAB_OUT or ./results)")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--config-dir", type=Path, default=None, help="directory holding settings.json")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    custom = argparse.ArgumentParser(add_help=False)
    custom.add_argument("--hamiltonian", default=None,
                        help="`.ham` file path, or the name of one in the managed directory (default: learned)")

    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", parents=[common, custom], help="reproduce one figure's data series")
    run.add_argument("experiment", help=f"one of: {', '.join(EXPERIMENTS)}")
    run.add_argument("--beta", type=float, default=None, help="inverse temperature override")
    run.add_argument("--mu", type=float, default=None, help="coupling mu")
    run.add_argument("--grid-start", type=float, default=None)
    run.add_argument("--grid-stop", type=float, default=None)
    run.add_argument("--grid-step", type=float, default=None)
    run.add_argument("--threshold", type=float, default=None, help="winding-quality threshold")
    run.add_argument("--majorana-square", type=float, default=None, help="psi^2 convention (0.5 or 1.0)")

    ensemble = subparsers.add_parser("ensemble", parents=[common, custom], help="random commuting-ensemble statistics")
    ensemble.add_argument("--samples", type=int, default=None)
    ensemble.add_argument("--time", type=float, default=None)
    ensemble.add_argument("--policy", default=None, help="sorted_dominance, max_bound or mean")
    ensemble.add_argument("--workers", type=int, default=None)
    ensemble.add_argument("--beta", type=float, default=None)

    subparsers.add_parser("enumerate", parents=[common], help="commuting-structure uniqueness check")
    subparsers.add_parser("accept", parents=[common], help="run the acceptance suite")

    hamiltonians = subparsers.add_parser("hamiltonians", help="manage custom Hamiltonian files")
    hamiltonians.add_argument("action", choices=["list", "import", "validate", "delete"])
    hamiltonians.add_argument("target", nargs="?", type=Path, help="file or folder for import, validate and delete")
    hamiltonians.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    return parser


def load_hamiltonian(value: Optional[str]) -> HamiltonianSpec:
    """Resolve --hamiltonian: a path, or a name inside HAM_DIR (suffix optional)"""
    if value is None:
        return learned_hamiltonian()
    path = Path(value).expanduser()
    if not path.is_file():
        path = HAM_DIR / (value if value.endswith(HAM_SUFFIX) else value + HAM_SUFFIX)
    if not path.is_file():
        raise ConfigError(f"No Hamiltonian file {value!r} (also looked in {HAM_DIR})")

    manager = HamiltonianFileManager(HAM_DIR)
    report = manager.validate(path)
    if not report["valid"]:
        raise ConfigError(f"Invalid Hamiltonian file {path}: {'; '.join(report['errors'])}")
    for warning in report["warnings"]:
        logger.warning(f"{path.name}: {warning}")
    spec = manager.load(path)
    if isinstance(spec, CoupledSpec):
        raise ConfigError(f"{path} holds a coupled Hamiltonian; pass its single-sided part and set --mu")
    spec = spec.on_side(Side.SINGLE)
    return spec if spec.label else replace(spec, label=path.stem)


def manage_hamiltonians(args: argparse.Namespace) -> int:
    manager = HamiltonianFileManager(HAM_DIR)
    if args.action == "list":
        for spec in manager.scan():
            print(f"{spec.label or '(unlabeled)'}\t{len(spec.terms)} terms\t{spec.n_fermions} fermions")
        return EXIT_OK
    if args.target is None:
        logger.error(f"'{args.action}' needs a target path")
        return EXIT_CONFIG_ERROR
    if args.action == "import":
        if args.target.is_dir():
            imported = manager.import_folder(args.target)
        else:
            imported = [spec for spec in [manager.import_file(args.target)] if spec is not None]
        print(f"Imported {len(imported)} Hamiltonians into {manager.ham_dir}")
        return EXIT_OK if imported else EXIT_CONFIG_ERROR
    if args.action == "validate":
        report = manager.validate(args.target)
        for message in report["errors"] + report["warnings"]:
            print(message)
        print("valid" if report["valid"] else "invalid")
        return EXIT_OK if report["valid"] else EXIT_CONFIG_ERROR
    target = args.target if args.target.is_absolute() or args.target.exists() else manager.ham_dir / args.target
    return EXIT_OK if manager.delete(target) else EXIT_CONFIG_ERROR


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Resolve CLI flags over the settings file over built-in defaults"""
    lab_settings = LabSettings(args.config_dir)
    overrides = {
        "seed": args.seed,
        "log_level": "DEBUG" if args.verbose else None,
        "mu": getattr(args, "mu", None),
        "grid_step": getattr(args, "grid_step", None),
        "winding_threshold": getattr(args, "threshold", None),
        "majorana_square": getattr(args, "majorana_square", None),
        "ensemble_samples": getattr(args, "samples", None),
        "ensemble_time": getattr(args, "time", None),
        "ensemble_policy": getattr(args, "policy", None),
        "workers": getattr(args, "workers", None),
    }
    settings = lab_settings.resolved(overrides)

    name = {"run": getattr(args, "experiment", None), "ensemble": "ensemble",
            "enumerate": "enumerate", "accept": "acceptance"}[args.command]
    grid = None
    grid_start, grid_stop = getattr(args, "grid_start", None), getattr(args, "grid_stop", None)
    if grid_start is not None or grid_stop is not None:
        try:
            grid = TimeGrid(grid_start or 0.0, settings["grid_stop"] if grid_stop is None else grid_stop,
                            settings["grid_step"])
        except ValueError as e:
            raise ConfigError(str(e)) from e
    return ExperimentConfig(
        name=name,
        output_dir=args.out or default_output_dir() / name,
        settings=settings,
        beta=getattr(args, "beta", None),
        grid=grid,
        hamiltonian=load_hamiltonian(getattr(args, "hamiltonian", None)),
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "hamiltonians":
        setup_logging("DEBUG" if args.verbose else "INFO")
        return manage_hamiltonians(args)
    try:
        config = config_from_args(args)
    except ConfigError as e:
        setup_logging()
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR

    setup_logging(config.settings["log_level"])
    try:
        outcome = run_experiment(config)
    except ValueError as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_CONFIG_ERROR
    except Exception:
        logger.exception(f"Experiment {config.name} failed")
        raise

    for path in outcome.paths:
        print(path)
    if outcome.passed is False:
        logger.warning("Acceptance suite failed")
        return EXIT_ACCEPTANCE_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
