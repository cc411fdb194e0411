"""Command-line interface.

Subcommands map onto the experiment runners: fixed-strategy simulation,
Markov-chain stationary analysis, ODE integration, equilibrium sweeps,
heterogeneity correction, learning runs, phase diagrams, and the figure
presets. A single JSON config document (see schema/experiment.schema.json)
drives each run; flags override the seed, output directory, worker count,
and plot emission.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from cocosim.config import (
    EXPERIMENT_IDS,
    ConfigValidationError,
    ExperimentSpec,
    load_config,
    validate_config,
)
from cocosim.core import ConfigError, ModelParams, NumericsError
from cocosim.experiments import (
    chain_experiment,
    equilibria_experiment,
    hetero_experiment,
    learn_experiment,
    ode_experiment,
    phase_experiment,
    run_experiment,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICS, EXIT_IO = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cocosim",
        description="Simulation laboratory for the Diamond coconut search-equilibrium model.")
    parser.add_argument("--config", type=Path, help="JSON experiment configuration")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--out", type=Path, help="override the output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker processes for parallel sweeps")
    parser.add_argument("--no-plots", action="store_true",
                        help="skip SVG rendering (CSVs only)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("simulate", "fixed-strategy agent simulation"),
        ("chain", "Markov-chain stationary distribution"),
        ("ode", "integrate a deterministic description"),
        ("equilibria", "equilibrium branches and fold point over gamma"),
        ("hetero", "heterogeneous scenario with covariance correction"),
        ("learn", "temporal-difference learning run"),
        ("phase", "phase-diagram sweep over initial conditions"),
    ]:
        sub.add_parser(name, help=help_)
    fig = sub.add_parser("figure", help="run a figure preset")
    fig.add_argument("id", help=f"one of {', '.join(EXPERIMENT_IDS[:-1])}")
    return parser


def _spec_from_args(args, default_id: str = "custom") -> ExperimentSpec:
    if args.config is not None:
        spec = load_config(args.config)
    else:
        spec = validate_config({"experiment": default_id})
    if args.seed is not None:
        d = spec.params.to_dict()
        d["master_seed"] = args.seed
        spec.params = ModelParams(**d)
    if args.out is not None:
        spec.output_dir = args.out
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    plots = not args.no_plots
    try:
        if args.command == "figure":
            if args.id not in EXPERIMENT_IDS[:-1]:
                raise ConfigError(f"unknown figure id {args.id!r}")
            spec = _spec_from_args(args, default_id=args.id)
            if spec.id != args.id:
                raise ConfigError(
                    f"config is for experiment {spec.id!r}, not {args.id!r}")
            bundle = run_experiment(spec, workers=args.threads, plots=plots)
        elif args.command == "simulate":
            spec = _spec_from_args(args)
            bundle = run_experiment(spec, workers=args.threads, plots=plots)
        elif args.command == "chain":
            bundle = chain_experiment(_spec_from_args(args), plots=plots)
        elif args.command == "ode":
            bundle = ode_experiment(_spec_from_args(args), plots=plots)
        elif args.command == "equilibria":
            bundle = equilibria_experiment(_spec_from_args(args), plots=plots)
        elif args.command == "hetero":
            bundle = hetero_experiment(_spec_from_args(args),
                                       workers=args.threads, plots=plots)
        elif args.command == "learn":
            bundle = learn_experiment(_spec_from_args(args), plots=plots)
        elif args.command == "phase":
            bundle = phase_experiment(_spec_from_args(args),
                                      workers=args.threads, plots=plots)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigValidationError as exc:
        print("configuration invalid:", file=sys.stderr)
        for issue in exc.issues:
            print(f"  {issue}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    print(json.dumps({
        "experiment": bundle.manifest["experiment"],
        "config_hash": bundle.manifest["config_hash"],
        "outputs": sorted(str(p) for p in bundle.csv_paths.values()),
        "manifest": str(bundle.manifest_path),
    }, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
