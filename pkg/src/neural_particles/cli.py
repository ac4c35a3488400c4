"""
Command Line Interface (CLI) for the Neural Particle Method.

This module is the main entry point. It resolves the run configuration
(scenario defaults < config file < NPM_* environment < flags), dispatches
to the scenario runner and writes the run artifacts:

    summary.json   deterministic run summary (errors, energies, cost counts)
    timing.json    wall-clock time of the run
    report.md      human-readable report rendered from templates

Exit codes: 0 success, 1 configuration or other error, 2 rejected step
(reduce dt), 3 training divergence.
"""

import argparse
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import ConfigError, RunConfig, build_run_config, format_default_table
from .constants import (
    EMOJI,
    EXIT_ERROR,
    EXIT_OK,
    EXIT_STEP_REJECTED,
    EXIT_TRAINING_DIVERGED,
    SCENARIOS,
    __version__,
)
from .core import StepRejectedError
from .file_io import atomic_write_text, write_json
from .formatters import ReportFormatter
from .irk import gauss_legendre
from .optim import TrainingDivergedError
from .scenarios import ScenarioResult, get_runner
from .utils import Progress, format_duration


def _parse_layout(text: str):
    """A layout label (1-4) or comma-separated widths such as 2,60,60,62."""
    try:
        if "," in text:
            return [int(part) for part in text.split(",") if part.strip()]
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"Invalid layout '{text}'") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neural-particles",
        description="Neural Particle Method: IRK-network solver for incompressible free-surface flow.",
        epilog="Environment overrides: NPM_<KEY> or NPM_<SECTION>__<KEY>, e.g. NPM_TRAINING__ADAM_LR=1e-4.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("scenario", nargs="?", choices=SCENARIOS, help="Scenario to run")
    parser.add_argument("--config", "-c", type=str, help="TOML or JSON configuration file")

    # --- Run parameters ---
    run_group = parser.add_argument_group("Run parameters")
    run_group.add_argument("--seed", type=int, help="Seed for initialization and particle placement")
    run_group.add_argument("--dt", type=float, help="Time step")
    run_group.add_argument("--steps", type=int, help="Number of time steps")
    run_group.add_argument("--t-end", dest="t_end", type=float, help="Final time (sets the step count)")
    run_group.add_argument("--layout", type=_parse_layout, help="Layout label (1-4) or widths 2,60,60,62")
    run_group.add_argument("--amplitude", type=float, help="Initial surface amplitude (sloshing)")
    run_group.add_argument("--distribution", choices=("equispaced", "jittered", "random"),
                           help="Particle distribution")
    run_group.add_argument("--particles-per-length", dest="particles_per_length", type=int,
                           help="Dam-break particles per column width L")
    run_group.add_argument("--velocity-bc", dest="velocity_bc", choices=("projection", "soft"),
                           help="Exact wall projection or penalized wall condition")

    # --- Output ---
    out_group = parser.add_argument_group("Output")
    out_group.add_argument("--out", "-o", dest="output_dir", type=str, help="Output directory")
    out_group.add_argument("--snapshot-interval", dest="snapshot_interval", type=int,
                           help="Steps between particle snapshots")
    out_group.add_argument("--checkpoint", action="store_true", default=None,
                           help="Write network parameters after every step")
    out_group.add_argument("--experiment-csv", dest="experiment_csv", type=str,
                           help="Tstar,Zstar data for the dam-break comparison")
    out_group.add_argument("--quiet", "-q", action="store_true", help="Suppress progress output")

    # --- Utilities ---
    parser.add_argument("--dump-tableau", dest="dump_tableau", type=int, metavar="S",
                        help="Print the S-stage Gauss-Legendre tableau and exit")
    parser.add_argument("--show-defaults", action="store_true",
                        help="Print the default configuration (of the scenario, or all) and exit")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Command-line values, nested like the configuration file."""
    overrides: Dict[str, Any] = {}
    for key in ("seed", "dt", "steps", "t_end", "velocity_bc", "output_dir",
                "snapshot_interval", "checkpoint", "experiment_csv"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.quiet:
        overrides["show_progress"] = False
    if args.layout is not None:
        overrides["network"] = {"layout": args.layout}
    if args.amplitude is not None:
        overrides["geometry"] = {"amplitude": args.amplitude}
    particles = {k: getattr(args, k) for k in ("distribution", "particles_per_length")
                 if getattr(args, k) is not None}
    if particles:
        overrides["particles"] = particles
    return overrides


def run(config: RunConfig, progress: Optional[Progress] = None) -> ScenarioResult:
    """
    Execute a scenario and write summary.json, timing.json and report.md.

    Raises:
        StepRejectedError: a trained step folded the particle configuration
        TrainingDivergedError: the loss became non-finite
    """
    progress = progress or Progress(config.show_progress)
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    result = get_runner(config.scenario)(config, progress)
    elapsed = time.perf_counter() - started

    summary = result.summary(config)
    write_json(output_dir / "summary.json", summary)
    write_json(output_dir / "timing.json", {"wall_clock_seconds": elapsed})
    write_json(output_dir / "config.json", config.to_dict())
    report = ReportFormatter().format_report(summary, result.comparison)
    atomic_write_text(output_dir / "report.md", report)

    progress.say(f"Finished {result.steps_completed} step(s) in {format_duration(elapsed)}", icon="success")
    progress.say(f"Artifacts written to: {output_dir}", icon="floppy")
    return result


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.dump_tableau is not None:
            print(ReportFormatter().format_tableau(gauss_legendre(args.dump_tableau)), end="")
            return EXIT_OK

        if args.show_defaults:
            print(format_default_table(args.scenario), end="")
            return EXIT_OK

        config = build_run_config(args.scenario, args.config, overrides=_overrides(args))
        run(config)
        return EXIT_OK

    except StepRejectedError as e:
        print(f"\n{EMOJI['error']} {e}", file=sys.stderr)
        return EXIT_STEP_REJECTED
    except TrainingDivergedError as e:
        print(f"\n{EMOJI['error']} Training diverged: {e}", file=sys.stderr)
        if e.components:
            parts = ", ".join(f"{k}={v:.3e}" for k, v in sorted(e.components.items()))
            print(f"   last loss terms: {parts}", file=sys.stderr)
        return EXIT_TRAINING_DIVERGED
    except ConfigError as e:
        print(f"\n{EMOJI['error']} Configuration error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        print(f"\n{EMOJI['error']} An error occurred: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
