"""
Command-line interface.

Subcommands:

- simulate      run a cued retrieval and write the trajectory CSV
- energy-trace  as simulate, plus instantaneous fixed points along the run
- fixed-points  frozen-delay fixed-point sweep along a simulated run
- capacity      minimum N_f per episode length; JSON summary and CSV table
- learn         online energy learning on a cyclic episode

Exit codes: 0 on success, 1 on configuration or usage errors, 2 on numerical
failures.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from colorama import Fore, Style, init

from .exceptions import ConfigError, InvalidArgumentError, SeqMemError
from .ml.capacity import capacity_scaling, capacity_sweep
from .ml.energy import track_fixed_points
from .ml.integrate import init_from_cue, simulate
from .ml.learning import OnlineEnergyLearner, consolidation_report
from .ml.memories import generate_memories, preloaded_synapses
from .ml.retrieval import count_traversals, extract_sequence, retrieves_cycle, transition_times
from .models.models import Trajectory, Variant
from .storage.config import ExperimentConfig, load_config, parse_int_list
from .storage.files import (
    save_snapshots,
    write_capacity,
    write_fixed_points_csv,
    write_synapses,
    write_trajectory_csv,
)

# Initialize colorama for cross-platform colored output
init(autoreset=True)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def print_header(text: str) -> None:
    """Print a colored header."""
    print(f"\n{Fore.CYAN}{Style.BRIGHT}{'=' * 60}")
    print(f"{text.center(60)}")
    print(f"{'=' * 60}{Style.RESET_ALL}\n")


def print_success(text: str) -> None:
    print(f"{Fore.GREEN}✓ {text}{Style.RESET_ALL}")


def print_error(text: str) -> None:
    print(f"{Fore.RED}✗ {text}{Style.RESET_ALL}")


def print_warning(text: str) -> None:
    print(f"{Fore.YELLOW}⚠ {text}{Style.RESET_ALL}")


def print_info(text: str) -> None:
    print(f"{Fore.BLUE}ℹ {text}{Style.RESET_ALL}")


class UsageError(ConfigError):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqmem", description="Sequential episodic memory simulations")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in (
        ("simulate", "Cued retrieval run, trajectory CSV out"),
        ("energy-trace", "Retrieval run with energy and fixed-point tracking"),
        ("fixed-points", "Frozen-delay fixed points along a retrieval run"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="Experiment config (INI)")
        p.add_argument("--out", required=True, help="Output CSV")
        p.add_argument("--duration", type=float, help="Override [simulation] duration")
        p.add_argument("--seed", type=int, help="Override the memory seed")
        if name != "simulate":
            p.add_argument("--sample-every", type=int, default=10, help="Snapshots between fixed-point samples")
            p.add_argument("--n-jobs", type=int, default=1, help="Parallel workers")

    p = sub.add_parser("capacity", help="Capacity sweep over episode lengths")
    p.add_argument("--config", help="Experiment config (INI); [capacity] and [retrieval] are used")
    p.add_argument("--variant", choices=[v.value for v in Variant], help="Model variant")
    p.add_argument("--k", help="Episode lengths, e.g. 3..10 or '3 5 7'")
    p.add_argument("--trials", type=int, help="Trials per episode length")
    p.add_argument("--seed", type=int, help="Master seed")
    p.add_argument("--n-jobs", type=int, help="Parallel workers")
    p.add_argument("--out", default="capacity.json", help="JSON summary")
    p.add_argument("--table", help="Per-trial CSV table (default: <out stem>.csv)")

    p = sub.add_parser("learn", help="Online energy learning on a cyclic episode")
    p.add_argument("--config", help="Experiment config (INI); [model], [memories] and [learning] are used")
    p.add_argument("--out", required=True, help="Synapse matrix file")
    p.add_argument("--snapshots", help="Directory for per-epoch snapshots")
    p.add_argument("--epochs", type=int, help="Override [learning] epochs")
    p.add_argument("--seed", type=int, help="Override the memory seed")
    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None and args.command != "capacity":
        config = ExperimentConfig(
            model=config.model,
            memories=config.memories.model_copy(update={"seed": args.seed}),
            simulation=config.simulation,
            retrieval=config.retrieval,
            learning=config.learning,
            capacity=config.capacity,
        )
    return config


def _retrieval_run(config: ExperimentConfig, duration: float | None, with_energy: bool):
    spec = config.model
    sim = config.simulation
    syn, graph = preloaded_synapses(spec, config.memories.cycles, config.memories.seed)
    if sim.cue_memory >= spec.n_h:
        raise InvalidArgumentError(f"cue_memory {sim.cue_memory} out of range for {spec.n_h} memories")
    init_state = init_from_cue(syn.xi[:, sim.cue_memory], sim.noise_fraction, sim.seed, spec, syn)
    traj = simulate(
        spec, syn, init_state, duration or sim.duration,
        dt=sim.dt, record_every=sim.record_every, with_energy=with_energy,
    )
    return spec, syn, graph, traj


def _report_sequence(config: ExperimentConfig, traj: Trajectory) -> None:
    crit = config.retrieval.model_copy(update={"max_time": float(traj.times[-1])})
    sequence = extract_sequence(traj, crit)
    print_info(f"Extracted sequence (1-based): {[i + 1 for i in sequence]}")
    for cycle in config.memories.cycles:
        if config.simulation.cue_memory in cycle:
            print_info(f"Complete traversals of {[i + 1 for i in cycle]}: {count_traversals(sequence, cycle)}")
    times = transition_times(traj, crit)
    if times:
        print_info(f"Transitions at t = {', '.join(f'{t:.1f}' for t in times)}")


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    print_header(f"{config.model.variant.value.upper()} retrieval")
    _, _, _, traj = _retrieval_run(config, args.duration, with_energy=True)
    path = write_trajectory_csv(traj, args.out)
    _report_sequence(config, traj)
    print_success(f"Trajectory written to {path}")
    return EXIT_OK


def _fixed_point_output(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    if args.command == "fixed-points":
        return out
    return out.with_name(out.stem + ".fixed_points.csv")


def cmd_fixed_points(args: argparse.Namespace) -> int:
    config = _load(args)
    with_energy = args.command == "energy-trace"
    print_header(f"{config.model.variant.value.upper()} {'energy trace' if with_energy else 'fixed points'}")
    spec, syn, _, traj = _retrieval_run(config, args.duration, with_energy=with_energy)
    if with_energy:
        print_success(f"Trajectory written to {write_trajectory_csv(traj, args.out)}")
        _report_sequence(config, traj)

    print_info(f"Relaxing the fast subsystem at every {args.sample_every}th snapshot...")
    samples = track_fixed_points(traj, syn, spec, sample_every=args.sample_every, n_jobs=args.n_jobs)
    path = write_fixed_points_csv(samples, _fixed_point_output(args))
    leaders = [s.leading_memory + 1 for s in samples]
    changes = [b for a, b in zip(leaders, leaders[1:]) if a != b]
    print_info(f"Fixed-point leader sequence (1-based): {leaders[:1] + changes}")
    print_success(f"Fixed points written to {path}")
    return EXIT_OK


def cmd_capacity(args: argparse.Namespace) -> int:
    config = _load(args)
    updates = {}
    if args.variant:
        updates["variant"] = Variant(args.variant)
    if args.k:
        updates["k_values"] = parse_int_list(args.k)
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.n_jobs is not None:
        updates["n_jobs"] = args.n_jobs
    try:
        settings = type(config.capacity)(**{**config.capacity.model_dump(), **updates})
    except ValueError as e:
        raise ConfigError(str(e)) from e

    print_header(f"{settings.variant.value.upper()} capacity")
    print_info(f"k = {list(settings.k_values)}, {settings.trials} trials, seed {settings.seed}")
    results = capacity_sweep(settings, config.retrieval)
    for r in results:
        print_info(
            f"k={r.k}: mean min N_f {r.mean_min_n_f:.1f} (std {r.std_min_n_f:.1f}), "
            f"{r.saturated_count} saturated"
        )

    scaling = None
    try:
        fit = capacity_scaling(results)
        scaling = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2, "points": fit.points}
        print_info(f"Scaling: slope {fit.slope:.2f} neurons per memory, R^2 {fit.r2:.3f}")
    except InvalidArgumentError as e:
        print_warning(f"No scaling fit: {e}")

    out = Path(args.out)
    table = Path(args.table) if args.table else out.with_suffix(".csv")
    write_capacity(results, out, table, scaling=scaling)
    print_success(f"Capacity summary written to {out} and {table}")
    return EXIT_OK


def cmd_learn(args: argparse.Namespace) -> int:
    config = _load(args)
    spec = config.model
    if spec.variant is not Variant.DSEM:
        raise ConfigError(f"learning needs variant = dsem, config has {spec.variant.value}")
    cfg = config.learning
    if args.epochs is not None:
        cfg = cfg.model_copy(update={"epochs": args.epochs})

    k = config.memories.episode_length
    memories = generate_memories(spec.n_f, k, config.memories.seed)
    print_header("Online energy learning")
    print_info(f"{k}-memory cyclic episode, {cfg.epochs} epochs, {cfg.steps_per_memory} steps per memory")

    learner = OnlineEnergyLearner(spec, cfg, seed=config.memories.seed)
    syn, snapshots = learner.train(memories)
    write_synapses(args.out, syn)
    print_success(f"Synapses written to {args.out}")

    report = consolidation_report(syn, memories)
    print_info(f"Consolidated columns: {report.columns} (aligned: {report.aligned})")
    print_info(f"Phi successor map: {report.successor_map}")

    # free recall from a 10%-noisy first memory
    recall_seed = config.simulation.seed
    state = init_from_cue(memories[:, 0], 0.1, recall_seed, spec, syn)
    traj = simulate(spec, syn, state, config.simulation.duration, dt=config.simulation.dt,
                    record_every=config.simulation.record_every, memories=memories)
    crit = config.retrieval.model_copy(update={"max_time": float(traj.times[-1])})
    sequence = extract_sequence(traj, crit)
    recalled = retrieves_cycle(sequence, list(range(k)))
    (print_success if recalled else print_warning)(
        f"Recall from noisy memory 1: {[i + 1 for i in sequence]}"
    )

    if args.snapshots:
        metrics = {
            "consolidated": report.consolidated,
            "columns": report.columns,
            "successor_map": report.successor_map,
            "recovers_cycle": report.recovers_cycle,
            "recall_sequence": [int(i) for i in sequence],
            "recalls_cycle": recalled,
            "alignment": np.round(report.alignment, 6).tolist(),
        }
        path = save_snapshots(snapshots, args.snapshots, metrics)
        print_success(f"Snapshots and metrics written to {path.parent}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "energy-trace": cmd_fixed_points,
    "fixed-points": cmd_fixed_points,
    "capacity": cmd_capacity,
    "learn": cmd_learn,
}


def run_cli(argv: list[str] | None = None) -> int:
    """Parse argv, run the subcommand and map failures onto exit codes."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print_error(str(e))
        print_info("Use 'seqmem --help' to see available commands.")
        return EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InvalidArgumentError) as e:
        print_error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except SeqMemError as e:
        print_error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
