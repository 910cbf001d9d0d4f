"""
Command-line entry point.

Subcommands map onto the workflow stages:

    validate  check a scenario file and print its size
    simulate  roll out a scenario and write the trajectory CSV
    collect   roll out an oracle and write a supervised dataset
    train     fit (or fine-tune) a graph transformer on a dataset
    eval      compare a trajectory log against a reference log
    bench     time rollouts at growing demand

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 runtime failure.
Every written output gets a `<output>.manifest.json` beside it.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import colorlog
from pydantic import ValidationError

from traffic_graph_sim import __version__
from traffic_graph_sim.analysis.histogram import DEFAULT_RANGE, HistogramSpec
from traffic_graph_sim.analysis.report import comparison_report
from traffic_graph_sim.analysis.scaling import REPETITIONS, scaling_benchmark
from traffic_graph_sim.errors import (
    GraphFormatError, InputFileError, SchemaError, ScenarioError, TrafficSimError
)
from traffic_graph_sim.learner.config import ModelConfig, OptimizerType
from traffic_graph_sim.learner.serialization import load_model, save_model
from traffic_graph_sim.learner.training import train
from traffic_graph_sim.scenario.demand import scale_demand
from traffic_graph_sim.scenario.spec import ScenarioSpec, bundled_scenario_path, load_scenario
from traffic_graph_sim.simulation.config import BackendType, RolloutConfig
from traffic_graph_sim.simulation.dataset import TrajectoryDataset, collect_dataset
from traffic_graph_sim.simulation.engine import simulate
from traffic_graph_sim.simulation.trajectory import TrajectoryLog

logger = logging.getLogger("traffic-graph-sim.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_RUNTIME = 3

HANDLER_NAME = "traffic-graph-sim"
INVALID_INPUT = (ScenarioError, SchemaError, GraphFormatError, InputFileError)


def setup_logging(debug: bool = False) -> None:
    """Colorized logging on stderr; replaces a handler installed by an earlier call"""
    handler = colorlog.StreamHandler()
    handler.set_name(HANDLER_NAME)
    handler.setFormatter(colorlog.ColoredFormatter(
        "%(log_color)s%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        log_colors={
            'DEBUG': 'cyan',
            'INFO': 'green',
            'WARNING': 'yellow',
            'ERROR': 'red',
            'CRITICAL': 'red,bg_white',
        }
    ))

    root_logger = logging.getLogger()
    for existing in list(root_logger.handlers):
        if existing.get_name() == HANDLER_NAME:
            root_logger.removeHandler(existing)
    root_logger.addHandler(handler)
    root_logger.setLevel(logging.DEBUG if debug else logging.INFO)


# Inputs and outputs

def require_input(path: Path) -> Path:
    if not path.is_file():
        raise InputFileError(f"input file not found: {path}")
    return path


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def claim_output(out: Path, force: bool, inputs: Sequence[Optional[Path]] = ()) -> Path:
    """Refuse to overwrite `out` (or one of the command's inputs) unless forced"""
    if not force:
        if out.exists():
            raise InputFileError(f"output {out} exists; pass --force to overwrite")
        for path in inputs:
            if path is not None and path.resolve() == out.resolve():
                raise InputFileError(f"output {out} is also an input; pass --force to overwrite")
    if out.parent and not out.parent.exists():
        raise InputFileError(f"output directory {out.parent} does not exist")
    return out


def write_manifest(out: Path, args: argparse.Namespace, extra: Optional[Dict[str, Any]] = None) -> Path:
    flags = {key: _plain(value) for key, value in sorted(vars(args).items()) if key != "handler"}
    manifest = {
        "command": args.command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "flags": flags,
        "output": str(out),
    }
    if extra:
        manifest.update(extra)
    path = manifest_path(out)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.debug(f"Manifest written to {path}")
    return path


def _plain(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if hasattr(value, "value"):
        return value.value
    return value


def read_scenario(path: Optional[Path], demand_scale: float = 1.0) -> ScenarioSpec:
    spec = load_scenario(require_input(path if path is not None else bundled_scenario_path()))
    if demand_scale != 1.0:
        spec = scale_demand(spec, demand_scale)
    return spec


def _invalid_flags(error: ValidationError) -> ScenarioError:
    return ScenarioError([f"{'.'.join(map(str, item['loc']))}: {item['msg']}" for item in error.errors()])


def rollout_config(args: argparse.Namespace) -> RolloutConfig:
    values = {"backend": args.backend, "horizon": args.steps, "dt": args.dt, "seed": args.seed,
              "dci": getattr(args, "dci", 1)}
    try:
        return RolloutConfig(**values)
    except ValidationError as e:
        raise _invalid_flags(e) from e


def model_config(args: argparse.Namespace) -> ModelConfig:
    try:
        return ModelConfig(layers=args.layers, heads=args.heads, hidden=args.hidden, epochs=args.epochs,
                           learning_rate=args.lr, seed=args.seed, optimizer=args.optimizer)
    except ValidationError as e:
        raise _invalid_flags(e) from e


def scenario_summary(spec: ScenarioSpec) -> str:
    signals = len(spec.signals)
    return (f"{len(spec.network.roads)} roads, {len(spec.network.lanes())} lanes, "
            f"{spec.demand.count} vehicles, {signals} signal{'' if signals == 1 else 's'}")


# Subcommands

def cmd_validate(args: argparse.Namespace) -> int:
    spec = read_scenario(args.scenario)
    print(scenario_summary(spec))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    out = claim_output(args.out, args.force, [args.scenario, args.model])
    spec = read_scenario(args.scenario, args.demand_scale)
    model = load_model(require_input(args.model)) if args.model is not None else None
    result = simulate(spec, rollout_config(args), model)
    result.log.to_csv(out)
    summary = result.summary()
    write_manifest(out, args, {"summary": summary, "violations": summary["violations"]})
    print(f"{summary['rows']} rows, {summary['entered']} entered, {summary['exited']} exited, "
          f"{summary['violations']} violations")
    return EXIT_OK


def cmd_collect(args: argparse.Namespace) -> int:
    out = claim_output(args.out, args.force, [args.scenario])
    spec = read_scenario(args.scenario, args.demand_scale)
    dataset = collect_dataset(spec, rollout_config(args))
    dataset.save(out)
    write_manifest(out, args, {"pairs": len(dataset), "targets": dataset.target_count()})
    print(f"{len(dataset)} snapshot pairs, {dataset.target_count()} targets")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    out = claim_output(args.out, args.force, [args.data, args.init])
    dataset = TrajectoryDataset.load(require_input(args.data))
    init = load_model(require_input(args.init)) if args.init is not None else None
    model, curve = train(dataset, model_config(args), init=init)
    save_model(model, out)
    losses = {"initial_loss": curve[0], "final_loss": curve[-1]} if curve else {}
    write_manifest(out, args, losses)
    if curve:
        print(f"loss {curve[0]:.6g} -> {curve[-1]:.6g} over {len(curve)} epochs")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    out = claim_output(args.report, args.force, [args.ref, args.cmp]) if args.report is not None else None
    ref = TrajectoryLog.from_csv(require_input(args.ref))
    cmp = TrajectoryLog.from_csv(require_input(args.cmp))
    report = comparison_report(ref, cmp, HistogramSpec(bin_width=args.hist_bin, range=args.hist_range))
    print(report.render_table())
    if out is not None:
        report.save(out)
        write_manifest(out, args)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    out = claim_output(args.out, args.force, [args.scenario])
    spec = read_scenario(args.scenario)
    report = scaling_benchmark(spec, rollout_config(args), args.scales, args.repetitions)
    print(report.render_table())
    report.save(out)
    write_manifest(out, args, {"metrics": report.metrics})
    return EXIT_OK


# Parser

def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _scales(text: str) -> List[float]:
    try:
        return [_positive_float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _add_rollout_flags(parser: argparse.ArgumentParser, oracle_only: bool = False) -> None:
    backends = [b.value for b in BackendType if b.is_oracle or not oracle_only]
    parser.add_argument("--scenario", type=Path, help="scenario JSON (default: bundled case study)")
    parser.add_argument("--backend", choices=backends, default=BackendType.KRAUSS.value)
    parser.add_argument("--steps", type=int, default=600, help="rollout horizon in steps")
    parser.add_argument("--dt", type=_positive_float, help="step length in seconds (default: scenario dt)")
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--debug", action="store_true", help="enable debug logging")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")

    parser = argparse.ArgumentParser(prog="traffic-graph-sim",
                                     description="Traffic microsimulation on dynamic heterogeneous graphs")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="validate a scenario file")
    p.add_argument("scenario", type=Path, nargs="?", help="scenario JSON (default: bundled case study)")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("simulate", parents=[common], help="roll out a scenario")
    _add_rollout_flags(p)
    p.add_argument("--model", type=Path, help="trained model JSON (learned backend)")
    p.add_argument("--dci", type=int, default=1, help="steps between learned predictions")
    p.add_argument("--demand-scale", type=_positive_float, default=1.0)
    p.add_argument("--out", type=Path, required=True, help="trajectory CSV")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("collect", parents=[common], help="collect an oracle training dataset")
    _add_rollout_flags(p, oracle_only=True)
    p.add_argument("--dci", type=int, default=1, help="data collection interval in steps")
    p.add_argument("--demand-scale", type=_positive_float, default=1.0)
    p.add_argument("--out", type=Path, required=True, help="dataset JSON")
    p.set_defaults(handler=cmd_collect)

    defaults = ModelConfig()
    p = sub.add_parser("train", parents=[common], help="train the graph transformer")
    p.add_argument("--data", type=Path, required=True, help="dataset JSON")
    p.add_argument("--layers", type=int, default=defaults.layers)
    p.add_argument("--heads", type=int, default=defaults.heads)
    p.add_argument("--hidden", type=int, default=defaults.hidden)
    p.add_argument("--epochs", type=int, default=defaults.epochs)
    p.add_argument("--lr", type=float, default=defaults.learning_rate)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--optimizer", choices=[o.value for o in OptimizerType], default=defaults.optimizer.value)
    p.add_argument("--init", type=Path, help="model JSON to fine-tune")
    p.add_argument("--out", type=Path, required=True, help="model JSON")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="compare a trajectory log against a reference")
    p.add_argument("--ref", type=Path, required=True, help="reference trajectory CSV")
    p.add_argument("--cmp", type=Path, required=True, help="compared trajectory CSV")
    p.add_argument("--report", type=Path, help="report JSON")
    p.add_argument("--hist-bin", type=_positive_float, default=HistogramSpec().bin_width)
    p.add_argument("--hist-range", type=_positive_float, default=DEFAULT_RANGE)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="runtime scaling benchmark")
    _add_rollout_flags(p, oracle_only=True)
    p.add_argument("--scales", type=_scales, default=[0.25, 0.5, 1.0], help="e.g. 0.25,0.5,1.0")
    p.add_argument("--repetitions", type=int, default=REPETITIONS)
    p.add_argument("--out", type=Path, required=True, help="report JSON")
    p.set_defaults(handler=cmd_bench)
    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    setup_logging(args.debug)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except INVALID_INPUT as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except TrafficSimError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
