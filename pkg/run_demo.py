#!/usr/bin/env python3
"""
Demo Script for the Traffic Graph Simulator

Walks the full workflow on the bundled four-way intersection: network graph
construction, oracle data collection, pre-training of the graph transformer,
a learned rollout on a held-out seed, evaluation against the oracle, and an
optional fine-tuning round and collection-interval comparison.
"""

import os
import sys
import argparse
from typing import Any, Dict

# Add the parent directory to the path so we can import the package
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from traffic_graph_sim.cli import setup_logging
from traffic_graph_sim.learner.config import ModelConfig
from traffic_graph_sim.simulation.config import BackendType
from traffic_graph_sim.system import TrafficSimulationSystem


def print_section(title: str):
    """Print a section header"""
    print("\n" + "=" * 80)
    print(f" {title} ".center(80, "="))
    print("=" * 80 + "\n")


def print_summary(summary: Dict[str, Any]):
    for key, value in summary.items():
        print(f"{key:>10}: {value}")


def parse_args():
    parser = argparse.ArgumentParser(description='Run the traffic graph simulator demo')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    parser.add_argument('--steps', type=int, default=300, help='Rollout horizon in steps')
    parser.add_argument('--demand-scale', type=float, default=0.25, help='Demand multiplier for the case study')
    parser.add_argument('--epochs', type=int, default=100, help='Pre-training epochs')
    parser.add_argument('--seed', type=int, default=0, help='Seed for collection and training')
    parser.add_argument('--no-fine-tune', action='store_true', help='Skip the fine-tuning round')
    parser.add_argument('--no-intervals', action='store_true', help='Skip the collection-interval comparison')
    return parser.parse_args()


def run_demo():
    args = parse_args()
    setup_logging(args.debug)

    print_section("Initializing Traffic Graph Simulator")
    system = TrafficSimulationSystem(model_config=ModelConfig(epochs=args.epochs, seed=args.seed), seed=args.seed)
    if args.demand_scale != 1.0:
        system.scale(args.demand_scale)
    for backend in system.available_backends():
        print(f"- {backend['name']}: {backend['description']}")

    print_section("Graph Construction")
    graph = system.construct_graph()
    for kind in graph.schema.node_type_names:
        print(f"{kind:>10}: {graph.node_count(kind)} nodes")

    print_section("Dataset Collection")
    dataset = system.collect(horizon=args.steps, backend=BackendType.KRAUSS)
    print(f"{len(dataset)} snapshot pairs, {dataset.target_count()} speed targets")

    print_section("Pre-training")
    curve = system.pretrain(dataset)
    print(f"Loss {curve[0]:.6g} -> {curve[-1]:.6g} over {len(curve)} epochs")

    print_section("Simulation")
    held_out = args.seed + 1
    reference = system.simulate(BackendType.KRAUSS, args.steps, seed=held_out)
    learned = system.simulate(BackendType.LEARNED, args.steps, seed=held_out)
    print("Krauss reference:")
    print_summary(reference.summary())
    print("Learned rollout:")
    print_summary(learned.summary())

    print_section("Evaluation")
    print(system.evaluate(reference.log, learned.log).render_table())

    if not args.no_fine_tune:
        print_section("Fine-tuning")
        fresh = system.collect(horizon=args.steps, backend=BackendType.KRAUSS, seed=args.seed + 2)
        curve = system.fine_tune(fresh, epochs=max(1, args.epochs // 2))
        print(f"Loss {curve[0]:.6g} -> {curve[-1]:.6g} over {len(curve)} epochs")
        learned = system.simulate(BackendType.LEARNED, args.steps, seed=held_out)
        print(system.evaluate(reference.log, learned.log).render_table())

    if not args.no_intervals:
        print_section("Collection Intervals")
        print(system.compare_intervals([5, 10], horizon=args.steps, seed=held_out).render_table())

    print_section("Demo Completed")


if __name__ == "__main__":
    run_demo()
