"""
Step-based traffic rollout.

World state, leader resolution, car-following backends (IDM, Krauss,
learned), trajectory logging and supervised dataset collection.
"""

from traffic_graph_sim.simulation.state import (
    GAP_SENTINEL, MIN_SAFE_GAP, LeaderInfo, LeaderKind, VehicleState, WorldState
)
from traffic_graph_sim.simulation.config import BackendType, RolloutConfig
from traffic_graph_sim.simulation.leaders import LaneOccupancy, control_leader, resolve_leader, resolve_leaders
from traffic_graph_sim.simulation.backends import (
    BackendRegistry, CarFollowingBackend, IdmBackend, KraussBackend, LearnedBackend, default_registry
)
from traffic_graph_sim.simulation.trajectory import COLUMNS, TrajectoryLog
from traffic_graph_sim.simulation.engine import RolloutResult, initial_world, rollout, run, simulate, step
from traffic_graph_sim.simulation.dataset import TrajectoryDataset, collect_dataset

__all__ = [
    "GAP_SENTINEL",
    "MIN_SAFE_GAP",
    "LeaderInfo",
    "LeaderKind",
    "VehicleState",
    "WorldState",
    "BackendType",
    "RolloutConfig",
    "LaneOccupancy",
    "resolve_leader",
    "control_leader",
    "resolve_leaders",
    "BackendRegistry",
    "CarFollowingBackend",
    "IdmBackend",
    "KraussBackend",
    "LearnedBackend",
    "default_registry",
    "COLUMNS",
    "TrajectoryLog",
    "RolloutResult",
    "initial_world",
    "rollout",
    "run",
    "simulate",
    "step",
    "TrajectoryDataset",
    "collect_dataset",
]
