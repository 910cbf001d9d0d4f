import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from traffic_graph_sim.errors import AnalysisError
from traffic_graph_sim.simulation.state import MIN_SAFE_GAP
from traffic_graph_sim.simulation.trajectory import TrajectoryLog

logger = logging.getLogger("traffic-graph-sim.analysis")

FIELDS = {"speed": "speed_mps", "accel": "accel_mps2"}
KEYS = ["step", "vehicle_id"]


@dataclass(frozen=True)
class TraceError:
    rmse: float
    matched: int

    def __float__(self) -> float:
        return self.rmse


def trace_rmse(ref: TrajectoryLog, cmp: TrajectoryLog, field: str = "speed") -> TraceError:
    """Root mean squared difference of `field` over the (step, vehicle) rows both logs share"""
    if field not in FIELDS:
        raise AnalysisError(f"unknown trace field '{field}', expected one of {sorted(FIELDS)}")
    column = FIELDS[field]
    joined = ref.frame[KEYS + [column]].merge(cmp.frame[KEYS + [column]], on=KEYS, how="inner",
                                              suffixes=("_ref", "_cmp"))
    if joined.empty:
        raise AnalysisError("logs share no (step, vehicle) rows")
    diff = joined[f"{column}_ref"].to_numpy(dtype=np.float64) - joined[f"{column}_cmp"].to_numpy(dtype=np.float64)
    rmse = float(np.sqrt(np.mean(diff * diff)))
    logger.debug(f"{field} RMSE {rmse:.4f} over {len(joined)} matched rows")
    return TraceError(rmse=rmse, matched=len(joined))


def mean_speed(log: TrajectoryLog) -> float:
    if len(log) == 0:
        raise AnalysisError("trajectory log is empty")
    return float(log.frame["speed_mps"].mean())


@dataclass(frozen=True)
class CollisionScan:
    min_gap: float
    below_threshold: int
    rows: int

    @property
    def collision_free(self) -> bool:
        return self.rows == 0 or self.min_gap > 0


def collision_scan(log: TrajectoryLog, threshold: float = MIN_SAFE_GAP) -> CollisionScan:
    """Smallest logged gap to a real leader and how many rows fall under `threshold`"""
    frame = log.frame
    gaps = frame.loc[frame["leader_id"] != "", "gap_m"].to_numpy(dtype=np.float64)
    if gaps.size == 0:
        return CollisionScan(min_gap=float("inf"), below_threshold=0, rows=0)
    return CollisionScan(min_gap=float(gaps.min()), below_threshold=int(np.sum(gaps < threshold - 1e-9)),
                         rows=int(gaps.size))


def speed_bounds(log: TrajectoryLog) -> Tuple[float, float]:
    if len(log) == 0:
        return 0.0, 0.0
    speeds = log.frame["speed_mps"]
    return float(speeds.min()), float(speeds.max())


def vehicle_trace(log: TrajectoryLog, vehicle_id: str, fields: Sequence[str] = ("speed", "accel")):
    """Time series of one vehicle, for plotting"""
    columns = ["step", "time_s"] + [FIELDS[f] for f in fields]
    return log.vehicle(vehicle_id)[columns].reset_index(drop=True)
