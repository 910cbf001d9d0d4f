"""
Runtime scaling benchmark: wall time of identical rollouts at growing demand.
"""

import logging
import statistics
import time
from typing import Callable, List, Sequence

import numpy as np

from traffic_graph_sim.analysis.report import LinearFit, MetricsReport, ScalingRow
from traffic_graph_sim.errors import AnalysisError
from traffic_graph_sim.scenario.demand import scale_demand
from traffic_graph_sim.scenario.spec import ScenarioSpec
from traffic_graph_sim.simulation.config import RolloutConfig
from traffic_graph_sim.simulation.engine import simulate

logger = logging.getLogger("traffic-graph-sim.analysis")

REPETITIONS = 3


def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Least-squares line with R^2 clamped to [0, 1]"""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.size < 2:
        raise AnalysisError("a linear fit needs at least 2 points")
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = ys - (slope * xs + intercept)
    total = float(np.sum((ys - ys.mean()) ** 2))
    r_squared = 1.0 if total == 0 else 1.0 - float(np.sum(residual ** 2)) / total
    return LinearFit(slope=float(slope), intercept=float(intercept), r_squared=min(1.0, max(0.0, r_squared)))


def scaling_rows(multipliers: Sequence[float], agents: Sequence[int], times: Sequence[float],
                 vehicles: Sequence[int] = ()) -> List[ScalingRow]:
    """Rows with percentage growth of agents and runtime relative to the first row"""
    base_agents, base_time = agents[0], times[0]
    vehicles = list(vehicles) or [0] * len(agents)
    rows = []
    for multiplier, count, wall, demand in zip(multipliers, agents, times, vehicles):
        rows.append(ScalingRow(
            multiplier=float(multiplier),
            agents=int(count),
            wall_time_s=float(wall),
            pct_agents=100.0 * (count - base_agents) / base_agents if base_agents else 0.0,
            pct_runtime=100.0 * (wall - base_time) / base_time if base_time else 0.0,
            vehicles=int(demand),
        ))
    return rows


def scaling_benchmark(spec: ScenarioSpec, cfg: RolloutConfig, scales: Sequence[float],
                      repetitions: int = REPETITIONS,
                      clock: Callable[[], float] = time.perf_counter) -> MetricsReport:
    """
    Median wall time of `repetitions` rollouts per demand multiplier, plus a
    least-squares fit of runtime against the number of agents simulated,
    i.e. the vehicles that entered within the horizon. Only the rollout is
    timed.
    """
    if len(scales) < 2:
        raise AnalysisError(f"scaling benchmark needs at least 2 scales, got {len(scales)}")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise AnalysisError(f"scales must be strictly ascending, got {list(scales)}")
    if repetitions < 1:
        raise AnalysisError("repetitions must be at least 1")

    agents, times, vehicles = [], [], []
    for multiplier in scales:
        scaled = scale_demand(spec, multiplier)
        samples = []
        for _ in range(repetitions):
            start = clock()
            result = simulate(scaled, cfg)
            samples.append(clock() - start)
        agents.append(result.world.entered)
        times.append(statistics.median(samples))
        vehicles.append(scaled.demand.count)
        logger.info(f"Scale {multiplier}: {agents[-1]} of {scaled.demand.count} vehicles simulated, "
                    f"median {times[-1]:.3f} s")

    if len(set(agents)) < 2:
        raise AnalysisError(f"every scale simulated {agents[0]} agents in {cfg.horizon} steps; "
                            f"lengthen the horizon or widen the scales")

    report = MetricsReport(notes=[
        f"{cfg.backend.value} rollouts of {cfg.horizon} steps, median of {repetitions} runs per scale",
        "absolute linearity check of runtime against simulated agents",
    ])
    report.scaling = scaling_rows(scales, agents, times, vehicles)
    report.fit = linear_fit(agents, times)
    report.metrics["r_squared"] = report.fit.r_squared
    report.metrics["runtime_ratio"] = times[-1] / times[0] if times[0] else float("inf")
    report.metrics["agent_ratio"] = agents[-1] / agents[0] if agents[0] else float("inf")
    return report
