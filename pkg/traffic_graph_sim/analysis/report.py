"""
Evaluation report: named metrics, histogram, scaling rows and linear fit.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from traffic_graph_sim.analysis.histogram import (
    Histogram, HistogramSpec, coarse_distance, histogram_distance, speed_deviation_histogram
)
from traffic_graph_sim.analysis.traces import collision_scan, mean_speed, trace_rmse
from traffic_graph_sim.errors import AnalysisError
from traffic_graph_sim.simulation.trajectory import TrajectoryLog

logger = logging.getLogger("traffic-graph-sim.analysis")

Metric = Union[float, int, bool]


@dataclass(frozen=True)
class ScalingRow:
    """`agents` counts vehicles that entered the rollout; `vehicles` is the scaled demand"""
    multiplier: float
    agents: int
    wall_time_s: float
    pct_agents: float
    pct_runtime: float
    vehicles: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "multiplier": self.multiplier,
            "agents": self.agents,
            "wall_time_s": self.wall_time_s,
            "pct_agents": self.pct_agents,
            "pct_runtime": self.pct_runtime,
            "vehicles": self.vehicles,
        }


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> Dict[str, float]:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared}


@dataclass
class MetricsReport:
    metrics: Dict[str, Metric] = field(default_factory=dict)
    histogram: Optional[Histogram] = None
    scaling: List[ScalingRow] = field(default_factory=list)
    fit: Optional[LinearFit] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "notes": list(self.notes),
            "metrics": dict(self.metrics),
            "histogram": self.histogram.to_dict() if self.histogram is not None else None,
            "scaling": [row.to_dict() for row in self.scaling],
            "fit": self.fit.to_dict() if self.fit is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")
        logger.info(f"Report written to {path}")

    def render_table(self) -> str:
        """Aligned plain-text rendering"""
        lines: List[str] = [f"# {note}" for note in self.notes]
        if self.metrics:
            width = max(len(name) for name in self.metrics)
            lines.append("metric".ljust(width) + "  value")
            for name, value in self.metrics.items():
                lines.append(name.ljust(width) + "  " + _format(value))
        if self.histogram is not None:
            lines.append("")
            lines.append(f"{'dv_center':>10}  {'mass':>8}")
            for center, mass in zip(self.histogram.centers, self.histogram.mass):
                lines.append(f"{center:>10.2f}  {mass:>8.4f}")
        if self.scaling:
            lines.append("")
            lines.append(f"{'scale':>6}  {'agents':>7}  {'wall_s':>9}  {'%agents':>8}  {'%runtime':>9}")
            for row in self.scaling:
                lines.append(f"{row.multiplier:>6.2f}  {row.agents:>7d}  {row.wall_time_s:>9.4f}  "
                             f"{row.pct_agents:>8.1f}  {row.pct_runtime:>9.1f}")
        if self.fit is not None:
            lines.append("")
            lines.append(f"fit: runtime = {self.fit.slope:.6g} * agents + {self.fit.intercept:.6g} "
                         f"(R^2 = {self.fit.r_squared:.4f})")
        return "\n".join(lines)


def _format(value: Metric) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, int):
        return str(value)
    return f"{value:.6g}"


def dci_report(ref: TrajectoryLog, runs: Sequence[Tuple[int, TrajectoryLog]]) -> MetricsReport:
    """
    Speed RMSE of each run against `ref`, keyed by collection interval, with
    a flag telling whether error is non-decreasing as the interval grows.
    """
    if len(runs) < 2:
        raise AnalysisError(f"interval comparison needs at least 2 runs, got {len(runs)}")
    report = MetricsReport(notes=["speed RMSE against the oracle reference, per data collection interval"])
    scored = sorted(((dci, trace_rmse(ref, log, "speed")) for dci, log in runs), key=lambda item: item[0])
    for dci, error in scored:
        report.metrics[f"rmse_dci_{dci}"] = error.rmse
        report.metrics[f"matched_dci_{dci}"] = error.matched
    rmses = [error.rmse for _, error in scored]
    report.metrics["dci_ordering"] = all(a <= b for a, b in zip(rmses, rmses[1:]))
    logger.info(f"Interval report: {[(dci, round(e.rmse, 4)) for dci, e in scored]}, "
                f"ordered={report.metrics['dci_ordering']}")
    return report


def comparison_report(ref: TrajectoryLog, cmp: TrajectoryLog,
                      hist_spec: HistogramSpec = HistogramSpec()) -> MetricsReport:
    """
    Fidelity of `cmp` against the reference log: speed and acceleration
    RMSE on shared rows, the speed-deviation histogram of `cmp` and its
    distance to the reference histogram, and the smallest leader gap.
    """
    report = MetricsReport(notes=["trace errors of the compared log against the reference"])
    speed = trace_rmse(ref, cmp, "speed")
    accel = trace_rmse(ref, cmp, "accel")
    reference_speed = mean_speed(ref)
    report.metrics["rmse_speed"] = speed.rmse
    report.metrics["rmse_accel"] = accel.rmse
    report.metrics["matched_rows"] = speed.matched
    report.metrics["mean_speed_ref"] = reference_speed
    report.metrics["rmse_speed_ratio"] = speed.rmse / reference_speed if reference_speed > 0 else 0.0

    scan = collision_scan(cmp)
    if scan.rows:
        report.metrics["min_gap"] = scan.min_gap
    report.metrics["gaps_below_threshold"] = scan.below_threshold

    try:
        hist = speed_deviation_histogram(cmp, hist_spec)
    except AnalysisError as e:
        report.notes.append(f"no histogram: {e}")
        return report
    report.histogram = hist
    report.metrics["modal_dv"] = hist.modal_center()
    report.metrics["mass_within_1mps"] = hist.fraction_within(1.0)
    report.metrics["mean_abs_dv"] = hist.mean_abs()
    try:
        ref_hist = speed_deviation_histogram(ref, hist_spec)
    except AnalysisError as e:
        report.notes.append(f"reference has no histogram: {e}")
        return report
    report.metrics["hist_distance"] = histogram_distance(hist, ref_hist)
    report.metrics["coarse_hist_distance"] = coarse_distance(hist, ref_hist)
    return report
