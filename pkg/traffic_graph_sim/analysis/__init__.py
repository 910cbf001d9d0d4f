"""
Evaluation of rollouts.

Speed-difference histograms, trace errors against a reference log, data
collection interval reports, collision scans and runtime scaling.
"""

from traffic_graph_sim.analysis.histogram import (
    Histogram, HistogramSpec, coarse_distance, histogram_distance, leader_speed_differences,
    speed_deviation_histogram
)
from traffic_graph_sim.analysis.traces import (
    CollisionScan, TraceError, collision_scan, mean_speed, speed_bounds, trace_rmse, vehicle_trace
)
from traffic_graph_sim.analysis.report import (
    LinearFit, MetricsReport, ScalingRow, comparison_report, dci_report
)
from traffic_graph_sim.analysis.scaling import linear_fit, scaling_benchmark, scaling_rows

__all__ = [
    "Histogram",
    "HistogramSpec",
    "coarse_distance",
    "histogram_distance",
    "leader_speed_differences",
    "speed_deviation_histogram",
    "CollisionScan",
    "TraceError",
    "collision_scan",
    "mean_speed",
    "speed_bounds",
    "trace_rmse",
    "vehicle_trace",
    "LinearFit",
    "MetricsReport",
    "ScalingRow",
    "comparison_report",
    "dci_report",
    "linear_fit",
    "scaling_benchmark",
    "scaling_rows",
]
