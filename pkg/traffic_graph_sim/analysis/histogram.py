"""
Leader-follower speed difference histograms.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np
import pandas as pd

from traffic_graph_sim.errors import AnalysisError
from traffic_graph_sim.simulation.trajectory import TrajectoryLog

DEFAULT_BIN_WIDTH = 0.5
DEFAULT_RANGE = 5.0


@dataclass(frozen=True)
class HistogramSpec:
    """Bins of `bin_width` centred on `center`, spanning +/- `range`; overflow lands in the edge bins"""
    bin_width: float = DEFAULT_BIN_WIDTH
    center: float = 0.0
    range: float = DEFAULT_RANGE

    def __post_init__(self):
        if not self.bin_width > 0:
            raise AnalysisError(f"bin width must be positive, got {self.bin_width}")
        if not self.range > 0:
            raise AnalysisError(f"histogram range must be positive, got {self.range}")

    @property
    def half_bins(self) -> int:
        return max(1, int(math.floor(self.range / self.bin_width + 1e-9)))

    def centers(self) -> np.ndarray:
        k = self.half_bins
        return self.center + self.bin_width * np.arange(-k, k + 1, dtype=np.float64)

    def edges(self) -> np.ndarray:
        k = self.half_bins
        return self.center + self.bin_width * (np.arange(-k, k + 2, dtype=np.float64) - 0.5)

    def bin_index(self, values: np.ndarray) -> np.ndarray:
        k = self.half_bins
        raw = np.floor((values - self.center) / self.bin_width + 0.5).astype(np.int64)
        return np.clip(raw, -k, k) + k


@dataclass
class Histogram:
    spec: HistogramSpec
    mass: np.ndarray
    count: int
    deltas: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    @property
    def centers(self) -> np.ndarray:
        return self.spec.centers()

    @property
    def edges(self) -> np.ndarray:
        return self.spec.edges()

    def modal_center(self) -> float:
        return float(self.centers[int(np.argmax(self.mass))])

    def fraction_within(self, limit: float) -> float:
        """Share of raw differences with |dv| <= limit"""
        if self.count == 0:
            return 0.0
        return float(np.mean(np.abs(self.deltas) <= limit + 1e-12))

    def mean_abs(self) -> float:
        return float(np.mean(np.abs(self.deltas))) if self.count else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bin_width": self.spec.bin_width,
            "center": self.spec.center,
            "range": self.spec.range,
            "edges": self.edges.tolist(),
            "centers": self.centers.tolist(),
            "mass": self.mass.tolist(),
            "count": self.count,
        }


def leader_speed_differences(log: TrajectoryLog) -> np.ndarray:
    """v_leader - v_follower for every row with a real leader"""
    frame = log.frame
    followers = frame[frame["leader_id"] != ""][["step", "leader_id", "speed_mps"]]
    leaders = frame[["step", "vehicle_id", "speed_mps"]].rename(
        columns={"vehicle_id": "leader_id", "speed_mps": "leader_speed"})
    pairs = followers.merge(leaders, on=["step", "leader_id"], how="inner")
    return (pairs["leader_speed"] - pairs["speed_mps"]).to_numpy(dtype=np.float64)


def histogram_from_values(values: np.ndarray, spec: HistogramSpec) -> Histogram:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise AnalysisError("no leader-follower pairs to histogram")
    counts = np.bincount(spec.bin_index(values), minlength=2 * spec.half_bins + 1).astype(np.float64)
    return Histogram(spec=spec, mass=counts / counts.sum(), count=int(values.size), deltas=values)


def speed_deviation_histogram(log: TrajectoryLog, spec: HistogramSpec = HistogramSpec()) -> Histogram:
    """Normalized histogram of v_leader - v_follower over rows with a real leader"""
    if len(log) == 0:
        raise AnalysisError("trajectory log is empty")
    return histogram_from_values(leader_speed_differences(log), spec)


def histogram_distance(a: Histogram, b: Histogram) -> float:
    """Largest per-bin mass difference between histograms on the same bins"""
    if a.spec != b.spec:
        raise AnalysisError("histograms use different bins")
    return float(np.max(np.abs(a.mass - b.mass)))


def coarse_masses(hist: Histogram, bin_width: float) -> pd.Series:
    """Raw differences re-binned at a wider width over the same range"""
    coarse = histogram_from_values(hist.deltas, HistogramSpec(bin_width=bin_width, center=hist.spec.center,
                                                              range=hist.spec.range))
    return pd.Series(coarse.mass, index=coarse.centers)


def coarse_distance(a: Histogram, b: Histogram, bin_width: float = 1.0) -> float:
    """Largest per-bin mass difference after re-binning both at `bin_width`"""
    return float((coarse_masses(a, bin_width) - coarse_masses(b, bin_width)).abs().max())
