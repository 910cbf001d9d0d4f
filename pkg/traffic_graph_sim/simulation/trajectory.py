"""
Per-step, per-vehicle trajectory log backed by a pandas DataFrame.
"""

import io
import logging
from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

import pandas as pd

from traffic_graph_sim.errors import DatasetError
from traffic_graph_sim.simulation.state import GAP_SENTINEL

logger = logging.getLogger("traffic-graph-sim.simulation")

COLUMNS = ["step", "time_s", "vehicle_id", "lane_id", "offset_m", "speed_mps", "accel_mps2", "leader_id", "gap_m"]
TEXT_COLUMNS = {"vehicle_id": str, "lane_id": str, "leader_id": str}

Row = Tuple[int, float, str, str, float, float, float, str, float]


class TrajectoryLog:
    """Rows sorted by (step, vehicle_id); leader_id is empty when there is no real leader"""

    def __init__(self, frame: Optional[pd.DataFrame] = None):
        if frame is None:
            frame = pd.DataFrame({column: pd.Series(dtype=_dtype(column)) for column in COLUMNS})
        missing = [column for column in COLUMNS if column not in frame.columns]
        if missing:
            raise DatasetError(f"trajectory log lacks columns {missing}")
        self.frame = frame[COLUMNS].reset_index(drop=True)

    @classmethod
    def from_rows(cls, rows: Iterable[Row]) -> "TrajectoryLog":
        rows = list(rows)
        if not rows:
            return cls()
        frame = pd.DataFrame(rows, columns=COLUMNS)
        frame = frame.sort_values(["step", "vehicle_id"], kind="mergesort")
        return cls(frame)

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def steps(self) -> int:
        return int(self.frame["step"].max()) if len(self.frame) else 0

    def vehicle(self, vehicle_id: str) -> pd.DataFrame:
        return self.frame[self.frame["vehicle_id"] == vehicle_id]

    def to_csv_string(self) -> str:
        out = self.frame.copy()
        out["gap_m"] = [("1e6" if gap == GAP_SENTINEL else repr(float(gap))) for gap in out["gap_m"]]
        buffer = io.StringIO()
        out.to_csv(buffer, index=False, lineterminator="\n")
        return buffer.getvalue()

    def to_csv(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_csv_string(), encoding="utf-8")
        logger.info(f"Trajectory log written to {path} ({len(self)} rows)")

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "TrajectoryLog":
        try:
            frame = pd.read_csv(path, dtype=TEXT_COLUMNS, keep_default_na=False)
        except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
            raise DatasetError(f"cannot read trajectory log {path}: {e}") from e
        if list(frame.columns) != COLUMNS:
            raise DatasetError(f"trajectory log header {list(frame.columns)} does not match {COLUMNS}")
        return cls(frame)


def _dtype(column: str) -> str:
    if column == "step":
        return "int64"
    if column in TEXT_COLUMNS:
        return "object"
    return "float64"
