import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from traffic_graph_sim.errors import ScenarioError
from traffic_graph_sim.scenario.spec import DemandSpec, ScenarioSpec

logger = logging.getLogger("traffic-graph-sim.scenario")


@dataclass(frozen=True)
class Departure:
    """Scheduled vehicle insertion"""
    step: int
    vehicle_id: str
    route: Tuple[str, ...]

    @property
    def origin_lane(self) -> str:
        return self.route[0]

    def to_dict(self):
        return {"step": self.step, "vehicle_id": self.vehicle_id, "route": list(self.route)}


def vehicle_id(index: int) -> str:
    return f"veh{index:05d}"


def spawn_departures(demand: DemandSpec, seed: int) -> List[Departure]:
    """
    Departures spaced evenly over the demand window, each route picked by a
    weighted draw from a generator seeded with `seed`. Sorted by step.
    """
    if demand.count == 0:
        return []
    weights = np.array([route.weight for route in demand.routes], dtype=np.float64)
    rng = np.random.default_rng(seed)
    choices = rng.choice(len(demand.routes), size=demand.count, p=weights / weights.sum())
    start, end = demand.depart_start, demand.window_end
    span = end - start
    departures = []
    for index, choice in enumerate(choices):
        step = start + math.floor(index * span / demand.count)
        route = demand.routes[int(choice)]
        departures.append(Departure(step=step, vehicle_id=vehicle_id(index), route=tuple(route.lanes)))
    departures.sort(key=lambda d: (d.step, d.vehicle_id))
    logger.debug(f"Spawned {len(departures)} departures over steps [{start}, {end})")
    return departures


def scale_demand(spec: ScenarioSpec, multiplier: float) -> ScenarioSpec:
    """Copy of `spec` with the vehicle count scaled; window and routes unchanged"""
    if multiplier <= 0 or not math.isfinite(multiplier):
        raise ScenarioError([f"demand multiplier must be positive, got {multiplier}"])
    count = int(round(spec.demand.count * multiplier))
    demand = spec.demand.model_copy(update={"count": count})
    scaled = spec.model_copy(update={"demand": demand})
    logger.info(f"Scaled demand of '{spec.name}' by {multiplier}: {spec.demand.count} -> {count} vehicles")
    return scaled
