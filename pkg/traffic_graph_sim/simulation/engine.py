"""
Discrete-time rollout.

A step asks the backend for next speeds, keeps every vehicle at least
MIN_SAFE_GAP behind its physical leader, integrates positions with the
trapezoidal rule, moves vehicles across lane ends along their routes,
inserts due departures and advances the signal clocks.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from traffic_graph_sim.errors import SimulationError
from traffic_graph_sim.scenario.demand import Departure, spawn_departures
from traffic_graph_sim.scenario.spec import ScenarioSpec
from traffic_graph_sim.simulation.backends import DEFAULT_REGISTRY, BackendRegistry, StepContext
from traffic_graph_sim.simulation.config import BackendType, RolloutConfig
from traffic_graph_sim.simulation.leaders import LaneOccupancy, control_leader, physical_leader, resolve_leader
from traffic_graph_sim.simulation.state import MIN_SAFE_GAP, LeaderInfo, VehicleState, WorldState
from traffic_graph_sim.simulation.trajectory import Row, TrajectoryLog

logger = logging.getLogger("traffic-graph-sim.simulation")


@dataclass
class RolloutResult:
    log: TrajectoryLog
    world: WorldState

    def summary(self) -> Dict[str, int]:
        return {
            "steps": self.world.step,
            "rows": len(self.log),
            "entered": self.world.entered,
            "exited": self.world.exited,
            "active": len(self.world.vehicles),
            "pending": len(self.world.pending),
            "violations": self.world.violations,
            "clamps": self.world.clamps,
        }


def initial_world(spec: ScenarioSpec, seed: int = 0,
                  departures: Optional[Sequence[Departure]] = None) -> WorldState:
    """Empty world at step 0 with the demand schedule pending"""
    pending = spawn_departures(spec.demand, seed) if departures is None else list(departures)
    return WorldState(step=0, pending=tuple(pending), phases=spec.network_index().phases_at(0.0))


def _guard(world: WorldState, spec: ScenarioSpec, occupancy: LaneOccupancy,
           proposed: Mapping[str, float], dt: float) -> Tuple[Dict[str, float], Dict[str, float], int, int]:
    """
    Final speeds and advances with every follower kept MIN_SAFE_GAP behind
    its physical leader after both move. Leaders settle before followers.
    Returns (speeds, advances, collisions avoided, clamps applied).
    """
    by_id = world.by_id()
    leaders: Dict[str, Optional[LeaderInfo]] = {
        vehicle.id: physical_leader(vehicle, spec, occupancy) for vehicle in world.vehicles
    }
    speeds: Dict[str, float] = {}
    advances: Dict[str, float] = {}
    violations = 0
    clamps = 0

    for start in by_id:
        if start in advances:
            continue
        stack = [start]
        pending = {start}
        while stack:
            vid = stack[-1]
            info = leaders[vid]
            lid = info.leader_id if info is not None else None
            if lid is not None and lid not in advances and lid not in pending:
                stack.append(lid)
                pending.add(lid)
                continue
            vehicle = by_id[vid]
            speed = proposed[vid]
            advance = (vehicle.speed + speed) / 2.0 * dt
            if lid is not None:
                allowed = info.gap + advances.get(lid, 0.0) - MIN_SAFE_GAP
                if advance > allowed + 1e-12:
                    clamps += 1
                    if info.gap + advances.get(lid, 0.0) - advance <= 0:
                        violations += 1
                    speed = max(0.0, 2.0 * allowed / dt - vehicle.speed)
                    advance = min((vehicle.speed + speed) / 2.0 * dt, max(allowed, 0.0))
            speeds[vid] = speed
            advances[vid] = advance
            stack.pop()
            pending.discard(vid)
    return speeds, advances, violations, clamps


def _advance(world: WorldState, spec: ScenarioSpec, speeds: Mapping[str, float],
             advances: Mapping[str, float], dt: float) -> Tuple[List[VehicleState], int]:
    index = spec.network_index()
    moved: List[VehicleState] = []
    exited = 0
    for vehicle in world.vehicles:
        lane, pos = vehicle.lane, vehicle.route_pos
        offset = vehicle.offset + advances[vehicle.id]
        gone = False
        while offset > index.lane(lane).length:
            if pos + 1 >= len(vehicle.route):
                gone = True
                break
            offset -= index.lane(lane).length
            pos += 1
            lane = vehicle.route[pos]
        if gone:
            exited += 1
            continue
        speed = speeds[vehicle.id]
        moved.append(replace(vehicle, lane=lane, offset=offset, route_pos=pos, speed=speed,
                             accel=(speed - vehicle.speed) / dt))
    return moved, exited


def _insert(vehicles: List[VehicleState], pending: Sequence[Departure], step: int,
            spec: ScenarioSpec) -> Tuple[List[VehicleState], Tuple[Departure, ...]]:
    """Insert due departures at offset 0 when the entry gap allows; the rest wait"""
    index = spec.network_index()
    s0 = spec.idm.s0
    headway = spec.demand.depart_headway
    rear: Dict[str, VehicleState] = {}
    for vehicle in vehicles:
        if vehicle.lane not in rear or vehicle.offset < rear[vehicle.lane].offset:
            rear[vehicle.lane] = vehicle

    inserted: List[VehicleState] = []
    waiting: List[Departure] = []
    blocked = set()
    for i, departure in enumerate(pending):
        if departure.step > step:
            waiting.extend(pending[i:])
            break
        lane_id = departure.origin_lane
        if lane_id in blocked:
            waiting.append(departure)
            continue
        limit = index.lane(lane_id).speed_limit
        behind = rear.get(lane_id)
        gap = behind.offset - behind.length if behind is not None else math.inf
        if gap < s0:
            blocked.add(lane_id)
            waiting.append(departure)
            continue
        speed = limit if behind is None else min(limit, max(0.0, (gap - s0) / headway))
        vehicle = VehicleState(id=departure.vehicle_id, lane=lane_id, offset=0.0, speed=speed,
                               route=departure.route, length=spec.demand.vehicle_length)
        inserted.append(vehicle)
        rear[lane_id] = vehicle
    if blocked:
        logger.debug(f"Step {step}: departures deferred on {sorted(blocked)}")
    return inserted, tuple(waiting)


def step(world: WorldState, cfg: RolloutConfig, spec: ScenarioSpec, model=None,
         registry: BackendRegistry = DEFAULT_REGISTRY) -> WorldState:
    """Pure transition from `world` to the world one step later"""
    model = model if model is not None else cfg.model
    if cfg.backend == BackendType.LEARNED and model is None:
        raise SimulationError("learned backend requires a model")
    backend = registry.get_backend(cfg.backend)
    dt = cfg.step_length(spec)
    index = spec.network_index()

    occupancy = LaneOccupancy.of(world)
    leaders = {vehicle.id: control_leader(world, vehicle, spec, occupancy) for vehicle in world.vehicles}
    decision = backend.propose(StepContext(world=world, spec=spec, leaders=leaders, dt=dt,
                                           seed=cfg.seed, dci=cfg.dci, model=model))
    proposed: Dict[str, float] = {}
    for vehicle in world.vehicles:
        if vehicle.fixed_speed is not None:
            proposed[vehicle.id] = max(0.0, vehicle.fixed_speed)
            continue
        speed = decision.speeds[vehicle.id]
        if not math.isfinite(speed):
            raise SimulationError(f"backend '{backend.name}' proposed speed {speed} for '{vehicle.id}'")
        proposed[vehicle.id] = min(max(speed, 0.0), index.lane(vehicle.lane).speed_limit)

    speeds, advances, violations, clamps = _guard(world, spec, occupancy, proposed, dt)
    if violations:
        logger.warning(f"Step {world.step}: {violations} collisions prevented by the gap guard "
                       f"({backend.name} backend)")
    moved, exited = _advance(world, spec, speeds, advances, dt)
    next_step = world.step + 1
    inserted, waiting = _insert(moved, world.pending, next_step, spec)
    vehicles = tuple(sorted(moved + inserted, key=lambda v: v.id))
    active = {vehicle.id for vehicle in vehicles}
    return WorldState(
        step=next_step,
        vehicles=vehicles,
        pending=waiting,
        phases=index.phases_at(next_step * dt),
        held_speeds={vid: v for vid, v in decision.held_speeds.items() if vid in active},
        entered=world.entered + len(inserted),
        exited=world.exited + exited,
        violations=world.violations + violations + decision.violations,
        clamps=world.clamps + clamps,
    )


def log_rows(world: WorldState, spec: ScenarioSpec, dt: float) -> List[Row]:
    occupancy = LaneOccupancy.of(world)
    rows: List[Row] = []
    for vehicle in world.vehicles:
        info = resolve_leader(world, vehicle, spec, occupancy)
        rows.append((world.step, world.step * dt, vehicle.id, vehicle.lane, vehicle.offset, vehicle.speed,
                     vehicle.accel, info.leader_id if info.is_real else "", info.gap))
    return rows


def rollout(spec: ScenarioSpec, cfg: RolloutConfig, model=None,
            world: Optional[WorldState] = None) -> Iterator[WorldState]:
    """The starting world followed by `cfg.horizon` successors"""
    world = world if world is not None else initial_world(spec, cfg.seed)
    yield world
    for _ in range(cfg.horizon):
        world = step(world, cfg, spec, model)
        yield world


def simulate(spec: ScenarioSpec, cfg: RolloutConfig, model=None,
             world: Optional[WorldState] = None) -> RolloutResult:
    """Rollout with a log row per active vehicle after every step"""
    dt = cfg.step_length(spec)
    rows: List[Row] = []
    last = None
    for last in rollout(spec, cfg, model, world):
        if last.step > (world.step if world is not None else 0):
            rows.extend(log_rows(last, spec, dt))
    result = RolloutResult(log=TrajectoryLog.from_rows(rows), world=last)
    logger.info(f"Rollout of '{spec.name}' with {cfg.backend.value} finished: {result.summary()}")
    return result


def run(spec: ScenarioSpec, cfg: RolloutConfig, model=None) -> TrajectoryLog:
    return simulate(spec, cfg, model).log
