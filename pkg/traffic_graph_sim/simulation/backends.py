"""
Car-following backends.

Each backend turns the previous world and the resolved leaders into a
proposed next speed per vehicle. The engine clamps, guards and integrates.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from traffic_graph_sim.errors import SimulationError
from traffic_graph_sim.learner.model import model_forward
from traffic_graph_sim.oracles.idm import idm_accel
from traffic_graph_sim.oracles.krauss import krauss_next_speed
from traffic_graph_sim.scenario.encoding import encode_world
from traffic_graph_sim.scenario.network import build_network_graph
from traffic_graph_sim.scenario.spec import ScenarioSpec
from traffic_graph_sim.simulation.config import BackendType
from traffic_graph_sim.simulation.state import LeaderInfo, LeaderKind, WorldState

logger = logging.getLogger("traffic-graph-sim.simulation")

STANDSTILL_SPEED = 0.3


@dataclass
class StepContext:
    """Read-only inputs of one backend decision"""
    world: WorldState
    spec: ScenarioSpec
    leaders: Mapping[str, LeaderInfo]
    dt: float
    seed: int
    dci: int = 1
    model: Optional[Any] = None


@dataclass
class BackendDecision:
    """Proposed speeds; `violations` counts vehicles the backend found already touching their leader"""
    speeds: Dict[str, float]
    held_speeds: Dict[str, float] = field(default_factory=dict)
    violations: int = 0


@dataclass
class CarFollowingBackend:
    """Base backend; subclasses implement `propose`"""
    backend_type: BackendType
    name: str
    description: str
    parameters: Dict[str, Any] = field(default_factory=dict)

    def propose(self, ctx: StepContext) -> BackendDecision:
        raise NotImplementedError(f"backend '{self.name}' does not propose speeds")


class IdmBackend(CarFollowingBackend):
    def __init__(self):
        super().__init__(BackendType.IDM, "IDM", "Intelligent Driver Model, v + accel*dt")

    def propose(self, ctx: StepContext) -> BackendDecision:
        params = ctx.spec.idm
        speeds = {}
        overlaps = []
        for vehicle in ctx.world.vehicles:
            leader = ctx.leaders[vehicle.id]
            if leader.gap <= 0:
                overlaps.append(vehicle.id)
                speeds[vehicle.id] = 0.0
                continue
            accel = idm_accel(vehicle.speed, vehicle.speed - leader.speed, leader.gap, params)
            speeds[vehicle.id] = vehicle.speed + accel * ctx.dt
        if overlaps:
            logger.warning(f"Step {ctx.world.step}: IDM stopped {len(overlaps)} vehicles with no gap "
                           f"to their leader: {overlaps[:5]}")
        return BackendDecision(speeds=speeds, violations=len(overlaps))


class KraussBackend(CarFollowingBackend):
    def __init__(self):
        super().__init__(BackendType.KRAUSS, "Krauss", "Krauss safe-speed model with optional driver noise")

    def propose(self, ctx: StepContext) -> BackendDecision:
        params = ctx.spec.krauss
        rng = np.random.default_rng([ctx.seed, ctx.world.step])
        noise = rng.random(len(ctx.world.vehicles))
        speeds = {}
        for vehicle, draw in zip(ctx.world.vehicles, noise):
            leader = ctx.leaders[vehicle.id]
            gap = leader.gap
            if leader.kind != LeaderKind.NONE:
                # net of min_gap and the trapezoidal half-step advance
                gap = max(0.0, gap - params.min_gap - vehicle.speed * ctx.dt / 2.0)
            speeds[vehicle.id] = krauss_next_speed(vehicle.speed, leader.speed, gap, params, ctx.dt, float(draw))
        return BackendDecision(speeds=speeds)


class LearnedBackend(CarFollowingBackend):
    """
    Graph transformer predictions, refreshed every `dci` steps and held
    between refreshes. Vehicles without a prediction keep their speed; a
    vehicle below STANDSTILL_SPEED stays stopped unless the model asks for
    at least that speed.
    """

    def __init__(self):
        super().__init__(BackendType.LEARNED, "Learned", "Graph transformer speed readout with zero-order hold")

    def propose(self, ctx: StepContext) -> BackendDecision:
        if ctx.model is None:
            raise SimulationError("learned backend requires a model")
        held = dict(ctx.world.held_speeds)
        if ctx.world.step % ctx.dci == 0:
            graph, cars = encode_world(ctx.world, build_network_graph(ctx.spec), ctx.spec)
            predictions = model_forward(ctx.model, graph)
            v_ref = ctx.spec.normalization.v_ref
            current = ctx.world.by_id()
            held = {}
            for vid, ref in cars.items():
                speed = predictions[ref][0] * v_ref
                if speed < STANDSTILL_SPEED and current[vid].speed < STANDSTILL_SPEED:
                    speed = 0.0
                held[vid] = speed
        speeds = {vehicle.id: held.get(vehicle.id, vehicle.speed) for vehicle in ctx.world.vehicles}
        return BackendDecision(speeds=speeds, held_speeds=held)


class BackendRegistry:
    """Backends by type"""

    def __init__(self):
        self.backends: Dict[BackendType, CarFollowingBackend] = {}

    def register_backend(self, backend: CarFollowingBackend) -> None:
        self.backends[backend.backend_type] = backend
        logger.debug(f"Backend registered: {backend.name} ({backend.backend_type.value})")

    def get_backend(self, backend_type: BackendType) -> CarFollowingBackend:
        if backend_type not in self.backends:
            raise SimulationError(f"no backend registered for '{backend_type}'")
        return self.backends[backend_type]

    def get_available_backends(self) -> List[Dict[str, Any]]:
        return [
            {
                "backend_type": backend.backend_type.value,
                "name": backend.name,
                "description": backend.description,
                "parameters": backend.parameters,
            }
            for backend in self.backends.values()
        ]


def default_registry() -> BackendRegistry:
    registry = BackendRegistry()
    for backend in (IdmBackend(), KraussBackend(), LearnedBackend()):
        registry.register_backend(backend)
    return registry


DEFAULT_REGISTRY = default_registry()
