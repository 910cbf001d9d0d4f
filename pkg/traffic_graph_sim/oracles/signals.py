import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, FrozenSet

from traffic_graph_sim.errors import OracleError

if TYPE_CHECKING:
    from traffic_graph_sim.scenario.spec import SignalProgramSpec


@dataclass(frozen=True)
class PhaseState:
    """Active phase of a cyclic signal program"""
    index: int
    green: FrozenSet[str]
    time_in_phase: float


def signal_phase(program: "SignalProgramSpec", t: float) -> PhaseState:
    """Phase containing t mod cycle"""
    if not program.phases:
        raise OracleError(f"signal '{program.id}' has an empty program")
    if t < 0:
        raise OracleError(f"signal time must be non-negative, got {t}")
    cycle = sum(phase.duration for phase in program.phases)
    into_cycle = math.fmod(t, cycle)
    start = 0.0
    for index, phase in enumerate(program.phases):
        end = start + phase.duration
        if into_cycle < end:
            return PhaseState(index=index, green=frozenset(phase.green),
                              time_in_phase=into_cycle - start)
        start = end
    # float round-off at the very end of the cycle
    last = len(program.phases) - 1
    return PhaseState(index=last, green=frozenset(program.phases[last].green),
                      time_in_phase=into_cycle - (cycle - program.phases[last].duration))
