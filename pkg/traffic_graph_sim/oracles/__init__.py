"""
Rule-based reference behaviours.

IDM and Krauss car-following plus cyclic signal phase evaluation, used to
generate training trajectories and as comparison baselines.
"""

from traffic_graph_sim.oracles.idm import IdmParams, equilibrium_gap, idm_accel
from traffic_graph_sim.oracles.krauss import KraussParams, krauss_next_speed
from traffic_graph_sim.oracles.signals import PhaseState, signal_phase

__all__ = [
    "IdmParams",
    "equilibrium_gap",
    "idm_accel",
    "KraussParams",
    "krauss_next_speed",
    "PhaseState",
    "signal_phase",
]
