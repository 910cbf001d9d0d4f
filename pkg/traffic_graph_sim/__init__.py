"""
Data-driven traffic microsimulation on dynamic heterogeneous graphs.

Rule-based car-following (IDM, Krauss) generates trajectories; a
heterogeneous graph transformer trained on them replaces the rules during
rollout. See `traffic_graph_sim.system` for the end-to-end workflow and
`traffic_graph_sim.cli` for the command-line entry point.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
