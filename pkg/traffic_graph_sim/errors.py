"""
Exception hierarchy for the traffic graph simulator.

Every error raised on purpose by the package derives from TrafficSimError,
so callers (the CLI in particular) can map failures to exit codes without
catching unrelated exceptions.
"""

from typing import Iterable, List


class TrafficSimError(Exception):
    """Base class for all package errors"""


class SchemaError(TrafficSimError):
    """Invalid graph schema (duplicate names, dangling endpoint kinds, negative dims)"""


class GraphError(TrafficSimError):
    """Invalid operation on a graph snapshot"""


class SealedSnapshotError(GraphError):
    """Mutation attempted on a sealed snapshot"""


class UnknownKindError(GraphError):
    """Node or edge type not declared in the schema"""


class DimensionMismatchError(GraphError):
    """Feature vector length differs from the declared type dimension"""


class EndpointError(GraphError):
    """Edge endpoint missing, of the wrong kind, a self-loop or a parallel edge"""


class UnknownNodeError(GraphError):
    """Node or edge reference not present in the snapshot"""


class NonFiniteFeatureError(GraphError):
    """NaN or infinite feature scalar"""


class GraphFormatError(TrafficSimError):
    """Malformed graph, model or dataset document"""


class ScenarioError(TrafficSimError):
    """Scenario failed validation; carries every violation found"""

    def __init__(self, violations: Iterable[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations) or "invalid scenario")


class OracleError(TrafficSimError):
    """Invalid input to a rule-based car-following or signal model"""


class SimulationError(TrafficSimError):
    """Rollout cannot proceed (unknown lane, missing model, ...)"""


class ModelError(TrafficSimError):
    """Graph transformer configuration or evaluation failure"""


class ShapeMismatchError(ModelError):
    """Tensor shapes inconsistent with the model configuration or schema"""


class DivergenceError(ModelError):
    """Non-finite intermediate value or loss"""


class DatasetError(TrafficSimError):
    """Empty or inconsistent supervised dataset"""


class AnalysisError(TrafficSimError):
    """Metric cannot be computed from the given inputs"""


class InputFileError(TrafficSimError):
    """Missing input file, or an output that would be overwritten without --force"""
