import logging
from typing import Any, Dict, List, Optional, Sequence

from traffic_graph_sim.analysis.histogram import HistogramSpec
from traffic_graph_sim.analysis.report import MetricsReport, comparison_report, dci_report
from traffic_graph_sim.analysis.scaling import scaling_benchmark
from traffic_graph_sim.errors import SimulationError
from traffic_graph_sim.graph.snapshot import GraphSnapshot
from traffic_graph_sim.learner.config import ModelConfig
from traffic_graph_sim.learner.model import HeteroGraphTransformer
from traffic_graph_sim.learner.training import train
from traffic_graph_sim.scenario.demand import scale_demand
from traffic_graph_sim.scenario.network import build_network_graph
from traffic_graph_sim.scenario.spec import ScenarioSpec, load_bundled_scenario
from traffic_graph_sim.simulation.backends import DEFAULT_REGISTRY
from traffic_graph_sim.simulation.config import BackendType, RolloutConfig
from traffic_graph_sim.simulation.dataset import TrajectoryDataset, collect_dataset
from traffic_graph_sim.simulation.engine import RolloutResult, simulate
from traffic_graph_sim.simulation.trajectory import TrajectoryLog

logger = logging.getLogger("traffic-graph-sim.system")


class TrafficSimulationSystem:
    """Workflow facade: graph construction, collection, pre-training, simulation, evaluation"""

    def __init__(self, spec: Optional[ScenarioSpec] = None, model_config: Optional[ModelConfig] = None,
                 seed: int = 0):
        """
        Initialize the simulation system

        Args:
            spec: Scenario to work on; the bundled case study when omitted
            model_config: Settings for pre-training and fine-tuning
            seed: Seed for every stage that does not receive its own
        """
        self.spec = spec if spec is not None else load_bundled_scenario()
        self.model_config = model_config or ModelConfig(seed=seed)
        self.seed = seed
        self.model: Optional[HeteroGraphTransformer] = None
        self.loss_curves: List[List[float]] = []

        logger.info(f"Traffic simulation system initialized for '{self.spec.name}' "
                    f"({len(self.spec.network.roads)} roads, {self.spec.demand.count} vehicles)")

    def available_backends(self) -> List[Dict[str, Any]]:
        return DEFAULT_REGISTRY.get_available_backends()

    def scale(self, multiplier: float) -> None:
        """Replace the working scenario with a demand-scaled copy"""
        self.spec = scale_demand(self.spec, multiplier)

    def construct_graph(self) -> GraphSnapshot:
        """Static network graph (roads, lanes, junctions, signals) of the scenario"""
        graph = build_network_graph(self.spec)
        logger.info(f"Network graph: {graph.node_count()} nodes, {graph.edge_count()} edges")
        return graph

    def _rollout_config(self, backend: BackendType, horizon: int, dci: int,
                        seed: Optional[int]) -> RolloutConfig:
        return RolloutConfig(backend=backend, horizon=horizon, dci=dci,
                             seed=self.seed if seed is None else seed)

    def collect(self, horizon: int = 600, dci: int = 1, backend: BackendType = BackendType.KRAUSS,
                seed: Optional[int] = None) -> TrajectoryDataset:
        """
        Run an oracle rollout and pair snapshots `dci` steps apart

        Args:
            horizon: Rollout length in steps
            dci: Steps between paired snapshots
            backend: Oracle producing the trajectories
            seed: Demand seed; the system seed when omitted

        Returns:
            Supervised dataset
        """
        return collect_dataset(self.spec, self._rollout_config(backend, horizon, dci, seed))

    def pretrain(self, dataset: TrajectoryDataset, config: Optional[ModelConfig] = None) -> List[float]:
        """Train a fresh model on `dataset`; returns the loss curve"""
        self.model, curve = train(dataset, config or self.model_config)
        self.loss_curves.append(curve)
        return curve

    def fine_tune(self, dataset: TrajectoryDataset, epochs: Optional[int] = None) -> List[float]:
        """Continue training the current model on new data"""
        if self.model is None:
            raise SimulationError("fine-tuning needs a pre-trained model")
        config = self.model.config
        if epochs is not None:
            config = config.model_copy(update={"epochs": epochs})
        self.model, curve = train(dataset, config, init=self.model)
        self.loss_curves.append(curve)
        return curve

    def simulate(self, backend: BackendType = BackendType.KRAUSS, horizon: int = 600, dci: int = 1,
                 seed: Optional[int] = None) -> RolloutResult:
        """Rollout with an oracle or, for the learned backend, the current model"""
        model = self.model if backend == BackendType.LEARNED else None
        if backend == BackendType.LEARNED and model is None:
            raise SimulationError("the learned backend needs a pre-trained model")
        return simulate(self.spec, self._rollout_config(backend, horizon, dci, seed), model)

    def evaluate(self, reference: TrajectoryLog, candidate: TrajectoryLog,
                 hist_spec: HistogramSpec = HistogramSpec()) -> MetricsReport:
        return comparison_report(reference, candidate, hist_spec)

    def compare_intervals(self, dcis: Sequence[int], horizon: int = 600, seed: Optional[int] = None,
                          backend: BackendType = BackendType.KRAUSS) -> MetricsReport:
        """
        Learned rollouts at each collection interval against an oracle
        reference on the same demand

        Args:
            dcis: Intervals at which model predictions are applied
            horizon: Rollout length in steps
            seed: Demand seed shared by the reference and every run
            backend: Oracle producing the reference

        Returns:
            Report with one RMSE per interval and the ordering flag
        """
        reference = self.simulate(backend, horizon, 1, seed).log
        runs = [(dci, self.simulate(BackendType.LEARNED, horizon, dci, seed).log) for dci in dcis]
        return dci_report(reference, runs)

    def benchmark(self, scales: Sequence[float], horizon: int = 600,
                  backend: BackendType = BackendType.KRAUSS, repetitions: int = 3) -> MetricsReport:
        cfg = self._rollout_config(backend, horizon, 1, None)
        if backend == BackendType.LEARNED:
            cfg = cfg.model_copy(update={"model": self.model})
        return scaling_benchmark(self.spec, cfg, scales, repetitions)

    def run_workflow(self, horizon: int = 600, held_out_seed: Optional[int] = None,
                     backend: BackendType = BackendType.KRAUSS) -> Dict[str, Any]:
        """
        Graph construction, dataset collection, pre-training, learned
        rollout on a held-out seed and evaluation against the oracle

        Returns:
            Summary with the loss curve endpoints and the evaluation report
        """
        held_out = self.seed + 1 if held_out_seed is None else held_out_seed
        graph = self.construct_graph()
        dataset = self.collect(horizon=horizon, backend=backend)
        curve = self.pretrain(dataset)
        reference = self.simulate(backend, horizon, seed=held_out)
        learned = self.simulate(BackendType.LEARNED, horizon, seed=held_out)
        report = self.evaluate(reference.log, learned.log)
        report.metrics["violations"] = learned.world.violations
        logger.info(f"Workflow finished: speed RMSE {report.metrics['rmse_speed']:.4f} m/s, "
                    f"{learned.world.violations} violations")
        return {
            "network_nodes": graph.node_count(),
            "dataset_pairs": len(dataset),
            "initial_loss": curve[0] if curve else None,
            "final_loss": curve[-1] if curve else None,
            "reference": reference.summary(),
            "learned": learned.summary(),
            "report": report.to_dict(),
        }
