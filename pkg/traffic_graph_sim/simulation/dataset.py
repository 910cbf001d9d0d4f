import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Union

from traffic_graph_sim.errors import DatasetError, GraphFormatError
from traffic_graph_sim.graph.serialization import graph_from_dict, graph_to_dict
from traffic_graph_sim.graph.snapshot import NodeRef
from traffic_graph_sim.learner.training import Batch
from traffic_graph_sim.scenario.encoding import encode_world
from traffic_graph_sim.scenario.network import build_network_graph
from traffic_graph_sim.scenario.spec import ScenarioSpec
from traffic_graph_sim.simulation.config import RolloutConfig
from traffic_graph_sim.simulation.engine import rollout

logger = logging.getLogger("traffic-graph-sim.simulation")


@dataclass
class TrajectoryDataset:
    """
    Supervised pairs: the graph at step k*dci with each car's normalized
    speed at step (k+1)*dci. Cars gone by then are masked.
    """
    batches: List[Batch] = field(default_factory=list)
    dci: int = 1

    def __len__(self) -> int:
        return len(self.batches)

    def __iter__(self) -> Iterator[Batch]:
        return iter(self.batches)

    def __getitem__(self, i: int) -> Batch:
        return self.batches[i]

    def target_count(self) -> int:
        return sum(len(batch.loss_nodes()) for batch in self.batches)

    def to_list(self) -> List[Dict[str, Any]]:
        return [
            {
                "graph": graph_to_dict(batch.graph),
                "targets": {str(int(ref)): _encode_target(value) for ref, value in batch.targets.items()},
                "mask": sorted(int(ref) for ref in batch.mask),
                "dci": self.dci,
            }
            for batch in self.batches
        ]

    @classmethod
    def from_list(cls, items: List[Dict[str, Any]], dci: Optional[int] = None) -> "TrajectoryDataset":
        """Pairs from their JSON form; without `dci` the interval stored on the entries (default 1) is used"""
        batches = []
        intervals = set()
        try:
            for item in items:
                graph = graph_from_dict(item["graph"])
                targets = {NodeRef(int(key)): _decode_target(value) for key, value in item["targets"].items()}
                mask = frozenset(NodeRef(int(ref)) for ref in item["mask"])
                batches.append(Batch(graph=graph, targets=targets, mask=mask))
                intervals.add(_check_interval(item.get("dci", 1)))
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise GraphFormatError(f"malformed dataset entry: {e}") from e
        if len(intervals) > 1:
            raise GraphFormatError(f"dataset entries mix collection intervals {sorted(intervals)}")
        if dci is None:
            dci = intervals.pop() if intervals else 1
        return cls(batches=batches, dci=dci)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_list(), separators=(",", ":")), encoding="utf-8")
        logger.info(f"Dataset written to {path} ({len(self)} pairs, {self.target_count()} targets)")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrajectoryDataset":
        try:
            items = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise GraphFormatError(f"dataset file is not valid JSON: {e}") from e
        if not isinstance(items, list):
            raise GraphFormatError("dataset file must hold a JSON list")
        dataset = cls.from_list(items)
        logger.info(f"Dataset loaded from {path} ({len(dataset)} pairs, interval {dataset.dci})")
        return dataset


def _check_interval(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"collection interval must be a positive integer, got {value!r}")
    return value


def _encode_target(value):
    return value[0] if len(value) == 1 else list(value)


def _decode_target(value):
    if isinstance(value, list):
        return tuple(float(v) for v in value)
    return (float(value),)


def collect_dataset(spec: ScenarioSpec, cfg: RolloutConfig) -> TrajectoryDataset:
    """Oracle rollout sampled every `cfg.dci` steps into (graph, next speed) pairs"""
    cfg.require_oracle()
    if cfg.horizon < cfg.dci:
        raise DatasetError(f"horizon {cfg.horizon} is shorter than the collection interval {cfg.dci}")
    pairs = (cfg.horizon - cfg.dci) // cfg.dci + 1
    last_step = pairs * cfg.dci

    samples = []
    for world in rollout(spec, cfg):
        if world.step % cfg.dci == 0:
            samples.append(world)
        if world.step >= last_step:
            break

    net = build_network_graph(spec)
    v_ref = spec.normalization.v_ref
    batches = []
    for now, later in zip(samples, samples[1:]):
        graph, cars = encode_world(now, net, spec)
        future = later.by_id()
        targets = {}
        mask = set()
        for vid, ref in cars.items():
            if vid in future:
                targets[ref] = (future[vid].speed / v_ref,)
            else:
                mask.add(ref)
        batches.append(Batch(graph=graph, targets=targets, mask=frozenset(mask)))

    dataset = TrajectoryDataset(batches=batches, dci=cfg.dci)
    logger.info(f"Collected {len(dataset)} pairs at interval {cfg.dci} "
                f"({dataset.target_count()} targets) from '{spec.name}'")
    return dataset
