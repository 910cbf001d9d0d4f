"""
End-to-end checks on the case-study intersection.

These run full-length rollouts and a training run; skip them with
`pytest -m "not slow"`.
"""

import numpy as np
import pytest
import torch

from traffic_graph_sim.analysis import collision_scan, comparison_report, scaling_benchmark, speed_bounds
from traffic_graph_sim.graph import dumps_graph, loads_graph, new_snapshot
from traffic_graph_sim.learner import (
    Batch, HeteroGraphTransformer, ModelConfig, dumps_model, grad_check, layer_forward, loads_model
)
from traffic_graph_sim.oracles import equilibrium_gap
from traffic_graph_sim.scenario import scale_demand
from traffic_graph_sim.scenario.spec import scenario_from_dict
from traffic_graph_sim.simulation import BackendType, RolloutConfig, WorldState, run, simulate, step
from traffic_graph_sim.simulation.engine import initial_world
from traffic_graph_sim.system import TrafficSimulationSystem

from conftest import car, dense_layer, one_lane_dict

pytestmark = pytest.mark.slow


def random_graph(schema, nodes, seed):
    """Seeded graph of cars and lanes with random edges"""
    rng = np.random.default_rng(seed)
    g = new_snapshot(schema, 0)
    refs = []
    for i in range(nodes):
        kind = "lane" if i % 3 == 2 else "car"
        refs.append(g.add_node(kind, rng.normal(size=schema.node_feature_dim(kind)).tolist()))
    for edge_type in schema.edge_types:
        sources = [r for r in refs if g.node_kind(r) == edge_type.src_kind]
        targets = [r for r in refs if g.node_kind(r) == edge_type.dst_kind]
        for src in sources:
            for dst in targets:
                if src != dst and rng.random() < 0.5:
                    g.add_edge(src, dst, edge_type.name, rng.normal(size=edge_type.feature_dim).tolist())
    return g.seal()


class TestOracleSafety:
    """Full-horizon oracle rollouts stay collision-free with bounded speeds."""

    @pytest.mark.parametrize("backend", [BackendType.IDM, BackendType.KRAUSS])
    @pytest.mark.parametrize("vehicles", [768, 128])
    def test_case_study(self, case_study_spec, backend, vehicles):
        spec = scale_demand(case_study_spec, vehicles / case_study_spec.demand.count)
        assert spec.demand.count == vehicles
        log = run(spec, RolloutConfig(backend=backend, horizon=600, seed=0))
        scan = collision_scan(log)
        assert scan.rows > 0
        assert scan.min_gap > 0
        low, high = speed_bounds(log)
        assert low >= 0.0
        assert high <= spec.krauss.v_max

    @pytest.mark.parametrize("backend", [BackendType.IDM, BackendType.KRAUSS])
    def test_whole_demand_enters(self, case_study_spec, backend):
        # the last departure is scheduled at step 3595
        result = simulate(case_study_spec, RolloutConfig(backend=backend, horizon=3600, seed=0))
        assert result.world.entered == 768
        assert not result.world.pending
        assert result.world.entered == result.world.exited + len(result.world.vehicles)
        assert result.world.violations == 0
        assert collision_scan(result.log).min_gap > 0


class TestIdmEquilibrium:
    def test_follower_gap_converges(self):
        spec = scenario_from_dict(one_lane_dict(length=10000.0))
        world = WorldState(step=0).with_vehicles(car("lead", "A_0", 300.0, 10.0, fixed_speed=10.0),
                                                 car("tail", "A_0", 200.0, 4.0))
        final = simulate(spec, RolloutConfig(backend=BackendType.IDM, horizon=500), world=world).world
        gap = final.vehicle("lead").offset - final.vehicle("tail").offset - 5.0
        assert gap == pytest.approx(equilibrium_gap(10.0, spec.idm), rel=5e-3)


class TestTransformerCorrectness:
    @pytest.mark.parametrize("nodes", [3, 5, 8, 10])
    def test_dense_reference_on_random_graphs(self, toy_schema, nodes):
        graph = random_graph(toy_schema, nodes, seed=nodes)
        config = ModelConfig(layers=3, heads=4, hidden=32, seed=nodes)
        model = HeteroGraphTransformer(toy_schema, config)
        h = torch.randn((nodes, 32), generator=torch.Generator().manual_seed(nodes), dtype=torch.float64)
        with torch.no_grad():
            for layer in model.layers:
                expected = dense_layer(layer, graph, h)
                assert torch.allclose(layer_forward(layer, graph, h), expected, atol=1e-10, rtol=0)
                h = expected

    def test_grad_check_at_full_width(self, toy_schema):
        graph = random_graph(toy_schema, 9, seed=4)
        targets = {ref: (0.5,) for ref in graph.nodes_of_kind("car")}
        model = HeteroGraphTransformer(toy_schema, ModelConfig(layers=3, heads=4, hidden=32, seed=2))
        assert grad_check(model, Batch(graph=graph, targets=targets), n_probes=100) < 1e-4


class TestLearnedFidelity:
    """Train on Krauss data and roll the learned backend out on a held-out seed."""

    @pytest.fixture(scope="class")
    def trained(self, case_study_spec):
        system = TrafficSimulationSystem(spec=case_study_spec,
                                         model_config=ModelConfig(epochs=300, learning_rate=1e-2), seed=0)
        dataset = system.collect(horizon=600, dci=1, backend=BackendType.KRAUSS)
        curve = system.pretrain(dataset)
        return system, curve

    def test_training_reduces_loss(self, trained):
        _, curve = trained
        assert curve[-1] < curve[0]

    def test_held_out_rollout(self, trained):
        system, _ = trained
        reference = system.simulate(BackendType.KRAUSS, 600, seed=1)
        learned = system.simulate(BackendType.LEARNED, 600, seed=1)
        low, high = speed_bounds(learned.log)
        assert 0.0 <= low and high <= 15.0
        assert learned.world.entered + len(learned.world.pending) == system.spec.demand.count
        report = comparison_report(reference.log, learned.log)
        metrics = report.metrics
        assert metrics["matched_rows"] > 0
        assert metrics["rmse_speed"] <= 0.10 * metrics["mean_speed_ref"]
        assert metrics["modal_dv"] == pytest.approx(0.0, abs=1e-9)
        assert metrics["mass_within_1mps"] >= 0.70
        assert metrics["coarse_hist_distance"] <= 0.10

    @pytest.mark.parametrize("seed", [2, 3, 4])
    def test_longer_interval_is_less_accurate(self, trained, seed):
        system, _ = trained
        report = system.compare_intervals([5, 10], horizon=600, seed=seed)
        assert report.metrics["rmse_dci_5"] <= report.metrics["rmse_dci_10"]
        assert report.metrics["dci_ordering"] is True


class TestScaling:
    def test_runtime_grows_linearly(self, case_study_spec):
        report = scaling_benchmark(case_study_spec, RolloutConfig(horizon=600), [0.25, 0.5, 1.0], repetitions=3)
        # ceil(601 * count / 3600) departures fall inside 600 steps
        assert [row.agents for row in report.scaling] == [33, 65, 129]
        assert [row.vehicles for row in report.scaling] == [192, 384, 768]
        assert report.fit.r_squared >= 0.9
        assert report.metrics["runtime_ratio"] <= 6.0


class TestRoundTrips:
    def test_encoded_world_graph(self, case_study_spec):
        from traffic_graph_sim.scenario import build_network_graph, world_to_graph
        spec = scale_demand(case_study_spec, 0.25)
        world = initial_world(spec, seed=0)
        cfg = RolloutConfig(horizon=1)
        for _ in range(120):
            world = step(world, cfg, spec)
        text = dumps_graph(world_to_graph(world, build_network_graph(spec), spec))
        assert dumps_graph(loads_graph(text)) == text

    def test_model_document(self, case_study_spec):
        from traffic_graph_sim.scenario import scenario_schema
        model = HeteroGraphTransformer(scenario_schema(case_study_spec), ModelConfig())
        text = dumps_model(model)
        assert dumps_model(loads_model(text)) == text

    def test_simulation_is_reproducible(self, case_study_spec):
        cfg = RolloutConfig(horizon=600, seed=5)
        assert run(case_study_spec, cfg).to_csv_string() == run(case_study_spec, cfg).to_csv_string()
