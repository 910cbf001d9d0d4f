"""Tests for leader resolution, the step function, rollouts and dataset collection."""

import json

import pandas as pd
import pytest
import torch

from traffic_graph_sim.errors import DatasetError, GraphFormatError, SimulationError
from traffic_graph_sim.learner import HeteroGraphTransformer, ModelConfig
from traffic_graph_sim.oracles import equilibrium_gap
from traffic_graph_sim.scenario import scale_demand, scenario_schema
from traffic_graph_sim.scenario.spec import scenario_from_dict
from traffic_graph_sim.simulation import (
    COLUMNS, GAP_SENTINEL, BackendType, LeaderKind, RolloutConfig, TrajectoryDataset, TrajectoryLog,
    WorldState, collect_dataset, control_leader, default_registry, initial_world, resolve_leader, rollout, run,
    simulate, step
)
from traffic_graph_sim.simulation.engine import log_rows

from conftest import car, one_lane_dict

IDM = RolloutConfig(backend=BackendType.IDM, horizon=10)
KRAUSS = RolloutConfig(backend=BackendType.KRAUSS, horizon=10)


def world_of(spec, *vehicles):
    return WorldState(step=0, phases=spec.network_index().phases_at(0.0)).with_vehicles(*vehicles)


def identity_model(spec):
    """All weights zero, so only the residual speed reaches the readout"""
    model = HeteroGraphTransformer(scenario_schema(spec), ModelConfig(layers=2, heads=2, hidden=8))
    with torch.no_grad():
        for parameter in model.parameters():
            parameter.zero_()
    return model


class TestLeaders:
    """Leader resolution on a lane and at signals."""

    def test_same_lane_leader(self, one_lane_spec):
        follower = car("b", "A_0", 10.0, 8.0)
        world = world_of(one_lane_spec, car("a", "A_0", 50.0, 10.0), follower)
        info = resolve_leader(world, follower, one_lane_spec)
        assert info.kind == LeaderKind.REAL
        assert info.leader_id == "a"
        assert info.gap == pytest.approx(35.0)
        assert info.speed == 10.0

    def test_free_road(self, one_lane_spec):
        vehicle = car("a", "A_0", 50.0, 10.0)
        info = resolve_leader(world_of(one_lane_spec, vehicle), vehicle, one_lane_spec)
        assert info.kind == LeaderKind.NONE
        assert info.gap == GAP_SENTINEL
        assert info.speed == 15.0

    def test_red_light_is_virtual_leader(self, red_spec):
        vehicle = car("a", "A_0", 80.0, 10.0, route=["A_0", "B_0"])
        info = resolve_leader(world_of(red_spec, vehicle), vehicle, red_spec)
        assert info.kind == LeaderKind.VIRTUAL
        assert info.gap == pytest.approx(20.0)
        assert info.speed == 0.0
        assert info.leader_id is None

    def test_green_light_ignores_downstream_car(self, green_spec):
        vehicle = car("a", "A_0", 80.0, 10.0, route=["A_0", "B_0"])
        world = world_of(green_spec, vehicle, car("z", "B_0", 30.0, 6.0, route=["A_0", "B_0"], route_pos=1))
        info = resolve_leader(world, vehicle, green_spec)
        assert info.kind == LeaderKind.NONE
        assert info.gap == GAP_SENTINEL
        assert info.leader_id is None

    def test_controller_looks_past_green_light(self, green_spec):
        vehicle = car("a", "A_0", 80.0, 10.0, route=["A_0", "B_0"])
        world = world_of(green_spec, vehicle, car("z", "B_0", 30.0, 6.0, route=["A_0", "B_0"], route_pos=1))
        info = control_leader(world, vehicle, green_spec)
        assert info.kind == LeaderKind.DOWNSTREAM
        assert info.leader_id == "z"
        assert info.gap == pytest.approx(45.0)
        assert not info.is_real

    def test_controller_keeps_red_light(self, red_spec):
        vehicle = car("a", "A_0", 80.0, 10.0, route=["A_0", "B_0"])
        world = world_of(red_spec, vehicle, car("z", "B_0", 30.0, 6.0, route=["A_0", "B_0"], route_pos=1))
        assert control_leader(world, vehicle, red_spec).kind == LeaderKind.VIRTUAL

    def test_log_has_no_cross_lane_leader(self, green_spec):
        world = world_of(green_spec, car("a", "A_0", 80.0, 10.0, route=["A_0", "B_0"]),
                         car("z", "B_0", 30.0, 6.0, route=["A_0", "B_0"], route_pos=1))
        rows = {row[2]: row for row in log_rows(world, green_spec, 1.0)}
        assert rows["a"][7] == ""
        assert rows["a"][8] == GAP_SENTINEL

    def test_green_light_empty_downstream(self, green_spec):
        vehicle = car("a", "A_0", 80.0, 10.0, route=["A_0", "B_0"])
        assert resolve_leader(world_of(green_spec, vehicle), vehicle, green_spec).kind == LeaderKind.NONE

    def test_same_lane_leader_beats_red_light(self, red_spec):
        follower = car("b", "A_0", 40.0, 8.0, route=["A_0", "B_0"])
        world = world_of(red_spec, car("a", "A_0", 90.0, 0.0, route=["A_0", "B_0"]), follower)
        info = resolve_leader(world, follower, red_spec)
        assert info.kind == LeaderKind.REAL
        assert info.gap == pytest.approx(45.0)

    def test_unknown_lane(self, one_lane_spec):
        vehicle = car("a", "nowhere", 0.0, 0.0)
        with pytest.raises(SimulationError):
            resolve_leader(world_of(one_lane_spec, vehicle), vehicle, one_lane_spec)


class TestStep:
    """Single transitions."""

    def test_idm_from_rest(self, one_lane_spec):
        world = step(world_of(one_lane_spec, car("a", "A_0", 0.0, 0.0)), IDM, one_lane_spec)
        vehicle = world.vehicle("a")
        assert world.step == 1
        assert vehicle.speed == pytest.approx(1.0)
        assert vehicle.offset == pytest.approx(0.5)
        assert vehicle.accel == pytest.approx(1.0)

    def test_empty_world(self, one_lane_spec):
        world = step(WorldState(step=4), KRAUSS, one_lane_spec)
        assert world.step == 5
        assert len(world) == 0

    def test_step_is_pure(self, one_lane_spec):
        before = world_of(one_lane_spec, car("a", "A_0", 0.0, 0.0))
        assert step(before, IDM, one_lane_spec) == step(before, IDM, one_lane_spec)
        assert before.vehicle("a").offset == 0.0

    def test_fixed_speed_is_kept(self, one_lane_spec):
        world = world_of(one_lane_spec, car("a", "A_0", 0.0, 3.0, fixed_speed=3.0))
        assert step(world, KRAUSS, one_lane_spec).vehicle("a").speed == 3.0

    def test_vehicle_leaves_at_route_end(self):
        spec = scenario_from_dict(one_lane_dict(length=100.0))
        world = step(world_of(spec, car("a", "A_0", 95.0, 15.0)), KRAUSS, spec)
        assert len(world) == 0
        assert world.exited == 1

    def test_vehicle_moves_to_next_lane(self, green_spec):
        world = step(world_of(green_spec, car("a", "A_0", 95.0, 10.0, route=["A_0", "B_0"])), KRAUSS, green_spec)
        vehicle = world.vehicle("a")
        assert vehicle.lane == "B_0"
        assert vehicle.route_pos == 1
        assert vehicle.offset == pytest.approx(95.0 + (10.0 + vehicle.speed) / 2.0 - 100.0)

    def test_learned_requires_model(self, one_lane_spec):
        cfg = RolloutConfig(backend=BackendType.LEARNED, horizon=1)
        with pytest.raises(SimulationError):
            step(world_of(one_lane_spec, car("a", "A_0", 0.0, 0.0)), cfg, one_lane_spec)

    def test_learned_identity_model_keeps_speeds(self, one_lane_spec):
        cfg = RolloutConfig(backend=BackendType.LEARNED, horizon=1)
        model = identity_model(one_lane_spec)
        world = world_of(one_lane_spec, car("a", "A_0", 100.0, 10.0), car("b", "A_0", 30.0, 5.0))
        for _ in range(5):
            world = step(world, cfg, one_lane_spec, model)
        assert world.vehicle("a").speed == pytest.approx(10.0)
        assert world.vehicle("b").speed == pytest.approx(5.0)
        assert world.vehicle("a").offset == pytest.approx(150.0)
        assert world.vehicle("b").offset == pytest.approx(55.0)

    def test_stopped_vehicle_ignores_tiny_prediction(self, one_lane_spec):
        cfg = RolloutConfig(backend=BackendType.LEARNED, horizon=1)
        model = identity_model(one_lane_spec)
        with torch.no_grad():
            model.readout.bias.fill_(0.01)
        world = world_of(one_lane_spec, car("a", "A_0", 100.0, 0.0), car("b", "A_0", 30.0, 5.0))
        world = step(world, cfg, one_lane_spec, model)
        assert world.vehicle("a").speed == 0.0
        assert world.vehicle("a").offset == 100.0
        assert world.vehicle("b").speed == pytest.approx(5.15)

    def test_idm_counts_overlap_as_violation(self, one_lane_spec):
        world = world_of(one_lane_spec, car("a", "A_0", 12.0, 5.0), car("b", "A_0", 10.0, 0.0))
        world = step(world, IDM, one_lane_spec)
        assert world.violations == 1
        assert world.clamps == 0
        assert world.vehicle("b").speed == 0.0

    def test_gap_guard_prevents_collision(self, one_lane_spec):
        world = world_of(one_lane_spec,
                         car("a", "A_0", 20.0, 0.0, fixed_speed=0.0),
                         car("b", "A_0", 10.0, 15.0, fixed_speed=15.0))
        world = step(world, KRAUSS, one_lane_spec)
        gap = world.vehicle("a").offset - world.vehicle("b").offset - 5.0
        assert gap >= 0.1 - 1e-9
        assert world.clamps == 1


class TestRollout:
    """Multi-step rollouts and their logs."""

    def test_horizon_zero(self, case_study_spec):
        result = simulate(case_study_spec, RolloutConfig(horizon=0))
        assert len(result.log) == 0
        assert result.world.step == 0
        assert list(result.log.frame.columns) == COLUMNS

    def test_rollout_yields_every_world(self, one_lane_spec):
        worlds = list(rollout(one_lane_spec, RolloutConfig(horizon=4)))
        assert [w.step for w in worlds] == [0, 1, 2, 3, 4]

    def test_empty_demand(self, one_lane_spec):
        result = simulate(one_lane_spec, RolloutConfig(horizon=10))
        assert result.summary()["rows"] == 0
        assert result.summary()["steps"] == 10

    def test_deterministic(self, case_study_spec):
        spec = scale_demand(case_study_spec, 0.1)
        cfg = RolloutConfig(horizon=60, seed=2)
        assert run(spec, cfg).to_csv_string() == run(spec, cfg).to_csv_string()

    def test_vehicles_are_conserved(self, case_study_spec):
        spec = scale_demand(case_study_spec, 0.25)
        summary = simulate(spec, RolloutConfig(horizon=200)).summary()
        assert summary["entered"] == summary["exited"] + summary["active"]
        assert summary["entered"] + summary["pending"] == spec.demand.count

    def test_oracle_rollout_is_physical(self, case_study_spec):
        spec = scale_demand(case_study_spec, 0.25)
        frame = run(spec, RolloutConfig(horizon=200)).frame
        assert len(frame) > 0
        assert frame["speed_mps"].between(0.0, 15.0).all()
        assert (frame["gap_m"] > 0).all()

    def test_log_rows_sorted(self, case_study_spec):
        frame = run(scale_demand(case_study_spec, 0.1), RolloutConfig(horizon=60)).frame
        keys = list(zip(frame["step"], frame["vehicle_id"]))
        assert keys == sorted(keys)

    def test_red_light_holds_traffic(self, red_spec):
        world = world_of(red_spec, car("a", "A_0", 20.0, 10.0, route=["A_0", "B_0"]))
        held = simulate(red_spec, RolloutConfig(horizon=25), world=world).world
        assert held.vehicle("a").lane == "A_0"
        released = simulate(red_spec, RolloutConfig(horizon=40), world=held).world
        assert released.exited == 1

    def test_idm_follower_settles_at_equilibrium(self):
        spec = scenario_from_dict(one_lane_dict(length=10000.0))
        world = world_of(spec, car("lead", "A_0", 500.0, 10.0, fixed_speed=10.0), car("tail", "A_0", 400.0, 10.0))
        final = simulate(spec, RolloutConfig(backend=BackendType.IDM, horizon=500), world=world).world
        gap = final.vehicle("lead").offset - final.vehicle("tail").offset - 5.0
        assert gap == pytest.approx(equilibrium_gap(10.0, spec.idm), abs=1e-2)
        assert final.vehicle("tail").speed == pytest.approx(10.0, abs=1e-3)

    def test_initial_world_schedule(self, case_study_spec):
        world = initial_world(case_study_spec, seed=0)
        assert world.step == 0
        assert len(world.pending) == 768
        assert world.phases["TL_C"].index == 0


class TestTrajectoryLog:
    """CSV trajectory files."""

    def test_csv_round_trip(self, case_study_spec, tmp_path):
        log = run(scale_demand(case_study_spec, 0.1), RolloutConfig(horizon=40))
        path = tmp_path / "log.csv"
        log.to_csv(path)
        pd.testing.assert_frame_equal(TrajectoryLog.from_csv(path).frame, log.frame, check_dtype=False)

    def test_sentinel_written_literally(self, one_lane_spec):
        world = world_of(one_lane_spec, car("a", "A_0", 0.0, 5.0))
        text = simulate(one_lane_spec, RolloutConfig(horizon=1), world=world).log.to_csv_string()
        header, row = text.strip().split("\n")
        assert header.split(",") == COLUMNS
        assert row.split(",")[-2:] == ["", "1e6"]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("step,speed\n1,2\n", encoding="utf-8")
        with pytest.raises(DatasetError):
            TrajectoryLog.from_csv(path)


class TestDataset:
    """Supervised pair collection."""

    @pytest.mark.parametrize("horizon,dci,pairs", [(100, 5, 20), (100, 10, 10), (7, 5, 1), (5, 5, 1)])
    def test_pair_counts(self, case_study_spec, horizon, dci, pairs):
        spec = scale_demand(case_study_spec, 0.05)
        assert len(collect_dataset(spec, RolloutConfig(horizon=horizon, dci=dci))) == pairs

    def test_horizon_shorter_than_interval(self, case_study_spec):
        with pytest.raises(DatasetError):
            collect_dataset(case_study_spec, RolloutConfig(horizon=3, dci=5))

    def test_learned_backend_rejected(self, case_study_spec):
        with pytest.raises(SimulationError):
            collect_dataset(case_study_spec, RolloutConfig(backend=BackendType.LEARNED, horizon=10))

    def test_departed_cars_are_masked(self):
        spec = scenario_from_dict(one_lane_dict(length=50.0, count=3, depart_end=3))
        dataset = collect_dataset(spec, RolloutConfig(horizon=20, dci=5))
        assert len(dataset) == 4
        for batch in dataset:
            cars = set(batch.graph.nodes_of_kind("car"))
            assert set(batch.targets) | batch.mask == cars
            assert not set(batch.targets) & batch.mask
            assert all(0.0 <= t[0] <= 1.0 for t in batch.targets.values())
        assert any(batch.mask for batch in dataset)

    def test_save_and_load(self, case_study_spec, tmp_path):
        dataset = collect_dataset(scale_demand(case_study_spec, 0.05), RolloutConfig(horizon=30, dci=10))
        path = tmp_path / "data.json"
        dataset.save(path)
        loaded = TrajectoryDataset.load(path)
        assert len(loaded) == len(dataset)
        assert [b.targets for b in loaded] == [b.targets for b in dataset]
        assert loaded.target_count() == dataset.target_count()
        assert loaded.dci == 10

    def test_entries_without_interval_load_at_one(self, case_study_spec, tmp_path):
        items = collect_dataset(scale_demand(case_study_spec, 0.05), RolloutConfig(horizon=10, dci=5)).to_list()
        for item in items:
            del item["dci"]
        path = tmp_path / "pairs.json"
        path.write_text(json.dumps(items), encoding="utf-8")
        loaded = TrajectoryDataset.load(path)
        assert loaded.dci == 1
        assert len(loaded) == 2

    @pytest.mark.parametrize("dci", [0, "5", True, 3])
    def test_bad_interval_rejected(self, case_study_spec, tmp_path, dci):
        items = collect_dataset(scale_demand(case_study_spec, 0.05), RolloutConfig(horizon=10, dci=5)).to_list()
        items[0]["dci"] = dci
        path = tmp_path / "data.json"
        path.write_text(json.dumps(items), encoding="utf-8")
        with pytest.raises(GraphFormatError):
            TrajectoryDataset.load(path)


class TestRegistry:
    """Backend registry."""

    def test_available_backends(self):
        listed = default_registry().get_available_backends()
        assert [b["backend_type"] for b in listed] == ["idm", "krauss", "learned"]
        assert all({"name", "description", "parameters"} <= set(b) for b in listed)
