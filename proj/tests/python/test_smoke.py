import json

import numpy as np
import pytest

import disco


def test_graph_neighbors():
    g = disco.Graph.ring(12)
    assert disco.k_hop_neighbors(g, 0, 1) == [0, 1, 11]
    assert g.power(0).trace() == 12


def test_benchmark_closed_loop_is_skew():
    fleet = disco.robot_benchmark(disco.RobotFleetParams.defaults(12))
    cfg = disco.config_from_json(json.dumps({"schema_version": 1}))
    ctrl = disco.build_controller(cfg)
    assert ctrl.trainable_count() == 24480
    loop = disco.ClosedLoop(fleet.plant, ctrl)
    psi = loop.psi()
    assert psi.shape == (96, 96)
    assert np.abs(psi + psi.T).max() == 0.0


def test_rollout_and_dissipation():
    cfg = disco.config_from_json(json.dumps({"schema_version": 1, "plant": {"M": 4}, "training": {"N": 20}}))
    fleet = disco.make_fleet(cfg)
    loop = disco.ClosedLoop(fleet.plant, disco.build_controller(cfg))
    z0 = disco.closed_loop_initial_state(loop, fleet.initial_state)
    traj = disco.integrate(loop, z0, 20, 0.05, disco.Integrator.RK5)
    assert len(traj.states) == 21
    rep = disco.check_dissipation(loop, z0, 200, 0.05, disco.Integrator.RK5, 19)
    assert rep.monotone
    assert disco.evaluate_loss(loop, z0, disco.training_loss(cfg)).total > 0


def test_validation_errors_surface():
    with pytest.raises(disco.ValidationError):
        disco.config_from_json(json.dumps({"schema_version": 1, "training": {"lr": -1}}))


def test_train_command(tmp_path):
    cfg = disco.config_from_json(
        json.dumps({"schema_version": 1, "plant": {"M": 3}, "training": {"epochs": 2, "N": 10}})
    )
    cfg.output_dir = str(tmp_path)
    code, log = disco.cmd_train(cfg)
    assert code == 0
    assert "loss" in log
    ctrl = disco.load_controller(str(tmp_path / "controller.json"))
    assert disco.verify_distributed(ctrl, 1, 1).passed()
