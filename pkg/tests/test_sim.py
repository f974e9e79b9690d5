import json

import numpy as np
import pytest

from robopainter import dynamics as dyn
from robopainter import sim
from robopainter import kinematics as kin

FAST = sim.SimConfig(arm_model="kinematic", base_model="kinematic", paint=False, seed=1)


# ---------------------------------------------------------------- config

def test_config_defaults_and_round_trip():
    cfg = sim.SimConfig()
    assert cfg.dt == 1e-3 and cfg.tick == 0.05 and cfg.integrator == "RK4"
    assert sim.SimConfig.from_dict(cfg.to_dict()) == cfg
    assert sim.SimConfig.from_dict({"kp": [1, 2, 3, 4, 5, 6]}).kp == (1, 2, 3, 4, 5, 6)


@pytest.mark.parametrize("doc", [
    {"dt": 0.0}, {"dt": 0.003}, {"integrator": "Euler"}, {"kp": -1.0}, {"kd": [1.0, 2.0]},
    {"arm_model": "rigid"}, {"duration_cap": 0.0}, {"bogus": 1}, {"base_dt": 0.03},
])
def test_config_validation(doc):
    with pytest.raises(sim.ConfigError):
        sim.SimConfig.from_dict(doc)


def test_load_sim_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 7, "integrator": "semi-implicit-Euler"}))
    assert sim.load_sim_config(p).seed == 7
    p.write_text("[1, 2]")
    with pytest.raises(sim.ConfigError):
        sim.load_sim_config(p)
    with pytest.raises(sim.ConfigError):
        sim.load_sim_config(tmp_path / "missing.json")


# ---------------------------------------------------------------- single step

def test_zero_state_stays_put_without_gravity(params):
    arm = sim.ArmState(np.zeros(6), np.zeros(6))
    qb = np.zeros(9)
    base = sim.BaseState(qb, np.zeros(2))
    a, b = sim.integrate_step(arm, base, np.zeros(6), np.zeros(2), 1e-3, params, gravity=False)
    assert np.array_equal(a.q, arm.q) and np.array_equal(a.qd, arm.qd)
    assert np.allclose(b.q, qb) and np.allclose(b.u, 0.0)


def test_rejects_nonpositive_step(params):
    with pytest.raises(ValueError):
        sim.integrate_step(sim.ArmState(np.zeros(6), np.zeros(6)), None, np.zeros(6), None, 0.0, params)


def _rollout(params, dt, T=0.4, integrator="RK4"):
    s = sim.ArmState(np.array([0.2, -0.5, 0.8, 0.1, 0.4, 0.0]), np.array([0.5, 0.0, -0.3, 0.2, 0.0, 0.1]))
    for _ in range(int(round(T / dt))):
        s, _ = sim.integrate_step(s, None, np.zeros(6), None, dt, params, integrator=integrator)
    return s.q


def test_rk4_is_fourth_order(params):
    ref = _rollout(params, 0.0025)
    e1 = np.abs(_rollout(params, 0.02) - ref).max()
    e2 = np.abs(_rollout(params, 0.01) - ref).max()
    assert 10.0 < e1 / e2 < 22.0


def test_semi_implicit_euler_is_first_order(params):
    ref = _rollout(params, 0.0025, integrator="RK4")
    e1 = np.abs(_rollout(params, 0.01, integrator="semi-implicit-Euler") - ref).max()
    e2 = np.abs(_rollout(params, 0.005, integrator="semi-implicit-Euler") - ref).max()
    assert 1.5 < e1 / e2 < 2.6


def test_base_step_respects_constraints(params):
    qb = np.zeros(9)
    base = sim.BaseState(qb, np.array([0.3, 0.2]))
    for _ in range(100):
        _, base = sim.integrate_step(None, base, None, np.array([0.5, -0.2]), 1e-3, params)
    J = kin.base_constraint_matrix(base.q, params)
    qd = kin.base_mobility_matrix(base.q, params) @ base.u
    assert np.abs(J @ qd).max() < 1e-10


# ---------------------------------------------------------------- control

def test_computed_torque_on_reference_is_inverse_dynamics(params):
    q = np.array([0.1, -0.6, 1.2, 0.0, 0.5, 0.0])
    qd = np.array([0.2, 0.1, -0.1, 0.0, 0.3, 0.0])
    qdd = np.array([0.5, -0.2, 0.1, 0.4, 0.0, 0.2])
    tau = sim.computed_torque_control((q, qd, qdd), sim.ArmState(q, qd), (400.0, 40.0), params)
    want = dyn.arm_inverse_dynamics_lagrange(q, qd, qdd, params, include_rotor=True)
    assert np.allclose(tau, want)


def test_computed_torque_gives_critically_damped_error(params):
    # Kp = 400, Kd = 40: every joint error follows e0 (1 + 20 t) exp(-20 t)
    q_r = np.array([0.0, -0.6, 1.2, 0.0, 0.5, 0.0])
    ref = (q_r, np.zeros(6), np.zeros(6))
    s = sim.ArmState(q_r + 0.02, np.zeros(6))
    e0 = np.abs(s.q - q_r).max()
    for _ in range(300):
        tau = sim.computed_torque_control(ref, s, (400.0, 40.0), params)
        s, _ = sim.integrate_step(s, None, tau, None, 1e-3, params)
    want = e0 * (1 + 20 * 0.3) * np.exp(-20 * 0.3)
    assert np.allclose(s.q - q_r, want, rtol=0.01)  # torque is held over each 1 ms step


# ---------------------------------------------------------------- missions

def test_pure_strip_rate():
    assert sim.pure_strip_rate() == pytest.approx(0.25 * 2.45 / 10 * 3600)


def test_nominal_mission_report(nominal_mission):
    result, _ = nominal_mission
    r = result.report
    assert r.status == "completed"
    assert r.max_tracking_error < 5e-3
    assert r.covered_fraction >= 0.99
    assert r.max_constraint_residual < 1e-6
    assert r.spray_time == pytest.approx(4 * (17 * 10.0 + 16.0), rel=0.02)
    assert r.time_budget["spray"] == pytest.approx(r.spray_time)
    assert r.painting_rate == pytest.approx(r.painted_area / r.total_time * 3600, rel=1e-9)
    assert json.loads(r.to_json())["schema_version"] == sim.SCHEMA_VERSION


def test_fast_mission_in_door_room(params, door_room, tmp_path):
    cfg = sim.SimConfig.from_dict({**FAST.to_dict(), "report_path": str(tmp_path / "r.json"),
                                   "svg_path": str(tmp_path / "cov.svg")})
    result = sim.run_mission(params, door_room, cfg)
    r = result.report
    assert r.status == "completed"
    assert r.opening_area == pytest.approx(3.33)
    assert r.paintable_area == pytest.approx(4 * 4.0 * 2.7 - 3.33)
    assert len(r.openings) == 2
    assert json.loads((tmp_path / "r.json").read_text())["opening_area"] == pytest.approx(3.33)
    assert sorted(p.name for p in tmp_path.glob("cov_wall*.svg")) == [f"cov_wall{k}.svg" for k in range(4)]


def test_duration_cap_stops_mission(params, empty_room):
    cfg = sim.SimConfig.from_dict({**FAST.to_dict(), "duration_cap": 30.0})
    result = sim.run_mission(params, empty_room, cfg, keep_trace=False)
    assert result.report.status != "completed"
    assert result.report.total_time <= 30.0 + 1e-9
