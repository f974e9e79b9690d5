import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robopainter import motion as mo


@pytest.fixture(scope="module")
def arm(params):
    return mo.ArmModel(params)


@pytest.fixture(scope="module")
def wall():
    # wall along -x at y = 2, room interior at y < 2
    return mo.WallFrame(0, (2.0, 2.0), (-1.0, 0.0), 4.0, 2.7)


def test_wrap():
    assert np.allclose(mo.wrap([0.0, 3 * math.pi, -3 * math.pi / 2]), [0.0, -math.pi, math.pi / 2])


def test_wall_frame_geometry(wall):
    assert np.allclose(wall.normal, [0.0, -1.0])
    assert wall.heading == pytest.approx(0.0)
    u, d = wall.to_wall(wall.point(1.3, 0.8))
    assert (u, d) == (pytest.approx(1.3), pytest.approx(0.8))
    assert np.allclose(wall.post_pose(1.0), [1.0, 1.2, 0.0])


def test_core_pitch_schedule():
    assert mo.core_pitch(0.0) == pytest.approx(math.radians(-20))
    assert mo.core_pitch(2.45) == pytest.approx(math.radians(30))
    assert mo.core_pitch(5.0) == pytest.approx(math.radians(30))


@given(st.floats(0.5, 3.5), st.floats(0.0, 2.7), st.floats(-0.5, 0.9), st.sampled_from([0.0, math.pi / 2]))
def test_paint_target_aims_at_wall_point(u, z, pitch, roll):
    wall = mo.WallFrame(0, (2.0, 2.0), (-1.0, 0.0), 4.0, 2.7)
    pose = np.array([*wall.point(u, 0.8), wall.heading]) + [0.1, -0.05, 0.2]
    R, p = mo.paint_target(wall, pose, u, z, pitch, roll, 0.175)
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)
    c, s = math.cos(pose[2]), math.sin(pose[2])
    Rz = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    tip = Rz @ p + [pose[0], pose[1], 0.0]
    a = Rz @ R[:, 2]
    # tip is standoff from the wall plane and the spray axis hits (u, z)
    assert wall.to_wall(tip[:2])[1] == pytest.approx(0.175)
    k = (2.0 - tip[1]) / a[1]
    hit = tip + k * a
    assert hit[0] == pytest.approx(2.0 - u) and hit[2] == pytest.approx(z)


def test_ik_reaches_paint_target(arm, wall):
    pose = wall.post_pose(1.0)
    R, p = mo.paint_target(wall, pose, 1.1, 1.2, mo.core_pitch(1.2), 0.0, 0.175)
    q = arm.solve_pose(R, p, np.zeros(6))
    Rt, pt = arm.tool(q)
    assert np.allclose(pt, p, atol=1e-7) and np.allclose(Rt, R, atol=1e-7)


def test_tip_path_motion_follows_strip(arm, wall):
    pose = wall.post_pose(1.0)

    def point(u, z):
        return mo.paint_target(wall, pose, u, z, mo.core_pitch(z), 0.0, 0.175)

    legs = [(10.0, (1.12, 0.0), (1.12, 2.45), True)]
    R0, p0 = point(1.12, 0.0)
    near = arm.solve_pose(R0, p0, np.zeros(6))
    path = mo.tip_path_motion(arm, legs, point, near, 3.0)
    assert path.t0 == 3.0 and path.t_end == pytest.approx(13.0)
    for t in (3.0, 5.5, 8.0, 13.0):
        q, qd, _ = path.sample(t)
        s, _, _, _ = path.path_coordinate(t)
        _, pt = arm.tool(q[0])
        _, want = point(1.12, s[0])
        assert np.linalg.norm(pt - want) < 1e-4
    assert np.allclose(path.sample(3.0)[1], 0.0, atol=1e-12)
    assert path.spray(8.0)[0] and not path.spray(13.5)[0]
    later = path.retimed(20.0)
    assert np.allclose(later.sample(25.0)[0], path.sample(8.0)[0])


def test_move_time():
    assert mo.move_time(np.zeros(6), np.zeros(6)) == mo.MIN_MOVE_TIME
    q1 = np.array([0, 0, 4.0, 0, 0, 0])
    assert mo.move_time(np.zeros(6), q1) == pytest.approx(1.875 * 4.0 / mo.QD_MAX)


def test_joint_move_endpoints_and_speed_limit():
    q0, q1 = np.zeros(6), np.array([1.0, -2.0, 0.5, 0, 0, 3.0])
    m = mo.JointMove.between(q0, q1, 2.0)
    t = np.linspace(2.0, m.t_end, 201)
    q, qd, _ = m.sample(t)
    assert np.allclose(q[0], q0) and np.allclose(q[-1], q1)
    assert np.abs(qd).max() <= mo.QD_MAX + 1e-9
    assert not m.spray(t).any()
    chain = mo.Chain(m, mo.Hold(q1, m.t_end, 1.0))
    assert np.allclose(chain.sample(m.t_end + 0.5)[0], q1)
    assert chain.t_end == pytest.approx(m.t_end + 1.0)


@pytest.mark.parametrize("dist,vmax,amax,T", [(2.0, 0.5, 1.0, 4.5), (0.16, 0.5, 1.0, 0.8), (-2.0, 0.5, 1.0, 4.5)])
def test_trapezoid(dist, vmax, amax, T):
    Tp, prof = mo.trapezoid(dist, vmax, amax)
    assert Tp == pytest.approx(T)
    assert prof(0.0)[0] == 0.0
    s, v, _ = prof(Tp)
    assert s == pytest.approx(dist) and v == pytest.approx(0.0, abs=1e-12)
    peak = max(abs(prof(t)[1]) for t in np.linspace(0, Tp, 101))
    assert peak <= vmax + 1e-12


def test_trapezoid_zero_distance():
    T, prof = mo.trapezoid(0.0, 0.5, 1.0)
    assert T == 0.0 and prof(1.0) == (0.0, 0.0, 0.0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_base_motion_reaches_goal(gx, gy, psi0, gpsi):
    m = mo.plan_base_motion((0.0, 0.0, psi0), (gx, gy, gpsi), 1.0)
    x, y, psi, v, w = m.ref(m.t_end + 1.0)
    if math.hypot(gx, gy) > 0.005:
        assert (x, y) == (pytest.approx(gx, abs=1e-9), pytest.approx(gy, abs=1e-9))
    assert float(mo.wrap(psi - gpsi)) == pytest.approx(0.0, abs=1e-4)
    assert v == pytest.approx(0.0, abs=1e-9) and w == pytest.approx(0.0, abs=1e-9)


def test_base_motion_drives_backwards_when_shorter():
    m = mo.plan_base_motion((0.0, 0.0, 0.0), (-1.0, 0.0, 0.0), 0.0)
    assert [s.kind for s in m.segments] == ["line"]
    assert m.segments[0].amount == pytest.approx(-1.0)


def test_plan_turn_does_not_wrap():
    m = mo.plan_turn((0.0, 0.0, 0.0), 1.5 * math.pi, 0.0)
    assert m.ref(m.t_end)[2] == pytest.approx(1.5 * math.pi)


def test_tracking_command_on_reference_is_feedforward():
    v, w = mo.tracking_command((1.0, 2.0, 0.3, 0.4, 0.1), (1.0, 2.0, 0.3))
    assert (v, w) == (pytest.approx(0.4), pytest.approx(0.1))


def test_tracking_command_corrects_errors():
    v, _ = mo.tracking_command((1.0, 0.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    assert v > 0
    _, w = mo.tracking_command((0.0, 0.0, 0.5, 0.0, 0.0), (0.0, 0.0, 0.0))
    assert w > 0


def test_tracking_converges_in_closed_loop():
    pose = np.array([0.1, -0.1, 0.2])
    dt = 0.01
    for k in range(1000):
        t = k * dt
        ref = (0.3 * t, 0.0, 0.0, 0.3, 0.0)
        v, w = mo.tracking_command(ref, pose)
        pose = pose + dt * np.array([v * math.cos(pose[2]), v * math.sin(pose[2]), w])
    assert abs(pose[1]) < 0.01 and abs(pose[0] - 0.3 * 10.0) < 0.01
