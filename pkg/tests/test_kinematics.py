import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from robopainter import kinematics as kin
from robopainter.params import KKRow

angles = st.lists(st.floats(-math.pi, math.pi), min_size=6, max_size=6).map(np.array)


def test_kk_identity():
    assert np.allclose(kin.kk_transform(KKRow(0.0, 0.0, 0.0, 0.0, 1)).matrix, np.eye(4), atol=1e-15)


def test_kk_hand_evaluated(params):
    g = params.geometry
    T = kin.kk_transform(KKRow(math.pi / 2, g.D1, 0.0, g.RL2, 2)).matrix
    # Rot_x(alpha) Trans_x(d) Rot_z(theta) Trans_z(r), evaluated by hand
    assert np.allclose(T[:3, 3], [0.0784, -0.0644, 0.0], atol=1e-12)
    assert np.allclose(T[:3, :3], kin.rot_x(math.pi / 2), atol=1e-12)


@given(st.floats(-3, 3), st.floats(-1, 1), st.floats(-3, 3), st.floats(-1, 1), st.floats(-3, 3))
def test_kk_inverse_composition(alpha, d, theta, r, q):
    T = kin.kk_transform(KKRow(alpha, d, theta, r, 1), q)
    assert np.allclose((T @ T.inverse()).matrix, np.eye(4), atol=1e-12)


def test_zero_pose_matches_hand_chain(params):
    g = params.geometry
    tip = kin.arm_fk(np.zeros(6), params).translation
    mount = np.asarray(params.arm_mount)
    # all joint axes at zero: x gets D1 + D3 + D4, y gets RL2 + RL4 + RL5, z gets RL1 + RL7
    expected = mount + [g.D1 + g.D3 + g.D4, g.RL2 + g.RL4 + g.RL5, g.RL1 + g.RL7]
    assert np.allclose(tip, expected, atol=1e-12)


def test_transform_reorthonormalizes():
    R = kin.rot_z(0.3) + 1e-6
    T = kin.Transform(R, np.zeros(3))
    assert np.abs(T.rotation.T @ T.rotation - np.eye(3)).max() < 1e-12


@given(angles)
def test_jacobian_matches_finite_differences(params, q):
    J = kin.arm_jacobian(q, params)
    h = 1e-6
    T0 = kin.arm_fk(q, params)
    for i in range(6):
        dq = np.zeros(6)
        dq[i] = h
        Tp, Tm = kin.arm_fk(q + dq, params), kin.arm_fk(q - dq, params)
        v = (Tp.translation - Tm.translation) / (2 * h)
        w = kin.rotation_log(Tp.rotation @ Tm.rotation.T) / (2 * h)
        assert np.allclose(J[:3, i], v, atol=1e-6)
        assert np.allclose(J[3:, i], w, atol=1e-6)
    assert T0 is not None


def test_joint6_column_is_perpendicular_to_its_axis(params):
    q = np.random.default_rng(0).uniform(-1, 1, 6)
    J = kin.arm_jacobian(q, params)
    assert abs(J[:3, 5] @ J[3:, 5]) < 1e-12


def test_stretched_pose_is_singular(params):
    s = np.linalg.svd(kin.arm_jacobian(np.zeros(6), params), compute_uv=False)
    assert s[-1] < 1e-9 * s[0]


def test_ik_fixed_point(params):
    q0 = np.array([0.2, -0.8, 1.1, 0.3, 0.6, -0.4])
    q = kin.arm_ik(kin.arm_fk(q0, params), q0, params)
    assert np.allclose(q, q0, atol=1e-12)


@given(st.integers(0, 10_000))
def test_ik_round_trip(params, seed):
    rng = np.random.default_rng(seed)
    q0 = np.array([0.2, -0.8, 1.1, 0.3, 0.6, -0.4]) + rng.uniform(-0.5, 0.5, 6)
    target = kin.arm_fk(q0 + 0.05 * rng.normal(size=6), params)
    q = kin.arm_ik(target, q0, params)
    e = kin.pose_error(target, kin.arm_fk(q, params))
    assert np.linalg.norm(e[:3]) < 1e-6 and np.linalg.norm(e[3:]) < 1e-6


def test_ik_out_of_reach(params):
    target = kin.Transform(np.eye(3), [0.0, 0.0, 3.5])
    with pytest.raises(kin.NoConvergence):
        kin.arm_ik(target, np.zeros(6), params)


def _state(phi=0.0, betas=(math.pi, math.pi)):
    q = np.zeros(9)
    q[kin.PHI] = phi
    q[kin.BETA1], q[kin.BETA2] = betas
    return q


def test_straight_line_motion_is_admissible(params):
    q = _state()
    qd = kin.lift_mobility(q, [1.0, 0.0], params)
    assert np.abs(kin.base_constraint_matrix(q, params) @ qd).max() < 1e-12
    assert qd[kin.X] == pytest.approx(1.0) and qd[kin.Y] == pytest.approx(0.0)
    assert qd[kin.PHIF1] == pytest.approx(1 / 0.254) and qd[kin.PHIF2] == pytest.approx(1 / 0.254)


def test_lateral_slip_is_detected(params):
    qd = np.zeros(9)
    qd[kin.Y] = 1.0
    assert np.linalg.norm(kin.base_constraint_matrix(_state(), params) @ qd) > 0


def test_spin_in_place(params):
    qd = kin.lift_mobility(_state(), [0.0, 1.0], params)
    assert qd[kin.PHIF1] == pytest.approx(-qd[kin.PHIF2])
    assert qd[kin.X] == 0.0 and qd[kin.Y] == 0.0


@given(st.lists(st.floats(-math.pi, math.pi), min_size=9, max_size=9))
def test_null_space_is_two_dimensional(params, q):
    q = np.array(q)
    J = kin.base_constraint_matrix(q, params)
    S = kin.base_mobility_matrix(q, params)
    assert np.abs(J @ S).max() < 1e-12
    assert 9 - np.linalg.matrix_rank(J) == 2
    assert np.linalg.matrix_rank(S) == 2


def test_mobility_rate_matches_finite_difference(params):
    rng = np.random.default_rng(1)
    q = rng.uniform(-1, 1, 9)
    qd = kin.lift_mobility(q, rng.normal(size=2), params)
    h = 1e-6
    fd = (kin.base_mobility_matrix(q + h * qd, params) - kin.base_mobility_matrix(q - h * qd, params)) / (2 * h)
    assert np.allclose(kin.base_mobility_rate(q, qd, params), fd, atol=1e-7)
