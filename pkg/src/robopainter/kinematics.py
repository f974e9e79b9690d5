"""Arm kinematics in Khalil-Kleinfinger notation and mobile-base constraint kinematics.

Frame j of the arm is obtained from frame j-1 by
``RotX(alpha) @ TransX(d) @ RotZ(theta + q) @ TransZ(r)``. Functions taking
``q`` accept a trailing axis of 6 joints and broadcast over leading axes.

Base generalized coordinates (9):
``[x, y, phi, beta_1c, beta_2c, phi_1f, phi_2f, phi_1c, phi_2c]``.
Wheel/castor index 1 sits on the right (-y of the base frame), index 2 on the left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from robopainter.params import KKRow, RobotParams

ORTHO_TOL = 1e-9
IK_DAMPING = 1e-3
IK_MAX_ITER = 200

# base coordinate indices
X, Y, PHI, BETA1, BETA2, PHIF1, PHIF2, PHIC1, PHIC2 = range(9)
SIDE = (-1.0, 1.0)


class NoConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(f"IK did not converge after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class CastorSingularity(ValueError):
    pass


def _orthonormalize(R: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(R)
    out = u @ vt
    if np.linalg.det(out) < 0:
        u[:, -1] *= -1
        out = u @ vt
    return out


@dataclass(frozen=True)
class Transform:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        if np.abs(R.T @ R - np.eye(3)).max() > ORTHO_TOL:
            R = _orthonormalize(R)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", np.array(self.translation, dtype=float).reshape(3))

    @classmethod
    def identity(cls) -> "Transform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T) -> "Transform":
        T = np.asarray(T)
        return cls(T[:3, :3], T[:3, 3])

    @classmethod
    def planar(cls, x: float, y: float, yaw: float, z: float = 0.0) -> "Transform":
        return cls(rot_z(yaw), [x, y, z])

    @property
    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def __matmul__(self, other: "Transform") -> "Transform":
        return Transform(self.rotation @ other.rotation,
                         self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Transform":
        Rt = self.rotation.T
        return Transform(Rt, -Rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        return np.asarray(points) @ self.rotation.T + self.translation

    @property
    def yaw(self) -> float:
        return float(np.arctan2(self.rotation[1, 0], self.rotation[0, 0]))


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def kk_matrix(alpha, d, theta, r) -> np.ndarray:
    """Homogeneous KK transform; ``theta`` may be an array (leading axes broadcast)."""
    theta = np.asarray(theta, dtype=float)
    ca, sa = np.cos(alpha), np.sin(alpha)
    ct, st = np.cos(theta), np.sin(theta)
    T = np.zeros(theta.shape + (4, 4))
    T[..., 0, 0] = ct
    T[..., 0, 1] = -st
    T[..., 0, 3] = d
    T[..., 1, 0] = ca * st
    T[..., 1, 1] = ca * ct
    T[..., 1, 2] = -sa
    T[..., 1, 3] = -r * sa
    T[..., 2, 0] = sa * st
    T[..., 2, 1] = sa * ct
    T[..., 2, 2] = ca
    T[..., 2, 3] = r * ca
    T[..., 3, 3] = 1.0
    return T


def kk_transform(row: KKRow, q: float = 0.0) -> Transform:
    return Transform.from_matrix(kk_matrix(row.alpha, row.d, row.theta_offset + q, row.r))


def arm_frames(q, params: RobotParams) -> np.ndarray:
    """Frames 0..6 plus the tool frame, in the mobile-base frame: shape (..., 8, 4, 4).

    Frame 0 is the arm mount (a pure translation on the base).
    """
    q = np.asarray(q, dtype=float)
    lead = q.shape[:-1]
    frames = np.empty(lead + (8, 4, 4))
    T = np.broadcast_to(np.eye(4), lead + (4, 4)).copy()
    T[..., :3, 3] = params.arm_mount
    frames[..., 0, :, :] = T
    for j, row in enumerate(params.kk_table):
        theta = row.theta_offset + (q[..., row.joint - 1] if row.joint else np.zeros(lead))
        T = T @ kk_matrix(row.alpha, row.d, theta, row.r)
        frames[..., j + 1, :, :] = T
    return frames


def arm_fk_matrix(q, params: RobotParams) -> np.ndarray:
    return arm_frames(q, params)[..., 7, :, :]


def arm_fk(q, params: RobotParams) -> Transform:
    """Pose of the spray-nozzle tip in the mobile-base frame."""
    return Transform.from_matrix(arm_fk_matrix(q, params))


def _joint_axes(frames):
    """Joint axes z_j and origins o_j for the 6 actuated joints (frames 1..6)."""
    return frames[..., 1:7, :3, 2], frames[..., 1:7, :3, 3]


def arm_jacobian(q, params: RobotParams) -> np.ndarray:
    """Geometric Jacobian (..., 6, 6) mapping joint rates to [tip linear; angular] velocity."""
    frames = arm_frames(q, params)
    z, o = _joint_axes(frames)
    tip = frames[..., 7, :3, 3]
    lin = np.cross(z, tip[..., None, :] - o)
    J = np.concatenate([lin, z], axis=-1)  # (..., 6 joints, 6)
    return np.swapaxes(J, -1, -2)


def link_cg_jacobians(q, params: RobotParams):
    """Per-link CG positions, rotations and Jacobians.

    Returns ``(cg, R, Jv, Jw)`` with shapes (..., 6, 3), (..., 6, 3, 3),
    (..., 6, 3, 6), (..., 6, 3, 6).
    """
    frames = arm_frames(q, params)
    z, o = _joint_axes(frames)
    R = frames[..., 1:7, :3, :3]
    cgl = np.array([l.cg for l in params.arm_links])
    cg = np.einsum("...kij,kj->...ki", R, cgl) + frames[..., 1:7, :3, 3]
    # link k moves with joints j <= k
    mask = np.tril(np.ones((6, 6)))
    lin = np.cross(z[..., None, :, :], cg[..., :, None, :] - o[..., None, :, :])
    Jv = np.swapaxes(lin * mask[..., None], -1, -2)
    Jw = np.swapaxes(np.broadcast_to(z[..., None, :, :], lin.shape) * mask[..., None], -1, -2)
    return cg, R, Jv, Jw


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix."""
    c = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(c)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if angle < 1e-9:
        return 0.5 * w
    if np.pi - angle < 1e-6:
        # near pi: axis from the symmetric part
        B = (R + np.eye(3)) / 2.0
        axis = np.sqrt(np.clip(np.diag(B), 0.0, None))
        k = int(np.argmax(axis))
        axis = B[k] / axis[k]
        axis /= np.linalg.norm(axis)
        if w @ axis < 0:
            axis = -axis
        return angle * axis
    return angle / (2.0 * np.sin(angle)) * w


def pose_error(target: Transform, current: Transform) -> np.ndarray:
    dp = target.translation - current.translation
    dw = rotation_log(target.rotation @ current.rotation.T)
    return np.concatenate([dp, dw])


def arm_ik(target: Transform, seed, params: RobotParams, tol: float = 1e-6,
           max_iter: int = IK_MAX_ITER, damping: float = IK_DAMPING) -> np.ndarray:
    """Damped least-squares IK from ``seed``; raises NoConvergence."""
    q = np.array(seed, dtype=float)
    lam2 = damping ** 2
    residual = np.inf
    for it in range(max_iter + 1):
        T = arm_fk_matrix(q, params)
        e = pose_error(target, Transform.from_matrix(T))
        residual = max(np.linalg.norm(e[:3]), np.linalg.norm(e[3:]))
        if residual < tol:
            return q
        if it == max_iter:
            break
        J = arm_jacobian(q, params)
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(6), e)
        step = np.abs(dq).max()
        if step > 0.5:
            dq *= 0.5 / step
        q = q + dq
    raise NoConvergence(max_iter, float(residual))


# --------------------------------------------------------------------------- base

def _castor_geometry(params: RobotParams):
    g = params.geometry
    if g.d == 0:
        raise CastorSingularity("castor trail d = 0 leaves the steering rate undefined")
    return g.a, g.p, g.d, g.r_c


def base_constraint_matrix(q_b, params: RobotParams) -> np.ndarray:
    """Rolling and no-slip constraints J (7x9), with J @ qdot_b = 0 for admissible motion.

    Rows: base lateral no-slip, fixed wheel 1/2 rolling, castor 1/2 no-slip,
    castor 1/2 rolling.
    """
    g = params.geometry
    a, p, d, rc = _castor_geometry(params)
    phi = q_b[PHI]
    c, s = np.cos(phi), np.sin(phi)
    J = np.zeros((7, 9))
    J[0, [X, Y]] = -s, c
    for i, sgn in enumerate(SIDE):
        J[1 + i, [X, Y, PHI]] = c, s, -sgn * g.b
        J[1 + i, PHIF1 + i] = -g.r_f
    for i, sgn in enumerate(SIDE):
        beta = q_b[BETA1 + i]
        th = phi + beta
        sb, cb = np.sin(beta), np.cos(beta)
        J[3 + i, [X, Y, PHI]] = -np.sin(th), np.cos(th), sgn * p * sb - a * cb + d
        J[3 + i, BETA1 + i] = d
        J[5 + i, [X, Y, PHI]] = np.cos(th), np.sin(th), -sgn * p * cb - a * sb
        J[5 + i, PHIC1 + i] = rc
    return J


def base_mobility_matrix(q_b, params: RobotParams) -> np.ndarray:
    """S_b (9x2): qdot_b = S_b @ [v, omega], spanning the null space of the constraints."""
    g = params.geometry
    a, p, d, rc = _castor_geometry(params)
    phi = q_b[PHI]
    S = np.zeros((9, 2))
    S[X, 0] = np.cos(phi)
    S[Y, 0] = np.sin(phi)
    S[PHI, 1] = 1.0
    for i, sgn in enumerate(SIDE):
        beta = q_b[BETA1 + i]
        sb, cb = np.sin(beta), np.cos(beta)
        S[BETA1 + i] = sb / d, (-sgn * p * sb + a * cb) / d - 1.0
        S[PHIC1 + i] = -cb / rc, (sgn * p * cb + a * sb) / rc
        S[PHIF1 + i] = 1.0 / g.r_f, -sgn * g.b / g.r_f
    return S


def base_mobility_rate(q_b, qd_b, params: RobotParams) -> np.ndarray:
    """Time derivative of S_b along qdot_b (analytic)."""
    a, p, d, rc = _castor_geometry(params)
    phi = q_b[PHI]
    Sd = np.zeros((9, 2))
    Sd[X, 0] = -np.sin(phi) * qd_b[PHI]
    Sd[Y, 0] = np.cos(phi) * qd_b[PHI]
    for i, sgn in enumerate(SIDE):
        beta = q_b[BETA1 + i]
        bd = qd_b[BETA1 + i]
        sb, cb = np.sin(beta), np.cos(beta)
        Sd[BETA1 + i] = cb / d * bd, (-sgn * p * cb - a * sb) / d * bd
        Sd[PHIC1 + i] = sb / rc * bd, (-sgn * p * sb + a * cb) / rc * bd
    return Sd


def lift_mobility(q_b, u, params: RobotParams) -> np.ndarray:
    return base_mobility_matrix(q_b, params) @ np.asarray(u, dtype=float)


def base_pose_transform(q_b) -> Transform:
    return Transform.planar(q_b[X], q_b[Y], q_b[PHI])
