"""Lagrangian models of the arm and of the constrained mobile base, plus a Newton-Euler oracle.

Arm:  (M + diag(Ia)) qdd + C qd + Q + G_fr + G_ex = G_a
Base: M_b qdd + C_b qd = G_b + J^T lam, reduced with qdot = S u to
      M~ udot + C~ u = S^T G_b.

Coriolis matrices come from Christoffel symbols of the inertia matrix with
central differences (step 1e-6) on the configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from robopainter import kinematics as kin
from robopainter.params import LinkInertial, MotorParams, RobotParams

FD_STEP = 1e-6
COND_LIMIT = 1e12
BASE_SHAPE_COORDS = (kin.PHI, kin.BETA1, kin.BETA2)


class SingularInertia(np.linalg.LinAlgError):
    pass


class RankDeficient(np.linalg.LinAlgError):
    pass


# --------------------------------------------------------------------------- generic

def christoffel_coriolis(mass_fn, q, qd, h: float = FD_STEP, coords=None) -> np.ndarray:
    """Coriolis matrix C_ij = sum_k c_ijk qd_k from the Christoffel symbols of ``mass_fn``.

    ``mass_fn`` maps a batch of configurations (m, n) to inertia matrices (m, n, n).
    ``coords`` restricts differentiation to the coordinates M actually depends on.
    """
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    n = q.size
    coords = range(n) if coords is None else coords
    coords = list(coords)
    pts = np.repeat(q[None, :], 2 * len(coords), axis=0)
    for m, k in enumerate(coords):
        pts[2 * m, k] += h
        pts[2 * m + 1, k] -= h
    Ms = mass_fn(pts)
    dM = np.zeros((n, n, n))
    for m, k in enumerate(coords):
        dM[k] = (Ms[2 * m] - Ms[2 * m + 1]) / (2.0 * h)
    # c_ijk = 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i)
    return 0.5 * (np.einsum("kij,k->ij", dM, qd)
                  + np.einsum("jik,k->ij", dM, qd)
                  - np.einsum("ijk,k->ij", dM, qd))


def mass_matrix_rate(mass_fn, q, qd, h: float = FD_STEP) -> np.ndarray:
    """dM/dt along qd by a central difference."""
    q = np.asarray(q, dtype=float)
    Ms = mass_fn(np.stack([q + h * qd, q - h * qd]))
    return (Ms[0] - Ms[1]) / (2.0 * h)


# --------------------------------------------------------------------------- arm

def arm_mass_matrix(q, params: RobotParams, include_rotor: bool = False) -> np.ndarray:
    """Joint-space inertia from the link kinetic energies; broadcasts over leading axes."""
    cg, R, Jv, Jw = kin.link_cg_jacobians(q, params)
    m = np.array([l.mass for l in params.arm_links])
    I_link = np.array([l.inertia for l in params.arm_links])
    I_base = R @ I_link @ np.swapaxes(R, -1, -2)
    M = np.einsum("k,...kai,...kaj->...ij", m, Jv, Jv)
    M = M + np.einsum("...kai,...kab,...kbj->...ij", Jw, I_base, Jw)
    if include_rotor:
        M = M + np.diag(params.arm_rotor_inertia)
    return M


def arm_potential_energy(q, params: RobotParams) -> np.ndarray:
    frames = kin.arm_frames(q, params)
    total = 0.0
    for k, link in enumerate(params.arm_links):
        T = frames[..., k + 1, :, :]
        z = T[..., 2, :3] @ link.cg + T[..., 2, 3]
        total = total + link.mass * params.gravity * z
    return total


def arm_gravity(q, params: RobotParams) -> np.ndarray:
    """Q = dU/dq with U = sum m g z_cg."""
    _, _, Jv, _ = kin.link_cg_jacobians(q, params)
    m = np.array([l.mass for l in params.arm_links])
    return params.gravity * np.einsum("k,...ki->...i", m, Jv[..., 2, :])


def arm_kinetic_energy(q, qd, params: RobotParams, include_rotor: bool = False) -> float:
    M = arm_mass_matrix(q, params, include_rotor)
    return 0.5 * float(qd @ M @ qd)


def arm_coriolis(q, qd, params: RobotParams) -> np.ndarray:
    return christoffel_coriolis(lambda Q: arm_mass_matrix(Q, params), q, qd)


def friction_torque(qd, viscous=0.1, coulomb=0.05, eps: float = 1e-3) -> np.ndarray:
    """Viscous + smoothed Coulomb friction, F_v qd + F_c tanh(qd / eps)."""
    qd = np.asarray(qd, dtype=float)
    return viscous * qd + coulomb * np.tanh(qd / eps)


def params_friction(qd, params: RobotParams) -> np.ndarray:
    return friction_torque(qd, params.friction_viscous, params.friction_coulomb, params.friction_eps)


def arm_inverse_dynamics_lagrange(q, qd, qdd, params: RobotParams, gamma_fr=None, gamma_ex=None,
                                  include_rotor: bool = True, gravity: bool = True) -> np.ndarray:
    q, qd, qdd = (np.asarray(v, dtype=float) for v in (q, qd, qdd))
    M = arm_mass_matrix(q, params, include_rotor)
    tau = M @ qdd + arm_coriolis(q, qd, params) @ qd
    if gravity:
        tau = tau + arm_gravity(q, params)
    if gamma_fr is not None:
        tau = tau + gamma_fr
    if gamma_ex is not None:
        tau = tau + gamma_ex
    return tau


def arm_inverse_dynamics_newton_euler(q, qd, qdd, params: RobotParams, gravity: float | None = None,
                                      include_rotor: bool = False) -> np.ndarray:
    """Recursive Newton-Euler over the KK chain; gravity enters as a base acceleration."""
    g = params.gravity if gravity is None else gravity
    rows = [r for r in params.kk_table if r.joint is not None]
    z = np.array([0.0, 0.0, 1.0])
    w = np.zeros(3)
    wd = np.zeros(3)
    vd = np.array([0.0, 0.0, g])
    Rs, ps, F, N = [], [], [], []
    for j, row in enumerate(rows):
        T = kin.kk_matrix(row.alpha, row.d, row.theta_offset + q[j], row.r)
        R, p = T[:3, :3], T[:3, 3]
        Rt = R.T
        vd = Rt @ (vd + np.cross(wd, p) + np.cross(w, np.cross(w, p)))
        w_par = Rt @ w
        w = w_par + qd[j] * z
        wd = Rt @ wd + np.cross(w_par, qd[j] * z) + qdd[j] * z
        link = params.arm_links[j]
        c, I = link.cg, link.inertia
        ac = vd + np.cross(wd, c) + np.cross(w, np.cross(w, c))
        F.append(link.mass * ac)
        N.append(I @ wd + np.cross(w, I @ w))
        Rs.append(R)
        ps.append(p)
    tau = np.zeros(6)
    f = np.zeros(3)
    n = np.zeros(3)
    for j in range(5, -1, -1):
        c = params.arm_links[j].cg
        if j < 5:
            Rn, pn = Rs[j + 1], ps[j + 1]
            fc = Rn @ f
            n = N[j] + Rn @ n + np.cross(c, F[j]) + np.cross(pn, fc)
            f = F[j] + fc
        else:
            n = N[j] + np.cross(c, F[j])
            f = F[j]
        tau[j] = n[2]
    if include_rotor:
        tau += params.arm_rotor_inertia * qdd
    return tau


def arm_forward_dynamics(q, qd, gamma_a, params: RobotParams, gamma_fr=None, gamma_ex=None,
                         include_rotor: bool = True, free=None, gravity: bool = True) -> np.ndarray:
    """Joint accelerations; joints outside ``free`` (boolean mask) are held locked."""
    q, qd = np.asarray(q, dtype=float), np.asarray(qd, dtype=float)
    M = arm_mass_matrix(q, params, include_rotor)
    rhs = np.asarray(gamma_a, dtype=float) - arm_coriolis(q, qd, params) @ qd
    if gravity:
        rhs = rhs - arm_gravity(q, params)
    if gamma_fr is not None:
        rhs = rhs - gamma_fr
    if gamma_ex is not None:
        rhs = rhs - gamma_ex
    qdd = np.zeros(6)
    idx = np.arange(6) if free is None else np.flatnonzero(free)
    Mf = M[np.ix_(idx, idx)]
    if np.linalg.cond(Mf) > COND_LIMIT:
        raise SingularInertia("joint-space inertia is numerically singular")
    qdd[idx] = np.linalg.solve(Mf, rhs[idx])
    return qdd


def actuator_torque(current, motor: MotorParams):
    return motor.Kt * current


# --------------------------------------------------------------------------- spray disturbance

@dataclass(frozen=True)
class SprayVibration:
    """Band-limited tip vibration: a sum of tones with jittered frequency, random phase and direction.

    ``rms`` is the acceleration RMS of the signal (m/s^2); directions are in the tool frame.
    """

    rms: float
    freqs: np.ndarray
    phases: np.ndarray
    directions: np.ndarray

    @classmethod
    def from_rng(cls, rng: np.random.Generator, band=(2.5, 10.0), freq_band=(30.0, 80.0),
                 n_tones: int = 8) -> "SprayVibration":
        rms = rng.uniform(*band)
        # evenly spaced tones with a small jitter: no slow beats inside a monitoring window
        lo, hi = freq_band
        step = (hi - lo) / n_tones
        freqs = lo + step * (np.arange(n_tones) + 0.5) + rng.uniform(-0.25, 0.25, n_tones) * step
        phases = rng.uniform(0.0, 2 * np.pi, size=n_tones)
        d = rng.normal(size=(n_tones, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return cls(float(rms), freqs, phases, d)

    def acceleration(self, t) -> np.ndarray:
        """Tool-frame acceleration at time(s) ``t``: shape (..., 3)."""
        t = np.asarray(t, dtype=float)
        amp = self.rms * np.sqrt(2.0 / len(self.freqs))
        s = np.sin(2 * np.pi * self.freqs * t[..., None] + self.phases)
        return amp * s @ self.directions


def tip_wrench(q, spray_on: bool, t: float, params: RobotParams, vibration: SprayVibration | None,
               scale: float = 1.0) -> np.ndarray:
    """Force/moment (base frame) the arm exerts at the nozzle: axial reaction plus gun vibration."""
    if not spray_on:
        return np.zeros(6)
    R = kin.arm_fk_matrix(q, params)[:3, :3]
    f = params.spray.reaction_force * R[:, 2]
    if vibration is not None:
        gun_mass = params.arm_links[-1].mass
        f = f + gun_mass * scale * (R @ vibration.acceleration(t))
    return np.concatenate([f, np.zeros(3)])


def spray_external_torque(q, spray_on: bool, t: float, params: RobotParams,
                          vibration: SprayVibration | None, scale: float = 1.0) -> np.ndarray:
    """Gamma_ex = J^T w for the spray reaction and vibration wrench; zero with the spray off."""
    if not spray_on:
        return np.zeros(6)
    w = tip_wrench(q, spray_on, t, params, vibration, scale)
    return kin.arm_jacobian(q, params).T @ w


# --------------------------------------------------------------------------- base

def arm_lumped_inertia(q_a, params: RobotParams) -> LinkInertial:
    """Arm frozen at ``q_a`` as one rigid body: CG in the base frame, inertia about that CG."""
    cg, R, _, _ = kin.link_cg_jacobians(np.asarray(q_a, dtype=float), params)
    m = np.array([l.mass for l in params.arm_links])
    M = m.sum()
    c = (m[:, None] * cg).sum(axis=0) / M
    I = np.zeros((3, 3))
    for k, link in enumerate(params.arm_links):
        r = cg[k] - c
        I += R[k] @ link.inertia @ R[k].T + link.mass * (r @ r * np.eye(3) - np.outer(r, r))
    return LinkInertial(float(M), c, I)


ARM_STOWED = np.array([0.0, -np.pi / 2, np.pi / 2, 0.0, 0.0, 0.0])
_WHEEL_AXLE = kin.rot_x(-np.pi / 2)  # wheel frame z along the base y axis


def _skew_z(r):
    """Matrix of r -> z_hat x r."""
    return np.array([-r[1], r[0], 0.0])


def _arm_body(arm, params: RobotParams) -> LinkInertial:
    if isinstance(arm, LinkInertial):
        return arm
    return arm_lumped_inertia(ARM_STOWED if arm is None else arm, params)


def base_kinetic_energy(q_b, qd_b, params: RobotParams, arm=None) -> float:
    """Kinetic energy of base link, wheels, hubs, castors and the frozen arm.

    ``arm`` is an arm configuration or a pre-lumped LinkInertial (default: stowed pose).
    """
    g = params.geometry
    arm = _arm_body(arm, params)
    phi = q_b[kin.PHI]
    c, s = np.cos(phi), np.sin(phi)
    vo = np.array([c * qd_b[kin.X] + s * qd_b[kin.Y], -s * qd_b[kin.X] + c * qd_b[kin.Y], 0.0])
    wz = qd_b[kin.PHI]
    ez = np.array([0.0, 0.0, 1.0])

    def body(m, I, r, v_extra=np.zeros(3), w=None):
        w = wz * ez if w is None else w
        v = vo + wz * _skew_z(r) + v_extra
        return 0.5 * m * v @ v + 0.5 * w @ I @ w

    E = body(params.base_link.mass, params.base_link.inertia, params.base_link.cg)
    E += body(arm.mass, arm.inertia, arm.cg)
    f = params.fixed_wheel
    for i, sgn in enumerate(kin.SIDE):
        Rw = _WHEEL_AXLE @ kin.rot_z(q_b[kin.PHIF1 + i])
        r = np.array([0.0, sgn * g.b, 0.0]) + Rw @ f.cg
        w = wz * ez + qd_b[kin.PHIF1 + i] * np.array([0.0, 1.0, 0.0])
        E += body(f.mass, Rw @ f.inertia @ Rw.T, r, w=w)
    o, cw = params.orientable_hub, params.castor_wheel
    for i, sgn in enumerate(kin.SIDE):
        beta, bd = q_b[kin.BETA1 + i], qd_b[kin.BETA1 + i]
        Rh = kin.rot_z(beta)
        mount = np.array([-g.a, sgn * g.p, 0.0])
        wh = (wz + bd) * ez
        rel = Rh @ o.cg
        E += body(o.mass, Rh @ o.inertia @ Rh.T, mount + rel, v_extra=bd * _skew_z(rel), w=wh)
        Rc = Rh @ _WHEEL_AXLE @ kin.rot_z(q_b[kin.PHIC1 + i])
        rel = Rh @ np.array([g.d, 0.0, 0.0]) + Rc @ cw.cg
        w = wh + qd_b[kin.PHIC1 + i] * (Rh @ np.array([0.0, 1.0, 0.0]))
        E += body(cw.mass, Rc @ cw.inertia @ Rc.T, mount + rel, v_extra=bd * _skew_z(rel), w=w)
    return float(E)


def base_mass_matrix(q_b, params: RobotParams, arm=None, include_rotor: bool = False) -> np.ndarray:
    """M_b (9x9) as sum of m Jv^T Jv + Jw^T I Jw over the base bodies.

    With ``include_rotor`` the reflected wheel-motor inertias are added on the wheel-angle diagonal.
    """
    g = params.geometry
    arm = _arm_body(arm, params)
    phi = q_b[kin.PHI]
    c, s = np.cos(phi), np.sin(phi)
    Jvo = np.zeros((3, 9))
    Jvo[0, [kin.X, kin.Y]] = c, s
    Jvo[1, [kin.X, kin.Y]] = -s, c
    ez = np.array([0.0, 0.0, 1.0])
    M = np.zeros((9, 9))

    def add(m, I, r, rel=None, beta_col=None, w_cols=((kin.PHI, ez),)):
        Jv = Jvo.copy()
        Jv[:, kin.PHI] += _skew_z(r)
        if beta_col is not None:
            Jv[:, beta_col] += _skew_z(rel)
        Jw = np.zeros((3, 9))
        for col, axis in w_cols:
            Jw[:, col] += axis
        M[:] += m * Jv.T @ Jv + Jw.T @ I @ Jw

    add(params.base_link.mass, params.base_link.inertia, params.base_link.cg)
    add(arm.mass, arm.inertia, arm.cg)
    f = params.fixed_wheel
    for i, sgn in enumerate(kin.SIDE):
        Rw = _WHEEL_AXLE @ kin.rot_z(q_b[kin.PHIF1 + i])
        r = np.array([0.0, sgn * g.b, 0.0]) + Rw @ f.cg
        add(f.mass, Rw @ f.inertia @ Rw.T, r,
            w_cols=((kin.PHI, ez), (kin.PHIF1 + i, np.array([0.0, 1.0, 0.0]))))
    o, cw = params.orientable_hub, params.castor_wheel
    for i, sgn in enumerate(kin.SIDE):
        bcol = kin.BETA1 + i
        Rh = kin.rot_z(q_b[bcol])
        mount = np.array([-g.a, sgn * g.p, 0.0])
        rel = Rh @ o.cg
        add(o.mass, Rh @ o.inertia @ Rh.T, mount + rel, rel, bcol,
            w_cols=((kin.PHI, ez), (bcol, ez)))
        Rc = Rh @ _WHEEL_AXLE @ kin.rot_z(q_b[kin.PHIC1 + i])
        rel = Rh @ np.array([g.d, 0.0, 0.0]) + Rc @ cw.cg
        add(cw.mass, Rc @ cw.inertia @ Rc.T, mount + rel, rel, bcol,
            w_cols=((kin.PHI, ez), (bcol, ez), (kin.PHIC1 + i, Rh @ np.array([0.0, 1.0, 0.0]))))
    if include_rotor:
        M[kin.PHIF1, kin.PHIF1] += params.wheel_motors[0].Ia
        M[kin.PHIF2, kin.PHIF2] += params.wheel_motors[1].Ia
    return M


def _base_mass_fn(params, arm, include_rotor):
    arm = _arm_body(arm, params)
    return lambda Q: np.array([base_mass_matrix(q, params, arm, include_rotor) for q in Q])


def base_coriolis(q_b, qd_b, params: RobotParams, arm=None, include_rotor: bool = False) -> np.ndarray:
    # M_b depends on heading and castor angles only (wheel tensors are axisymmetric about the axle)
    coords = BASE_SHAPE_COORDS
    f, c = params.fixed_wheel.inertia, params.castor_wheel.inertia
    if not (np.isclose(f[0, 0], f[1, 1]) and np.isclose(c[0, 0], c[1, 1])
            and not f[0, 1] and not c[0, 1]):
        coords = None
    return christoffel_coriolis(_base_mass_fn(params, arm, include_rotor), q_b, qd_b, coords=coords)


@dataclass(frozen=True)
class BaseDynamics:
    M: np.ndarray
    C: np.ndarray
    M_red: np.ndarray
    C_red: np.ndarray
    S: np.ndarray
    S_dot: np.ndarray


def base_dynamics(q_b, qd_b, params: RobotParams, arm=None, include_rotor: bool = False) -> BaseDynamics:
    arm = _arm_body(arm, params)
    M = base_mass_matrix(q_b, params, arm, include_rotor)
    C = base_coriolis(q_b, qd_b, params, arm, include_rotor)
    S = kin.base_mobility_matrix(q_b, params)
    Sd = kin.base_mobility_rate(q_b, qd_b, params)
    return BaseDynamics(M, C, S.T @ M @ S, S.T @ M @ Sd + S.T @ C @ S, S, Sd)


def reduce_base_dynamics(q_b, qd_b, params: RobotParams, arm=None, include_rotor: bool = False):
    """(M~, C~) in the space of the controllable mobilities [v, omega]."""
    d = base_dynamics(q_b, qd_b, params, arm, include_rotor)
    return d.M_red, d.C_red


def base_generalized_force(tau_wheels) -> np.ndarray:
    G = np.zeros(9)
    G[kin.PHIF1], G[kin.PHIF2] = tau_wheels
    return G


def base_forward_dynamics(q_b, u, tau_wheels, params: RobotParams, arm=None,
                          include_rotor: bool = True) -> np.ndarray:
    """udot from the reduced model with wheel torques ``tau_wheels``."""
    u = np.asarray(u, dtype=float)
    qd = kin.lift_mobility(q_b, u, params)
    d = base_dynamics(q_b, qd, params, arm, include_rotor)
    rhs = d.S.T @ base_generalized_force(tau_wheels) - d.C_red @ u
    return np.linalg.solve(d.M_red, rhs)


def wheel_torques_for(q_b, u, udot, params: RobotParams, arm=None, include_rotor: bool = True):
    """Wheel torques producing ``udot``: solves S^T G_b = M~ udot + C~ u."""
    u = np.asarray(u, dtype=float)
    qd = kin.lift_mobility(q_b, u, params)
    d = base_dynamics(q_b, qd, params, arm, include_rotor)
    need = d.M_red @ np.asarray(udot, dtype=float) + d.C_red @ u
    B = d.S[[kin.PHIF1, kin.PHIF2], :].T  # S^T restricted to the actuated rows
    return np.linalg.solve(B, need)


def recover_lagrange_multipliers(q_b, qd_b, qdd_b, gamma_b, params: RobotParams, arm=None,
                                 include_rotor: bool = False):
    """Least-squares constraint forces: minimize |M qdd + C qd - G - J^T lam|.

    Returns ``(lam, residual_norm)``.
    """
    J = kin.base_constraint_matrix(q_b, params)
    if np.linalg.matrix_rank(J) < J.shape[0]:
        raise RankDeficient("constraint matrix lost row rank")
    arm = _arm_body(arm, params)
    M = base_mass_matrix(q_b, params, arm, include_rotor)
    C = base_coriolis(q_b, qd_b, params, arm, include_rotor)
    rhs = M @ qdd_b + C @ qd_b - gamma_b
    lam, *_ = np.linalg.lstsq(J.T, rhs, rcond=None)
    return lam, float(np.linalg.norm(J.T @ lam - rhs))
