"""Compiled (numba) kernels for the simulation inner loops.

These mirror the numpy reference implementations in ``kinematics`` and
``dynamics`` and are cross-checked against them in the test suite.  The arm
kernels use Newton-Euler recursions (RNEA for the bias, columns of RNEA for
the inertia matrix), which coincide with the Lagrange/Christoffel model.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from robopainter.params import RobotParams

# --------------------------------------------------------------------------- packing


def pack_arm(params: RobotParams):
    """Flatten the arm model into a tuple of arrays the kernels understand."""
    rows = params.kk_table
    joints = [r.joint for r in rows if r.joint is not None]
    if joints != [1, 2, 3, 4, 5, 6] or any(r.joint is not None for r in rows[6:]):
        raise ValueError("compiled kernels expect six actuated rows followed by fixed rows")
    kk = np.array([[r.alpha, r.d, r.theta_offset, r.r] for r in rows], dtype=float)
    mass = np.array([l.mass for l in params.arm_links])
    cg = np.array([l.cg for l in params.arm_links])
    inertia = np.array([l.inertia for l in params.arm_links])
    fric = np.array([params.friction_viscous, params.friction_coulomb, params.friction_eps])
    return (kk, mass, cg, inertia, np.asarray(params.arm_rotor_inertia, dtype=float),
            np.asarray(params.arm_mount, dtype=float), fric, float(params.gravity),
            float(params.spray.reaction_force))


def pack_base(params: RobotParams):
    g = params.geometry
    bodies = np.zeros((4, 13))  # base link, fixed wheel, hub, castor: m, cg(3), I(9)
    for i, link in enumerate((params.base_link, params.fixed_wheel, params.orientable_hub,
                              params.castor_wheel)):
        bodies[i, 0] = link.mass
        bodies[i, 1:4] = link.cg
        bodies[i, 4:] = link.inertia.ravel()
    geom = np.array([g.a, g.b, g.p, g.d, g.r_c, g.r_f])
    ia = np.array([params.wheel_motors[0].Ia, params.wheel_motors[1].Ia])
    return bodies, geom, ia


def pack_lumped(body):
    out = np.zeros(13)
    out[0] = body.mass
    out[1:4] = body.cg
    out[4:] = body.inertia.ravel()
    return out


# --------------------------------------------------------------------------- arm kinematics


@njit(cache=True)
def _kk(alpha, d, theta, r):
    ca, sa = np.cos(alpha), np.sin(alpha)
    ct, st = np.cos(theta), np.sin(theta)
    R = np.empty((3, 3))
    R[0, 0], R[0, 1], R[0, 2] = ct, -st, 0.0
    R[1, 0], R[1, 1], R[1, 2] = ca * st, ca * ct, -sa
    R[2, 0], R[2, 1], R[2, 2] = sa * st, sa * ct, ca
    p = np.array([d, -sa * r, ca * r])
    return R, p


@njit(cache=True)
def frames(q, kk, mount):
    """Rotations (n+1, 3, 3) and origins (n+1, 3) of frames 0..n in the base frame."""
    n = kk.shape[0]
    Rs = np.zeros((n + 1, 3, 3))
    ps = np.zeros((n + 1, 3))
    Rs[0] = np.eye(3)
    ps[0] = mount
    for j in range(n):
        th = kk[j, 2] + (q[j] if j < 6 else 0.0)
        R, p = _kk(kk[j, 0], kk[j, 1], th, kk[j, 3])
        Rs[j + 1] = Rs[j] @ R
        ps[j + 1] = ps[j] + Rs[j] @ p
    return Rs, ps


@njit(cache=True)
def tool_pose(q, kk, mount):
    Rs, ps = frames(q, kk, mount)
    n = kk.shape[0]
    return Rs[n].copy(), ps[n].copy()


@njit(cache=True)
def tool_frames(Q, kk, mount):
    """Tip positions, tool x axes and tool z (spray) axes for a batch of joint vectors."""
    n = Q.shape[0]
    nf = kk.shape[0] + 1
    Rs = np.empty((nf, 3, 3))
    ps = np.empty((nf, 3))
    P = np.empty((n, 3))
    X = np.empty((n, 3))
    Z = np.empty((n, 3))
    for i in range(n):
        _frames_into(Q[i], kk, mount, Rs, ps)
        for a in range(3):
            P[i, a] = ps[nf - 1, a]
            X[i, a] = Rs[nf - 1, a, 0]
            Z[i, a] = Rs[nf - 1, a, 2]
    return P, X, Z


@njit(cache=True)
def jacobian(q, kk, mount):
    Rs, ps = frames(q, kk, mount)
    n = kk.shape[0]
    tip = ps[n]
    J = np.zeros((6, 6))
    for j in range(6):
        z = Rs[j + 1][:, 2]
        J[:3, j] = np.cross(z, tip - ps[j + 1])
        J[3:, j] = z
    return J


@njit(cache=True)
def _rot_log(R):
    c = (R[0, 0] + R[1, 1] + R[2, 2] - 1.0) / 2.0
    c = min(1.0, max(-1.0, c))
    angle = np.arccos(c)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if angle < 1e-9:
        return 0.5 * w
    if np.pi - angle < 1e-6:
        B = (R + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diag(B).copy(), 0.0))
        k = np.argmax(axis)
        axis = B[k] / axis[k]
        axis /= np.linalg.norm(axis)
        if w @ axis < 0:
            axis = -axis
        return angle * axis
    return angle / (2.0 * np.sin(angle)) * w


@njit(cache=True)
def ik(R_t, p_t, seed, kk, mount, tol, max_iter, damping):
    """Damped least squares; returns (q, residual, converged)."""
    q = seed.copy()
    lam2 = damping * damping
    res = np.inf
    e = np.zeros(6)
    for it in range(max_iter + 1):
        R, p = tool_pose(q, kk, mount)
        e[:3] = p_t - p
        e[3:] = _rot_log(R_t @ R.T)
        res = max(np.linalg.norm(e[:3]), np.linalg.norm(e[3:]))
        if res < tol:
            return q, res, True
        if it == max_iter:
            break
        J = jacobian(q, kk, mount)
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(6), e)
        step = np.abs(dq).max()
        if step > 0.5:
            dq *= 0.5 / step
        q = q + dq
    return q, res, False


# --------------------------------------------------------------------------- arm dynamics


@njit(cache=True)
def rnea(q, qd, qdd, g, kk, mass, cg, inertia):
    """Link torques of the 6-joint chain (no rotor inertia, no friction)."""
    z = np.array([0.0, 0.0, 1.0])
    w = np.zeros(3)
    wd = np.zeros(3)
    vd = np.array([0.0, 0.0, g])
    Rs = np.zeros((6, 3, 3))
    ps = np.zeros((6, 3))
    F = np.zeros((6, 3))
    N = np.zeros((6, 3))
    for j in range(6):
        R, p = _kk(kk[j, 0], kk[j, 1], kk[j, 2] + q[j], kk[j, 3])
        Rt = R.T
        vd = Rt @ (vd + np.cross(wd, p) + np.cross(w, np.cross(w, p)))
        w_par = Rt @ w
        w = w_par + qd[j] * z
        wd = Rt @ wd + np.cross(w_par, qd[j] * z) + qdd[j] * z
        c = cg[j]
        I = inertia[j]
        ac = vd + np.cross(wd, c) + np.cross(w, np.cross(w, c))
        F[j] = mass[j] * ac
        N[j] = I @ wd + np.cross(w, I @ w)
        Rs[j] = R
        ps[j] = p
    tau = np.zeros(6)
    f = np.zeros(3)
    n = np.zeros(3)
    for j in range(5, -1, -1):
        c = cg[j]
        if j < 5:
            fc = Rs[j + 1] @ f
            n = N[j] + Rs[j + 1] @ n + np.cross(c, F[j]) + np.cross(ps[j + 1], fc)
            f = F[j] + fc
        else:
            n = N[j] + np.cross(c, F[j])
            f = F[j].copy()
        tau[j] = n[2]
    return tau


@njit(cache=True)
def mass_matrix(q, kk, mass, cg, inertia, ia):
    M = np.zeros((6, 6))
    zero = np.zeros(6)
    for i in range(6):
        e = np.zeros(6)
        e[i] = 1.0
        M[:, i] = rnea(q, zero, e, 0.0, kk, mass, cg, inertia)
    M = 0.5 * (M + M.T)
    for i in range(6):
        M[i, i] += ia[i]
    return M


@njit(cache=True)
def friction(qd, fric):
    return fric[0] * qd + fric[1] * np.tanh(qd / fric[2])


@njit(cache=True)
def spray_torque(q, t, spray_scale, reaction_on, P, vib):
    """J^T w for the axial reaction (if ``reaction_on``) plus gun vibration scaled by ``spray_scale``."""
    kk, mass, cg, inertia, ia, mount, fric, g, reaction = P
    freqs, phases, dirs, amp = vib
    R, p = tool_pose(q, kk, mount)
    f = np.zeros(3)
    if reaction_on:
        f += reaction * R[:, 2]
    if spray_scale != 0.0:
        a = np.zeros(3)
        for k in range(freqs.shape[0]):
            a += amp * np.sin(2 * np.pi * freqs[k] * t + phases[k]) * dirs[k]
        f += mass[5] * spray_scale * (R @ a)
    J = jacobian(q, kk, mount)
    return J[:3].T @ f


@njit(cache=True)
def _frames_into(q, kk, mount, Rs, ps):
    for a in range(3):
        for b in range(3):
            Rs[0, a, b] = 1.0 if a == b else 0.0
        ps[0, a] = mount[a]
    for j in range(kk.shape[0]):
        th = kk[j, 2] + (q[j] if j < 6 else 0.0)
        ca, sa = np.cos(kk[j, 0]), np.sin(kk[j, 0])
        ct, st = np.cos(th), np.sin(th)
        l00, l01, l02 = ct, -st, 0.0
        l10, l11, l12 = ca * st, ca * ct, -sa
        l20, l21, l22 = sa * st, sa * ct, ca
        p0, p1, p2 = kk[j, 1], -sa * kk[j, 3], ca * kk[j, 3]
        for a in range(3):
            A0, A1, A2 = Rs[j, a, 0], Rs[j, a, 1], Rs[j, a, 2]
            Rs[j + 1, a, 0] = A0 * l00 + A1 * l10 + A2 * l20
            Rs[j + 1, a, 1] = A0 * l01 + A1 * l11 + A2 * l21
            Rs[j + 1, a, 2] = A0 * l02 + A1 * l12 + A2 * l22
            ps[j + 1, a] = ps[j, a] + A0 * p0 + A1 * p1 + A2 * p2


@njit(cache=True, inline="always")
def _cross(a0, a1, a2, b0, b1, b2):
    return a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0


@njit(cache=True)
def arm_terms(q, qd, g, kk, mass, cg, inertia, ia, mount, Rs, ps, M, bias):
    """Fill frames, M (with rotor inertia) and bias = C qd + Q in one pass (base-frame recursion)."""
    _frames_into(q, kk, mount, Rs, ps)
    c = np.empty((6, 3))
    Iw = np.empty((6, 3, 3))
    T = np.empty((3, 3))
    for j in range(6):
        R = Rs[j + 1]
        for a in range(3):
            c[j, a] = ps[j + 1, a] + R[a, 0] * cg[j, 0] + R[a, 1] * cg[j, 1] + R[a, 2] * cg[j, 2]
            for b in range(3):
                T[a, b] = (R[a, 0] * inertia[j, 0, b] + R[a, 1] * inertia[j, 1, b]
                           + R[a, 2] * inertia[j, 2, b])
        for a in range(3):
            for b in range(3):
                Iw[j, a, b] = T[a, 0] * R[b, 0] + T[a, 1] * R[b, 1] + T[a, 2] * R[b, 2]
    # inertia matrix from link Jacobians
    for i in range(6):
        for k in range(6):
            M[i, k] = 0.0
    Jv = np.empty((6, 3))
    for j in range(6):
        for i in range(j + 1):
            z = Rs[i + 1]
            r0 = c[j, 0] - ps[i + 1, 0]
            r1 = c[j, 1] - ps[i + 1, 1]
            r2 = c[j, 2] - ps[i + 1, 2]
            Jv[i, 0], Jv[i, 1], Jv[i, 2] = _cross(z[0, 2], z[1, 2], z[2, 2], r0, r1, r2)
        for i in range(j + 1):
            zi = Rs[i + 1]
            w0 = Iw[j, 0, 0] * zi[0, 2] + Iw[j, 0, 1] * zi[1, 2] + Iw[j, 0, 2] * zi[2, 2]
            w1 = Iw[j, 1, 0] * zi[0, 2] + Iw[j, 1, 1] * zi[1, 2] + Iw[j, 1, 2] * zi[2, 2]
            w2 = Iw[j, 2, 0] * zi[0, 2] + Iw[j, 2, 1] * zi[1, 2] + Iw[j, 2, 2] * zi[2, 2]
            for k in range(i, j + 1):
                zk = Rs[k + 1]
                v = mass[j] * (Jv[i, 0] * Jv[k, 0] + Jv[i, 1] * Jv[k, 1] + Jv[i, 2] * Jv[k, 2])
                v += w0 * zk[0, 2] + w1 * zk[1, 2] + w2 * zk[2, 2]
                M[i, k] += v
    for i in range(6):
        for k in range(i):
            M[i, k] = M[k, i]
        M[i, i] += ia[i]
    # Newton-Euler bias (qdd = 0), all vectors in the base frame
    w = np.zeros(3)
    wd = np.zeros(3)
    ao = np.array([0.0, 0.0, g])
    F = np.empty((6, 3))
    N = np.empty((6, 3))
    for j in range(6):
        d0 = ps[j + 1, 0] - ps[j, 0]
        d1 = ps[j + 1, 1] - ps[j, 1]
        d2 = ps[j + 1, 2] - ps[j, 2]
        x0, x1, x2 = _cross(w[0], w[1], w[2], d0, d1, d2)
        y0, y1, y2 = _cross(w[0], w[1], w[2], x0, x1, x2)
        e0, e1, e2 = _cross(wd[0], wd[1], wd[2], d0, d1, d2)
        ao[0] += e0 + y0
        ao[1] += e1 + y1
        ao[2] += e2 + y2
        z0, z1, z2 = Rs[j + 1, 0, 2] * qd[j], Rs[j + 1, 1, 2] * qd[j], Rs[j + 1, 2, 2] * qd[j]
        e0, e1, e2 = _cross(w[0], w[1], w[2], z0, z1, z2)
        wd[0] += e0
        wd[1] += e1
        wd[2] += e2
        w[0] += z0
        w[1] += z1
        w[2] += z2
        r0 = c[j, 0] - ps[j + 1, 0]
        r1 = c[j, 1] - ps[j + 1, 1]
        r2 = c[j, 2] - ps[j + 1, 2]
        x0, x1, x2 = _cross(w[0], w[1], w[2], r0, r1, r2)
        y0, y1, y2 = _cross(w[0], w[1], w[2], x0, x1, x2)
        e0, e1, e2 = _cross(wd[0], wd[1], wd[2], r0, r1, r2)
        F[j, 0] = mass[j] * (ao[0] + e0 + y0)
        F[j, 1] = mass[j] * (ao[1] + e1 + y1)
        F[j, 2] = mass[j] * (ao[2] + e2 + y2)
        I = Iw[j]
        h0 = I[0, 0] * w[0] + I[0, 1] * w[1] + I[0, 2] * w[2]
        h1 = I[1, 0] * w[0] + I[1, 1] * w[1] + I[1, 2] * w[2]
        h2 = I[2, 0] * w[0] + I[2, 1] * w[1] + I[2, 2] * w[2]
        x0, x1, x2 = _cross(w[0], w[1], w[2], h0, h1, h2)
        N[j, 0] = I[0, 0] * wd[0] + I[0, 1] * wd[1] + I[0, 2] * wd[2] + x0
        N[j, 1] = I[1, 0] * wd[0] + I[1, 1] * wd[1] + I[1, 2] * wd[2] + x1
        N[j, 2] = I[2, 0] * wd[0] + I[2, 1] * wd[1] + I[2, 2] * wd[2] + x2
    f0 = f1 = f2 = 0.0
    n0 = n1 = n2 = 0.0
    for j in range(5, -1, -1):
        o0, o1, o2 = ps[j + 1, 0], ps[j + 1, 1], ps[j + 1, 2]
        if j < 5:
            d0, d1, d2 = ps[j + 2, 0] - o0, ps[j + 2, 1] - o1, ps[j + 2, 2] - o2
            x0, x1, x2 = _cross(d0, d1, d2, f0, f1, f2)
            n0 += x0
            n1 += x1
            n2 += x2
        r0, r1, r2 = c[j, 0] - o0, c[j, 1] - o1, c[j, 2] - o2
        x0, x1, x2 = _cross(r0, r1, r2, F[j, 0], F[j, 1], F[j, 2])
        n0 += N[j, 0] + x0
        n1 += N[j, 1] + x1
        n2 += N[j, 2] + x2
        f0 += F[j, 0]
        f1 += F[j, 1]
        f2 += F[j, 2]
        bias[j] = n0 * Rs[j + 1, 0, 2] + n1 * Rs[j + 1, 1, 2] + n2 * Rs[j + 1, 2, 2]


@njit(cache=True)
def _tip_force_torque(Rs, ps, f, out):
    """out = J_v^T f at the tool origin (frames already filled)."""
    n = Rs.shape[0] - 1
    t0, t1, t2 = ps[n, 0], ps[n, 1], ps[n, 2]
    for i in range(6):
        x0, x1, x2 = _cross(t0 - ps[i + 1, 0], t1 - ps[i + 1, 1], t2 - ps[i + 1, 2],
                            f[0], f[1], f[2])
        out[i] = Rs[i + 1, 0, 2] * x0 + Rs[i + 1, 1, 2] * x1 + Rs[i + 1, 2, 2] * x2


@njit(cache=True)
def _tip_force(Rs, t, spray_scale, reaction_on, reaction, gun_mass, vib, f):
    freqs, phases, dirs, amp = vib
    n = Rs.shape[0] - 1
    for a in range(3):
        f[a] = reaction * Rs[n, a, 2] if reaction_on else 0.0
    if spray_scale != 0.0:
        a0 = a1 = a2 = 0.0
        for k in range(freqs.shape[0]):
            s = amp * np.sin(2 * np.pi * freqs[k] * t + phases[k])
            a0 += s * dirs[k, 0]
            a1 += s * dirs[k, 1]
            a2 += s * dirs[k, 2]
        sc = gun_mass * spray_scale
        for a in range(3):
            f[a] += sc * (Rs[n, a, 0] * a0 + Rs[n, a, 1] * a1 + Rs[n, a, 2] * a2)


@njit(cache=True)
def _chol_solve(A, b, x):
    n = b.shape[0]
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    y = np.empty(n)
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]


@njit(cache=True)
def _arm_accel(q, qd, tau, t, spray_scale, reaction_on, use_fric, gg, P, vib, Rs, ps, M, bias,
               f, tex, out):
    kk, mass, cg, inertia, ia, mount, fric, g, reaction = P
    arm_terms(q, qd, gg, kk, mass, cg, inertia, ia, mount, Rs, ps, M, bias)
    for i in range(6):
        bias[i] = tau[i] - bias[i]
        if use_fric:
            bias[i] -= fric[0] * qd[i] + fric[1] * np.tanh(qd[i] / fric[2])
    if reaction_on or spray_scale != 0.0:
        _tip_force(Rs, t, spray_scale, reaction_on, reaction, mass[5], vib, f)
        _tip_force_torque(Rs, ps, f, tex)
        for i in range(6):
            bias[i] -= tex[i]
    _chol_solve(M, bias, out)


@njit(cache=True)
def arm_rollout(q0, qd0, qr, qdr, qddr, t0, dt, spray_scale, reaction_on, ctrl_on,
                kp, kd, use_fric, use_g, ff_reaction, P, vib):
    """RK4 rollout of the arm under computed-torque control held over each step.

    ``spray_scale[k]`` multiplies the vibration of step k (0 = off); ``reaction_on[k]``
    switches the axial spray reaction.  Returns positions, velocities (N+1, 6) and
    commanded torques (N, 6).
    """
    kk, mass, cg, inertia, ia, mount, fric, g, reaction = P
    N = qr.shape[0]
    nf = kk.shape[0] + 1
    Q = np.zeros((N + 1, 6))
    QD = np.zeros((N + 1, 6))
    TAU = np.zeros((N, 6))
    Rs = np.empty((nf, 3, 3))
    ps = np.empty((nf, 3))
    M = np.empty((6, 6))
    bias = np.empty(6)
    f = np.empty(3)
    tex = np.empty(6)
    a1 = np.empty(6)
    a2 = np.empty(6)
    a3 = np.empty(6)
    a4 = np.empty(6)
    tau = np.zeros(6)
    q = q0.copy()
    qd = qd0.copy()
    Q[0] = q
    QD[0] = qd
    gg = g if use_g else 0.0
    h = 0.5 * dt
    for k in range(N):
        t = t0 + k * dt
        sc = spray_scale[k]
        ro = reaction_on[k]
        if ctrl_on:
            arm_terms(q, qd, gg, kk, mass, cg, inertia, ia, mount, Rs, ps, M, bias)
            for i in range(6):
                s = bias[i]
                for j in range(6):
                    s += M[i, j] * (qddr[k, j] + kd * (qdr[k, j] - qd[j]) + kp * (qr[k, j] - q[j]))
                tau[i] = s
                if use_fric:
                    tau[i] += fric[0] * qd[i] + fric[1] * np.tanh(qd[i] / fric[2])
            if ff_reaction and ro:
                _tip_force(Rs, t, 0.0, True, reaction, mass[5], vib, f)
                _tip_force_torque(Rs, ps, f, tex)
                for i in range(6):
                    tau[i] += tex[i]
        _arm_accel(q, qd, tau, t, sc, ro, use_fric, gg, P, vib, Rs, ps, M, bias, f, tex, a1)
        q2 = q + h * qd
        v2 = qd + h * a1
        _arm_accel(q2, v2, tau, t + h, sc, ro, use_fric, gg, P, vib, Rs, ps, M, bias, f, tex, a2)
        q3 = q + h * v2
        v3 = qd + h * a2
        _arm_accel(q3, v3, tau, t + h, sc, ro, use_fric, gg, P, vib, Rs, ps, M, bias, f, tex, a3)
        q4 = q + dt * v3
        v4 = qd + dt * a3
        _arm_accel(q4, v4, tau, t + dt, sc, ro, use_fric, gg, P, vib, Rs, ps, M, bias, f, tex, a4)
        for i in range(6):
            q[i] += dt / 6.0 * (qd[i] + 2 * v2[i] + 2 * v3[i] + v4[i])
            qd[i] += dt / 6.0 * (a1[i] + 2 * a2[i] + 2 * a3[i] + a4[i])
        Q[k + 1] = q
        QD[k + 1] = qd
        TAU[k] = tau
    return Q, QD, TAU


# --------------------------------------------------------------------------- base

_PHI, _B1, _B2, _F1, _F2, _C1, _C2 = 2, 3, 4, 5, 6, 7, 8


@njit(cache=True)
def _sandwich(R, I, out):
    """out = R I R^T"""
    T = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            T[a, b] = R[a, 0] * I[0, b] + R[a, 1] * I[1, b] + R[a, 2] * I[2, b]
    for a in range(3):
        for b in range(3):
            out[a, b] = T[a, 0] * R[b, 0] + T[a, 1] * R[b, 1] + T[a, 2] * R[b, 2]


@njit(cache=True)
def _accumulate(M, m, Iw, r0, r1, rel0, rel1, cols, K, has_beta, wax, c, s, Jv, IJ):
    """Add m Jv^T Jv + Jw^T Iw Jw for a body whose velocity columns are ``cols[:K]``.

    Columns are x, y, phi, then optionally the hub angle (translating the body
    through ``rel``), then spin columns that only rotate it.
    """
    Jv[0, 0], Jv[1, 0] = c, -s
    Jv[0, 1], Jv[1, 1] = s, c
    Jv[0, 2], Jv[1, 2] = -r1, r0
    if has_beta:
        Jv[0, 3], Jv[1, 3] = -rel1, rel0
    else:
        Jv[0, 3], Jv[1, 3] = 0.0, 0.0
    Jv[0, 4], Jv[1, 4] = 0.0, 0.0
    for k in range(K):
        for a in range(3):
            IJ[a, k] = Iw[a, 0] * wax[0, k] + Iw[a, 1] * wax[1, k] + Iw[a, 2] * wax[2, k]
    for i in range(K):
        for k in range(K):
            v = m * (Jv[0, i] * Jv[0, k] + Jv[1, i] * Jv[1, k])
            v += wax[0, i] * IJ[0, k] + wax[1, i] * IJ[1, k] + wax[2, i] * IJ[2, k]
            M[cols[i], cols[k]] += v


@njit(cache=True)
def base_mass(q, bodies, geom, ia, arm, include_rotor):
    """M_b from body Jacobians (wheel CGs are taken on their axles, as in the shipped data)."""
    a, b, p, d = geom[0], geom[1], geom[2], geom[3]
    phi = q[_PHI]
    c, s = np.cos(phi), np.sin(phi)
    M = np.zeros((9, 9))
    cols = np.zeros(5, dtype=np.int64)
    cols[0], cols[1], cols[2] = 0, 1, _PHI
    wax = np.zeros((3, 5))
    wax[2, 2] = 1.0
    Iw = np.empty((3, 3))
    R = np.zeros((3, 3))
    Jv = np.zeros((2, 5))
    IJ = np.empty((3, 5))
    for body in (bodies[0], arm):
        _accumulate(M, body[0], body[4:].reshape(3, 3), body[1], body[2], 0.0, 0.0, cols, 3,
                    False, wax, c, s, Jv, IJ)
    fw, hub, cw = bodies[1], bodies[2], bodies[3]
    for i in range(2):
        sgn = -1.0 if i == 0 else 1.0
        # wheel frame: rot_x(-pi/2) @ rot_z(phi_f); spin axis is the base y axis
        cf, sf = np.cos(q[_F1 + i]), np.sin(q[_F1 + i])
        R[0, 0], R[0, 1], R[0, 2] = cf, -sf, 0.0
        R[1, 0], R[1, 1], R[1, 2] = 0.0, 0.0, 1.0
        R[2, 0], R[2, 1], R[2, 2] = -sf, -cf, 0.0
        _sandwich(R, fw[4:].reshape(3, 3), Iw)
        cols[3] = _F1 + i
        wax[:, 3] = 0.0
        wax[1, 3] = 1.0
        _accumulate(M, fw[0], Iw, 0.0, sgn * b, 0.0, 0.0, cols, 4, False, wax, c, s, Jv, IJ)
    for i in range(2):
        sgn = -1.0 if i == 0 else 1.0
        bcol = _B1 + i
        cb, sb = np.cos(q[bcol]), np.sin(q[bcol])
        R[0, 0], R[0, 1], R[0, 2] = cb, -sb, 0.0
        R[1, 0], R[1, 1], R[1, 2] = sb, cb, 0.0
        R[2, 0], R[2, 1], R[2, 2] = 0.0, 0.0, 1.0
        _sandwich(R, hub[4:].reshape(3, 3), Iw)
        rel0 = cb * hub[1] - sb * hub[2]
        rel1 = sb * hub[1] + cb * hub[2]
        cols[3] = bcol
        wax[:, 3] = 0.0
        wax[2, 3] = 1.0
        _accumulate(M, hub[0], Iw, -a + rel0, sgn * p + rel1, rel0, rel1, cols, 4, True, wax, c, s, Jv, IJ)
        cc, sc = np.cos(q[_C1 + i]), np.sin(q[_C1 + i])
        # castor frame Rz(beta) @ rot_x(-pi/2) @ Rz(phi_c); its CG lies on the axle
        R[0, 0] = cb * cc
        R[0, 1] = -cb * sc
        R[0, 2] = -sb
        R[1, 0] = sb * cc
        R[1, 1] = -sb * sc
        R[1, 2] = cb
        R[2, 0] = -sc
        R[2, 1] = -cc
        R[2, 2] = 0.0
        _sandwich(R, cw[4:].reshape(3, 3), Iw)
        rel0 = cb * d
        rel1 = sb * d
        cols[4] = _C1 + i
        wax[:, 4] = 0.0
        wax[0, 4], wax[1, 4] = -sb, cb
        _accumulate(M, cw[0], Iw, -a + rel0, sgn * p + rel1, rel0, rel1, cols, 5, True, wax, c, s, Jv, IJ)
    if include_rotor:
        M[_F1, _F1] += ia[0]
        M[_F2, _F2] += ia[1]
    return M


@njit(cache=True)
def base_S(q, geom):
    a, b, p, d, rc, rf = geom[0], geom[1], geom[2], geom[3], geom[4], geom[5]
    phi = q[_PHI]
    S = np.zeros((9, 2))
    S[0, 0] = np.cos(phi)
    S[1, 0] = np.sin(phi)
    S[_PHI, 1] = 1.0
    for i in range(2):
        sgn = -1.0 if i == 0 else 1.0
        beta = q[_B1 + i]
        sb, cb = np.sin(beta), np.cos(beta)
        S[_B1 + i, 0] = sb / d
        S[_B1 + i, 1] = (-sgn * p * sb + a * cb) / d - 1.0
        S[_C1 + i, 0] = -cb / rc
        S[_C1 + i, 1] = (sgn * p * cb + a * sb) / rc
        S[_F1 + i, 0] = 1.0 / rf
        S[_F1 + i, 1] = -sgn * b / rf
    return S


@njit(cache=True)
def base_Sdot(q, qd, geom):
    a, p, d, rc = geom[0], geom[2], geom[3], geom[4]
    phi = q[_PHI]
    Sd = np.zeros((9, 2))
    Sd[0, 0] = -np.sin(phi) * qd[_PHI]
    Sd[1, 0] = np.cos(phi) * qd[_PHI]
    for i in range(2):
        sgn = -1.0 if i == 0 else 1.0
        beta = q[_B1 + i]
        bd = qd[_B1 + i]
        sb, cb = np.sin(beta), np.cos(beta)
        Sd[_B1 + i, 0] = cb / d * bd
        Sd[_B1 + i, 1] = (-sgn * p * cb - a * sb) / d * bd
        Sd[_C1 + i, 0] = sb / rc * bd
        Sd[_C1 + i, 1] = (-sgn * p * sb + a * cb) / rc * bd
    return Sd


@njit(cache=True)
def base_reduced(q, u, bodies, geom, ia, arm, include_rotor, h):
    """(M~, C~ u, S) with the Coriolis term from Christoffel symbols (central differences)."""
    S = base_S(q, geom)
    qd = np.zeros(9)
    for i in range(9):
        qd[i] = S[i, 0] * u[0] + S[i, 1] * u[1]
    M = base_mass(q, bodies, geom, ia, arm, include_rotor)
    # C qd = sum_k dM/dq_k qd_k qd - 1/2 [qd^T dM/dq_i qd]_i over the shape coordinates
    Cqd = np.zeros(9)
    qp = q.copy()
    for k in (_PHI, _B1, _B2):
        qp[k] = q[k] + h
        Mp = base_mass(qp, bodies, geom, ia, arm, include_rotor)
        qp[k] = q[k] - h
        Mm = base_mass(qp, bodies, geom, ia, arm, include_rotor)
        qp[k] = q[k]
        quad = 0.0
        for i in range(9):
            row = 0.0
            for j in range(9):
                row += (Mp[i, j] - Mm[i, j]) * qd[j]
            row /= 2.0 * h
            Cqd[i] += qd[k] * row
            quad += qd[i] * row
        Cqd[k] -= 0.5 * quad
    Sd = base_Sdot(q, qd, geom)
    sdu = np.zeros(9)
    for i in range(9):
        sdu[i] = Sd[i, 0] * u[0] + Sd[i, 1] * u[1]
    Mt = np.zeros((2, 2))
    Ctu = np.zeros(2)
    for i in range(9):
        ms0 = 0.0
        ms1 = 0.0
        msd = 0.0
        for j in range(9):
            ms0 += M[i, j] * S[j, 0]
            ms1 += M[i, j] * S[j, 1]
            msd += M[i, j] * sdu[j]
        Mt[0, 0] += S[i, 0] * ms0
        Mt[0, 1] += S[i, 0] * ms1
        Mt[1, 1] += S[i, 1] * ms1
        Ctu[0] += S[i, 0] * (msd + Cqd[i])
        Ctu[1] += S[i, 1] * (msd + Cqd[i])
    Mt[1, 0] = Mt[0, 1]
    return Mt, Ctu, S


@njit(cache=True, inline="always")
def _solve2(A, b0, b1):
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    return (A[1, 1] * b0 - A[0, 1] * b1) / det, (A[0, 0] * b1 - A[1, 0] * b0) / det


@njit(cache=True)
def _base_accel(q, u, tau, bodies, geom, ia, arm, include_rotor, h):
    Mt, Ctu, S = base_reduced(q, u, bodies, geom, ia, arm, include_rotor, h)
    g0 = S[_F1, 0] * tau[0] + S[_F2, 0] * tau[1] - Ctu[0]
    g1 = S[_F1, 1] * tau[0] + S[_F2, 1] * tau[1] - Ctu[1]
    a0, a1 = _solve2(Mt, g0, g1)
    return np.array([a0, a1]), S


@njit(cache=True)
def base_rollout(q0, u0, ur, udr, dt, kv, bodies, geom, ia, arm, include_rotor, h):
    """RK4 in (q_b, u) with q_b' = S(q_b) u; wheel torques by computed torque held per step."""
    N = ur.shape[0]
    Q = np.zeros((N + 1, 9))
    U = np.zeros((N + 1, 2))
    TAU = np.zeros((N, 2))
    q = q0.copy()
    u = u0.copy()
    Q[0] = q
    U[0] = u
    B = np.zeros((2, 2))
    for k in range(N):
        Mt, Ctu, S = base_reduced(q, u, bodies, geom, ia, arm, include_rotor, h)
        ud0 = udr[k, 0] + kv * (ur[k, 0] - u[0])
        ud1 = udr[k, 1] + kv * (ur[k, 1] - u[1])
        B[0, 0], B[0, 1] = S[_F1, 0], S[_F2, 0]
        B[1, 0], B[1, 1] = S[_F1, 1], S[_F2, 1]
        t0, t1 = _solve2(B, Mt[0, 0] * ud0 + Mt[0, 1] * ud1 + Ctu[0],
                         Mt[1, 0] * ud0 + Mt[1, 1] * ud1 + Ctu[1])
        tau = np.array([t0, t1])
        a1, S1 = _base_accel(q, u, tau, bodies, geom, ia, arm, include_rotor, h)
        k1 = S1 @ u
        q2 = q + 0.5 * dt * k1
        u2 = u + 0.5 * dt * a1
        a2, S2 = _base_accel(q2, u2, tau, bodies, geom, ia, arm, include_rotor, h)
        k2 = S2 @ u2
        q3 = q + 0.5 * dt * k2
        u3 = u + 0.5 * dt * a2
        a3, S3 = _base_accel(q3, u3, tau, bodies, geom, ia, arm, include_rotor, h)
        k3 = S3 @ u3
        q4 = q + dt * k3
        u4 = u + dt * a3
        a4, S4 = _base_accel(q4, u4, tau, bodies, geom, ia, arm, include_rotor, h)
        k4 = S4 @ u4
        q = q + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        u = u + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        Q[k + 1] = q
        U[k + 1] = u
        TAU[k] = tau
    return Q, U, TAU


@njit(cache=True)
def sonar_walls(pose, mounts, Lx, Ly):
    """Ray/wall hits of base-frame sonar mounts (x, y, angle) in the rectangular room.

    Walls: 0 at x=0, 1 at y=Ly, 2 at x=-Lx, 3 at y=0.  Returns distances (inf if no hit),
    wall indices (-1 if no hit), distances of the hit points from the nearest wall end,
    ray origins and unit directions.
    """
    n = mounts.shape[0]
    margin = np.zeros(n)
    c, s = np.cos(pose[2]), np.sin(pose[2])
    dist = np.full(n, np.inf)
    wall = np.full(n, -1)
    O = np.zeros((n, 2))
    D = np.zeros((n, 2))
    for i in range(n):
        ox = pose[0] + c * mounts[i, 0] - s * mounts[i, 1]
        oy = pose[1] + s * mounts[i, 0] + c * mounts[i, 1]
        a = pose[2] + mounts[i, 2]
        dx, dy = np.cos(a), np.sin(a)
        O[i, 0], O[i, 1], D[i, 0], D[i, 1] = ox, oy, dx, dy
        for k in range(4):
            axis = k % 2
            if k == 0:
                cpl = 0.0
            elif k == 1:
                cpl = Ly
            elif k == 2:
                cpl = -Lx
            else:
                cpl = 0.0
            da = dx if axis == 0 else dy
            if abs(da) < 1e-12:
                continue
            sk = (cpl - (ox if axis == 0 else oy)) / da
            if sk <= 1e-12 or sk >= dist[i]:
                continue
            if axis == 0:
                other, lo, hi = oy + sk * dy, 0.0, Ly
            else:
                other, lo, hi = ox + sk * dx, -Lx, 0.0
            if lo - 1e-9 <= other <= hi + 1e-9:
                dist[i] = sk
                wall[i] = k
                margin[i] = min(other - lo, hi - other)
    return dist, wall, margin, O, D
