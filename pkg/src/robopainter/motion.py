"""Motion primitives for the mission executive.

Arm activities (joint quintics, holds and IK-tracked tip paths along the wall),
base reference motions (trapezoidal line/turn segments) and the unicycle
tracking law that turns a base reference plus a pose estimate into (v, omega).

Wall frames: ``u`` runs along the wall from its start corner, the inward normal
points into the room.  While painting, the base faces ``-t`` (the wall is on its
left, +y of the base frame) so advancing to the next post is a reverse move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from robopainter import _compiled as C
from robopainter.kinematics import NoConvergence
from robopainter.params import RobotParams
from robopainter.trajectory import quintic_scalar

WALL_DISTANCE = 0.8           # base origin to wall while painting (m)
CORE_PITCH = (math.radians(-20.0), math.radians(30.0))  # nozzle pitch at z = 0 and at the core top
CORE_TOP = 2.45
OUTLINE_PITCH = math.radians(50.0)
QD_MAX = 2.0                  # rad/s, sizing of point-to-point joint moves
MIN_MOVE_TIME = 0.5
PATH_STEP = 0.01              # IK knot spacing along tip paths (m)
MAX_IK_JUMP = 0.25            # rad between neighbouring knots
IK_TOL = 1e-9
IK_ITER = 200
IK_DAMPING = 1e-3
N_SEEDS = 64


def wrap(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


# --------------------------------------------------------------------------- wall geometry


@dataclass(frozen=True)
class WallFrame:
    index: int
    corner: tuple[float, float]
    tangent: tuple[float, float]
    length: float
    height: float

    @property
    def normal(self) -> np.ndarray:
        """Unit normal pointing into the room."""
        return np.array([-self.tangent[1], self.tangent[0]])

    @property
    def heading(self) -> float:
        """Base yaw while painting this wall (x_b = -t)."""
        return math.atan2(-self.tangent[1], -self.tangent[0])

    def point(self, u, offset=0.0) -> np.ndarray:
        return np.asarray(self.corner) + u * np.asarray(self.tangent) + offset * self.normal

    def to_wall(self, xy) -> tuple[float, float]:
        """(u, distance from the wall plane) of a floor point."""
        d = np.asarray(xy, dtype=float) - np.asarray(self.corner)
        return float(d @ np.asarray(self.tangent)), float(d @ self.normal)

    def post_pose(self, u: float, distance: float = WALL_DISTANCE) -> np.ndarray:
        x, y = self.point(u, distance)
        return np.array([x, y, self.heading])


def core_pitch(z: float) -> float:
    g0, g1 = CORE_PITCH
    return g0 + (g1 - g0) * min(max(z, 0.0), CORE_TOP) / CORE_TOP


def paint_target(wall: WallFrame, base_pose, u: float, z: float, pitch: float, roll: float,
                 standoff: float):
    """Nozzle orientation and tip position in the base (arm) frame.

    The spray axis hits the wall at (u, z), pitched up by ``pitch``, with the tip
    ``standoff`` from the wall plane.  Roll 0 puts the long side of the pattern along
    the wall; roll pi/2 puts it vertical.
    """
    n = np.array([*wall.normal, 0.0])
    t = np.array([*wall.tangent, 0.0])
    aim = np.array([*wall.point(u), z])
    a = math.cos(pitch) * (-n) + math.sin(pitch) * np.array([0.0, 0.0, 1.0])
    tip = aim - standoff / math.cos(pitch) * a
    x0 = -t
    y0 = np.cross(a, x0)
    xt = math.cos(roll) * x0 + math.sin(roll) * y0
    R = np.column_stack([xt, np.cross(a, xt), a])
    x, y, psi = base_pose
    c, s = math.cos(psi), math.sin(psi)
    Rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return Rz.T @ R, Rz.T @ (tip - np.array([x, y, 0.0]))


# --------------------------------------------------------------------------- IK paths


class ArmModel:
    """Packed arm kinematics plus a fixed multi-start seed set."""

    def __init__(self, params: RobotParams, seed: int = 12345):
        P = C.pack_arm(params)
        self.kk, self.mount = P[0], P[5]
        self.packed = P
        self.seeds = np.random.default_rng(seed).uniform(-np.pi, np.pi, (N_SEEDS, 6))

    def ik(self, R, p, seed):
        q, res, ok = C.ik(R, p, np.asarray(seed, dtype=float), self.kk, self.mount,
                          IK_TOL, IK_ITER, IK_DAMPING)
        return q, ok

    def tool(self, q):
        return C.tool_pose(np.asarray(q, dtype=float), self.kk, self.mount)

    def solutions(self, R, p, near=None) -> list[np.ndarray]:
        """Distinct IK solutions from all seeds, unwrapped towards and sorted by distance to ``near``."""
        out = []
        seeds = self.seeds if near is None else np.vstack([near, self.seeds])
        for s in seeds:
            q, ok = self.ik(R, p, s)
            if not ok:
                continue
            if near is not None:
                q = near + wrap(q - near)
            if not any(np.abs(wrap(q - x)).max() < 1e-4 for x in out):
                out.append(q)
        if near is not None:
            out.sort(key=lambda q: float(np.abs(q - near).max()))
        return out

    def follow(self, targets, q0) -> np.ndarray | None:
        """IK continuation along ``targets`` from the solution ``q0`` of the first one."""
        Q = np.empty((len(targets), 6))
        Q[0] = q0
        q = q0
        for k in range(1, len(targets)):
            qn, ok = self.ik(*targets[k], q)
            if not ok:
                return None
            qn = q + wrap(qn - q)
            if np.abs(qn - q).max() > MAX_IK_JUMP:
                return None
            Q[k] = q = qn
        return Q

    def solve_path(self, targets, near) -> np.ndarray:
        """Joint knots for a tip path: continuation from the solution nearest ``near``."""
        near = np.asarray(near, dtype=float)
        q, ok = self.ik(*targets[0], near)
        if ok:
            Q = self.follow(targets, near + wrap(q - near))
            if Q is not None:
                return Q
        for q0 in self.solutions(*targets[0], near=near):
            Q = self.follow(targets, q0)
            if Q is not None:
                return Q
        raise NoConvergence(IK_ITER, float("nan"))

    def solve_pose(self, R, p, near) -> np.ndarray:
        near = np.asarray(near, dtype=float)
        q, ok = self.ik(R, p, near)
        if ok:
            return near + wrap(q - near)
        sols = self.solutions(R, p, near=near)
        if not sols:
            raise NoConvergence(IK_ITER, float("nan"))
        return sols[0]


# --------------------------------------------------------------------------- arm activities


def move_time(q0, q1, qd_max: float = QD_MAX, t_min: float = MIN_MOVE_TIME) -> float:
    """Quintic duration keeping the peak joint speed (1.875 dq/T) under ``qd_max``."""
    dq = float(np.abs(np.asarray(q1) - np.asarray(q0)).max())
    return max(t_min, 1.875 * dq / qd_max)


@dataclass(frozen=True)
class Hold:
    q: np.ndarray
    t0: float = 0.0
    T: float = 0.0

    @property
    def t_end(self) -> float:
        return self.t0 + self.T

    @property
    def q_end(self) -> np.ndarray:
        return self.q

    def sample(self, t):
        n = np.size(t)
        return np.tile(self.q, (n, 1)), np.zeros((n, 6)), np.zeros((n, 6))

    def spray(self, t) -> np.ndarray:
        return np.zeros(np.size(t), dtype=bool)


@dataclass(frozen=True)
class JointMove:
    """Joint-space quintic from q0 to q1 starting at t0 (spray off)."""

    q0: np.ndarray
    q1: np.ndarray
    t0: float
    T: float

    @classmethod
    def between(cls, q0, q1, t0: float, T: float | None = None) -> "JointMove":
        q0, q1 = np.asarray(q0, dtype=float), np.asarray(q1, dtype=float)
        return cls(q0, q1, t0, move_time(q0, q1) if T is None else T)

    @property
    def t_end(self) -> float:
        return self.t0 + self.T

    @property
    def q_end(self) -> np.ndarray:
        return self.q1

    def sample(self, t):
        tau = np.clip((np.atleast_1d(t) - self.t0) / self.T, 0.0, 1.0)
        s, sd, sdd = quintic_scalar(tau)
        d = self.q1 - self.q0
        return (self.q0 + s[:, None] * d, (sd / self.T)[:, None] * d,
                (sdd / self.T**2)[:, None] * d)

    def spray(self, t) -> np.ndarray:
        return np.zeros(np.size(t), dtype=bool)


@dataclass(frozen=True)
class PathLeg:
    t0: float
    T: float
    s0: float
    s1: float
    spray: bool


class PathMotion:
    """Tip path tracked through IK knots: q(s) spline composed with per-leg quintic time laws."""

    def __init__(self, s_knots, Q, legs: Sequence[PathLeg], points=None):
        self.s = np.asarray(s_knots, dtype=float)
        self.Q = np.asarray(Q, dtype=float)
        self.spline = CubicSpline(self.s, self.Q, axis=0)
        self.d1 = self.spline.derivative(1)
        self.d2 = self.spline.derivative(2)
        self.legs = tuple(legs)
        self.points = points
        self._t0 = np.array([l.t0 for l in self.legs])

    @property
    def t0(self) -> float:
        return self.legs[0].t0

    @property
    def t_end(self) -> float:
        return self.legs[-1].t0 + self.legs[-1].T

    @property
    def q_start(self) -> np.ndarray:
        return self.Q[0]

    @property
    def q_end(self) -> np.ndarray:
        return self.Q[-1]

    def _leg_index(self, t):
        return np.clip(np.searchsorted(self._t0, t, side="right") - 1, 0, len(self.legs) - 1)

    def path_coordinate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._leg_index(t)
        s = np.empty_like(t)
        sd = np.empty_like(t)
        sdd = np.empty_like(t)
        for k in np.unique(idx):
            leg = self.legs[k]
            m = idx == k
            tau = np.clip((t[m] - leg.t0) / leg.T, 0.0, 1.0)
            a, ad, add = quintic_scalar(tau)
            L = leg.s1 - leg.s0
            s[m] = leg.s0 + a * L
            sd[m] = ad * L / leg.T
            sdd[m] = add * L / leg.T**2
        return s, sd, sdd, idx

    def sample(self, t):
        s, sd, sdd, _ = self.path_coordinate(t)
        q = self.spline(s)
        dq = self.d1(s)
        return q, dq * sd[:, None], self.d2(s) * (sd**2)[:, None] + dq * sdd[:, None]

    def spray(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._leg_index(t)
        on = np.array([l.spray for l in self.legs])[idx]
        return on & (t >= self.t0) & (t < self.t_end)

    def retimed(self, t0: float) -> "PathMotion":
        dt = t0 - self.t0
        legs = [PathLeg(l.t0 + dt, l.T, l.s0, l.s1, l.spray) for l in self.legs]
        return PathMotion(self.s, self.Q, legs, self.points)


class Chain:
    """Consecutive arm activities; each one is sampled over its own time span."""

    def __init__(self, *motions):
        self.motions = tuple(motions)
        self._ends = np.array([m.t_end for m in self.motions])

    @property
    def t0(self) -> float:
        return self.motions[0].t0

    @property
    def t_end(self) -> float:
        return self.motions[-1].t_end

    @property
    def q_end(self) -> np.ndarray:
        return self.motions[-1].q_end

    def _index(self, t):
        return np.minimum(np.searchsorted(self._ends, t, side="right"), len(self.motions) - 1)

    def sample(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._index(t)
        q, qd, qdd = (np.empty((len(t), 6)) for _ in range(3))
        for k in np.unique(idx):
            m = idx == k
            q[m], qd[m], qdd[m] = self.motions[k].sample(t[m])
        return q, qd, qdd

    def spray(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._index(t)
        out = np.zeros(len(t), dtype=bool)
        for k in np.unique(idx):
            m = idx == k
            out[m] = self.motions[k].spray(t[m])
        return out


def tip_path_motion(arm: ArmModel, legs, point_fn, near, t0: float) -> PathMotion:
    """Build a PathMotion for consecutive collinear tip legs.

    ``legs`` are (T, p0, p1, spray) in wall coordinates (u, z); ``point_fn(u, z)`` gives
    the (R, p) base-frame target.
    """
    p_start = np.asarray(legs[0][1], dtype=float)
    p_end = np.asarray(legs[-1][2], dtype=float)
    total = float(np.linalg.norm(p_end - p_start))
    direction = (p_end - p_start) / total if total > 0 else np.zeros(2)
    n = max(int(math.ceil(total / PATH_STEP)), 2)
    s_knots = np.linspace(0.0, total, n + 1)
    pts = p_start + s_knots[:, None] * direction
    targets = [point_fn(*p) for p in pts]
    Q = arm.solve_path(targets, near)
    out, t = [], t0
    for T, p0, p1, spray in legs:
        s0 = float((np.asarray(p0) - p_start) @ direction)
        s1 = float((np.asarray(p1) - p_start) @ direction)
        out.append(PathLeg(t, T, s0, s1, spray))
        t += T
    return PathMotion(s_knots, Q, out, pts)


# --------------------------------------------------------------------------- base motions


def trapezoid(dist: float, vmax: float, amax: float):
    """Duration and profile s(t) -> (s, v, a) of a rest-to-rest trapezoidal move."""
    L = abs(dist)
    sign = 1.0 if dist >= 0 else -1.0
    if L < 1e-12:
        return 0.0, lambda t: (0.0, 0.0, 0.0)
    ta = vmax / amax
    if L < vmax * ta:  # triangular
        ta = math.sqrt(L / amax)
        vp = amax * ta
        tc = 0.0
    else:
        vp = vmax
        tc = (L - vmax * ta) / vmax
    T = 2 * ta + tc

    def prof(t):
        t = min(max(t, 0.0), T)
        if t < ta:
            return sign * 0.5 * amax * t * t, sign * amax * t, sign * amax
        if t < ta + tc:
            return sign * (0.5 * vp * ta + vp * (t - ta)), sign * vp, 0.0
        r = T - t
        return sign * (L - 0.5 * amax * r * r), sign * amax * r, -sign * amax if r > 0 else 0.0

    return T, prof


@dataclass(frozen=True)
class BaseSegment:
    kind: str  # "line" | "turn"
    t0: float
    T: float
    start: tuple[float, float, float]
    amount: float  # metres (signed, along heading) or radians
    vmax: float
    amax: float

    def ref(self, t):
        """(x, y, psi, v, omega) of the reference at time t."""
        _, prof = trapezoid(self.amount, self.vmax, self.amax)
        s, v, _ = prof(t - self.t0)
        x, y, psi = self.start
        if self.kind == "line":
            return x + s * math.cos(psi), y + s * math.sin(psi), psi, v, 0.0
        return x, y, psi + s, 0.0, v

    @property
    def end(self):
        x, y, psi, _, _ = self.ref(self.t0 + self.T)
        return x, y, psi


@dataclass(frozen=True)
class BaseMotion:
    segments: tuple[BaseSegment, ...]
    t0: float
    goal: tuple[float, float, float]

    @property
    def t_end(self) -> float:
        return self.segments[-1].t0 + self.segments[-1].T if self.segments else self.t0

    def ref(self, t):
        if not self.segments:
            return (*self.goal, 0.0, 0.0)
        for seg in self.segments:
            if t < seg.t0 + seg.T:
                return seg.ref(t)
        return self.segments[-1].ref(t)


@dataclass(frozen=True)
class BaseLimits:
    v: float = 0.5
    a: float = 1.0
    w: float = 0.8
    alpha: float = 1.5


def plan_base_motion(start, goal, t0: float, limits: BaseLimits = BaseLimits(),
                     v_line: float | None = None, min_dist: float = 0.005) -> BaseMotion:
    """Turn towards the goal (driving forwards or backwards, whichever turns less),
    drive straight, turn to the goal heading."""
    x, y, psi = (float(v) for v in start)
    gx, gy, gpsi = (float(v) for v in goal)
    segs = []
    t = t0
    dx, dy = gx - x, gy - y
    dist = math.hypot(dx, dy)
    vmax = limits.v if v_line is None else v_line

    def turn(psi_from, dpsi):
        nonlocal t
        if abs(dpsi) < 1e-4:
            return psi_from
        T, _ = trapezoid(dpsi, limits.w, limits.alpha)
        segs.append(BaseSegment("turn", t, T, (x, y, psi_from), dpsi, limits.w, limits.alpha))
        t += T
        return psi_from + dpsi

    if dist > min_dist:
        bearing = math.atan2(dy, dx)
        fwd = float(wrap(bearing - psi))
        back = float(wrap(bearing + math.pi - psi))
        if abs(fwd) <= abs(back):
            dpsi, signed = fwd, dist
        else:
            dpsi, signed = back, -dist
        psi = turn(psi, dpsi)
        T, _ = trapezoid(signed, vmax, limits.a)
        segs.append(BaseSegment("line", t, T, (x, y, psi), signed, vmax, limits.a))
        t += T
        x, y = gx, gy
    turn(psi, float(wrap(gpsi - psi)))
    return BaseMotion(tuple(segs), t0, (gx, gy, gpsi))


def plan_turn(start, dpsi: float, t0: float, limits: BaseLimits = BaseLimits()) -> BaseMotion:
    """Turn in place by exactly ``dpsi`` (no wrapping)."""
    T, _ = trapezoid(dpsi, limits.w, limits.alpha)
    x, y, psi = (float(v) for v in start)
    seg = BaseSegment("turn", t0, T, (x, y, psi), dpsi, limits.w, limits.alpha)
    return BaseMotion((seg,), t0, (x, y, psi + dpsi))


@dataclass(frozen=True)
class TrackingGains:
    kx: float = 2.0
    ky: float = 8.0
    ktheta: float = 3.0
    ktheta0: float = 2.0


def tracking_command(ref, pose, gains: TrackingGains = TrackingGains()):
    """Unicycle tracking law (bidirectional Kanayama form) -> (v, omega)."""
    xr, yr, pr, vr, wr = ref
    x, y, p = pose
    c, s = math.cos(p), math.sin(p)
    ex = c * (xr - x) + s * (yr - y)
    ey = -s * (xr - x) + c * (yr - y)
    ep = float(wrap(pr - p))
    v = vr * math.cos(ep) + gains.kx * ex
    w = wr + vr * gains.ky * ey + (gains.ktheta0 + abs(vr) * gains.ktheta) * math.sin(ep)
    return v, w
