"""Time-stepped mission simulation: dynamics in the loop, sensors, reports and logs.

The supervisor (``mission_step``) runs every ``tick`` seconds; in between, the
arm and the base are integrated with RK4 at ``dt`` under computed-torque control
held constant over each integration step.  The base is integrated in reduced
coordinates (pose plus the two mobility velocities) and lifted through the
mobility matrix, so the rolling constraints hold by construction.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from robopainter import _compiled as C
from robopainter import dynamics as dyn
from robopainter import kinematics as kin
from robopainter import mission as ms
from robopainter import motion as mo
from robopainter.params import RobotParams
from robopainter.trajectory import CORE_HEIGHT, STRIP_TIME, STRIP_WIDTH, CoverageMap, coverage_svg

SCHEMA_VERSION = 1
log = logging.getLogger("robopainter")


class ConfigError(ValueError):
    pass


class MissionFailure(RuntimeError):
    def __init__(self, message: str, result: "MissionResult"):
        super().__init__(message)
        self.result = result


# --------------------------------------------------------------------------- config


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    duration_cap: float = 3600.0
    integrator: str = "RK4"
    kp: float | tuple[float, ...] = 400.0
    kd: float | tuple[float, ...] = 40.0
    base_kv: float = 20.0
    base_speed_cap: float = 0.5
    seed: int = 0
    tick: float = 0.05
    arm_model: str = "dynamic"    # "dynamic" | "kinematic" (arm follows its reference exactly)
    base_model: str = "dynamic"   # "dynamic" | "kinematic"
    base_dt: float | None = None
    corrections: bool = True
    paint: bool = True
    disturbances: bool = True
    refill_time: float = 20.0
    wheel_radius_error: float = 0.003   # 1-sigma relative error of the believed wheel radii
    wheel_slip: float = 0.01            # 1-sigma relative noise on each encoder increment
    encoder_counts: int = 4096
    coverage_stride: int = 10
    trace_path: str | None = None
    joint_log_path: str | None = None
    svg_path: str | None = None
    report_path: str | None = None

    def __post_init__(self):
        if not self.dt > 0 or not self.tick > 0:
            raise ConfigError("dt and tick must be positive")
        n = self.tick / self.dt
        if abs(n - round(n)) > 1e-9:
            raise ConfigError(f"tick {self.tick} is not a multiple of dt {self.dt}")
        if self.base_dt is not None:
            nb = self.tick / self.base_dt
            if not self.base_dt > 0 or abs(nb - round(nb)) > 1e-9:
                raise ConfigError(f"tick {self.tick} is not a multiple of base_dt {self.base_dt}")
        if self.integrator not in ("RK4", "semi-implicit-Euler"):
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        if self.arm_model not in ("dynamic", "kinematic") or self.base_model not in ("dynamic", "kinematic"):
            raise ConfigError("arm_model/base_model must be 'dynamic' or 'kinematic'")
        if np.any(np.asarray(self.kp) < 0) or np.any(np.asarray(self.kd) < 0) or self.base_kv < 0:
            raise ConfigError("gains must be non-negative")
        if np.size(self.kp) not in (1, 6) or np.size(self.kd) not in (1, 6):
            raise ConfigError("kp/kd must be a scalar or one value per joint")
        if self.duration_cap <= 0 or self.base_speed_cap <= 0:
            raise ConfigError("duration cap and speed cap must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        for k in ("kp", "kd"):
            if isinstance(doc.get(k), list):
                doc[k] = tuple(float(v) for v in doc[k])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)


def load_sim_config(path: str | Path) -> SimConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return SimConfig.from_dict(doc)


# --------------------------------------------------------------------------- single-step API


@dataclass(frozen=True)
class ArmState:
    q: np.ndarray
    qd: np.ndarray


@dataclass(frozen=True)
class BaseState:
    q: np.ndarray   # 9 generalized coordinates
    u: np.ndarray   # (v, omega)


def computed_torque_control(ref, state: ArmState, gains, params: RobotParams,
                            friction: bool = False, gamma_ex=None) -> np.ndarray:
    """Gamma_a = ID(q, qd, qdd_ref + Kd (qd_ref - qd) + Kp (q_ref - q)) with gravity and rotor inertia."""
    q_r, qd_r, qdd_r = (np.asarray(v, dtype=float) for v in ref)
    kp, kd = gains
    a = qdd_r + np.asarray(kd) * (qd_r - state.qd) + np.asarray(kp) * (q_r - state.q)
    fr = dyn.params_friction(state.qd, params) if friction else None
    return dyn.arm_inverse_dynamics_lagrange(state.q, state.qd, a, params, gamma_fr=fr,
                                             gamma_ex=gamma_ex, include_rotor=True)


def _arm_rate(params, tau, friction, gamma_ex, gravity, free):
    def f(q, qd):
        fr = dyn.params_friction(qd, params) if friction else None
        return dyn.arm_forward_dynamics(q, qd, tau, params, gamma_fr=fr, gamma_ex=gamma_ex,
                                        include_rotor=True, free=free, gravity=gravity)
    return f


def integrate_step(arm: ArmState | None, base: BaseState | None, tau_arm, tau_wheels, dt: float,
                   params: RobotParams, integrator: str = "RK4", friction: bool = False,
                   gamma_ex=None, gravity: bool = True, base_arm=None, free=None):
    """Advance arm (joint space) and base (pose + mobility velocities) by one step.

    Torques are held over the step.  The base state is lifted through q_b' = S(q_b) u.
    ``free`` (boolean mask) locks the other arm joints.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    out_arm = out_base = None
    if arm is not None:
        acc = _arm_rate(params, np.asarray(tau_arm, dtype=float), friction, gamma_ex, gravity, free)
        q, v = np.asarray(arm.q, dtype=float), np.asarray(arm.qd, dtype=float)
        if integrator == "RK4":
            a1 = acc(q, v)
            a2 = acc(q + 0.5 * dt * v, v + 0.5 * dt * a1)
            v2 = v + 0.5 * dt * a1
            v3 = v + 0.5 * dt * a2
            a3 = acc(q + 0.5 * dt * v2, v3)
            v4 = v + dt * a3
            a4 = acc(q + dt * v3, v4)
            q1 = q + dt / 6 * (v + 2 * v2 + 2 * v3 + v4)
            v1 = v + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        else:
            v1 = v + dt * acc(q, v)
            q1 = q + dt * v1
        out_arm = ArmState(q1, v1)
    if base is not None:
        tau_w = np.asarray(tau_wheels, dtype=float)

        def rate(qb, u):
            S = kin.base_mobility_matrix(qb, params)
            return S @ u, dyn.base_forward_dynamics(qb, u, tau_w, params, arm=base_arm)

        qb, u = np.asarray(base.q, dtype=float), np.asarray(base.u, dtype=float)
        if integrator == "RK4":
            k1, a1 = rate(qb, u)
            k2, a2 = rate(qb + 0.5 * dt * k1, u + 0.5 * dt * a1)
            k3, a3 = rate(qb + 0.5 * dt * k2, u + 0.5 * dt * a2)
            k4, a4 = rate(qb + dt * k3, u + dt * a3)
            qb1 = qb + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            u1 = u + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        else:
            _, a = rate(qb, u)
            u1 = u + dt * a
            qb1 = qb + dt * kin.base_mobility_matrix(qb, params) @ u1
        out_base = BaseState(qb1, u1)
    return out_arm, out_base


# --------------------------------------------------------------------------- report


@dataclass
class MissionReport:
    schema_version: int
    status: str
    seed: int
    painted_area: float
    paintable_area: float
    opening_area: float
    openings: list
    covered_fraction: float
    wall_coverage: list
    spray_time: float
    total_time: float
    painting_rate: float
    pure_strip_rate: float
    max_tracking_error: float
    localization: dict
    pause_events: list
    phase_visits: dict
    time_budget: dict
    power: dict
    max_constraint_residual: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = 1) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


@dataclass
class MissionResult:
    report: MissionReport
    events: list
    trace: list
    coverage: list
    joint_log: str
    state: Any = None

    def trace_lines(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.trace)

    def svg(self, wall: int = 0) -> str:
        cov = self.coverage[wall]
        return coverage_svg(cov)


def pure_strip_rate() -> float:
    """Spray-on-only rate of one full-height strip, m^2/h."""
    return STRIP_WIDTH * CORE_HEIGHT / STRIP_TIME * 3600.0


# --------------------------------------------------------------------------- mission loop


def _vibration_tuple(vib: dyn.SprayVibration):
    amp = vib.rms * math.sqrt(2.0 / len(vib.freqs))
    return (np.asarray(vib.freqs, dtype=float), np.asarray(vib.phases, dtype=float),
            np.asarray(vib.directions, dtype=float), float(amp))


def _planar(qb) -> np.ndarray:
    return np.array([qb[kin.X], qb[kin.Y], qb[kin.PHI]])


class _Coverage:
    """Accumulates true spray footprints on the walls' coverage rasters."""

    def __init__(self, room: ms.RoomModel):
        self.walls = room.walls
        self.maps = [CoverageMap(w) for w in room.wall_specs]
        self.prev = None  # (wall, u, z, vertical)

    def hit(self, k: int, tip, x_axis, z_axis, base_pose):
        x, y, psi = base_pose
        c, s = math.cos(psi), math.sin(psi)
        R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        p = R @ tip + np.array([x, y, 0.0])
        a = R @ z_axis
        xa = R @ x_axis
        w = self.walls[k]
        n = np.array([*w.normal, 0.0])
        t = np.array([*w.tangent, 0.0])
        corner = np.array([*w.corner, 0.0])
        den = a @ n
        if den > -1e-6:
            return None
        lam = -((p - corner) @ n) / den
        hitp = p + lam * a
        u = float((hitp - corner) @ t)
        z = float(hitp[2])
        # pattern long axis as it lands on the wall: tool x projected along the spray axis
        xw = xa - a * ((xa @ n) / den)
        return u, z, abs(xw[2]) > abs(xw @ t)

    def add(self, k: int, pts):
        for p in pts:
            if p is None:
                self.end()
                continue
            if self.prev is not None and self.prev[0] == k:
                self.maps[k].add_segment(self.prev[1:3], p[:2], p[2])
            else:
                self.maps[k].add_segment(p[:2], p[:2], p[2])
            self.prev = (k, *p)

    def end(self):
        if self.prev is not None:
            self.maps[self.prev[0]].end_stroke()
        self.prev = None


def run_mission(params: RobotParams, room: ms.RoomModel, config: SimConfig = SimConfig(),
                mission_config: ms.MissionConfig | None = None, keep_trace: bool = True) -> MissionResult:
    """Run the full mission loop and return the report plus logs (also written if paths are set)."""
    cfg = config
    mcfg = mission_config or ms.MissionConfig()
    mcfg = replace(mcfg, tick=cfg.tick, corrections=cfg.corrections, paint=cfg.paint,
                   refill_time=cfg.refill_time, cup_capacity=params.spray.cup_capacity_s,
                   limits=replace(mcfg.limits, v=min(mcfg.limits.v, cfg.base_speed_cap)))
    ss = np.random.SeedSequence(cfg.seed)
    r_sonar, r_imu, r_vib, r_odo = (np.random.default_rng(s) for s in ss.spawn(4))
    band = params.spray.vibration_band
    lo, hi = band[0] * 1.2, band[1] * 0.9  # keep clear of the detection threshold and the cap
    vib = dyn.SprayVibration.from_rng(r_vib, (lo, hi), params.spray.vibration_freq_band)
    vib_t = _vibration_tuple(vib)
    dry_scale = params.spray.dry_vibration_rms / vib.rms
    radius_err = 1.0 + cfg.wheel_radius_error * r_odo.standard_normal(2)

    arm_model = mo.ArmModel(params)
    ctx = ms.MissionContext(room, arm_model, mcfg)
    P = C.pack_arm(params)
    kk, mount = P[0], P[5]
    bodies, geom, ia = C.pack_base(params)
    b_half, r_wheel = params.geometry.b, params.geometry.r_f
    kp = np.broadcast_to(np.asarray(cfg.kp, dtype=float), (6,))
    kd = np.broadcast_to(np.asarray(cfg.kd, dtype=float), (6,))
    if np.ptp(kp) > 0 or np.ptp(kd) > 0:
        raise ConfigError("the compiled controller uses one gain pair for all joints")
    kp_s, kd_s = float(kp[0]), float(kd[0])

    n_sub = int(round(cfg.tick / cfg.dt))
    base_dt = cfg.base_dt or cfg.dt
    n_base = int(round(cfg.tick / base_dt))
    imu_stride = max(int(round(1.0 / (ms.IMU_RATE * cfg.dt))), 1)

    qa = dyn.ARM_STOWED.copy()
    qda = np.zeros(6)
    qb = np.zeros(9)
    qb[kin.X], qb[kin.Y], qb[kin.PHI] = room.start_pose
    ub = np.zeros(2)
    lumped = C.pack_lumped(dyn.arm_lumped_inertia(qa, params))
    last_motion = None
    enc = np.zeros(2)  # encoder counts
    counts_per_rad = cfg.encoder_counts / (2 * math.pi)

    state = ms.initial_state(qa)
    imu = ms.ImuWindow()
    coverage = _Coverage(room)
    paint = 1.0
    t = 0.0
    sensors = ms.Sensors(0.0, ctx.suite.measure_all(room, _planar(qb), r_sonar, 0.0), (0.0, 0.0), qa.copy())

    trace, events, pauses = [], [], []
    joint_buf = io.StringIO()
    jw = csv.writer(joint_buf, lineterminator="\n")
    jw.writerow(["t"] + [f"q{i}" for i in range(1, 7)] + [f"qd{i}" for i in range(1, 7)]
                + [f"tau{i}" for i in range(1, 7)] + ["tip_x", "tip_y", "tip_z", "spray"])
    visits: dict[str, int] = {}
    label = None
    spray_total = 0.0
    max_track = 0.0
    loc_err = []
    reg_err = None
    energy = 0.0
    max_resid = 0.0
    budget = {"base_motion": 0.0, "spray": 0.0, "paused": 0.0}
    status = "cap_exceeded"
    tau = np.zeros(6)
    no_spray = np.zeros(n_sub, dtype=bool)
    last_level = state.paint_level

    while t < cfg.duration_cap - 1e-9:
        state, cmd = ms.mission_step(state, sensors, ctx)
        if state.label != label:
            events.append({"t": round(t, 6), "phase": state.label})
            visits[state.phase.value] = visits.get(state.phase.value, 0) + 1
            if state.phase is ms.Phase.PAUSED:
                pauses.append({"t": round(t, 6), "reason": state.pause_reason, "phase": label})
            elif label is not None and label.startswith("Paused") and pauses:
                pauses[-1]["resumed"] = round(t, 6)
            if state.phase is ms.Phase.NAVIGATE_TO_START and reg_err is None:
                true = _planar(qb)
                reg_err = (float(np.hypot(*(state.est[:2] - true[:2]))),
                           float(abs(mo.wrap(state.est[2] - true[2]))))
            log.info("t=%.2f %s", t, state.label)
            label = state.label
        if state.paint_level > last_level + 1e-12:
            imu.clear()  # the operator refilled the cup
            paint = 1.0
        last_level = state.paint_level
        if state.phase is ms.Phase.TERMINATED:
            status = "completed"
            break
        if state.note == "no reliable location":
            status = "failed"
            break
        true = _planar(qb)
        if state.registered:
            loc_err.append(float(np.hypot(*(state.est[:2] - true[:2]))))
        rec = {"t": t, "phase": state.label, "pose": [round(float(v), 9) for v in true],
               "est": [round(float(v), 9) for v in state.est],
               "u_b": [round(float(v), 9) for v in cmd.u]}

        # ---- arm over the tick
        ts = t + cfg.dt * np.arange(n_sub)
        act = cmd.arm if cmd.arm is not None else mo.Hold(qa)
        if cfg.paint and cmd.spray:
            spray = act.spray(ts)
            # true paint level per step
            used = np.cumsum(spray) * cfg.dt / params.spray.cup_capacity_s
            level = paint - np.concatenate([[0.0], used[:-1]])
            wet = spray & (level > 1e-12)
            paint = max(paint - float(spray.sum()) * cfg.dt / params.spray.cup_capacity_s, 0.0)
        else:
            spray = wet = no_spray  # valve closed (always, when paint is off: timed holds only)
        if cfg.arm_model == "dynamic":
            qr, qdr, qddr = act.sample(ts)
            scale = np.where(wet, 1.0, np.where(spray, dry_scale, 0.0)) if cfg.disturbances else np.zeros(n_sub)
            reaction = wet.copy() if cfg.disturbances else np.zeros(n_sub, dtype=bool)
            Q, QD, TAU = C.arm_rollout(qa, qda, qr, qdr, qddr, t, cfg.dt, scale, reaction, True,
                                       kp_s, kd_s, True, True, True, P, vib_t)
            energy += float(np.sum(np.abs(TAU * QD[1:]))) * cfg.dt
            tau = TAU[-1]
        else:
            # the arm follows its reference exactly; sample every step only while spraying
            te = ts + cfg.dt if wet.any() else ts[-1:] + cfg.dt
            qe, qde, _ = act.sample(te)
            Q = np.vstack([qa, qe])
            QD = np.vstack([qda, qde])

        # ---- base over the tick
        if cmd.base_motion is not None and cmd.base_motion is not last_motion:
            lumped = C.pack_lumped(dyn.arm_lumped_inertia(qa, params))
            last_motion = cmd.base_motion
        u_cmd = np.asarray(cmd.u, dtype=float)
        moving = bool(np.any(np.abs(u_cmd) > 1e-12) or np.any(np.abs(ub) > 1e-12))
        if moving:
            budget["base_motion"] += cfg.tick
            if cfg.base_model == "dynamic":
                ur = np.tile(u_cmd, (n_base, 1))
                QB, UB, _ = C.base_rollout(qb, ub, ur, np.zeros((n_base, 2)), base_dt, cfg.base_kv,
                                           bodies, geom, ia, lumped, True, 1e-6)
                if np.all(np.abs(u_cmd) < 1e-12) and np.all(np.abs(UB[-1]) < 1e-6):
                    UB[-1] = 0.0
            else:
                # exact arc for the constant command over the tick
                QB = np.vstack([qb, qb])
                UB = np.vstack([ub, u_cmd])
                QB[1, :3] = ms.dead_reckon(qb[:3], u_cmd, cfg.tick)
                QB[1, kin.PHIF1] += cfg.tick * (u_cmd[0] + b_half * u_cmd[1]) / r_wheel
                QB[1, kin.PHIF2] += cfg.tick * (u_cmd[0] - b_half * u_cmd[1]) / r_wheel
            S = kin.base_mobility_matrix(QB[-1], params)
            resid = float(np.abs(kin.base_constraint_matrix(QB[-1], params) @ (S @ UB[-1])).max())
            max_resid = max(max_resid, resid)
        else:
            QB = np.vstack([qb, qb])
            UB = np.vstack([ub, ub])

        # ---- coverage, tracking error, IMU
        if wet.any() or spray.any():
            spray_total += float(spray.sum()) * cfg.dt
            budget["spray"] += float(spray.sum()) * cfg.dt
        if wet.any():
            idx = np.nonzero(wet)[0]
            pick = idx[::cfg.coverage_stride]
            if pick[-1] != idx[-1]:
                pick = np.append(pick, idx[-1])
            tipP, tipX, tipZ = C.tool_frames(Q[pick + 1], kk, mount)
            if cfg.arm_model == "dynamic":
                # tip against its reference at the same instant (end of step k)
                refP, _, _ = C.tool_frames(np.ascontiguousarray(act.sample(ts[pick] + cfg.dt)[0]), kk, mount)
                max_track = max(max_track, float(np.linalg.norm(tipP - refP, axis=1).max()))
            nb = len(QB) - 1
            bidx = np.minimum(((pick + 1) * nb) // n_sub, nb)
            pts = []
            prev_i = None
            for j, i in enumerate(pick):
                if prev_i is not None and i - prev_i > cfg.coverage_stride:
                    pts.append(None)
                pts.append(coverage.hit(state.wall, tipP[j], tipX[j], tipZ[j], _planar(QB[bidx[j]])))
                prev_i = i
            coverage.add(state.wall, pts)
            if not wet[-1]:
                coverage.end()
        else:
            coverage.end()
        if spray.any():
            k_imu = np.nonzero(spray)[0]
            k_imu = k_imu[(k_imu % imu_stride) == 0]
            acc = vib.acceleration(ts[k_imu]) * np.where(wet[k_imu], 1.0, dry_scale)[:, None]
            imu.push(acc + 0.05 * r_imu.standard_normal(acc.shape))

        qa, qda = Q[-1].copy(), QD[-1].copy()
        qb, ub = QB[-1].copy(), UB[-1].copy()
        if state.phase is ms.Phase.PAUSED:
            budget["paused"] += cfg.tick
        t = round(t + cfg.tick, 9)

        # ---- sensors for the next tick
        pose = _planar(qb)
        new_enc = np.floor(qb[[kin.PHIF1, kin.PHIF2]] * counts_per_rad)
        dphi = (new_enc - enc) / counts_per_rad * radius_err
        dphi = dphi * (1.0 + cfg.wheel_slip * r_odo.standard_normal(2))
        enc = new_enc
        v_odo = r_wheel * (dphi[0] + dphi[1]) / 2 / cfg.tick
        w_odo = r_wheel * (dphi[0] - dphi[1]) / (2 * b_half) / cfg.tick
        cup = ms.detect_empty_cup(imu, mcfg.empty_threshold) if imu.full else None
        sensors = ms.Sensors(t, ctx.suite.measure_all(room, pose, r_sonar, t), (v_odo, w_odo), qa.copy(),
                             cup, float(spray.sum()) * cfg.dt)

        if keep_trace:
            rec.update(spray=bool(spray.any()), paint=round(paint, 9))
            trace.append(rec)
            tipw = C.tool_pose(qa, kk, mount)[1]
            jw.writerow([f"{t:.3f}"] + [f"{v:.6f}" for v in np.concatenate([qa, qda, tau, tipw])]
                        + [int(spray.any())])

    painted = float(sum(m.painted_area for m in coverage.maps))
    paintable = room.paintable_area
    total = t
    rate = painted / (total / 3600.0) if total > 0 else 0.0
    loc = np.asarray(loc_err) if loc_err else np.zeros(1)
    report = MissionReport(
        schema_version=SCHEMA_VERSION,
        status=status,
        seed=cfg.seed,
        painted_area=painted,
        paintable_area=paintable,
        opening_area=room.opening_area,
        openings=[{"wall": k, "kind": o.kind, "area": o.area} for k, ops in enumerate(room.openings)
                  for o in ops],
        covered_fraction=float(sum(m.covered.sum() for m in coverage.maps)
                               / max(sum(m.paintable.sum() for m in coverage.maps), 1)),
        wall_coverage=[m.stats() for m in coverage.maps],
        spray_time=spray_total,
        total_time=total,
        painting_rate=rate,
        pure_strip_rate=pure_strip_rate(),
        max_tracking_error=max_track,
        localization={"max": float(loc.max()), "rms": float(np.sqrt(np.mean(loc**2))),
                      "final": float(loc[-1]),
                      "registration_position": None if reg_err is None else reg_err[0],
                      "registration_yaw": None if reg_err is None else reg_err[1]},
        pause_events=pauses,
        phase_visits=visits,
        time_budget={**budget, "other": total - budget["spray"] - budget["base_motion"],
                     "rate_budget_200": paintable / 200.0 * 3600.0},
        power={"arm_abs_work": energy, "arm_mean_power": energy / total if total else 0.0},
        max_constraint_residual=max_resid,
        config={"sim": cfg.to_dict(), "vibration_rms": vib.rms,
                "wheel_radius_scale": [float(v) for v in radius_err]},
    )
    result = MissionResult(report, events, trace, coverage.maps, joint_buf.getvalue(), state)
    _write_outputs(result, cfg)
    return result


def _write_outputs(result: MissionResult, cfg: SimConfig) -> None:
    if cfg.report_path:
        Path(cfg.report_path).write_text(result.report.to_json())
    if cfg.trace_path:
        Path(cfg.trace_path).write_text(result.trace_lines())
    if cfg.joint_log_path:
        Path(cfg.joint_log_path).write_text(result.joint_log)
    if cfg.svg_path:
        base = Path(cfg.svg_path)
        for k, m in enumerate(result.coverage):
            p = base.with_name(f"{base.stem}_wall{k}{base.suffix or '.svg'}")
            p.write_text(coverage_svg(m))


def configure_logging() -> None:
    level = os.environ.get("ROBOPAINTER_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
