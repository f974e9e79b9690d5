"""Room model, sensing, localization and the mission phase machine.

World frame: origin at the room's front-right corner (the corner ahead-right of
the robot's start pose), x towards the front wall, y to the left, so the room
interior is x in [-Lx, 0], y in [0, Ly].  Walls are numbered counterclockwise
seen from above, starting with the front wall:

    0: front (x = 0)    1: left (y = Ly)    2: back (x = -Lx)    3: right (y = 0)

Each wall runs from its start corner with tangent ``t``; wall k+1 starts where
wall k ends, so painting them in order means turning left (counterclockwise)
at every corner.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from robopainter import motion as mo
from robopainter._compiled import sonar_walls
from robopainter.dynamics import ARM_STOWED
from robopainter.kinematics import Transform
from robopainter.trajectory import (DEFAULT_STANDOFF, SHIFT_TIME, TIP_SPEED, Opening, PaintPlan,
                                    WallSpec, pass_legs, plan_paint)

SONAR_SIGMA = 0.005
SONAR_RESOLUTION = 0.01
SONAR_RANGE = (0.02, 5.0)
SIDE_BASELINE = 0.4
GATE = 0.3
YAW_GATE = 0.1
YAW_GAIN = 0.25      # side-pair yaw is coarse (0.01 m / 0.4 m per count): low-pass it
MAX_INCIDENCE = 0.15  # rad; oblique beams couple yaw error into range
CORNER_MARGIN = 0.25  # m; hits this close to a wall end have an ambiguous wall association
STOP_RADIUS = 0.5
CLEAR_TIME = 1.0
EMPTY_THRESHOLD = 2.5
IMU_RATE = 200.0
IMU_WINDOW = 2.0
IMU_BLOCK = 0.1


class RoomError(ValueError):
    pass


class InvalidReading(ValueError):
    pass


class WindowNotFull(RuntimeError):
    pass


# --------------------------------------------------------------------------- room


@dataclass(frozen=True)
class Obstacle:
    """Disc obstacle present during [t_on, t_off); moves with ``velocity`` from t_on."""

    center: tuple[float, float]
    radius: float
    t_on: float = 0.0
    t_off: float = math.inf
    velocity: tuple[float, float] = (0.0, 0.0)

    def active(self, t: float) -> bool:
        return self.t_on <= t < self.t_off

    def position(self, t: float) -> np.ndarray:
        dt = max(t - self.t_on, 0.0)
        return np.asarray(self.center) + dt * np.asarray(self.velocity)


@dataclass(frozen=True)
class RoomModel:
    Lx: float
    Ly: float
    height: float
    openings: tuple[tuple[Opening, ...], ...] = ((), (), (), ())
    obstacles: tuple[Obstacle, ...] = ()
    start_pose: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.Lx <= 0 or self.Ly <= 0 or self.height <= 0:
            raise RoomError("room dimensions must be positive")
        if len(self.openings) != 4:
            raise RoomError("a rectangular room has exactly 4 walls")
        for k, ops in enumerate(self.openings):
            L = self.wall_length(k)
            for o in ops:
                if not (0 <= o.u0 < o.u1 <= L and 0 <= o.z0 < o.z1 <= self.height):
                    raise RoomError(f"opening {o} outside wall {k} ({L} x {self.height} m)")
        x, y, _ = self.start_pose
        if not (-self.Lx < x < 0 and 0 < y < self.Ly):
            raise RoomError(f"start pose {self.start_pose} outside the room")

    def wall_length(self, k: int) -> float:
        return self.Ly if k % 2 == 0 else self.Lx

    @cached_property
    def walls(self) -> list[mo.WallFrame]:
        Lx, Ly, h = self.Lx, self.Ly, self.height
        corners = [(0.0, 0.0), (0.0, Ly), (-Lx, Ly), (-Lx, 0.0)]
        tangents = [(0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 0.0)]
        return [mo.WallFrame(k, corners[k], tangents[k], self.wall_length(k), h) for k in range(4)]

    @property
    def wall_specs(self) -> list[WallSpec]:
        return [WallSpec(self.wall_length(k), self.height, tuple(self.openings[k])) for k in range(4)]

    @property
    def paintable_area(self) -> float:
        return float(sum(w.paintable_area for w in self.wall_specs))

    @property
    def opening_area(self) -> float:
        return float(sum(o.area for ops in self.openings for o in ops))

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "RoomModel":
        try:
            Lx, Ly = (float(v) for v in doc["footprint"])
            height = float(doc["height"])
            walls = doc.get("walls", [{}] * 4)
            if len(walls) != 4:
                raise RoomError("'walls' must list 4 walls")
            openings = tuple(tuple(Opening(float(o["u0"]), float(o["u1"]), float(o["z0"]), float(o["z1"]),
                                           o.get("kind", "window")) for o in w.get("openings", []))
                             for w in walls)
            obstacles = tuple(Obstacle(tuple(map(float, o["center"])), float(o["radius"]),
                                       float(o.get("t_on", 0.0)),
                                       math.inf if o.get("t_off") is None else float(o["t_off"]),
                                       tuple(map(float, o.get("velocity", (0.0, 0.0)))))
                              for o in doc.get("obstacles", []))
            start = tuple(float(v) for v in doc.get("start_pose", (-Lx / 2, Ly / 2, 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, RoomError):
                raise
            raise RoomError(f"bad room document: {exc}") from exc
        return cls(Lx, Ly, height, openings, obstacles, start)

    def to_dict(self) -> dict:
        return {
            "footprint": [self.Lx, self.Ly],
            "height": self.height,
            "walls": [{"openings": [vars(o) for o in ops]} for ops in self.openings],
            "obstacles": [{"center": list(o.center), "radius": o.radius, "t_on": o.t_on,
                           "t_off": None if math.isinf(o.t_off) else o.t_off,
                           "velocity": list(o.velocity)} for o in self.obstacles],
            "start_pose": list(self.start_pose),
        }

    def with_start(self, pose) -> "RoomModel":
        return replace(self, start_pose=tuple(float(v) for v in pose))

    def with_obstacles(self, obstacles: Sequence[Obstacle]) -> "RoomModel":
        return replace(self, obstacles=tuple(obstacles))


def load_room(path: str | Path) -> RoomModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise RoomError(f"{path}: {exc}") from exc
    return RoomModel.from_dict(doc)


def empty_room(Lx: float = 4.0, Ly: float = 4.0, height: float = 2.7, start=None) -> RoomModel:
    return RoomModel(Lx, Ly, height, start_pose=start or (-Lx / 2, Ly / 2, 0.0))


def ray_cast(room: RoomModel, origin, direction, t: float = 0.0, walls_only: bool = False):
    """Distance along a unit ray to the first wall or active obstacle, and what was hit.

    The hit is ``("wall", k)`` or ``("obstacle", j)``; ``(inf, None)`` if nothing is hit.
    """
    ox, oy = float(origin[0]), float(origin[1])
    dx, dy = float(direction[0]), float(direction[1])
    best, hit = math.inf, None
    for k, (axis, c) in enumerate(((0, 0.0), (1, room.Ly), (0, -room.Lx), (1, 0.0))):
        d = dx if axis == 0 else dy
        if abs(d) < 1e-12:
            continue
        s = (c - (ox if axis == 0 else oy)) / d
        if 1e-12 < s < best:
            other = oy + s * dy if axis == 0 else ox + s * dx
            lo, hi = (0.0, room.Ly) if axis == 0 else (-room.Lx, 0.0)
            if lo - 1e-9 <= other <= hi + 1e-9:
                best, hit = s, ("wall", k)
    if not walls_only:
        for j, ob in enumerate(room.obstacles):
            if not ob.active(t):
                continue
            cx, cy = ob.position(t)
            fx, fy = ox - cx, oy - cy
            b = fx * dx + fy * dy
            c = fx * fx + fy * fy - ob.radius**2
            disc = b * b - c
            if disc < 0:
                continue
            r = math.sqrt(disc)
            for s in (-b - r, -b + r):
                if 1e-12 < s < best:
                    best, hit = s, ("obstacle", j)
                    break
    return best, hit


# --------------------------------------------------------------------------- sonars


class Range(enum.Enum):
    OUT_OF_RANGE = "OutOfRange"
    BELOW_MIN_RANGE = "BelowMinRange"


OutOfRange = Range.OUT_OF_RANGE
BelowMinRange = Range.BELOW_MIN_RANGE


def valid(reading) -> bool:
    return not isinstance(reading, Range)


@dataclass(frozen=True)
class SonarMount:
    name: str
    x: float
    y: float
    angle: float  # beam axis relative to base x
    role: str     # "obs", "side", "front", "right"

    def world_ray(self, pose):
        x, y, psi = pose
        c, s = math.cos(psi), math.sin(psi)
        origin = (x + c * self.x - s * self.y, y + s * self.x + c * self.y)
        return origin, (math.cos(psi + self.angle), math.sin(psi + self.angle))


def _default_mounts() -> tuple[SonarMount, ...]:
    obs = tuple(SonarMount(f"OBS{i + 1}", 0.40 * math.cos(a), 0.40 * math.sin(a), a, "obs")
                for i, a in enumerate(np.radians([0.0, 60.0, 120.0, 180.0, -120.0, -60.0])))
    return obs + (
        SonarMount("SIDE1", -SIDE_BASELINE / 2, 0.30, math.pi / 2, "side"),
        SonarMount("SIDE2", SIDE_BASELINE / 2, 0.30, math.pi / 2, "side"),
        SonarMount("FRONT", 0.35, 0.0, 0.0, "front"),
        SonarMount("RIGHT", 0.0, -0.30, -math.pi / 2, "right"),
    )


@dataclass(frozen=True)
class SonarSuite:
    mounts: tuple[SonarMount, ...] = field(default_factory=_default_mounts)
    sigma: float = SONAR_SIGMA
    resolution: float = SONAR_RESOLUTION
    limits: tuple[float, float] = SONAR_RANGE

    def __getitem__(self, name: str) -> SonarMount:
        for m in self.mounts:
            if m.name == name:
                return m
        raise KeyError(name)

    def role(self, role: str) -> list[SonarMount]:
        return [m for m in self.mounts if m.role == role]

    @property
    def baseline(self) -> float:
        s1, s2 = self["SIDE1"], self["SIDE2"]
        return s2.x - s1.x

    @property
    def _mount_array(self) -> np.ndarray:
        arr = self.__dict__.get("_mounts_cache")
        if arr is None:
            arr = np.array([(mt.x, mt.y, mt.angle) for mt in self.mounts], dtype=float)
            object.__setattr__(self, "_mounts_cache", arr)
        return arr

    def _cast(self, room: RoomModel, pose):
        return sonar_walls(np.asarray(pose, dtype=float), self._mount_array, float(room.Lx), float(room.Ly))

    def expected_all(self, room: RoomModel, pose) -> dict:
        """Noise-free wall distance, wall index, beam direction and distance of the hit
        point from the nearest wall end, for every mount."""
        d, w, margin, _, dirs = self._cast(room, pose)
        return {mt.name: (d[i], None if w[i] < 0 else int(w[i]), dirs[i], margin[i])
                for i, mt in enumerate(self.mounts)}

    def measure_all(self, room: RoomModel, pose, rng, t: float = 0.0) -> dict:
        d, _, _, origins, dirs = self._cast(room, pose)
        for ob in room.obstacles:
            if ob.active(t):
                d = np.minimum(d, _cast_circle(origins, dirs, ob.position(t), ob.radius))
        return {mt.name: range_reading(float(d[i]), rng, self.sigma, self.resolution, self.limits)
                for i, mt in enumerate(self.mounts)}


def _cast_circle(origins, dirs, center, radius):
    f = origins - np.asarray(center, dtype=float)
    b = np.sum(f * dirs, axis=1)
    c = np.sum(f * f, axis=1) - radius**2
    disc = b * b - c
    r = np.sqrt(np.maximum(disc, 0.0))
    s0, s1 = -b - r, -b + r
    out = np.where(s0 > 1e-12, s0, np.where(s1 > 1e-12, s1, np.inf))
    return np.where(disc >= 0, out, np.inf)


def quantize(d: float, resolution: float = SONAR_RESOLUTION) -> float:
    k = int(np.rint(d / resolution))
    return k / round(1.0 / resolution) if resolution <= 1 else k * resolution


def sonar_measure(room: RoomModel, pose, mount: SonarMount, rng=None, t: float = 0.0,
                  sigma: float = SONAR_SIGMA, resolution: float = SONAR_RESOLUTION,
                  limits=SONAR_RANGE):
    """Noisy range along the mount axis, quantized to the sonar resolution.

    Returns a float, ``OutOfRange`` or ``BelowMinRange``.
    """
    origin, direction = mount.world_ray(pose)
    d, _ = ray_cast(room, origin, direction, t)
    return range_reading(d, rng, sigma, resolution, limits)


def range_reading(d: float, rng=None, sigma: float = SONAR_SIGMA,
                  resolution: float = SONAR_RESOLUTION, limits=SONAR_RANGE):
    lo, hi = limits
    if not math.isfinite(d):
        return OutOfRange
    if rng is not None and sigma > 0:
        d = d + sigma * rng.standard_normal()
    r = quantize(d, resolution)
    if r > hi:
        return OutOfRange
    if r < lo:
        return BelowMinRange
    return r


def estimate_yaw(side1, side2, baseline: float = SIDE_BASELINE) -> float:
    """Yaw relative to the wall facing the side sonars (SIDE1 rear, SIDE2 front), CCW positive."""
    if not (valid(side1) and valid(side2)):
        raise InvalidReading(f"side readings {side1}, {side2}")
    return math.atan((side1 - side2) / baseline)


def register_world_frame(front, right, yaw: float, suite: SonarSuite = SonarSuite()) -> Transform:
    """T_b^w from the front/right ranges to the front and right walls and the yaw.

    World axes run along the walls with the origin at the front-right corner.
    """
    if not (valid(front) and valid(right)):
        raise InvalidReading(f"front/right readings {front}, {right}")
    f, r = suite["FRONT"], suite["RIGHT"]
    c, s = math.cos(yaw), math.sin(yaw)
    fx = c * f.x - s * f.y
    ry = s * r.x + c * r.y
    x = -front * math.cos(yaw + f.angle) - fx
    y = -right * math.sin(yaw + r.angle) - ry
    return Transform.planar(x, y, yaw)


def dead_reckon(pose, u, dt: float) -> np.ndarray:
    """Exact unicycle step (arc for omega != 0)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, y, psi = (float(v) for v in pose)
    v, w = float(u[0]), float(u[1])
    if abs(w) < 1e-12:
        return np.array([x + v * dt * math.cos(psi), y + v * dt * math.sin(psi), psi])
    p1 = psi + w * dt
    R = v / w
    return np.array([x + R * (math.sin(p1) - math.sin(psi)), y - R * (math.cos(p1) - math.cos(psi)), p1])


def expected_reading(room: RoomModel, pose, mount: SonarMount):
    """Noise-free distance to the known walls along a mount axis, and the wall index."""
    origin, direction = mount.world_ray(pose)
    d, hit = ray_cast(room, origin, direction, walls_only=True)
    return d, (hit[1] if hit else None), origin, direction


_WALL_AXIS = (0, 1, 0, 1)
_LOCALIZATION_ROLES = ("side", "front", "right")


def correct_pose(pose, readings: Mapping[str, Any], room: RoomModel, suite: SonarSuite = SonarSuite(),
                 gate: float = GATE, yaw_gate: float = YAW_GATE, yaw_gain: float = YAW_GAIN,
                 max_incidence: float = MAX_INCIDENCE, corner_margin: float = CORNER_MARGIN) -> np.ndarray:
    """Snap the pose components observed by the localization sonars onto their readings.

    Yaw first, blended towards the side-pair estimate when both beams hit the same wall
    near normal incidence; then, per world axis, the mean of the position shifts implied
    by each in-gate, near-normal reading that lands clear of the room corners.
    """
    cos_max = math.cos(max_incidence)
    pose = np.array(pose, dtype=float)
    exp = suite.expected_all(room, pose)
    s1, s2 = readings.get("SIDE1"), readings.get("SIDE2")
    if s1 is not None and s2 is not None and valid(s1) and valid(s2):
        d1, w1, _, c1 = exp["SIDE1"]
        d2, w2, _, c2 = exp["SIDE2"]
        if (w1 is not None and w1 == w2 and min(c1, c2) >= corner_margin
                and abs(s1 - d1) <= gate and abs(s2 - d2) <= gate):
            o = -room.walls[w1].normal
            ref = math.atan2(-o[0], o[1])
            rel = estimate_yaw(s1, s2, suite.baseline)
            err = float(mo.wrap(ref + rel - pose[2]))
            if abs(rel) <= max_incidence and abs(err) <= yaw_gate:
                pose[2] = pose[2] + yaw_gain * err
                exp = suite.expected_all(room, pose)
    shifts: dict[int, list[float]] = {0: [], 1: []}
    for m in suite.mounts:
        if m.role not in _LOCALIZATION_ROLES:
            continue
        r = readings.get(m.name)
        if r is None or not valid(r):
            continue
        d, w, direction, margin = exp[m.name]
        if w is None or margin < corner_margin or abs(r - d) > gate:
            continue
        axis = _WALL_AXIS[w]
        if abs(direction[axis]) < cos_max:
            continue
        shifts[axis].append((d - r) * direction[axis])
    for axis, vals in shifts.items():
        if vals:
            pose[axis] += sum(vals) / len(vals)
    return pose


# --------------------------------------------------------------------------- guard and IMU


class GuardStatus(enum.Enum):
    CLEAR = "Clear"
    PAUSE_REQUIRED = "PauseRequired"


Clear = GuardStatus.CLEAR
PauseRequired = GuardStatus.PAUSE_REQUIRED


@dataclass(frozen=True)
class GuardState:
    paused: bool = False
    clear_since: float | None = None


def obstacle_guard(readings: Sequence, state: GuardState = GuardState(), t: float = 0.0,
                   stop_radius: float = STOP_RADIUS, clear_time: float = CLEAR_TIME):
    """Stop-and-wait rule: pause when anything is closer than ``stop_radius``; clear only
    after ``clear_time`` of uninterrupted clearance.  Returns (status, new state)."""
    near = any(r is BelowMinRange or (valid(r) and r < stop_radius) for r in readings)
    if near:
        return PauseRequired, GuardState(True, None)
    if not state.paused:
        return Clear, state
    since = t if state.clear_since is None else state.clear_since
    if t - since >= clear_time - 1e-9:
        return Clear, GuardState(False, None)
    return PauseRequired, GuardState(True, since)


def obstacle_readings(readings: Mapping[str, Any], pose, room: RoomModel | None,
                      suite: SonarSuite = SonarSuite(), tol: float = 0.15) -> list:
    """OBS readings with echoes of the known walls removed (when the pose is known)."""
    out = []
    exp = None if room is None or pose is None else suite.expected_all(room, pose)
    for m in suite.role("obs"):
        r = readings.get(m.name, OutOfRange)
        if exp is None:
            out.append(r)
            continue
        d = exp[m.name][0]
        if r is BelowMinRange:
            if d > SONAR_RANGE[0] + tol:
                out.append(r)
        elif valid(r) and r < d - tol:
            out.append(r)
    return out


class CupStatus(enum.Enum):
    FULL = "Full"
    EMPTY = "Empty"


Full = CupStatus.FULL
Empty = CupStatus.EMPTY


class ImuWindow:
    """Ring buffer of tool-frame accelerations (m/s^2) recorded while the gun sprays."""

    def __init__(self, rate: float = IMU_RATE, length: float = IMU_WINDOW):
        self.rate = rate
        self.length = length
        self.n = int(round(rate * length))
        self.buf = np.zeros((self.n, 3))
        self.count = 0

    @property
    def full(self) -> bool:
        return self.count >= self.n

    def clear(self) -> None:
        self.count = 0

    def push(self, samples) -> None:
        a = np.atleast_2d(np.asarray(samples, dtype=float))
        if a.shape[1] == 1:
            a = np.hstack([a, np.zeros((len(a), 2))])
        a = a[-self.n:]
        k = len(a)
        if k == 0:
            return
        self.buf = np.roll(self.buf, -k, axis=0)
        self.buf[-k:] = a
        self.count = min(self.count + k, self.n)

    def samples(self) -> np.ndarray:
        return self.buf[self.n - min(self.count, self.n):]

    def rms(self) -> float:
        s = self.samples()
        return float(np.sqrt(np.mean(np.sum(s * s, axis=1)))) if len(s) else 0.0

    def block_rms(self, block: float = IMU_BLOCK) -> np.ndarray:
        s = self.samples()
        m = max(int(round(block * self.rate)), 1)
        nb = len(s) // m
        s = s[len(s) - nb * m:].reshape(nb, m, 3)
        return np.sqrt(np.mean(np.sum(s * s, axis=2), axis=1))


def detect_empty_cup(imu: ImuWindow, threshold: float = EMPTY_THRESHOLD,
                     block: float = IMU_BLOCK) -> CupStatus:
    """Empty iff the window RMS is below the nominal band and so are most of its blocks."""
    if not imu.full:
        raise WindowNotFull(f"{imu.count}/{imu.n} samples")
    if imu.rms() >= threshold:
        return Full
    blocks = imu.block_rms(block)
    return Empty if np.sum(blocks < threshold) * 2 > len(blocks) else Full


# --------------------------------------------------------------------------- phase machine


class Phase(enum.Enum):
    INIT = "Init"
    SEEK_RELIABLE_LOCATION = "SeekReliableLocation"
    MEASURE_ORIENTATION = "MeasureOrientation"
    REGISTER_WORLD_FRAME = "RegisterWorldFrame"
    NAVIGATE_TO_START = "NavigateToStart"
    PAINT_CORE_STRIP = "PaintCoreStrip"
    PAINT_OUTLINE = "PaintOutline"
    ADVANCE_POST = "AdvancePost"
    ROTATE_TO_NEXT_WALL = "RotateToNextWall"
    PAUSED = "Paused"
    TERMINATED = "Terminated"


P = Phase
TRANSITIONS = {
    P.INIT: {P.SEEK_RELIABLE_LOCATION},
    P.SEEK_RELIABLE_LOCATION: {P.MEASURE_ORIENTATION},
    P.MEASURE_ORIENTATION: {P.REGISTER_WORLD_FRAME},
    P.REGISTER_WORLD_FRAME: {P.NAVIGATE_TO_START},
    P.NAVIGATE_TO_START: {P.PAINT_CORE_STRIP},
    P.PAINT_CORE_STRIP: {P.PAINT_CORE_STRIP, P.ADVANCE_POST, P.PAINT_OUTLINE, P.ROTATE_TO_NEXT_WALL},
    P.ADVANCE_POST: {P.PAINT_CORE_STRIP},
    P.PAINT_OUTLINE: {P.ROTATE_TO_NEXT_WALL},
    P.ROTATE_TO_NEXT_WALL: {P.PAINT_CORE_STRIP, P.TERMINATED},
    P.PAUSED: set(),  # back to the interrupted phase
    P.TERMINATED: set(),
}
SPRAY_PHASES = {P.PAINT_CORE_STRIP, P.PAINT_OUTLINE}
PAUSABLE = set(Phase) - {P.INIT, P.PAUSED, P.TERMINATED}


@dataclass(frozen=True)
class MissionConfig:
    tick: float = 0.05
    standoff: float = DEFAULT_STANDOFF
    clearance: float = 0.5
    wall_distance: float = mo.WALL_DISTANCE
    stop_radius: float = STOP_RADIUS
    clear_time: float = CLEAR_TIME
    gate: float = GATE
    yaw_gate: float = YAW_GATE
    corrections: bool = True
    orientation_dwell: float = 1.0
    register_dwell: float = 0.5
    settle_time: float = 0.3
    refill_time: float = 20.0
    refill_tip: tuple[float, float, float] = (0.45, 0.0, 0.8)
    search_step: float = 0.5
    max_search: int = 10
    wall_echo_tol: float = 0.15
    empty_threshold: float = EMPTY_THRESHOLD
    cup_capacity: float = 600.0
    dry_redo: float = 1.5
    limits: mo.BaseLimits = mo.BaseLimits()
    cruise_speed: float = TIP_SPEED
    paint: bool = True  # False: arm activities become timed holds (fast localization runs)


class MissionContext:
    """Everything the phase machine reads but never changes: known room, plan, arm model."""

    def __init__(self, room: RoomModel, arm: mo.ArmModel, config: MissionConfig = MissionConfig(),
                 suite: SonarSuite = SonarSuite(), plan: PaintPlan | None = None):
        self.room = room
        self.arm = arm
        self.config = config
        self.suite = suite
        self.walls = room.walls
        self.plan = plan or plan_paint(room.wall_specs, config.standoff, config.clearance)
        self.refill_q = self._refill_pose()

    def _refill_pose(self) -> np.ndarray:
        R = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])  # nozzle down
        return self.arm.solve_pose(R, np.asarray(self.config.refill_tip), ARM_STOWED)

    def wall_plan(self, k: int):
        return self.plan.walls[k]

    def post_pose(self, k: int, post: int) -> np.ndarray:
        return self.walls[k].post_pose(self.plan.walls[k].posts[post].u, self.config.wall_distance)

    def corner_pose(self, k: int) -> np.ndarray:
        w = self.walls[k]
        d = self.config.wall_distance
        return w.post_pose(w.length - d, d)


@dataclass(frozen=True)
class Sensors:
    t: float
    sonar: Mapping[str, Any]
    odometry: tuple[float, float]   # (v, omega) from the wheel encoders over the last tick
    arm_q: np.ndarray
    cup: CupStatus | None = None
    spray_time: float = 0.0          # valve-open time over the last tick


@dataclass(frozen=True)
class Command:
    u: tuple[float, float] = (0.0, 0.0)
    arm: Any = None
    spray: bool = False
    base_motion: mo.BaseMotion | None = None


@dataclass(frozen=True)
class MissionState:
    phase: Phase = Phase.INIT
    wall: int = 0
    post: int = 0
    strip: int = -1
    stage: str = "enter"
    stage_t0: float = 0.0
    est: np.ndarray = field(default_factory=lambda: np.zeros(3))
    registered: bool = False
    T_bw: Transform | None = None
    samples: tuple = ()
    yaw: float = 0.0
    search: int = 0
    post_pose: np.ndarray | None = None
    base_motion: mo.BaseMotion | None = None
    arm_motion: Any = None
    walls_done: int = 0
    paint_level: float = 1.0
    guard: GuardState = GuardState()
    pause_reason: str | None = None
    resume: tuple | None = None
    outline_u: float | None = None
    hold_q: np.ndarray | None = None  # arm configuration carried through the outline cruise
    stroke: tuple[int, float] = (-1, 0.0)  # (strip, spray-on seconds in it)
    note: str = ""

    @property
    def label(self) -> str:
        if self.phase is P.PAINT_CORE_STRIP:
            return f"PaintCoreStrip({self.strip})"
        if self.phase is P.ROTATE_TO_NEXT_WALL:
            return f"RotateToNextWall({self.wall})"
        if self.phase is P.PAUSED:
            return f"Paused({self.pause_reason})"
        return self.phase.value


def initial_state(arm_q=ARM_STOWED) -> MissionState:
    return MissionState(arm_motion=mo.Hold(np.array(arm_q, dtype=float)))


def _goto(state: MissionState, phase: Phase, t: float, **kw) -> MissionState:
    return replace(state, phase=phase, stage=kw.pop("stage", "enter"), stage_t0=t, samples=(), **kw)


def _stage(state: MissionState, stage: str, t: float, **kw) -> MissionState:
    return replace(state, stage=stage, stage_t0=t, **kw)


def _hold(q, t: float = 0.0, spray: bool = False):
    return _SprayHold(np.array(q, dtype=float), t, 0.0, spray)


@dataclass(frozen=True)
class _SprayHold(mo.Hold):
    spray_on: bool = False

    def spray(self, t) -> np.ndarray:
        return np.full(np.size(t), self.spray_on, dtype=bool)


def _motion_done(state: MissionState, t: float) -> bool:
    base_ok = state.base_motion is None or t >= state.base_motion.t_end - 1e-9
    arm_ok = state.arm_motion is None or t >= getattr(state.arm_motion, "t_end", 0.0) - 1e-9
    return base_ok and arm_ok


def _base_command(state: MissionState, ctx: MissionContext, t: float):
    if state.base_motion is None:
        return (0.0, 0.0)
    ref = state.base_motion.ref(t + 0.5 * ctx.config.tick)
    return mo.tracking_command(ref, state.est)


def _strip_order(ctx: MissionContext, k: int):
    """(post, strip, up) for every core strip of wall k in painting order."""
    out = []
    for j, post in enumerate(ctx.wall_plan(k).posts):
        for n, i in enumerate(post.strips):
            out.append((j, i, n % 2 == 0))
    return out


def _timed(ctx: MissionContext, motion, q):
    """Replace an arm activity by a hold of the same duration when painting is disabled."""
    if ctx.config.paint:
        return motion
    return _TimedHold(np.array(q, dtype=float), motion.t0, motion.t_end - motion.t0,
                      spray_on=bool(np.any(motion.spray(np.linspace(motion.t0, motion.t_end, 50)))))


@dataclass(frozen=True)
class _TimedHold(_SprayHold):
    def spray(self, t) -> np.ndarray:
        t = np.atleast_1d(t)
        return (t >= self.t0) & (t < self.t_end) & self.spray_on


def _core_path(ctx: MissionContext, state: MissionState, strip: int, up: bool, near, t0: float):
    wp = ctx.wall_plan(state.wall)
    wall = ctx.walls[state.wall]
    s = wp.strips[strip]
    legs = [(l.T, l.p0, l.p1, l.spray) for l in pass_legs(s, up, 0.0, strip)]
    pose = state.post_pose
    fn = lambda u, z: mo.paint_target(wall, pose, u, z, mo.core_pitch(z), s.roll, ctx.config.standoff)
    return mo.tip_path_motion(ctx.arm, legs, fn, near, t0)


def _outline_legs(strip, u_from: float, u_to: float):
    """Sweep legs from u_from to u_to along the band; spray only over its runs."""
    z = 0.5 * (strip.z0 + strip.z1)
    lo, hi = min(u_from, u_to), max(u_from, u_to)
    cuts = sorted({lo, hi, *(c for r in strip.runs for c in r if lo < c < hi)})
    pieces = list(zip(cuts[:-1], cuts[1:]))
    if u_to < u_from:
        pieces = [(b, a) for a, b in reversed(pieces)]
    legs = []
    for a, b in pieces:
        if abs(b - a) < 1e-9:
            continue
        mid = 0.5 * (a + b)
        spray = any(r0 - 1e-9 <= mid <= r1 + 1e-9 for r0, r1 in strip.runs)
        legs.append((abs(b - a) / TIP_SPEED, (a, z), (b, z), spray))
    return legs


def _outline_target(ctx: MissionContext, state: MissionState, pose):
    wall = ctx.walls[state.wall]
    strip = ctx.wall_plan(state.wall).outline_strip
    return lambda u, z: mo.paint_target(wall, pose, u, z, mo.OUTLINE_PITCH, strip.roll,
                                        ctx.config.standoff)


def _tip_u(ctx: MissionContext, state: MissionState) -> float:
    """Wall coordinate of the aim point for an arm held at offset zero (the base u)."""
    return ctx.walls[state.wall].to_wall(state.est[:2])[0]


def _pause(state: MissionState, ctx: MissionContext, reason: str, t: float, q) -> MissionState:
    snap = (state.phase, state.wall, state.post, state.strip, state.stage)
    outline_u = state.outline_u
    if state.phase is P.PAINT_OUTLINE and state.stage == "cruise":
        outline_u = _tip_u(ctx, state)
    return replace(state, phase=P.PAUSED, pause_reason=reason, resume=snap, stage="enter",
                   stage_t0=t, samples=(), base_motion=None, arm_motion=_hold(q, t),
                   outline_u=outline_u)


def mission_step(state: MissionState, sensors: Sensors, ctx: MissionContext):
    """One supervisor tick: localization update, preemption checks, phase logic.

    Returns the new state and the command for the next tick.
    """
    cfg = ctx.config
    t = sensors.t
    q = np.asarray(sensors.arm_q, dtype=float)
    est = dead_reckon(state.est, sensors.odometry, cfg.tick)
    if state.registered and cfg.corrections:
        est = correct_pose(est, sensors.sonar, ctx.room, ctx.suite, cfg.gate, cfg.yaw_gate)
    level = max(state.paint_level - sensors.spray_time / cfg.cup_capacity, 0.0)
    stroke = state.stroke
    if sensors.spray_time > 0 and state.phase in SPRAY_PHASES:
        key = state.strip if state.phase is P.PAINT_CORE_STRIP else -2
        stroke = (key, (stroke[1] if stroke[0] == key else 0.0) + sensors.spray_time)
    state = replace(state, est=est, paint_level=level, stroke=stroke, note="")

    if state.phase is P.TERMINATED:
        return state, Command(arm=state.arm_motion)

    obs = obstacle_readings(sensors.sonar, est if state.registered else None,
                            ctx.room if state.registered else None, ctx.suite, cfg.wall_echo_tol)
    status, guard = obstacle_guard(obs, state.guard, t, cfg.stop_radius, cfg.clear_time)
    state = replace(state, guard=guard)

    if state.phase in PAUSABLE:
        reason = ("Obstacle" if status is PauseRequired
                  else "EmptyCup" if sensors.cup is Empty and state.phase in SPRAY_PHASES else None)
        if reason:
            s = _pause(state, ctx, reason, t, q)
            return s, Command(arm=s.arm_motion)

    handler = _HANDLERS[state.phase]
    state, spray = handler(state, sensors, ctx, q)
    return state, Command(_base_command(state, ctx, t), state.arm_motion,
                          bool(spray and state.phase in SPRAY_PHASES), state.base_motion)


# --------------------------------------------------------------------------- phase handlers


def _h_init(state, sensors, ctx, q):
    return _goto(state, P.SEEK_RELIABLE_LOCATION, sensors.t, arm_motion=_hold(q, sensors.t)), False


def _h_seek(state, sensors, ctx, q):
    t, cfg = sensors.t, ctx.config
    if state.stage == "move":
        if not _motion_done(state, t):
            return state, False
        state = _stage(state, "enter", t, base_motion=None)
    f, r = sensors.sonar.get("FRONT", OutOfRange), sensors.sonar.get("RIGHT", OutOfRange)
    s1, s2 = sensors.sonar.get("SIDE1", OutOfRange), sensors.sonar.get("SIDE2", OutOfRange)
    if all(valid(v) for v in (f, r, s1, s2)):
        return _goto(state, P.MEASURE_ORIENTATION, t), False
    if state.search >= cfg.max_search:
        return replace(state, note="no reliable location"), False
    # greedy: head for the front wall while it is out of range, then sidestep to the right
    x, y, psi = state.est
    if not valid(f):
        goal = (x + cfg.search_step * math.cos(psi), y + cfg.search_step * math.sin(psi), psi)
    else:
        goal = (x + cfg.search_step * math.sin(psi), y - cfg.search_step * math.cos(psi), psi)
    motion = mo.plan_base_motion(state.est, goal, t, cfg.limits)
    return _stage(state, "move", t, base_motion=motion, search=state.search + 1), False


def _h_measure(state, sensors, ctx, q):
    t, cfg = sensors.t, ctx.config
    if state.stage == "align":
        if _motion_done(state, t):
            state = _stage(state, "dwell2", t, base_motion=None, samples=())
        return state, False
    s1, s2 = sensors.sonar.get("SIDE1"), sensors.sonar.get("SIDE2")
    samples = state.samples
    if s1 is not None and s2 is not None and valid(s1) and valid(s2):
        samples = samples + (estimate_yaw(s1, s2, ctx.suite.baseline),)
    state = replace(state, samples=samples)
    if t - state.stage_t0 < cfg.orientation_dwell - 1e-9 or not samples:
        return state, False
    yaw = float(np.mean(samples))
    if state.stage == "enter" and abs(yaw) > 0.01:
        # turn square to the walls, then measure again
        motion = mo.plan_turn(state.est, -yaw, t, cfg.limits)
        return _stage(state, "align", t, base_motion=motion, samples=()), False
    return _goto(state, P.REGISTER_WORLD_FRAME, t, yaw=yaw, base_motion=None), False


def _h_register(state, sensors, ctx, q):
    t, cfg = sensors.t, ctx.config
    f, r = sensors.sonar.get("FRONT"), sensors.sonar.get("RIGHT")
    samples = state.samples
    if f is not None and r is not None and valid(f) and valid(r):
        samples = samples + ((f, r),)
    state = replace(state, samples=samples)
    if t - state.stage_t0 < cfg.register_dwell - 1e-9 or not samples:
        return state, False
    fm, rm = np.mean(np.array(samples), axis=0)
    T = register_world_frame(float(fm), float(rm), state.yaw, ctx.suite)
    est = np.array([T.translation[0], T.translation[1], T.yaw])
    return _goto(state, P.NAVIGATE_TO_START, t, est=est, registered=True, T_bw=T), False


def _nominal_start_q(ctx: MissionContext, state: MissionState, k: int, post: int, near):
    """Arm configuration at the start of a post's first pass, for the nominal post pose."""
    if not ctx.config.paint:
        return np.array(near, dtype=float)
    nominal = replace(state, wall=k, post_pose=ctx.post_pose(k, post))
    first = ctx.wall_plan(k).posts[post].strips[0]
    return _core_path(ctx, nominal, first, True, near, 0.0).q_start


def _drive_to_post(state, ctx, q, t, k: int, post: int, stage: str):
    """Base motion to a post with the arm moving concurrently to its first pass start."""
    motion = mo.plan_base_motion(state.est, ctx.post_pose(k, post), t, ctx.config.limits)
    arm = mo.JointMove.between(q, _nominal_start_q(ctx, state, k, post, q), t,
                               max(motion.t_end - t, mo.MIN_MOVE_TIME))
    return _stage(state, stage, t, base_motion=motion, arm_motion=_timed(ctx, arm, q))


def _h_navigate(state, sensors, ctx, q):
    t = sensors.t
    if state.stage == "enter":
        return _drive_to_post(state, ctx, q, t, 0, 0, "drive"), False
    if _motion_done(state, t):
        first = ctx.wall_plan(0).posts[0].strips[0]
        return _goto(state, P.PAINT_CORE_STRIP, t, wall=0, post=0, strip=first, base_motion=None,
                     post_pose=None), False
    return state, False


def _settled(state, t, cfg):
    """Average the pose estimate over the settle dwell; None until the dwell is over."""
    samples = state.samples + (tuple(state.est),)
    if t - state.stage_t0 < cfg.settle_time - 1e-9:
        return replace(state, samples=samples), None
    return replace(state, samples=()), np.mean(np.array(samples), axis=0)


def _h_core(state, sensors, ctx, q):
    t, cfg = sensors.t, ctx.config
    order = _strip_order(ctx, state.wall)
    pos = next(n for n, (_, i, _) in enumerate(order) if i == state.strip)
    post, strip, up = order[pos]
    if state.stage == "enter":
        if state.post_pose is not None:
            state = _stage(state, "plan", t)
        else:
            state = _stage(state, "settle", t, samples=(), arm_motion=_hold(q, t))
    if state.stage == "settle":
        state, pose = _settled(state, t, cfg)
        if pose is None:
            return state, False
        state = _stage(state, "plan", t, post_pose=pose)
    if state.stage == "plan":
        s = ctx.wall_plan(state.wall).strips[strip]
        if cfg.paint:
            path = _core_path(ctx, state, strip, up, q, 0.0)
            q0 = path.q_start
        else:
            legs = pass_legs(s, up, 0.0, strip)
            path, q0 = _TimedHold(q, 0.0, legs[-1].t1, spray_on=True), q
        T = mo.move_time(q, q0)
        if pos > 0 and order[pos - 1][0] == post:
            T = max(T, SHIFT_TIME)
        approach = mo.JointMove.between(q, q0, t, T)
        if cfg.paint:
            path = path.retimed(approach.t_end)
        else:
            path = _TimedHold(q, approach.t_end, path.T, spray_on=True)
        chain = mo.Chain(_timed(ctx, approach, q), path)
        return _stage(state, "approach", t, arm_motion=chain), True
    if state.stage == "approach":
        if t < state.arm_motion.motions[0].t_end - 1e-9:
            return state, True
        state = _stage(state, "pass", t)
    if state.stage == "pass":
        if t < state.arm_motion.t_end - 1e-9:
            return state, True
        if pos + 1 < len(order) and order[pos + 1][0] == post:
            return _goto(state, P.PAINT_CORE_STRIP, t, strip=order[pos + 1][1]), False
        if pos + 1 < len(order):
            return _goto(state, P.ADVANCE_POST, t, post=post + 1), False
        if ctx.wall_plan(state.wall).outline_strip is not None:
            return _goto(state, P.PAINT_OUTLINE, t), False
        return _goto(state, P.ROTATE_TO_NEXT_WALL, t, post_pose=None), False
    return state, False


def _h_advance(state, sensors, ctx, q):
    t = sensors.t
    if state.stage == "enter":
        return _drive_to_post(state, ctx, q, t, state.wall, state.post, "drive"), False
    if _motion_done(state, t):
        first = ctx.wall_plan(state.wall).posts[state.post].strips[0]
        return _goto(state, P.PAINT_CORE_STRIP, t, strip=first, base_motion=None, post_pose=None), False
    return state, False


def _h_outline(state, sensors, ctx, q):
    """Sweep the band from the wall's far end back to its start: arm sweep at the last post,
    base cruise with the arm held, arm sweep at the first post."""
    t, cfg = sensors.t, ctx.config
    wp = ctx.wall_plan(state.wall)
    strip = wp.outline_strip
    wall = ctx.walls[state.wall]
    st = state.stage

    def sweep(u_from, u_to, pose, near, settle_stage, next_stage):
        legs = _outline_legs(strip, u_from, u_to)
        if not legs:
            return _stage(state, next_stage, t, post_pose=pose, arm_motion=_hold(q, t))
        if cfg.paint:
            path = mo.tip_path_motion(ctx.arm, legs, _outline_target(ctx, state, pose), near, 0.0)
            approach = mo.JointMove.between(q, path.q_start, t)
            path = path.retimed(approach.t_end)
        else:
            approach = mo.JointMove.between(q, q, t, mo.MIN_MOVE_TIME)
            path = _TimedHold(q, approach.t_end, sum(l[0] for l in legs),
                              spray_on=any(l[3] for l in legs))
        return _stage(state, settle_stage, t, post_pose=pose,
                      arm_motion=mo.Chain(_timed(ctx, approach, q), path))

    if st == "enter":
        return _stage(state, "settleA", t, samples=(), arm_motion=_hold(q, t), base_motion=None), False
    if st == "settleA":
        state, pose = _settled(state, t, cfg)
        if pose is None:
            return state, False
        u_here = wall.to_wall(pose[:2])[0]
        return sweep(wall.length, u_here, pose, q, "sweepA", "sweepA"), True
    if st == "sweepA":
        if t < state.arm_motion.t_end - 1e-9:
            return state, True
        return _start_cruise(state, ctx, state.arm_motion.q_end, t), True
    if st == "backup":  # resuming an interrupted cruise: return to where painting stopped
        if not _motion_done(state, t):
            return state, False
        return _start_cruise(state, ctx, state.hold_q, t), True
    if st == "cruise":
        u = _tip_u(ctx, state)
        on = any(a - 1e-9 <= u <= b + 1e-9 for a, b in strip.runs)
        if not _motion_done(state, t):
            return replace(state, arm_motion=_hold(state.hold_q, t, on)), on
        return _stage(state, "settleC", t, base_motion=None, arm_motion=_hold(q, t), samples=()), False
    if st == "settleC":
        state, pose = _settled(state, t, cfg)
        if pose is None:
            return state, False
        u_here = wall.to_wall(pose[:2])[0]
        return sweep(u_here, 0.0, pose, q, "sweepC", "sweepC"), True
    if st == "sweepC":
        if t < state.arm_motion.t_end - 1e-9:
            return state, True
        return _goto(state, P.ROTATE_TO_NEXT_WALL, t, post_pose=None), False
    return state, False


def _start_cruise(state, ctx, q_hold, t):
    """Drive with the arm fixed (zero lateral offset) from the current post to the first post."""
    cfg = ctx.config
    motion = mo.plan_base_motion(state.est, ctx.post_pose(state.wall, 0), t, cfg.limits,
                                 v_line=cfg.cruise_speed)
    q_hold = np.array(q_hold, dtype=float)
    return _stage(state, "cruise", t, base_motion=motion, hold_q=q_hold, arm_motion=_hold(q_hold, t))


def _h_rotate(state, sensors, ctx, q):
    t, cfg = sensors.t, ctx.config
    k = state.wall
    st = state.stage
    if st == "enter":
        motion = mo.plan_base_motion(state.est, ctx.corner_pose(k), t, cfg.limits)
        arm = mo.JointMove.between(q, ARM_STOWED, t)
        return _stage(state, "corner", t, base_motion=motion, arm_motion=_timed(ctx, arm, q)), False
    if st == "corner":
        if not _motion_done(state, t):
            return state, False
        target = ctx.walls[(k + 1) % 4].heading
        turn = mo.plan_turn(state.est, float(mo.wrap(target - state.est[2])), t, cfg.limits)
        return _stage(state, "turn", t, base_motion=turn), False
    if st == "turn":
        if not _motion_done(state, t):
            return state, False
        if k == 3:  # back at the initial wall orientation
            return _goto(state, P.TERMINATED, t, walls_done=4, base_motion=None,
                         arm_motion=_hold(q, t)), False
        return _drive_to_post(state, ctx, q, t, k + 1, 0, "approach"), False
    if st == "approach":
        if not _motion_done(state, t):
            return state, False
        first = ctx.wall_plan(k + 1).posts[0].strips[0]
        return _goto(state, P.PAINT_CORE_STRIP, t, wall=k + 1, post=0, strip=first, base_motion=None,
                     post_pose=None, walls_done=state.walls_done + 1), False
    return state, False


def _h_paused(state, sensors, ctx, q):
    t, cfg = sensors.t, ctx.config
    if state.pause_reason == "Obstacle":
        if state.guard.paused:
            return state, False
        return _resume(state, ctx, q, t), False
    # empty cup: fold the arm for the operator, wait for the refill, then resume
    if state.stage == "enter":
        arm = mo.JointMove.between(q, ctx.refill_q, t)
        return _stage(state, "fold", t, arm_motion=_timed(ctx, arm, q)), False
    if state.stage == "fold":
        if not _motion_done(state, t):
            return state, False
        return _stage(state, "refill", t, note="refill pose"), False
    if state.stage == "refill" and t - state.stage_t0 >= cfg.refill_time - 1e-9:
        state = replace(state, paint_level=1.0, note="refilled")
        return _resume(state, ctx, q, t), False
    return state, False


def _resume(state: MissionState, ctx: MissionContext, q, t: float) -> MissionState:
    """Re-enter the interrupted phase; interrupted strokes are repainted from their start."""
    phase, wall, post, strip, stage = state.resume
    s = replace(state, phase=phase, wall=wall, post=post, strip=strip, stage="enter", stage_t0=t,
                samples=(), pause_reason=None, resume=None, base_motion=None, arm_motion=_hold(q, t))
    dry = state.pause_reason == "EmptyCup"
    if phase is P.PAINT_CORE_STRIP:
        if dry and s.stroke[0] == strip and s.stroke[1] < ctx.config.dry_redo:
            # the gun may already have run dry at the end of the previous pass of this post
            order = _strip_order(ctx, wall)
            pos = next(n for n, (_, i, _) in enumerate(order) if i == strip)
            if pos > 0 and order[pos - 1][0] == post:
                s = replace(s, strip=order[pos - 1][1])
        return s
    if phase is P.PAINT_OUTLINE:
        if stage in ("cruise", "backup") and state.outline_u is not None:
            back = 0.6 if dry else 0.05
            u = min(state.outline_u + back, ctx.wall_plan(wall).posts[-1].u)
            goal = ctx.walls[wall].post_pose(u, ctx.config.wall_distance)
            motion = mo.plan_base_motion(s.est, goal, t, ctx.config.limits)
            arm = mo.JointMove.between(q, s.hold_q, t, max(motion.t_end - t, mo.MIN_MOVE_TIME))
            return replace(s, stage="backup", base_motion=motion, arm_motion=_timed(ctx, arm, q),
                           outline_u=None)
        if stage in ("settleC", "sweepC"):
            return replace(s, stage="settleC")
        return s
    if phase is P.ROTATE_TO_NEXT_WALL and stage == "turn":
        return replace(s, stage="corner")  # finish the turn from the current heading
    if phase is P.ROTATE_TO_NEXT_WALL and stage == "approach":
        return replace(s, stage="turn")
    return s


_HANDLERS = {
    P.INIT: _h_init,
    P.SEEK_RELIABLE_LOCATION: _h_seek,
    P.MEASURE_ORIENTATION: _h_measure,
    P.REGISTER_WORLD_FRAME: _h_register,
    P.NAVIGATE_TO_START: _h_navigate,
    P.PAINT_CORE_STRIP: _h_core,
    P.ADVANCE_POST: _h_advance,
    P.PAINT_OUTLINE: _h_outline,
    P.ROTATE_TO_NEXT_WALL: _h_rotate,
    P.PAUSED: _h_paused,
}
