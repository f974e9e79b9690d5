"""Robot parameter record: geometry, link inertials, motors, spray and dynamics settings.

The shipped file mirrors the published tables (lengths in mm, inertias in
kg*m^2) and is converted to SI on load. Values are stored exactly as printed,
so products of inertia keep their printed sign and are used directly as the
off-diagonal tensor entries.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

log = logging.getLogger(__name__)

ARM_LINK_KEYS = ("1", "2", "3", "4", "5", "6")
BASE_LINK_KEYS = ("b", "o", "c", "f")
MOTOR_KEYS = ("1", "2", "3", "4", "5", "6", "1f", "2f")
GEOMETRY_KEYS = ("RL1", "D1", "RL2", "D3", "RL4", "D4", "RL5", "RL7",
                 "a", "b", "r_c", "r_f", "p", "d")
LINK_FIELDS = ("M", "X", "Y", "Z", "XX", "YY", "ZZ", "XY", "XZ", "YZ")

LENGTH_SCALE = {"mm": 1000.0, "m": 1.0}
ANGLE_SCALE = {"deg": 180.0 / math.pi, "rad": 1.0}
SYMMETRY_TOL = 1e-12
TRIANGLE_SLACK = 0.05
REACH = 1.290
DEFAULT_PARAMS_NAME = "robopainter.params.json"


class ParamsError(ValueError):
    pass


class MissingKey(ParamsError):
    def __init__(self, name: str):
        super().__init__(f"missing key: {name}")
        self.name = name


class UnitViolation(ParamsError):
    def __init__(self, key: str, detail: str = ""):
        super().__init__(f"unit violation at {key}" + (f": {detail}" if detail else ""))
        self.key = key


class InvariantViolation(ParamsError):
    def __init__(self, description: str):
        super().__init__(description)
        self.description = description


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GeometricParams:
    """Arm lengths and base wheel offsets, in meters."""

    RL1: float
    D1: float
    RL2: float
    D3: float
    RL4: float
    D4: float
    RL5: float
    RL7: float
    a: float
    b: float
    r_c: float
    r_f: float
    p: float
    d: float


@dataclass(frozen=True)
class LinkInertial:
    mass: float
    cg: np.ndarray
    inertia: np.ndarray

    @classmethod
    def from_table(cls, mass, cg, xx, yy, zz, xy, xz, yz) -> "LinkInertial":
        off = [0.0 if abs(v) < SYMMETRY_TOL else v for v in (xy, xz, yz)]
        xy, xz, yz = off
        tensor = [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]]
        return cls(float(mass), _frozen(cg), _frozen(tensor))


@dataclass(frozen=True)
class MotorParams:
    Ia: float
    Kt: float


@dataclass(frozen=True)
class SprayParams:
    pattern_width: float
    pattern_height: float
    vibration_band: tuple[float, float]
    dry_vibration_rms: float
    vibration_freq_band: tuple[float, float]
    reaction_force: float
    cup_capacity_s: float


@dataclass(frozen=True)
class KKRow:
    """One Khalil-Kleinfinger row. ``joint`` is None for the fixed tool row."""

    alpha: float
    d: float
    theta_offset: float
    r: float
    joint: int | None


@dataclass(frozen=True)
class RobotParams:
    geometry: GeometricParams
    arm_links: tuple[LinkInertial, ...]
    base_link: LinkInertial
    orientable_hub: LinkInertial
    castor_wheel: LinkInertial
    fixed_wheel: LinkInertial
    arm_motors: tuple[MotorParams, ...]
    wheel_motors: tuple[MotorParams, ...]
    spray: SprayParams
    kk_table: tuple[KKRow, ...]
    arm_mount: np.ndarray
    gravity: float = 9.81
    friction_viscous: float = 0.1
    friction_coulomb: float = 0.05
    friction_eps: float = 1e-3
    total_mass_limit: float = 21.5
    source: Mapping[str, Any] = field(default=None, repr=False, compare=False)

    @property
    def arm_rotor_inertia(self) -> np.ndarray:
        return np.array([m.Ia for m in self.arm_motors])

    def symbols(self) -> dict[str, float]:
        """Every table symbol mapped to its SI value."""
        out = {k: getattr(self.geometry, k) for k in GEOMETRY_KEYS}
        links = dict(zip(ARM_LINK_KEYS, self.arm_links))
        links.update(b=self.base_link, o=self.orientable_hub,
                     c=self.castor_wheel, f=self.fixed_wheel)
        for key, link in links.items():
            out["M" + key] = link.mass
            for i, axis in enumerate("XYZ"):
                out[axis + key] = float(link.cg[i])
            I = link.inertia
            for name, (i, j) in (("XX", (0, 0)), ("YY", (1, 1)), ("ZZ", (2, 2)),
                                 ("XY", (0, 1)), ("XZ", (0, 2)), ("YZ", (1, 2))):
                out[name + key] = float(I[i, j])
        motors = dict(zip(MOTOR_KEYS, self.arm_motors + self.wheel_motors))
        for key, m in motors.items():
            out["Ia" + key] = m.Ia
            out["Kt" + key] = m.Kt
        return out

    def symbol(self, name: str) -> float:
        try:
            return self.symbols()[name]
        except KeyError:
            raise MissingKey(name) from None


def _get(doc: Mapping, key: str, path: str):
    if not isinstance(doc, Mapping) or key not in doc:
        raise MissingKey(f"{path}.{key}" if path else key)
    return doc[key]


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UnitViolation(key, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise UnitViolation(key, "non-finite value")
    return float(value)


def _units(doc: Mapping) -> tuple[float, float]:
    units = _get(doc, "units", "")
    length = _get(units, "length", "units")
    if length not in LENGTH_SCALE:
        raise UnitViolation("units.length", f"unsupported {length!r}")
    for key, expected in (("mass", "kg"), ("inertia", "kg*m^2"), ("torque_constant", "N*m/A")):
        if _get(units, key, "units") != expected:
            raise UnitViolation(f"units.{key}", f"expected {expected}")
    angle = units.get("angle", "rad")
    if angle not in ANGLE_SCALE:
        raise UnitViolation("units.angle", f"unsupported {angle!r}")
    return LENGTH_SCALE[length], ANGLE_SCALE[angle]


def _kk_table(rows, geometry: Mapping[str, float], length_div: float, angle_div: float):
    if not isinstance(rows, list):
        raise MissingKey("geometry.kk_table")
    out = []
    for i, row in enumerate(rows):
        def val(name, div):
            v = _get(row, name, f"geometry.kk_table[{i}]")
            if isinstance(v, str):
                if v not in geometry:
                    raise MissingKey(v)
                return geometry[v]
            return _number(v, f"geometry.kk_table[{i}].{name}") / div
        joint = row.get("joint")
        out.append(KKRow(alpha=val("alpha", angle_div), d=val("d", length_div),
                         theta_offset=val("theta", angle_div), r=val("r", length_div),
                         joint=None if joint is None else int(joint)))
    return tuple(out)


def load_robot_params(document: str | bytes | Mapping) -> RobotParams:
    """Parse and validate a parameter document (JSON text or mapping).

    Raises MissingKey, UnitViolation or InvariantViolation.
    """
    if isinstance(document, (str, bytes)):
        doc = json.loads(document)
    else:
        doc = copy.deepcopy(dict(document))
    length_div, angle_div = _units(doc)

    geo_doc = _get(doc, "geometry", "")
    geo = {k: _number(_get(geo_doc, k, "geometry"), f"geometry.{k}") / length_div
           for k in GEOMETRY_KEYS}
    geometry = GeometricParams(**geo)

    links_doc = _get(doc, "links", "")

    def link(key):
        entry = _get(links_doc, key, "links")
        v = {f: _number(_get(entry, f, f"links.{key}"), f"links.{key}.{f}") for f in LINK_FIELDS}
        cg = [v["X"] / length_div, v["Y"] / length_div, v["Z"] / length_div]
        return LinkInertial.from_table(v["M"], cg, v["XX"], v["YY"], v["ZZ"],
                                       v["XY"], v["XZ"], v["YZ"])

    motors_doc = _get(doc, "motors", "")

    def motor(key):
        entry = _get(motors_doc, key, "motors")
        return MotorParams(Ia=_number(_get(entry, "Ia", f"motors.{key}"), f"motors.{key}.Ia"),
                           Kt=_number(_get(entry, "Kt", f"motors.{key}"), f"motors.{key}.Kt"))

    spray_doc = _get(doc, "spray", "")
    spray = SprayParams(
        pattern_width=_number(_get(spray_doc, "pattern_width", "spray"), "spray.pattern_width") / length_div,
        pattern_height=_number(_get(spray_doc, "pattern_height", "spray"), "spray.pattern_height") / length_div,
        vibration_band=tuple(float(x) for x in _get(spray_doc, "vibration_band", "spray")),
        dry_vibration_rms=float(spray_doc.get("dry_vibration_rms", 0.5)),
        vibration_freq_band=tuple(float(x) for x in spray_doc.get("vibration_freq_band", (30.0, 80.0))),
        reaction_force=float(spray_doc.get("reaction_force", 1.0)),
        cup_capacity_s=float(spray_doc.get("cup_capacity_s", 600.0)),
    )
    dyn = doc.get("dynamics", {})
    mount = geo_doc.get("arm_mount", [0, 0, 0])

    params = RobotParams(
        geometry=geometry,
        arm_links=tuple(link(k) for k in ARM_LINK_KEYS),
        base_link=link("b"),
        orientable_hub=link("o"),
        castor_wheel=link("c"),
        fixed_wheel=link("f"),
        arm_motors=tuple(motor(k) for k in ARM_LINK_KEYS),
        wheel_motors=(motor("1f"), motor("2f")),
        spray=spray,
        kk_table=_kk_table(_get(geo_doc, "kk_table", "geometry"), geo, length_div, angle_div),
        arm_mount=_frozen([_number(x, "geometry.arm_mount") / length_div for x in mount]),
        gravity=float(dyn.get("gravity", 9.81)),
        friction_viscous=float(dyn.get("friction_viscous", 0.1)),
        friction_coulomb=float(dyn.get("friction_coulomb", 0.05)),
        friction_eps=float(dyn.get("friction_eps", 1e-3)),
        total_mass_limit=float(doc.get("total_mass_limit", 21.5)),
        source=doc,
    )
    report = validate_params(params)
    if report:
        raise InvariantViolation("; ".join(report))
    return params


def load_robot_params_file(path: str | Path) -> RobotParams:
    return load_robot_params(Path(path).read_text())


def default_params_text() -> str:
    return resources.files("robopainter.data").joinpath(DEFAULT_PARAMS_NAME).read_text()


@lru_cache(maxsize=1)
def default_params() -> RobotParams:
    return load_robot_params(default_params_text())


def total_mass(params: RobotParams) -> float:
    """Arm links + base link + two hubs, two castors and two fixed wheels."""
    arm = math.fsum(l.mass for l in params.arm_links)
    return math.fsum([arm, params.base_link.mass,
                      2 * params.orientable_hub.mass, 2 * params.castor_wheel.mass,
                      2 * params.fixed_wheel.mass])


def arm_mass(params: RobotParams) -> float:
    return math.fsum(l.mass for l in params.arm_links)


def _triangle_ok(I: np.ndarray) -> bool:
    xx, yy, zz = np.diag(I)
    s = 1.0 + TRIANGLE_SLACK
    return xx <= s * (yy + zz) and yy <= s * (xx + zz) and zz <= s * (xx + yy)


def validate_params(params: RobotParams) -> list[str]:
    """Return violated invariants as messages; empty when the record is valid.

    Triangle-inequality breaches of the inertia tensors are logged as warnings only.
    """
    report = []
    g = params.geometry
    for f in fields(g):
        v = getattr(g, f.name)
        if not v > 0:
            report.append(f"geometry > 0: {f.name} = {v}")
    if abs(g.D3 + g.D4 - REACH) > 1e-6:
        report.append(f"D3+D4 reach: {g.D3 + g.D4:.6f} m != {REACH} m")

    named = [(f"link {i + 1}", l) for i, l in enumerate(params.arm_links)]
    named += [("base link", params.base_link), ("orientable hub", params.orientable_hub),
              ("castor wheel", params.castor_wheel), ("fixed wheel", params.fixed_wheel)]
    for name, link in named:
        if not link.mass > 0:
            report.append(f"mass > 0: {name} mass = {link.mass}")
        I = np.asarray(link.inertia)
        if not np.allclose(I, I.T, atol=SYMMETRY_TOL):
            report.append(f"inertia symmetric: {name}")
        elif np.linalg.eigvalsh(I).min() < -SYMMETRY_TOL:
            report.append(f"inertia positive semidefinite: {name}")
        if not _triangle_ok(I):
            log.warning("inertia triangle inequality exceeds %.0f%% slack: %s",
                        100 * TRIANGLE_SLACK, name)

    if len(params.arm_links) != 6:
        report.append(f"exactly 6 arm links: got {len(params.arm_links)}")
    if len(params.arm_motors) != 6:
        report.append(f"exactly 6 arm motors: got {len(params.arm_motors)}")
    for i, m in enumerate(params.arm_motors + params.wheel_motors):
        if not (m.Ia > 0 and m.Kt > 0):
            report.append(f"motor constants > 0: {MOTOR_KEYS[i] if i < 8 else i}")
    joints = [r.joint for r in params.kk_table if r.joint is not None]
    if joints != [1, 2, 3, 4, 5, 6] or len(params.kk_table) != 7:
        report.append("kk table: exactly 6 actuated rows + 1 fixed tool row")
    for r in params.kk_table:
        if not all(math.isfinite(x) for x in (r.alpha, r.d, r.theta_offset, r.r)):
            report.append("kk table: finite values")
    if all(l.mass > 0 for _, l in named):
        m = total_mass(params)
        if m > params.total_mass_limit:
            report.append(f"total mass <= {params.total_mass_limit} kg: {m:.3f} kg")
    return report


def _emit(raw, si: float, div: float):
    """Emit the raw document value when it still converts to ``si``; keeps round trips exact."""
    if isinstance(raw, (int, float)) and not isinstance(raw, bool) and raw / div == si:
        return raw
    return si * div


def dump_robot_params(params: RobotParams) -> str:
    """Serialize back to the document layout and units of ``params.source``."""
    src = params.source or json.loads(default_params_text())
    doc = copy.deepcopy(dict(src))
    length_div, _ = _units(doc)
    g = params.geometry
    for k in GEOMETRY_KEYS:
        doc["geometry"][k] = _emit(doc["geometry"].get(k), getattr(g, k), length_div)
    links = dict(zip(ARM_LINK_KEYS, params.arm_links))
    links.update(b=params.base_link, o=params.orientable_hub,
                 c=params.castor_wheel, f=params.fixed_wheel)
    for key, link in links.items():
        entry = doc["links"][key]
        entry["M"] = _emit(entry.get("M"), link.mass, 1.0)
        for i, axis in enumerate("XYZ"):
            entry[axis] = _emit(entry.get(axis), float(link.cg[i]), length_div)
        I = link.inertia
        for name, (i, j) in (("XX", (0, 0)), ("YY", (1, 1)), ("ZZ", (2, 2)),
                             ("XY", (0, 1)), ("XZ", (0, 2)), ("YZ", (1, 2))):
            raw = entry.get(name)
            si = float(I[i, j])
            if si == 0.0 and isinstance(raw, (int, float)) and abs(raw) < SYMMETRY_TOL:
                continue
            entry[name] = _emit(raw, si, 1.0)
    motors = dict(zip(MOTOR_KEYS, params.arm_motors + params.wheel_motors))
    for key, m in motors.items():
        doc["motors"][key]["Ia"] = _emit(doc["motors"][key].get("Ia"), m.Ia, 1.0)
        doc["motors"][key]["Kt"] = _emit(doc["motors"][key].get("Kt"), m.Kt, 1.0)
    return json.dumps(doc, indent=2)


def with_link(params: RobotParams, index: int, **changes) -> RobotParams:
    """Copy of ``params`` with arm link ``index`` (0-based) modified."""
    links = list(params.arm_links)
    links[index] = replace(links[index], **changes)
    return replace(params, arm_links=tuple(links))
