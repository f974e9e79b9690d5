"""Built-in property checks behind ``robopainter verify``.

Each check returns a :class:`CheckResult`; ``run_checks`` runs them in order.  The
sample counts scale with ``n`` so a quick smoke pass and the full suite share code.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from robopainter import _compiled as C
from robopainter import dynamics as dyn
from robopainter import kinematics as kin
from robopainter import mission as ms
from robopainter import params as pm
from robopainter.params import RobotParams
from robopainter.trajectory import WallSpec, plan_paint, spray_coverage


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _random_arm_state(rng, scale: float = 1.0):
    return (rng.uniform(-np.pi, np.pi, 6), scale * rng.normal(size=6), scale * rng.normal(size=6))


def _random_base_state(rng, params):
    q = np.zeros(9)
    q[:3] = rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-np.pi, np.pi)
    q[3:] = rng.uniform(-np.pi, np.pi, 6)
    u = rng.normal(size=2)
    return q, u, kin.base_mobility_matrix(q, params) @ u


def check_params(params: RobotParams, n: int = 0) -> CheckResult:
    problems = pm.validate_params(params)
    text = pm.dump_robot_params(params)
    again = pm.load_robot_params(text)
    same = pm.dump_robot_params(again) == text
    m = pm.total_mass(params)
    ok = not problems and same and abs(m - 20.668) < 1e-9 and m <= params.total_mass_limit
    return CheckResult("parameters", ok, f"link mass {m:.3f} kg, round trip {'exact' if same else 'DIFFERS'}"
                       + (f", {len(problems)} violations" if problems else ""))


def check_reach(params: RobotParams, n: int = 2000) -> CheckResult:
    g = params.geometry
    rng = np.random.default_rng(1)
    q = rng.uniform(-np.pi, np.pi, (n, 6))
    q[:, 1] = rng.uniform(-np.pi / 2, 0.0, n)
    q[:, 2] = rng.uniform(-np.pi / 2, np.pi / 2, n)
    top = max(float(kin.arm_fk_matrix(q, params)[..., 2, 3].max()),
              float(kin.arm_fk_matrix(np.array([0.0, -np.pi / 2, 0.0, 0.0, 0.0, 0.0]), params)[2, 3]))
    planar = g.D3 + g.D4
    ok = abs(planar - 1.29) <= 1e-6 and abs(top - 2.70) <= 0.05
    return CheckResult("reach", ok, f"planar {planar:.6f} m, max tip height {top:.4f} m")


def check_dynamics(params: RobotParams, n: int = 1000) -> CheckResult:
    rng = np.random.default_rng(2)
    worst = {"lagrange_ne": 0.0, "skew": 0.0, "gravity_fd": 0.0, "JS": 0.0}
    pd_ok = True
    for _ in range(n):
        q, qd, qdd = _random_arm_state(rng)
        tl = dyn.arm_inverse_dynamics_lagrange(q, qd, qdd, params, include_rotor=False)
        tn = dyn.arm_inverse_dynamics_newton_euler(q, qd, qdd, params)
        worst["lagrange_ne"] = max(worst["lagrange_ne"], float(np.linalg.norm(tl - tn) / max(np.linalg.norm(tn), 1e-12)))
        M = dyn.arm_mass_matrix(q, params)
        Md = dyn.mass_matrix_rate(lambda Q: dyn.arm_mass_matrix(Q, params), q, qd)
        N = Md - 2 * dyn.arm_coriolis(q, qd, params)
        worst["skew"] = max(worst["skew"], float(np.abs(N + N.T).max()))
        pd_ok &= bool(np.linalg.eigvalsh(M).min() > 0)
        h = 1e-6
        fd = np.array([(dyn.arm_potential_energy(q + h * e, params) - dyn.arm_potential_energy(q - h * e, params)) / (2 * h)
                       for e in np.eye(6)])
        worst["gravity_fd"] = max(worst["gravity_fd"], float(np.abs(fd - dyn.arm_gravity(q, params)).max()))
        qb, u, _ = _random_base_state(rng, params)
        worst["JS"] = max(worst["JS"], float(np.abs(kin.base_constraint_matrix(qb, params)
                                                     @ kin.base_mobility_matrix(qb, params)).max()))
        Mr, _ = dyn.reduce_base_dynamics(qb, kin.base_mobility_matrix(qb, params) @ u, params)
        pd_ok &= bool(np.linalg.eigvalsh(Mr).min() > 0)
    ok = (worst["lagrange_ne"] < 1e-8 and worst["skew"] < 1e-6 and worst["gravity_fd"] < 1e-6
          and worst["JS"] < 1e-12 and pd_ok)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", positive definite {pd_ok}"
    return CheckResult(f"dynamics consistency ({n} states)", ok, detail)


def free_arm_energy_drift(params: RobotParams, dt: float, T: float = 5.0, seed: int = 3) -> float:
    """Relative drift of T+U for the torque-free, frictionless arm integrated with RK4."""
    rng = np.random.default_rng(seed)
    q0 = rng.uniform(-1.0, 1.0, 6)
    qd0 = 0.5 * rng.normal(size=6)
    N = int(round(T / dt))
    P = C.pack_arm(params)
    z = np.zeros((N, 6))
    vib = (np.zeros(1), np.zeros(1), np.zeros((1, 3)), 0.0)
    Q, QD, _ = C.arm_rollout(q0, qd0, z, z, z, 0.0, dt, np.zeros(N), np.zeros(N, dtype=np.bool_),
                             False, 0.0, 0.0, False, True, False, P, vib)

    def energy(q, qd):
        return dyn.arm_kinetic_energy(q, qd, params, include_rotor=True) + float(dyn.arm_potential_energy(q, params))

    e0 = energy(Q[0], QD[0])
    e = np.array([energy(Q[k], QD[k]) for k in range(0, N + 1, max(N // 200, 1))])
    return float(np.abs(e - e0).max() / abs(e0))


def check_energy(params: RobotParams, n: int = 0) -> CheckResult:
    d1 = free_arm_energy_drift(params, 1e-3)
    d2 = free_arm_energy_drift(params, 2e-3)
    ratio = d2 / d1 if d1 > 0 else math.inf
    ok = d1 < 1e-4 and ratio > 10.0
    return CheckResult("energy conservation", ok, f"drift {d1:.2e} at dt=1e-3, ratio dt 2e-3 / 1e-3 = {ratio:.1f}")


def check_planner(params: RobotParams, n: int = 0) -> CheckResult:
    wall = WallSpec(4.0, 2.7)
    plan = plan_paint([wall])
    w = plan.walls[0]
    core = [s for s in w.strips if s.section == "core"]
    offsets = [abs(o) for p in w.posts for o in p.offsets]
    legs = [l for legs in w.core for l in legs] + list(w.outline)
    cov = spray_coverage(legs, wall)
    ok = len(core) == 17 and len(w.posts) == 5 and max(offsets) <= 0.5 + 1e-12 and cov.covered_fraction >= 0.995
    return CheckResult("planner", ok, f"{len(core)} core strips, {len(w.posts)} posts, max offset "
                       f"{max(offsets):.3f} m, coverage {cov.covered_fraction:.4f}")


def check_sonar(params: RobotParams, n: int = 2000) -> CheckResult:
    rng = np.random.default_rng(4)
    room = ms.empty_room()
    suite = ms.SonarSuite()
    worst, lattice = 0.0, True
    for _ in range(n):
        pose = (rng.uniform(-3.5, -0.5), rng.uniform(0.5, 3.5), rng.uniform(-np.pi, np.pi))
        m = suite.mounts[rng.integers(len(suite.mounts))]
        r = ms.sonar_measure(room, pose, m, rng)
        d, _, _, _ = ms.expected_reading(room, pose, m)
        if ms.valid(r):
            worst = max(worst, abs(r - d))
            lattice &= abs(r * 100 - round(r * 100)) < 1e-9
    ok = worst <= 0.01 + 3 * ms.SONAR_SIGMA and lattice
    return CheckResult("sonar model", ok, f"max |reading - true| {worst:.4f} m, on 1 cm lattice {lattice}")


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "params": check_params,
    "reach": check_reach,
    "dynamics": check_dynamics,
    "energy": check_energy,
    "planner": check_planner,
    "sonar": check_sonar,
}


def run_checks(params: RobotParams, quick: bool = False, names=None) -> list[CheckResult]:
    sizes = {"reach": 200 if quick else 20000, "dynamics": 50 if quick else 1000, "sonar": 200 if quick else 2000}
    out = []
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            res = fn(params, sizes.get(name, 0))
        except Exception as exc:  # a crashing check is a failing check
            res = CheckResult(name, False, f"raised {type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
