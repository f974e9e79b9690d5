"""Command-line entry points: simulate, plan, verify, params.

Exit codes: 0 success, 1 invalid arguments, 2 configuration errors, 3 mission or
verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from robopainter import mission as ms
from robopainter import params as pm
from robopainter import sim
from robopainter.trajectory import coverage_svg, plan_paint, spray_coverage

EXIT_OK, EXIT_ARGS, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2, 3
log = logging.getLogger("robopainter")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad arguments; this CLI reserves 2 for configuration errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def bundled_room(name: str) -> Path | None:
    root = resources.files("robopainter.data").joinpath("rooms")
    for cand in (name, f"{name}.json"):
        p = root.joinpath(cand)
        if p.is_file():
            return Path(str(p))
    return None


def resolve_room(arg: str | None) -> ms.RoomModel:
    """Room from a file path, or a bundled room by name (``empty4x4``, ``door_window``)."""
    if arg is None:
        return ms.load_room(bundled_room("empty4x4"))
    path = Path(arg)
    if not path.exists():
        alt = bundled_room(path.name)
        if alt is None:
            raise ms.RoomError(f"room file not found: {arg}")
        path = alt
    return ms.load_room(path)


def _load_robot(arg: str | None) -> pm.RobotParams:
    return pm.default_params() if arg is None else pm.load_robot_params_file(arg)


def cmd_simulate(args) -> int:
    robot = _load_robot(args.robot)
    room = resolve_room(args.room)
    cfg = sim.load_sim_config(args.config) if args.config else sim.SimConfig()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    overrides = dict(trace_path=str(out / "trace.jsonl"), joint_log_path=str(out / "joints.csv"),
                     svg_path=str(out / "coverage.svg"), report_path=str(out / "report.json"))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.duration_cap is not None:
        overrides["duration_cap"] = args.duration_cap
    cfg = sim.SimConfig.from_dict({**cfg.to_dict(), **overrides})
    try:
        result = sim.run_mission(robot, room, cfg)
    except Exception:
        log.exception("mission aborted")
        return EXIT_FAILURE
    r = result.report
    print(f"status {r.status}: covered {r.covered_fraction:.4f} of {r.paintable_area:.2f} m^2, "
          f"time {r.total_time:.1f} s, rate {r.painting_rate:.1f} m^2/h, "
          f"max tracking error {1000 * r.max_tracking_error:.2f} mm, "
          f"max localization error {1000 * r.localization['max']:.1f} mm")
    print(f"outputs in {out}")
    return EXIT_OK if r.status == "completed" else EXIT_FAILURE


def cmd_plan(args) -> int:
    room = resolve_room(args.room)
    plan = plan_paint(room.wall_specs, standoff=args.standoff)
    text = plan.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "plan.json").write_text(text)
        for w in plan.walls:
            legs = [l for legs in w.core for l in legs] + list(w.outline)
            cov = spray_coverage(legs, w.wall)
            (out / f"plan_wall{w.index}.svg").write_text(coverage_svg(cov, w.strips))
        summary = ", ".join(f"wall {w.index}: {sum(s.section == 'core' for s in w.strips)} core strips, "
                            f"{len(w.posts)} posts" for w in plan.walls)
        print(summary)
    else:
        print(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    from robopainter.checks import run_checks

    robot = _load_robot(args.robot)
    results = run_checks(robot, quick=args.quick, names=args.only)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_FAILURE


def cmd_params(args) -> int:
    text = Path(args.file).read_text() if args.file else pm.default_params_text()
    robot = pm.load_robot_params(text)
    problems = pm.validate_params(robot)
    if args.validate:
        for p in problems:
            print(f"invalid: {p}")
        if not problems:
            print(f"valid: total mass {pm.total_mass(robot):.3f} kg")
        return EXIT_CONFIG if problems else EXIT_OK
    print(pm.dump_robot_params(robot))
    return EXIT_CONFIG if problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="robopainter", description="Wall-painting robot simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a full painting mission")
    s.add_argument("--robot", help="robot parameter file (default: bundled)")
    s.add_argument("--room", help="room JSON file or bundled room name (default: empty4x4)")
    s.add_argument("--config", help="simulation config JSON")
    s.add_argument("--seed", type=int)
    s.add_argument("--duration-cap", type=float)
    s.add_argument("--out", default="robopainter-out", help="output directory")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("plan", help="plan strips, posts and tip paths only")
    s.add_argument("--room", help="room JSON file or bundled room name (default: empty4x4)")
    s.add_argument("--standoff", type=float, default=0.175)
    s.add_argument("--out", help="write plan.json and per-wall SVGs here instead of printing JSON")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("verify", help="run the built-in property checks")
    s.add_argument("--robot")
    s.add_argument("--quick", action="store_true", help="fewer samples")
    s.add_argument("--only", nargs="*", help="subset of checks by name")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("params", help="print or validate a robot parameter file")
    s.add_argument("file", nargs="?", help="parameter file (default: bundled)")
    s.add_argument("--validate", action="store_true")
    s.set_defaults(func=cmd_params)
    return p


def main(argv=None) -> int:
    sim.configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (pm.ParamsError, ms.RoomError, sim.ConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
