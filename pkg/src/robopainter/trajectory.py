"""Quintic point-to-point profiles and the strip-based wall coverage plan.

Walls are described in their own coordinates: ``u`` runs along the wall from
its start corner (counterclockwise around the room) and ``z`` is the height
above the floor.  Core strips are vertical 0.25 m swaths painted bottom-up or
top-down; the outline is the horizontal band above the core height, painted
with the gun rolled by 90 degrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

STRIP_WIDTH = 0.25
STRIP_OVERLAP = 0.01
STRIP_PITCH = STRIP_WIDTH - STRIP_OVERLAP
CORE_HEIGHT = 2.45
MAX_WALL_HEIGHT = 2.70
STRIP_TIME = 10.0
TIP_SPEED = CORE_HEIGHT / STRIP_TIME
MAX_LATERAL = 0.5
STRIPS_PER_POST = 4
STANDOFF_RANGE = (0.10, 0.25)
DEFAULT_STANDOFF = 0.175
SHIFT_TIME = 1.0
PATTERN = (0.26, 0.05)  # long side, short side (m)
GRID = 0.01
_EPS = 1e-9


class NonpositiveDuration(ValueError):
    pass


class WallTooNarrow(ValueError):
    pass


class WallTooTall(ValueError):
    pass


class StripOutOfLateralRange(ValueError):
    pass


# --------------------------------------------------------------------------- quintic


@dataclass(frozen=True)
class QuinticSegment:
    """q(t) = q0 + (q1 - q0) s(t/T) with s = 10 tau^3 - 15 tau^4 + 6 tau^5.

    ``blend`` is kept for a future linear-with-blends profile; only 1.0 (pure quintic)
    is implemented.
    """

    q0: np.ndarray
    q1: np.ndarray
    T: float
    blend: float = 1.0

    @property
    def coefficients(self) -> np.ndarray:
        """Polynomial coefficients a0..a5 in t (seconds), one row per axis."""
        d = np.atleast_1d(self.q1 - self.q0)
        T = self.T
        c = np.zeros((d.size, 6))
        c[:, 0] = np.atleast_1d(self.q0)
        c[:, 3] = 10 * d / T**3
        c[:, 4] = -15 * d / T**4
        c[:, 5] = 6 * d / T**5
        return c

    def sample(self, t):
        return sample(self, t)


def quintic_segment(q0, q1, T: float, blend: float = 1.0) -> QuinticSegment:
    if not T > 0:
        raise NonpositiveDuration(f"duration must be positive, got {T}")
    if blend != 1.0:
        raise NotImplementedError("only the pure quintic profile (blend = 1) is implemented")
    return QuinticSegment(np.asarray(q0, dtype=float), np.asarray(q1, dtype=float), float(T), blend)


def quintic_scalar(tau):
    """s, ds/dtau, d2s/dtau2 of the normalized quintic (tau clipped to [0, 1])."""
    tau = np.clip(tau, 0.0, 1.0)
    s = tau**3 * (10 - 15 * tau + 6 * tau**2)
    ds = 30 * tau**2 * (1 - tau) ** 2
    dds = 60 * tau * (1 - tau) * (1 - 2 * tau)
    return s, ds, dds


def sample(seg: QuinticSegment, t):
    """(pos, vel, acc) at time(s) t; times outside [0, T] hold the end points."""
    t = np.asarray(t, dtype=float)
    s, ds, dds = quintic_scalar(t / seg.T)
    d = seg.q1 - seg.q0
    s, ds, dds = (np.expand_dims(v, -1) if d.ndim else v for v in (s, ds, dds))
    return seg.q0 + d * s, d * ds / seg.T, d * dds / seg.T**2


# --------------------------------------------------------------------------- strips


@dataclass(frozen=True)
class Opening:
    """Door or window on a wall: u in [u0, u1], z in [z0, z1]."""

    u0: float
    u1: float
    z0: float
    z1: float
    kind: str = "window"

    @property
    def area(self) -> float:
        return (self.u1 - self.u0) * (self.z1 - self.z0)


@dataclass(frozen=True)
class WallSpec:
    length: float
    height: float
    openings: tuple[Opening, ...] = ()

    @property
    def paintable_area(self) -> float:
        return self.length * self.height - sum(o.area for o in self.openings)


@dataclass(frozen=True)
class PaintStrip:
    """A painted swath.

    Core strips are vertical: ``u0..u1`` is the 0.25 m width and ``runs`` are z-intervals.
    The outline band is horizontal: ``z0..z1`` is its height and ``runs`` are u-intervals.
    """

    wall: int
    u0: float
    u1: float
    z0: float
    z1: float
    section: str
    roll: float
    runs: tuple[tuple[float, float], ...]
    fill: bool = False

    @property
    def u(self) -> float:
        return 0.5 * (self.u0 + self.u1)

    @property
    def width(self) -> float:
        return self.u1 - self.u0 if self.section == "core" else self.z1 - self.z0

    @property
    def run_length(self) -> float:
        return sum(b - a for a, b in self.runs)


def subtract_intervals(lo: float, hi: float, cuts) -> list[tuple[float, float]]:
    """[lo, hi] minus the union of ``cuts``; pieces shorter than 1e-9 are dropped."""
    pieces = [(lo, hi)]
    for a, b in sorted(cuts):
        nxt = []
        for p, q in pieces:
            if b <= p + _EPS or a >= q - _EPS:
                nxt.append((p, q))
                continue
            if a > p + _EPS:
                nxt.append((p, a))
            if b < q - _EPS:
                nxt.append((b, q))
        pieces = nxt
    return [(p, q) for p, q in pieces if q - p > _EPS]


def core_strip_positions(width: float) -> list[float]:
    """Left edges of the regular core strips; the last one is right-aligned."""
    if width < STRIP_WIDTH - _EPS:
        raise WallTooNarrow(f"wall width {width} m is below one strip ({STRIP_WIDTH} m)")
    n = 1 + math.ceil((width - STRIP_WIDTH) / STRIP_PITCH - _EPS)
    lefts = [i * STRIP_PITCH for i in range(n - 1)] + [max(0.0, width - STRIP_WIDTH)]
    return lefts


def plan_wall_strips(width: float, height: float, openings: Sequence[Opening] = (),
                     wall: int = 0, fill_gaps: bool = True) -> list[PaintStrip]:
    """Core strips (clipped around openings) followed by the outline band, if any.

    With ``fill_gaps`` extra strips are aligned to opening edges wherever a clipped
    strip would leave wall beside the opening unpainted.
    """
    if height > MAX_WALL_HEIGHT + _EPS:
        raise WallTooTall(f"wall height {height} m exceeds the {MAX_WALL_HEIGHT} m reach")
    lefts = core_strip_positions(width)
    top = min(height, CORE_HEIGHT)

    def runs_for(u0, u1):
        cuts = [(o.z0, o.z1) for o in openings if o.u0 < u1 - _EPS and o.u1 > u0 + _EPS]
        return tuple(subtract_intervals(0.0, top, cuts))

    strips = [PaintStrip(wall, u0, u0 + STRIP_WIDTH, 0.0, top, "core", 0.0, runs_for(u0, u0 + STRIP_WIDTH))
              for u0 in lefts]
    if fill_gaps:
        extra = []
        for o in openings:
            zlo, zhi = max(o.z0, 0.0), min(o.z1, top)
            if zhi <= zlo + _EPS:
                continue
            for u0 in (o.u0 - STRIP_WIDTH, o.u1):
                u0 = min(max(u0, 0.0), max(width - STRIP_WIDTH, 0.0))
                if u0 + STRIP_WIDTH <= o.u0 + _EPS or u0 >= o.u1 - _EPS:
                    # wall next to the opening that a clipped regular strip may have skipped
                    runs = tuple(r for r in runs_for(u0, u0 + STRIP_WIDTH)
                                 if r[1] > zlo + _EPS and r[0] < zhi - _EPS)
                    runs = tuple((max(a, zlo), min(b, zhi)) for a, b in runs)
                    if runs and _needs_fill(u0, strips, openings, zlo, zhi):
                        extra.append(PaintStrip(wall, u0, u0 + STRIP_WIDTH, 0.0, top, "core", 0.0,
                                                runs, fill=True))
        strips = sorted(strips + extra, key=lambda s: (s.u0, s.fill))
    if height > CORE_HEIGHT + _EPS:
        cuts = [(o.u0, o.u1) for o in openings if o.z1 > CORE_HEIGHT + _EPS]
        runs = tuple(subtract_intervals(0.0, width, cuts))
        if runs:
            strips.append(PaintStrip(wall, 0.0, width, CORE_HEIGHT, height, "outline",
                                     math.pi / 2, runs))
    return strips


def _needs_fill(u0, strips, openings, zlo, zhi) -> bool:
    """True if part of [u0, u0 + width] x [zlo, zhi] off the openings is not painted by ``strips``."""
    u1 = u0 + STRIP_WIDTH
    us = np.arange(u0 + GRID / 2, u1, GRID)
    zs = np.arange(zlo + GRID / 2, zhi, GRID)
    for u in us:
        for z in zs:
            if any(o.u0 < u < o.u1 and o.z0 < z < o.z1 for o in openings):
                continue
            if not any(s.u0 <= u <= s.u1 and any(a <= z <= b for a, b in s.runs) for s in strips):
                return True
    return False


# --------------------------------------------------------------------------- posts and paths


@dataclass(frozen=True)
class BasePost:
    """A base stop in front of a wall: centered at ``u`` with the strips it paints."""

    wall: int
    u: float
    standoff: float
    strips: tuple[int, ...]
    offsets: tuple[float, ...]


def plan_base_posts(strips: Sequence[PaintStrip], standoff: float = DEFAULT_STANDOFF,
                    wall_length: float | None = None, clearance: float = 0.0) -> list[BasePost]:
    """Greedy groups of up to four consecutive core strips, one post per group.

    With ``wall_length`` and ``clearance`` the post centres are pulled away from the
    wall ends as far as the lateral limit allows.
    """
    lo, hi = STANDOFF_RANGE
    if not lo - _EPS <= standoff <= hi + _EPS:
        raise ValueError(f"standoff {standoff} m outside [{lo}, {hi}] m")
    core = [i for i, s in enumerate(strips) if s.section == "core"]
    core.sort(key=lambda i: strips[i].u)
    posts = []
    for k in range(0, len(core), STRIPS_PER_POST):
        group = core[k:k + STRIPS_PER_POST]
        us = [strips[i].u for i in group]
        center = 0.5 * (us[0] + us[-1])
        if wall_length is not None and clearance > 0:
            want = min(max(center, clearance), wall_length - clearance)
            lo_c, hi_c = us[-1] - MAX_LATERAL, us[0] + MAX_LATERAL
            center = min(max(want, lo_c), hi_c)
        offsets = tuple(u - center for u in us)
        if max(abs(o) for o in offsets) > MAX_LATERAL + _EPS:
            raise StripOutOfLateralRange(f"strip offset {max(offsets, key=abs):.3f} m beyond ±{MAX_LATERAL} m")
        posts.append(BasePost(strips[group[0]].wall, center, standoff, tuple(group), offsets))
    return posts


@dataclass(frozen=True)
class TipLeg:
    """Straight tip move on the wall from ``p0`` to ``p1`` (u, z) with a quintic time law."""

    t0: float
    T: float
    p0: tuple[float, float]
    p1: tuple[float, float]
    spray: bool
    roll: float
    kind: str  # "pass", "shift", "outline", "transit"
    strip: int = -1

    @property
    def t1(self) -> float:
        return self.t0 + self.T

    def at(self, t):
        seg = QuinticSegment(np.asarray(self.p0), np.asarray(self.p1), self.T)
        return sample(seg, np.asarray(t) - self.t0)


def pass_legs(strip: PaintStrip, up: bool, t: float, index: int) -> list[TipLeg]:
    runs = list(strip.runs) if up else [(b, a) for a, b in reversed(strip.runs)]
    legs = []
    prev = None
    for a, b in runs:
        if prev is not None:
            T = max(abs(a - prev) / TIP_SPEED, _EPS)
            legs.append(TipLeg(t, T, (strip.u, prev), (strip.u, a), False, 0.0, "transit", index))
            t += T
        T = abs(b - a) / TIP_SPEED
        legs.append(TipLeg(t, T, (strip.u, a), (strip.u, b), True, 0.0, "pass", index))
        t += T
        prev = b
    return legs


def plan_core_path(strips: Sequence[PaintStrip], post: BasePost, t0: float = 0.0,
                   shift_time: float = SHIFT_TIME, start_up: bool = True) -> list[TipLeg]:
    """Boustrophedon over the post's strips: up, shift, down, shift, ...

    Full-height passes last 10 s (0.245 m/s); sub-runs around openings scale with length.
    """
    if len(post.strips) > STRIPS_PER_POST:
        raise StripOutOfLateralRange(f"{len(post.strips)} strips at one post (max {STRIPS_PER_POST})")
    for i in post.strips:
        if abs(strips[i].u - post.u) > MAX_LATERAL + _EPS:
            raise StripOutOfLateralRange(
                f"strip {i} is {strips[i].u - post.u:+.3f} m from the post centerline")
    legs: list[TipLeg] = []
    t = t0
    up = start_up
    for i in post.strips:
        s = strips[i]
        if legs:
            start = s.runs[0][0] if up else s.runs[-1][1]
            legs.append(TipLeg(t, shift_time, legs[-1].p1, (s.u, start), False, 0.0, "shift", i))
            t += shift_time
        new = pass_legs(s, up, t, i)
        legs.extend(new)
        t = new[-1].t1
        up = not up
    return legs


def plan_outline_path(strip: PaintStrip | None, t0: float = 0.0,
                      reverse: bool = True) -> list[TipLeg]:
    """Horizontal passes along the band centre with the gun rolled 90 degrees.

    ``reverse`` runs the band from the wall's far end back to its start.
    """
    if strip is None or strip.section != "outline":
        return []
    z = 0.5 * (strip.z0 + strip.z1)
    runs = [(b, a) for a, b in reversed(strip.runs)] if reverse else list(strip.runs)
    legs, t, prev = [], t0, None
    for a, b in runs:
        if prev is not None:
            T = max(abs(a - prev) / TIP_SPEED, _EPS)
            legs.append(TipLeg(t, T, (prev, z), (a, z), False, strip.roll, "transit"))
            t += T
        T = abs(b - a) / TIP_SPEED
        legs.append(TipLeg(t, T, (a, z), (b, z), True, strip.roll, "outline"))
        t += T
        prev = b
    return legs


def spray_time(legs: Sequence[TipLeg]) -> float:
    return float(sum(l.T for l in legs if l.spray))


# --------------------------------------------------------------------------- coverage


class CoverageMap:
    """Boolean 1 cm raster of a wall plus a per-stroke pass counter."""

    def __init__(self, wall: WallSpec, res: float = GRID, pattern=PATTERN):
        self.wall = wall
        self.res = res
        self.pattern = pattern
        self.nu = int(round(wall.length / res))
        self.nz = int(round(wall.height / res))
        uc = (np.arange(self.nu) + 0.5) * res
        zc = (np.arange(self.nz) + 0.5) * res
        self.paintable = np.ones((self.nz, self.nu), dtype=bool)
        for o in wall.openings:
            iu = (uc > o.u0) & (uc < o.u1)
            iz = (zc > o.z0) & (zc < o.z1)
            self.paintable[np.ix_(iz, iu)] = False
        self.passes = np.zeros((self.nz, self.nu), dtype=np.int32)
        self._stroke = np.zeros((self.nz, self.nu), dtype=bool)

    def _box(self, u, z, vertical: bool):
        long, short = self.pattern
        hu, hz = ((short, long) if vertical else (long, short))
        return u - hu / 2, u + hu / 2, z - hz / 2, z + hz / 2

    def _index(self, lo, hi, n):
        # cells whose centres fall inside [lo, hi]
        i0 = max(int(math.ceil(lo / self.res - 0.5 - 1e-9)), 0)
        i1 = min(int(math.floor(hi / self.res - 0.5 + 1e-9)), n - 1)
        return i0, i1 + 1

    def add_segment(self, p0, p1, vertical: bool = False) -> None:
        """Sweep the pattern from p0 to p1 (u, z) into the current stroke."""
        a = self._box(*p0, vertical)
        b = self._box(*p1, vertical)
        u0, u1 = min(a[0], b[0]), max(a[1], b[1])
        z0, z1 = min(a[2], b[2]), max(a[3], b[3])
        i0, i1 = self._index(u0, u1, self.nu)
        k0, k1 = self._index(z0, z1, self.nz)
        if i1 > i0 and k1 > k0:
            self._stroke[k0:k1, i0:i1] = True

    def end_stroke(self) -> None:
        self.passes += self._stroke
        self._stroke[:] = False

    @property
    def covered(self) -> np.ndarray:
        return ((self.passes > 0) | self._stroke) & self.paintable

    @property
    def covered_fraction(self) -> float:
        n = self.paintable.sum()
        return float(self.covered.sum() / n) if n else 1.0

    @property
    def painted_area(self) -> float:
        return float(self.covered.sum()) * self.res**2

    @property
    def overlap_fraction(self) -> float:
        cov = self.covered
        n = cov.sum()
        return float(((self.passes > 1) & cov).sum() / n) if n else 0.0

    def stats(self) -> dict:
        return {"covered_fraction": self.covered_fraction, "painted_area": self.painted_area,
                "paintable_area": self.wall.paintable_area, "overlap_fraction": self.overlap_fraction}


def spray_coverage(legs: Sequence[TipLeg], wall: WallSpec, step: float = 0.02,
                   res: float = GRID) -> CoverageMap:
    """Rasterize the planned spray-on legs of one wall onto a fresh coverage map."""
    cov = CoverageMap(wall, res)
    for leg in legs:
        if not leg.spray:
            continue
        dist = math.hypot(leg.p1[0] - leg.p0[0], leg.p1[1] - leg.p0[1])
        n = max(int(math.ceil(dist / step)), 1)
        pts = [(leg.p0[0] + (leg.p1[0] - leg.p0[0]) * k / n,
                leg.p0[1] + (leg.p1[1] - leg.p0[1]) * k / n) for k in range(n + 1)]
        vertical = abs(math.sin(leg.roll)) > math.sqrt(0.5)
        for a, b in zip(pts[:-1], pts[1:]):
            cov.add_segment(a, b, vertical)
        cov.end_stroke()
    return cov


# --------------------------------------------------------------------------- plan


@dataclass
class WallPlan:
    index: int
    wall: WallSpec
    strips: list[PaintStrip]
    posts: list[BasePost]
    core: list[list[TipLeg]]
    outline: list[TipLeg]

    @property
    def outline_strip(self) -> PaintStrip | None:
        return next((s for s in self.strips if s.section == "outline"), None)


@dataclass
class PaintPlan:
    walls: list[WallPlan] = field(default_factory=list)
    standoff: float = DEFAULT_STANDOFF

    @property
    def total_area(self) -> float:
        return float(sum(w.wall.paintable_area for w in self.walls))

    @property
    def spray_time(self) -> float:
        return float(sum(spray_time(legs) for w in self.walls for legs in w.core + [w.outline]))

    def to_dict(self) -> dict:
        def leg(l: TipLeg):
            return {"t0": l.t0, "T": l.T, "from": list(l.p0), "to": list(l.p1),
                    "spray": l.spray, "roll": l.roll, "kind": l.kind, "strip": l.strip}

        return {
            "standoff": self.standoff,
            "total_area": self.total_area,
            "spray_time": self.spray_time,
            "walls": [{
                "index": w.index,
                "length": w.wall.length,
                "height": w.wall.height,
                "openings": [vars(o) for o in w.wall.openings],
                "strips": [{"u0": s.u0, "u1": s.u1, "z0": s.z0, "z1": s.z1, "section": s.section,
                            "roll": s.roll, "runs": [list(r) for r in s.runs], "fill": s.fill}
                           for s in w.strips],
                "core_strips": sum(1 for s in w.strips if s.section == "core"),
                "posts": [{"u": p.u, "standoff": p.standoff, "strips": list(p.strips),
                           "offsets": list(p.offsets)} for p in w.posts],
                "core_legs": [[leg(l) for l in legs] for legs in w.core],
                "outline_legs": [leg(l) for l in w.outline],
            } for w in self.walls],
        }

    def to_json(self, indent: int | None = 1) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def plan_paint(walls: Sequence[WallSpec], standoff: float = DEFAULT_STANDOFF,
               clearance: float = 0.0) -> PaintPlan:
    plan = PaintPlan(standoff=standoff)
    for k, w in enumerate(walls):
        strips = plan_wall_strips(w.length, w.height, w.openings, wall=k)
        posts = plan_base_posts(strips, standoff, w.length, clearance)
        core, t = [], 0.0
        for post in posts:
            legs = plan_core_path(strips, post, t0=t)
            core.append(legs)
            t = legs[-1].t1
        outline_strip = next((s for s in strips if s.section == "outline"), None)
        plan.walls.append(WallPlan(k, w, strips, posts, core, plan_outline_path(outline_strip, t)))
    return plan


def coverage_svg(cov: CoverageMap, strips: Sequence[PaintStrip] = (), scale: float = 100.0) -> str:
    """Wall elevation: coverage heat map (passes), strip outlines and openings."""
    W, H = cov.wall.length * scale, cov.wall.height * scale
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" '
           f'viewBox="0 0 {W:.1f} {H:.1f}">',
           f'<rect width="{W:.1f}" height="{H:.1f}" fill="#ffffff" stroke="#000"/>']
    colors = {0: None, 1: "#9ecae1", 2: "#3182bd"}
    px = cov.res * scale
    for k in range(cov.nz):
        row = np.minimum(cov.passes[k], 2) * cov.paintable[k]
        i = 0
        while i < cov.nu:
            j = i
            while j < cov.nu and row[j] == row[i]:
                j += 1
            c = colors[int(row[i])]
            if c:
                y = H - (k + 1) * px
                out.append(f'<rect x="{i * px:.1f}" y="{y:.1f}" width="{(j - i) * px:.1f}" '
                           f'height="{px:.1f}" fill="{c}"/>')
            i = j
    for s in strips:
        for a, b in s.runs:
            if s.section == "core":
                x, y, w, h = s.u0, a, s.u1 - s.u0, b - a
            else:
                x, y, w, h = a, s.z0, b - a, s.z1 - s.z0
            out.append(f'<rect x="{x * scale:.1f}" y="{H - (y + h) * scale:.1f}" width="{w * scale:.1f}" '
                       f'height="{h * scale:.1f}" fill="none" stroke="#555" stroke-width="0.5"/>')
    for o in cov.wall.openings:
        out.append(f'<rect x="{o.u0 * scale:.1f}" y="{H - o.z1 * scale:.1f}" '
                   f'width="{(o.u1 - o.u0) * scale:.1f}" height="{(o.z1 - o.z0) * scale:.1f}" '
                   f'fill="#444" fill-opacity="0.6"/>')
    out.append("</svg>")
    return "\n".join(out)
