import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robopainter import trajectory as tr
from robopainter.trajectory import Opening, WallSpec


# ---------------------------------------------------------------- quintic

def test_quintic_boundary_conditions():
    seg = tr.quintic_segment([0.0, 1.0], [2.0, -1.0], 4.0)
    q, qd, qdd = seg.sample(np.array([0.0, 4.0]))
    assert np.allclose(q, [[0, 1], [2, -1]])
    assert np.allclose(qd, 0) and np.allclose(qdd, 0)


def test_quintic_midpoint_and_peak_velocity():
    seg = tr.quintic_segment(0.0, 3.0, 2.0)
    q, qd, qdd = seg.sample(1.0)
    assert q == pytest.approx(1.5)
    assert qd == pytest.approx(1.875 * 3.0 / 2.0)
    assert qdd == pytest.approx(0.0, abs=1e-12)


def test_quintic_coefficients_reproduce_samples():
    seg = tr.quintic_segment([0.3], [1.1], 1.7)
    t = np.linspace(0, 1.7, 11)
    poly = np.polynomial.polynomial.polyval(t, seg.coefficients[0])
    assert np.allclose(poly, seg.sample(t)[0][:, 0])


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 20))
def test_quintic_is_monotone(a, b, T):
    q = tr.quintic_segment(a, b, T).sample(np.linspace(0, T, 50))[0]
    d = np.diff(q) * np.sign(b - a)
    assert (d >= -1e-12).all()


@pytest.mark.parametrize("T", [0.0, -1.0])
def test_quintic_rejects_nonpositive_duration(T):
    with pytest.raises(tr.NonpositiveDuration):
        tr.quintic_segment(0.0, 1.0, T)


# ---------------------------------------------------------------- strips

def test_strip_count_for_four_metre_wall():
    strips = tr.plan_wall_strips(4.0, 2.7)
    core = [s for s in strips if s.section == "core"]
    assert len(core) == 17
    assert core[-1].u1 == pytest.approx(4.0)
    assert all(s.width == pytest.approx(0.25) for s in core)
    # neighbouring strips overlap by at least 1 cm
    assert all(b.u0 <= a.u1 - 0.01 + 1e-12 for a, b in zip(core, core[1:]))


def test_single_strip_wall():
    assert len(tr.core_strip_positions(0.25)) == 1
    with pytest.raises(tr.WallTooNarrow):
        tr.core_strip_positions(0.2)


def test_wall_too_tall():
    with pytest.raises(tr.WallTooTall):
        tr.plan_wall_strips(4.0, 2.8)


def test_door_splits_strips_into_subruns():
    door = Opening(1.0, 1.9, 0.0, 2.1, "door")
    strips = tr.plan_wall_strips(4.0, 2.7, [door], fill_gaps=False)
    above = [s for s in strips if s.section == "core" and s.u0 > 1.0 and s.u1 < 1.9]
    assert above
    for s in above:
        assert s.runs == ((2.1, 2.45),)


def test_outline_band():
    strips = tr.plan_wall_strips(4.0, 2.7)
    out = strips[-1]
    assert out.section == "outline"
    assert out.width == pytest.approx(0.25)
    assert out.roll == pytest.approx(math.pi / 2)
    assert not any(s.section == "outline" for s in tr.plan_wall_strips(4.0, 2.45))


def test_subtract_intervals():
    assert tr.subtract_intervals(0, 10, [(2, 3), (5, 12)]) == [(0, 2), (3, 5)]
    assert tr.subtract_intervals(0, 1, [(-1, 2)]) == []


# ---------------------------------------------------------------- posts and paths

def test_posts_group_four_strips():
    strips = tr.plan_wall_strips(4.0, 2.7)
    posts = tr.plan_base_posts(strips)
    assert len(posts) == 5
    assert [len(p.strips) for p in posts] == [4, 4, 4, 4, 1]
    assert np.allclose(sorted(abs(o) for o in posts[0].offsets), [0.12, 0.12, 0.36, 0.36])


@pytest.mark.parametrize("standoff", [0.05, 0.3])
def test_post_standoff_range(standoff):
    with pytest.raises(ValueError):
        tr.plan_base_posts(tr.plan_wall_strips(4.0, 2.7), standoff)


def test_core_path_timing():
    strips = tr.plan_wall_strips(4.0, 2.7)
    post = tr.plan_base_posts(strips)[0]
    legs = tr.plan_core_path(strips, post)
    passes = [l for l in legs if l.kind == "pass"]
    assert len(passes) == 4
    assert all(l.T == pytest.approx(10.0) for l in passes)
    assert tr.TIP_SPEED == pytest.approx(0.245)
    assert tr.spray_time(legs) == pytest.approx(40.0)
    # alternating direction
    ups = [l.p1[1] > l.p0[1] for l in passes]
    assert ups == [True, False, True, False]
    assert legs[-1].t1 == pytest.approx(43.0)
    # legs chain in time and space
    for a, b in zip(legs, legs[1:]):
        assert b.t0 == pytest.approx(a.t1)
        assert np.allclose(b.p0, a.p1)


def test_core_path_rejects_far_strip():
    strips = tr.plan_wall_strips(4.0, 2.7)
    post = tr.BasePost(0, 0.0, 0.175, (10,), (strips[10].u,))
    with pytest.raises(tr.StripOutOfLateralRange):
        tr.plan_core_path(strips, post)


def test_outline_path():
    strips = tr.plan_wall_strips(4.0, 2.7)
    legs = tr.plan_outline_path(strips[-1])
    assert len(legs) == 1
    leg = legs[0]
    assert leg.p0 == (4.0, pytest.approx(2.575)) and leg.p1[0] == 0.0
    assert leg.roll == pytest.approx(math.pi / 2)
    assert tr.plan_outline_path(None) == []


def test_tip_leg_samples_quintic():
    leg = tr.TipLeg(5.0, 2.0, (0.0, 0.0), (0.0, 1.0), True, 0.0, "pass")
    p, v, _ = leg.at(6.0)
    assert np.allclose(p, [0.0, 0.5])
    assert v[1] == pytest.approx(1.875 / 2.0)


# ---------------------------------------------------------------- coverage

def test_transit_leg_paints_nothing():
    wall = WallSpec(4.0, 2.7)
    leg = tr.TipLeg(0.0, 5.0, (0.5, 0.0), (0.5, 2.45), False, 0.0, "transit")
    assert tr.spray_coverage([leg], wall).covered_fraction == 0.0


def test_single_pass_paints_its_swath():
    wall = WallSpec(1.0, 1.0)
    leg = tr.TipLeg(0.0, 4.0, (0.5, 0.0), (0.5, 1.0), True, 0.0, "pass")
    cov = tr.spray_coverage([leg], wall)
    assert cov.painted_area == pytest.approx(0.26 * 1.0, rel=0.05)


@pytest.mark.parametrize("openings", [(), (Opening(1.0, 1.9, 0.0, 2.1, "door"), Opening(2.5, 3.5, 0.9, 2.3))])
def test_full_plan_covers_wall(openings):
    wall = WallSpec(4.0, 2.7, tuple(openings))
    w = tr.plan_paint([wall]).walls[0]
    legs = [l for legs in w.core for l in legs] + list(w.outline)
    cov = tr.spray_coverage(legs, wall)
    assert cov.covered_fraction >= 0.999
    assert cov.wall.paintable_area == pytest.approx(4.0 * 2.7 - sum(o.area for o in openings))


def test_overlap_counts_second_stroke():
    wall = WallSpec(1.0, 1.0)
    leg = tr.TipLeg(0.0, 4.0, (0.5, 0.0), (0.5, 1.0), True, 0.0, "pass")
    cov = tr.spray_coverage([leg, leg], wall)
    assert cov.overlap_fraction == pytest.approx(1.0)


def test_plan_json_round_trip():
    import json

    plan = tr.plan_paint([WallSpec(4.0, 2.7)])
    d = json.loads(plan.to_json())
    assert d["walls"][0]["core_strips"] == 17
    assert len(d["walls"][0]["posts"]) == 5
    assert d["spray_time"] == pytest.approx(plan.spray_time)


def test_coverage_svg_is_svg():
    wall = WallSpec(4.0, 2.7)
    svg = tr.coverage_svg(tr.CoverageMap(wall), tr.plan_wall_strips(4.0, 2.7))
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
