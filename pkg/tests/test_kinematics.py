import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from endowrist_bench.errors import Infeasible, OutOfRange
from endowrist_bench.kinematics import (AxisMap, DiscState, InstrumentCalibration, InstrumentGeometry, TipPose,
                                        decouple, feasibility_check, forward_map, inverse_map, link_segments,
                                        marker_world_normals, marker_world_positions, recouple)


def test_anchors_are_exact(calib):
    # centred disc stations map exactly onto the tip maxima
    assert calib.map_z.breakpoints == ((-167.0, -180.0), (0.0, 0.0), (167.0, 180.0))
    assert calib.map_x.breakpoints == ((-85.0, -80.0), (0.0, 0.0), (85.0, 80.0))
    assert calib.map_y1.breakpoints == ((-58.0, -115.0), (0.0, 0.0), (55.0, 115.0))
    assert calib.map_y2.breakpoints == ((-54.0, -115.0), (0.0, 0.0), (54.0, 115.0))
    for a in ("z", "x", "y1", "y2"):
        m = calib.axis_map(a)
        for d, t in m.breakpoints:
            assert m.forward(d) == t
            assert m.inverse(t) == d


def test_transmission_ratios(calib):
    assert calib.map_z.transmission == pytest.approx(360 / 334)
    assert calib.map_x.transmission == pytest.approx(160 / 170)


def test_forward_examples(calib):
    assert forward_map(calib, DiscState(0, 0, 0, 0)).as_tuple() == (0, 0, 0, 0)
    # pitch 40 deg with jaw 1 held at 0 needs y1 to co-move by kappa * x
    tip = forward_map(calib, DiscState(0, 42.5, 0.66 * 42.5, 0))
    assert tip.pitch == pytest.approx(40.0)
    assert tip.yaw1 == pytest.approx(0.0, abs=1e-12)
    assert tip.yaw2 == pytest.approx(-0.64 * 42.5 * 115 / 54)


def test_inverse_example(calib):
    d = inverse_map(calib, TipPose(0, 40, 0, 0))
    assert d.as_tuple() == pytest.approx((0, 42.5, 28.05, 27.2))


def test_out_of_range_raises(calib):
    with pytest.raises(OutOfRange) as e:
        forward_map(calib, DiscState(0, 90, 0, 0))
    assert e.value.axis == "x"
    assert forward_map(calib, DiscState(0, 90, 0.66 * 90, 0.64 * 90), saturate=True).pitch == 80


def test_feasibility(calib):
    assert feasibility_check(calib, TipPose(0, 0, 30, 0)) == []
    assert any("opening" in v for v in feasibility_check(calib, TipPose(0, 0, 0, 10)))
    assert any("opening" in v for v in feasibility_check(calib, TipPose(0, 0, 70, 0)))
    assert any("pitch" in v for v in feasibility_check(calib, TipPose(0, 81, 0, 0)))
    assert feasibility_check(calib, TipPose(0, math.nan, 0, 0))
    with pytest.raises(Infeasible):
        inverse_map(calib, TipPose(0, 0, -10, 0))


def feasible_tips(calib):
    def build(r, p, y2, o):
        return TipPose(r, p, y2 + o, y2)

    return st.builds(
        build,
        st.floats(-180, 180),
        st.floats(-80, 80),
        st.floats(-115, 55),
        st.floats(0, 60),
    )


@settings(max_examples=300)
@given(data=st.data())
def test_round_trip_property(calib, data):
    tip = data.draw(feasible_tips(calib))
    back = forward_map(calib, inverse_map(calib, tip))
    assert np.allclose(back.as_tuple(), tip.as_tuple(), atol=1e-9)


@given(st.floats(-85, 85), st.floats(-50, 50), st.floats(-50, 50))
def test_decouple_recouple(calib, x, y1, y2):
    disc = DiscState(0.0, x, y1, y2)
    assert np.allclose(recouple(calib, decouple(calib, disc)).as_tuple(), disc.as_tuple())


@given(st.floats(-85, 85))
def test_forward_monotone_in_each_axis(calib, d):
    m = calib.map_x
    assert m.forward(min(d + 0.5, 85)) >= m.forward(d)


def test_axis_map_validation():
    with pytest.raises(ValueError):
        AxisMap(((0.0, 0.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        AxisMap(((-1.0, 1.0), (0.0, 0.0), (1.0, 2.0)))


def test_json_round_trip(calib, tmp_path):
    p = tmp_path / "c.json"
    calib.save(p)
    back = InstrumentCalibration.load(p)
    assert back == calib
    d = json.loads(p.read_text())
    assert set(d) >= {"instrument_id", "axes", "coupling", "geometry"}


def test_fixture_matches_golden(calib, golden):
    assert calib.dumps() == (golden / "large_needle_driver.json").read_text()


def test_markers_at_rest_and_pitch():
    g = InstrumentGeometry()
    m = marker_world_positions(g, TipPose(0, 0, 0, 0))
    assert np.allclose(m["T1"] - m["C1"], [0, 0, 9])
    m = marker_world_positions(g, TipPose(0, 90, 0, 0))
    assert np.allclose(m["T1"] - m["C1"], [0, -9, 0], atol=1e-12)
    m = marker_world_positions(g, TipPose(0, 0, 30, -20))
    d2, d3 = m["T2"] - m["C2"], m["T3"] - m["C2"]
    assert math.degrees(math.atan2(d2[0], d2[2])) == pytest.approx(30)
    assert math.degrees(math.atan2(d3[0], d3[2])) == pytest.approx(-20)


def test_normals_and_segments():
    g = InstrumentGeometry()
    n = marker_world_normals(g, TipPose(0, 90, 0, 0))
    assert np.allclose(n["C2"], [0, 0, 1], atol=1e-12)
    assert np.allclose(n["C1"], [1, 0, 0])
    segs = link_segments(g, TipPose(0, 0, 0, 0))
    assert set(segs) == {"shaft", "jaw1", "jaw2"}
    assert segs["shaft"][2] == g.shaft_radius


@settings(max_examples=30)
@given(data=st.data())
def test_batch_matches_scalar(calib, data):
    from endowrist_bench.kinematics import forward_map_batch, inverse_map_batch

    tips = [data.draw(feasible_tips(calib)) for _ in range(5)]
    discs = inverse_map_batch(calib, [t.as_tuple() for t in tips])
    for t, d in zip(tips, discs):
        assert np.allclose(d, inverse_map(calib, t).as_tuple(), atol=1e-12)
        assert np.allclose(forward_map_batch(calib, d)[0], forward_map(calib, DiscState(*d)).as_tuple(), atol=1e-12)


def test_batch_errors(calib):
    from endowrist_bench.kinematics import forward_map_batch, inverse_map_batch

    with pytest.raises(Infeasible):
        inverse_map_batch(calib, [[0, 0, 0, 0], [0, 0, -10, 0]])
    with pytest.raises(OutOfRange):
        forward_map_batch(calib, [[0, 86, 0, 0]])
