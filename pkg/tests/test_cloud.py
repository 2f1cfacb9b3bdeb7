import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slr.cloud import (
    Label,
    LabeledPoint,
    PointCloud,
    SphericalPoint,
    cartesian_coordinates,
    from_spherical,
    spherical_coordinates,
    to_spherical,
)
from slr.errors import ZeroRadius


def test_pole_up():
    assert to_spherical((0, 0, 5)) == SphericalPoint(5.0, 0.0, 0.0)


def test_pole_down_has_zero_azimuth():
    s = to_spherical((1e-300 * 0, -0.0, -2.0))
    assert s.theta == 180.0 and s.phi == 0.0


def test_axis():
    assert to_spherical((3, 0, 0)) == SphericalPoint(3.0, 90.0, 0.0)


def test_below_horizon_against_hand_trig():
    s = to_spherical((0, 4, -3))
    assert s.R == pytest.approx(5.0, abs=1e-12)
    assert s.theta == pytest.approx(math.degrees(math.acos(-3 / 5)), abs=1e-12)
    assert s.theta == pytest.approx(126.86989764584402, abs=1e-9)
    assert s.phi == pytest.approx(90.0, abs=1e-12)


def test_origin_offset():
    s = to_spherical((1, 1, 1), origin=(1, 0, 1))
    assert s == pytest.approx((1.0, 90.0, 90.0))


def test_negative_azimuth_wraps():
    s = to_spherical((1, -1, 0))
    assert s.phi == pytest.approx(315.0)


def test_zero_radius():
    with pytest.raises(ZeroRadius):
        to_spherical((1, 2, 3), origin=(1, 2, 3))


def test_from_spherical_examples():
    assert from_spherical(SphericalPoint(5, 0, 0)) == (0.0, 0.0, 5.0)
    x, y, z = from_spherical(SphericalPoint(3, 90, 0))
    assert (x, y, z) == pytest.approx((3.0, 0.0, 0.0), abs=1e-15)


def test_round_trip_thousand_points(rng):
    xyz = rng.uniform(-100, 100, size=(1000, 3))
    origin = rng.uniform(-5, 5, 3)
    R, t, p = spherical_coordinates(xyz, origin)
    back = cartesian_coordinates(R, t, p, origin)
    assert np.max(np.linalg.norm(back - xyz, axis=1)) < 1e-9


def test_tiny_negative_azimuth_stays_in_range():
    R, t, p = spherical_coordinates(np.array([[1.0, -1e-300, 0.0]]), np.zeros(3))
    assert 0.0 <= p[0] < 360.0


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(st.tuples(finite, finite, finite), st.tuples(finite, finite, finite))
def test_angles_within_documented_ranges(p, o):
    R, t, ph = spherical_coordinates(np.array([p]), np.array(o))
    assert R[0] >= 0
    assert 0.0 <= t[0] <= 180.0
    assert 0.0 <= ph[0] < 360.0


@settings(max_examples=300, deadline=None)
@given(
    st.floats(min_value=1e-6, max_value=1e6),
    st.floats(min_value=0, max_value=180),
    st.floats(min_value=0, max_value=360, exclude_max=True),
)
def test_round_trip_relative_tolerance(R, theta, phi):
    xyz = cartesian_coordinates([R], [theta], [phi])
    R2, t2, p2 = spherical_coordinates(xyz, np.zeros(3))
    back = cartesian_coordinates(R2, t2, p2)
    assert np.linalg.norm(back - xyz) <= 1e-9 * R


def test_cloud_is_immutable():
    c = PointCloud([[0, 0, 0]], [0])
    with pytest.raises(ValueError):
        c.xyz[0, 0] = 1.0
    with pytest.raises(ValueError):
        c.labels[0] = 1


def test_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud([[0, 0, np.nan]])
    with pytest.raises(ValueError):
        PointCloud([[0, 0, 0]], [3])
    with pytest.raises(ValueError):
        PointCloud([[0, 0]])


def test_empty_cloud_and_coincident_points():
    assert len(PointCloud()) == 0
    c = PointCloud([[1, 1, 1], [1, 1, 1]], [0, 1])
    assert len(c) == 2


def test_iteration_and_from_points():
    pts = [LabeledPoint(1.0, 2.0, 3.0, Label.GROUND), LabeledPoint(4.0, 5.0, 6.0, Label.NON_GROUND)]
    c = PointCloud.from_points(pts, meta={"source": "test", "n": 2})
    assert list(c) == pts
    assert c[1].label is Label.NON_GROUND
    assert c.meta == {"source": "test", "n": "2"}
