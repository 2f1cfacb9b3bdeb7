import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slr.cloud import PointCloud
from slr.errors import EmptyCloud, NoPointsInRange
from slr.nss import (
    HISTOGRAM_COLUMNS,
    PulseBinEdges,
    distance_histogram,
    ground_fraction,
    height_sweep,
    pool_histograms,
    pulse_sized_bins,
    total_variation,
    write_histograms_csv,
)
from slr.scan import ScannerConfig, slr
from slr.scenes import SceneConfig, generate_dense_scene


def test_edges_at_45_degrees():
    e = pulse_sized_bins(1.65, 45.0).edges
    assert e.tolist() == pytest.approx([1.65, 1.65 / math.sin(math.radians(45))])
    assert pulse_sized_bins(2.0, 90.0).edges.tolist() == [2.0]


@pytest.mark.parametrize("res", [0.144, 0.36, 1.0, 7.0])
def test_edges_satisfy_pulse_geometry(res):
    b = pulse_sized_bins(1.65, res)
    k = np.arange(len(b.edges), 0, -1)
    np.testing.assert_allclose(b.edges * np.sin(np.radians(k * res)), 1.65, atol=1e-9, rtol=0)
    assert (np.diff(b.edges) > 0).all()
    assert (np.diff(np.diff(b.edges)) > 0).all()


def test_edges_truncated():
    b = pulse_sized_bins(1.65, 0.144, max_distance=30.0)
    assert b.edges.max() <= 30.0
    assert b.edges.max() > 29.0


def test_horizontal_edges():
    b = pulse_sized_bins(1.0, 45.0, distance="horizontal")
    assert b.edges.tolist() == pytest.approx([0.0, 1.0])


def test_edges_validation():
    with pytest.raises(ValueError):
        PulseBinEdges([1.0, 1.0], 1.65, 1.0)
    with pytest.raises(ValueError):
        pulse_sized_bins(0.0, 1.0)


def test_single_point_histogram():
    edges = pulse_sized_bins(1.65, 5.0)
    r = 0.5 * (edges.edges[3] + edges.edges[4])
    # any below-horizon direction at radial distance r lands in bin 3
    for d in ([0.8, 0.0, -0.6], [0.0, -0.6, -0.8]):
        h = distance_histogram(PointCloud([np.array(d) * r], [0]), (0, 0, 0), edges)
        assert h.probabilities[3] == 1.0
        assert h.total == 1


def test_elevation_does_not_matter_by_default():
    edges = PulseBinEdges([1.0, 2.0, 3.0], 1.0, 1.0)
    c = PointCloud([[0, 0, 1.5], [1.5, 0, 0], [0, 0, -2.5]], [1, 1, 1])
    assert distance_histogram(c, (0, 0, 0), edges).counts.tolist() == [2, 1]
    assert distance_histogram(c, (0, 0, 0), edges, below_horizon_only=True).counts.tolist() == [0, 1]


def test_bins_are_half_open():
    edges = PulseBinEdges([1.0, 2.0, 3.0], 1.0, 1.0)
    c = PointCloud([[0, 0, -1.0], [0, 0, -2.0], [0, 0, -3.0]], [0, 0, 0])
    assert distance_histogram(c, (0, 0, 0), edges).counts.tolist() == [1, 1]


def test_no_points_in_range():
    edges = pulse_sized_bins(1.65, 5.0, max_distance=10)
    with pytest.raises(NoPointsInRange):
        distance_histogram(PointCloud([[0, 0, 50.0]], [0]), (0, 0, 0), edges)
    with pytest.raises(NoPointsInRange):
        distance_histogram(PointCloud([[0, 0, 5.0]], [0]), (0, 0, 0), edges, below_horizon_only=True)
    with pytest.raises(NoPointsInRange):
        distance_histogram(PointCloud([[0, 0, -2.0]], [0]), (0, 0, 0), edges, "non_ground")


def _scene(n_rect=30, seed=4):
    return generate_dense_scene(SceneConfig.scaled(12.0, 0.02, n_rect, seed=seed))


@pytest.fixture(scope="module")
def scan():
    return slr(_scene(), (0.3, -0.2), ScannerConfig.uniform(0.5))


def test_probabilities_and_class_split(scan):
    origin = json.loads(scan.meta["origin"])
    edges = pulse_sized_bins(1.65, 0.5, max_distance=12)
    all_ = distance_histogram(scan, origin, edges, "all")
    g = distance_histogram(scan, origin, edges, "ground")
    ng = distance_histogram(scan, origin, edges, "non_ground")
    for h in (all_, g, ng):
        assert abs(h.probabilities.sum() - 1) <= 1e-9
        assert (h.probabilities >= 0).all()
    np.testing.assert_array_equal(g.counts + ng.counts, all_.counts)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * math.pi))
def test_rotation_about_vertical_axis(angle):
    rng = np.random.default_rng(1)
    xyz = rng.uniform(-8, 8, (3000, 3))
    origin = np.array([0.5, -1.0, 1.2])
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    turned = (xyz - origin) @ rot.T + origin
    edges = pulse_sized_bins(1.2, 2.0)
    a = distance_histogram(PointCloud(xyz), origin, edges).counts
    b = distance_histogram(PointCloud(turned), origin, edges).counts
    # a point sitting on an edge may change bins by rounding
    assert np.abs(a - b).sum() <= 2


def test_sweep_matches_direct_path():
    cloud = _scene(10)
    cfg = ScannerConfig.uniform(0.5)
    (g, ng), = height_sweep(cloud, (1.0, 1.0), [1.65], cfg, max_distance=12)
    scan = slr(cloud, (1.0, 1.0), cfg)
    origin = json.loads(scan.meta["origin"])
    edges = pulse_sized_bins(1.65, 0.5, 12)
    np.testing.assert_array_equal(g.counts, distance_histogram(scan, origin, edges, "ground").counts)
    np.testing.assert_array_equal(ng.counts, distance_histogram(scan, origin, edges, "non_ground").counts)


def test_sweep_edge_options():
    cloud = _scene(10)
    cfg = ScannerConfig.uniform(0.5)
    fixed = pulse_sized_bins(1.65, 0.5, 12)
    out = height_sweep(cloud, (0, 0), [1.0, 2.0], cfg, fixed)
    assert all(np.array_equal(g.edges.edges, fixed.edges) for g, _ in out)
    out = height_sweep(cloud, (0, 0), [1.0, 2.0], cfg, lambda h: pulse_sized_bins(h, 0.5, 12))
    assert [g.scanner_height for g, _ in out] == [1.0, 2.0]
    with pytest.raises(ValueError):
        height_sweep(cloud, (0, 0), [0.0], cfg)


def test_pooling_sums_counts():
    edges = PulseBinEdges([1.0, 2.0, 3.0], 1.0, 1.0)
    a = distance_histogram(PointCloud([[0, 0, -1.5]] * 3, [0] * 3), (0, 0, 0), edges)
    b = distance_histogram(PointCloud([[0, 0, -2.5]], [0]), (0, 0, 0), edges)
    p = pool_histograms([a, b])
    assert p.counts.tolist() == [3, 1]
    assert p.probabilities.tolist() == [0.75, 0.25]


def test_ground_fraction():
    assert ground_fraction(PointCloud([[0, 0, 0]] * 4, [0] * 4)) == (1.0, False)
    assert ground_fraction(PointCloud([[0, 0, 0]] * 4, [0, 1, 1, 1])).fraction == 0.25
    assert ground_fraction(PointCloud([[0, 0, 0]] * 2, [2, 2])) == (0.0, True)
    with pytest.raises(EmptyCloud):
        ground_fraction(PointCloud())


def test_total_variation():
    assert total_variation(np.array([0.5, 0.5]), np.array([0.5, 0.5])) == 0.0
    assert total_variation(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0
    with pytest.raises(ValueError):
        total_variation(np.ones(2), np.ones(3))


def test_peak_distance():
    edges = PulseBinEdges([1.0, 2.0, 4.0], 1.0, 1.0)
    h = distance_histogram(PointCloud([[0, 0, -3.0]] * 2 + [[0, 0, -1.5]], [0] * 3), (0, 0, 0), edges)
    assert h.peak_distance == 3.0


def test_histogram_csv(tmp_path):
    edges = PulseBinEdges([1.0, 2.0, 3.0], 1.0, 1.0)
    h = distance_histogram(PointCloud([[0, 0, -1.5]], [1]), (0, 0, 0), edges, "non_ground")
    path = tmp_path / "h.csv"
    write_histograms_csv([h], path)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == HISTOGRAM_COLUMNS
    assert rows[1] == ["1.0", "2.0", "1.0", "non_ground", "1.0"]
