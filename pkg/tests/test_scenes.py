import math

import numpy as np
import pytest
from scipy import stats

from slr.cloud import Label
from slr.io import store_cloud
from slr.scenes import (
    SceneConfig,
    generate_dense_scene,
    generate_ground_disk,
    generate_rectangles,
    iter_rectangles,
)


def test_tiny_disk_enumeration():
    cfg = SceneConfig(disk_radius=0.01, grid_spacing=0.005, n_rectangles=0)
    disk = generate_ground_disk(cfg)
    expected = [(i, j) for i in range(-3, 4) for j in range(-3, 4) if (i * 0.005) ** 2 + (j * 0.005) ** 2 <= 0.0001]
    assert len(expected) == 13
    assert len(disk) == 13
    assert (disk.xyz[:, 2] == -1.65).all()
    assert (disk.labels == Label.GROUND).all()


@pytest.mark.parametrize("radius,spacing", [(5.0, 0.005), (20.0, 0.02)])
def test_disk_density(radius, spacing):
    disk = generate_ground_disk(SceneConfig(disk_radius=radius, grid_spacing=spacing, n_rectangles=0))
    density = len(disk) / (math.pi * radius**2)
    assert density == pytest.approx(1 / spacing**2, rel=0.01)


def test_no_rectangles():
    cfg = SceneConfig.scaled(2.0, 0.05, 0)
    assert len(generate_rectangles(cfg)) == 0
    scene = generate_dense_scene(cfg)
    assert scene.same_points(generate_ground_disk(cfg))
    assert scene.meta["n_rectangles_present"] == "0"


def test_unit_rectangle_lattice_count():
    cfg = SceneConfig(n_rectangles=1, rect_size_min=1.0, rect_size_max=1.0)
    pts = next(iter_rectangles(cfg))
    # Center-anchored lattice with both boundary rows: 201 nodes per side.
    assert len(pts) == 201 * 201
    assert abs(len(pts) - 40_000) <= 2 / 0.005 + 1
    centered = pts - pts.mean(axis=0)
    # planar: the smallest singular value vanishes
    assert np.linalg.svd(centered, compute_uv=False)[-1] < 1e-9


def test_square_option():
    cfg = SceneConfig(n_rectangles=3, grid_spacing=0.1, square=True)
    for pts in iter_rectangles(cfg):
        side = round(math.sqrt(len(pts)))
        assert side * side == len(pts)


def test_rectangles_deterministic_and_order_independent():
    cfg = SceneConfig.scaled(10.0, 0.05, 6, seed=42)
    a, b = generate_rectangles(cfg), generate_rectangles(cfg)
    assert a.same_points(b)
    more = list(iter_rectangles(cfg.replace(n_rectangles=8)))
    assert np.array_equal(np.concatenate(more[:6]), a.xyz)
    other = generate_rectangles(cfg.replace(seed=43))
    assert not other.same_points(a)


def test_scene_bytes_deterministic(tmp_path):
    cfg = SceneConfig.scaled(3.0, 0.02, 5, seed=7)
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    store_cloud(generate_dense_scene(cfg), p1)
    store_cloud(generate_dense_scene(cfg), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_below_ground_rectangle_removed():
    cfg = SceneConfig.scaled(5.0, 0.05, 1, rect_z_min=-30.0, rect_z_max=-20.0)
    scene = generate_dense_scene(cfg)
    assert scene.meta["n_rectangles_present"] == "0"
    assert (scene.labels == Label.GROUND).all()


def test_scene_invariants():
    cfg = SceneConfig.scaled(6.0, 0.03, 40, seed=5)
    scene = generate_dense_scene(cfg)
    g = scene.labels == Label.GROUND
    assert (scene.xyz[g, 2] == cfg.ground_z).all()
    assert (scene.xyz[:, 2] >= cfg.ground_z).all()
    assert (scene.xyz[:, 0] ** 2 + scene.xyz[:, 1] ** 2 <= cfg.disk_radius**2).all()
    assert set(np.unique(scene.labels).tolist()) == {0, 1}
    assert 0 < int(scene.meta["n_rectangles_present"]) <= 40


def test_rectangle_normals_are_isotropic():
    # Under a Haar-uniform rotation the rectangle normal is uniform on the
    # sphere, so its z component is uniform on [-1, 1].
    cfg = SceneConfig(n_rectangles=400, grid_spacing=0.5, rect_size_min=1.0, rect_size_max=1.0, seed=9)
    nz = []
    for pts in iter_rectangles(cfg):
        c = pts - pts.mean(axis=0)
        nz.append(np.linalg.svd(c)[2][-1][2])
    assert stats.kstest(np.abs(nz), "uniform").pvalue > 0.001


def test_sizes_sampled_independently():
    cfg = SceneConfig(n_rectangles=300, grid_spacing=0.5, seed=2)
    n = np.array([len(p) for p in iter_rectangles(cfg)])
    assert n.min() >= 1
    # sides vary independently, so non-square lattices appear
    assert any(round(math.sqrt(k)) ** 2 != k for k in n)


def test_config_json_round_trip():
    cfg = SceneConfig.scaled(20.0, 0.01, 50, seed=1)
    assert SceneConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.rect_xy_max == pytest.approx(20.0)
    assert cfg.rect_size_max == 10.1
    with pytest.raises(ValueError):
        SceneConfig(grid_spacing=0)
