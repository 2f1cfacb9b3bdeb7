"""Synthetic dense scenes: a lattice ground disk plus random planar rectangles.

These stand in for the continuous real world when validating simulated
repositioning, since a scanner can be "placed" anywhere in them to obtain a
true scan for comparison.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.spatial.transform import Rotation

from .cloud import Label, PointCloud

__all__ = [
    "SceneConfig",
    "generate_ground_disk",
    "generate_rectangles",
    "iter_rectangles",
    "generate_dense_scene",
]

_ROW_BLOCK = 256


@dataclass(frozen=True)
class SceneConfig:
    """Parameters of a synthetic dense scene (lengths in meters).

    The defaults reproduce the full-size scene: a 100 m disk sampled every
    5 mm (40 000 points/m^2) at ``z = -1.65``, with rectangles between 0.1 and
    10.1 m on a side.  Use :meth:`scaled` for desk-sized variants.

    ``square`` draws one side length per rectangle instead of two.
    """

    disk_radius: float = 100.0
    grid_spacing: float = 0.005
    ground_z: float = -1.65
    n_rectangles: int = 1000
    rect_size_min: float = 0.1
    rect_size_max: float = 10.1
    rect_xy_min: float = -100.0
    rect_xy_max: float = 100.0
    rect_z_min: float = -5.0
    rect_z_max: float = 10.0
    seed: int = 0
    square: bool = False

    def __post_init__(self):
        if not (self.disk_radius > 0 and self.grid_spacing > 0):
            raise ValueError("disk_radius and grid_spacing must be positive")
        if self.n_rectangles < 0:
            raise ValueError("n_rectangles must be >= 0")
        if not (0 < self.rect_size_min <= self.rect_size_max):
            raise ValueError("need 0 < rect_size_min <= rect_size_max")
        if not (self.rect_xy_min < self.rect_xy_max and self.rect_z_min < self.rect_z_max):
            raise ValueError("rectangle position ranges must be non-degenerate")

    @classmethod
    def scaled(cls, disk_radius: float, grid_spacing: float, n_rectangles: int, seed: int = 0,
               **overrides) -> "SceneConfig":
        """Shrink the full-size scene to ``disk_radius``.

        Rectangle centers are confined to the smaller box; rectangle sizes and
        heights keep their full-size ranges, so ``n_rectangles`` scaled by the
        disk area gives the same occluder density as the full-size scene.
        """
        s = disk_radius / cls.disk_radius
        params = dict(
            disk_radius=disk_radius,
            grid_spacing=grid_spacing,
            n_rectangles=n_rectangles,
            seed=seed,
            rect_xy_min=cls.rect_xy_min * s,
            rect_xy_max=cls.rect_xy_max * s,
        )
        params.update(overrides)
        return cls(**params)

    def replace(self, **changes) -> "SceneConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _disk_blocks(cfg: SceneConfig) -> Iterator[np.ndarray]:
    s = cfg.grid_spacing
    m = int(math.floor(cfg.disk_radius / s))
    r2 = cfg.disk_radius ** 2
    ks = np.arange(-m, m + 1)
    ys = ks * s
    for start in range(-m, m + 1, _ROW_BLOCK):
        xs = np.arange(start, min(start + _ROW_BLOCK, m + 1)) * s
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        keep = X * X + Y * Y <= r2
        pts = np.empty((int(keep.sum()), 3))
        pts[:, 0] = X[keep]
        pts[:, 1] = Y[keep]
        pts[:, 2] = cfg.ground_z
        yield pts


def generate_ground_disk(cfg: SceneConfig) -> PointCloud:
    """Lattice nodes ``(i*s, j*s, ground_z)`` with ``x^2 + y^2 <= r^2``, all ground."""
    xyz = np.concatenate(list(_disk_blocks(cfg)))
    return PointCloud._wrap(xyz, np.full(len(xyz), Label.GROUND, dtype=np.uint8))


def _rectangle(cfg: SceneConfig, index: int) -> np.ndarray:
    # Independent stream per rectangle: output does not depend on generation order.
    rng = np.random.default_rng([cfg.seed, index])
    width = rng.uniform(cfg.rect_size_min, cfg.rect_size_max)
    height = width if cfg.square else rng.uniform(cfg.rect_size_min, cfg.rect_size_max)
    center = np.array([
        rng.uniform(cfg.rect_xy_min, cfg.rect_xy_max),
        rng.uniform(cfg.rect_xy_min, cfg.rect_xy_max),
        rng.uniform(cfg.rect_z_min, cfg.rect_z_max),
    ])
    rot = Rotation.random(random_state=rng)
    s = cfg.grid_spacing
    mu = int(math.floor(width / (2 * s) + 1e-9))
    mv = int(math.floor(height / (2 * s) + 1e-9))
    u = np.arange(-mu, mu + 1) * s
    v = np.arange(-mv, mv + 1) * s
    U, V = np.meshgrid(u, v, indexing="ij")
    local = np.column_stack([U.ravel(), V.ravel(), np.zeros(U.size)])
    return rot.apply(local) + center


def iter_rectangles(cfg: SceneConfig) -> Iterator[np.ndarray]:
    """Point arrays of each rectangle in index order, before clipping."""
    for k in range(cfg.n_rectangles):
        yield _rectangle(cfg, k)


def generate_rectangles(cfg: SceneConfig) -> PointCloud:
    """All rectangles of the scene, unclipped, labeled non-ground."""
    parts = list(iter_rectangles(cfg))
    xyz = np.concatenate(parts) if parts else np.empty((0, 3))
    return PointCloud._wrap(xyz, np.full(len(xyz), Label.NON_GROUND, dtype=np.uint8))


def _inside(cfg: SceneConfig, xyz: np.ndarray) -> np.ndarray:
    return (xyz[:, 2] >= cfg.ground_z) & (xyz[:, 0] ** 2 + xyz[:, 1] ** 2 <= cfg.disk_radius ** 2)


def generate_dense_scene(cfg: SceneConfig) -> PointCloud:
    """Ground disk plus rectangles, clipped to the disk and to above-ground.

    Rectangles are generated and clipped one at a time.  The number of
    rectangles with at least one surviving point is recorded in
    ``meta["n_rectangles_present"]``.
    """
    parts = [generate_ground_disk(cfg).xyz]
    n_ground = len(parts[0])
    present = 0
    for pts in iter_rectangles(cfg):
        pts = pts[_inside(cfg, pts)]
        if len(pts):
            present += 1
            parts.append(pts)
    xyz = np.concatenate(parts)
    labels = np.full(len(xyz), Label.NON_GROUND, dtype=np.uint8)
    labels[:n_ground] = Label.GROUND
    meta = {"source": "synthetic", "scene": cfg.to_dict(), "n_rectangles_present": present}
    return PointCloud._wrap(xyz, labels, meta)
