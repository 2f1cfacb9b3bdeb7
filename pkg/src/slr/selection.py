"""Grid-based selection of secondary scanner positions.

The horizontal plane is covered with square cells anchored at the cloud's
minimum ``x``/``y``.  Cells are then discarded in three passes:

1. cells containing no points;
2. cells with too few ground points around their center, since the
   simulated scanner height is derived from the local ground;
3. cells whose sorted one-degree azimuth histogram falls below a minimum
   profile anywhere, which removes positions behind large occluders.

Positions are finally drawn uniformly within randomly chosen surviving cells.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cloud import PointCloud, spherical_coordinates
from .errors import EmptyCloud, EmptyInput, NotEnoughCells
from .scan import DEFAULT_SCANNER_HEIGHT, GroundIndex

__all__ = [
    "CandidateCell",
    "AzimuthProfile",
    "SelectionConfig",
    "build_grid",
    "filter_ground_density",
    "compute_azimuth_profile",
    "compute_minimum_profile",
    "filter_azimuth_profile",
    "select_positions",
    "candidate_cells",
    "load_profile",
    "store_profile",
    "scaled_selection_config",
]

N_AZIMUTH_BINS = 360


@dataclass(frozen=True, order=True)
class CandidateCell:
    """Square cell ``[x_min, x_min + size) x [y_min, y_min + size)``."""

    i: int
    j: int
    x_min: float
    y_min: float
    size: float = 2.0

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.size / 2, self.y_min + self.size / 2)

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x < self.x_min + self.size and self.y_min <= y < self.y_min + self.size


class AzimuthProfile:
    """360 per-degree point counts sorted ascending."""

    __slots__ = ("counts",)

    def __init__(self, counts):
        counts = np.asarray(counts)
        if counts.shape != (N_AZIMUTH_BINS,):
            raise ValueError(f"an azimuth profile has exactly {N_AZIMUTH_BINS} counts, got shape {counts.shape}")
        if not np.all(counts == np.floor(counts)) or (counts < 0).any():
            raise ValueError("profile counts must be non-negative integers")
        counts = counts.astype(np.int64)
        if (np.diff(counts) < 0).any():
            raise ValueError("profile counts must be sorted ascending")
        counts.flags.writeable = False
        self.counts = counts

    @classmethod
    def zeros(cls) -> "AzimuthProfile":
        """The permissive profile; every cell dominates it."""
        return cls(np.zeros(N_AZIMUTH_BINS, dtype=np.int64))

    def dominates(self, other: "AzimuthProfile") -> bool:
        return bool(np.all(self.counts >= other.counts))

    def __eq__(self, other):
        return isinstance(other, AzimuthProfile) and np.array_equal(self.counts, other.counts)

    def __repr__(self):
        return f"AzimuthProfile(min={self.counts[0]}, median={self.counts[180]}, max={self.counts[-1]})"


def store_profile(profile: AzimuthProfile, path) -> None:
    Path(path).write_text(json.dumps(profile.counts.tolist()) + "\n")


def load_profile(path) -> AzimuthProfile:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of {N_AZIMUTH_BINS} integers")
    return AzimuthProfile(np.asarray(data))


@dataclass(frozen=True)
class SelectionConfig:
    """Thresholds of the three cell filters.

    Defaults suit a high-density static terrestrial scan; lower them for
    sparser clouds.
    """

    cell_size: float = 2.0
    density_radius: float = 5.0
    min_ground_count: int = 50_000
    ground_radius: float = 3.0
    scanner_height: float = DEFAULT_SCANNER_HEIGHT

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionConfig":
        return cls(**d)


def build_grid(cloud: PointCloud, cell_size: float = 2.0) -> list[CandidateCell]:
    """Occupied cells of a grid anchored at the cloud's minimum ``x``/``y``.

    Returns the cells sorted by ``(i, j)``.
    """
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    if len(cloud) == 0:
        raise EmptyCloud("cannot build a grid over an empty cloud")
    xy = cloud.xyz[:, :2]
    x0, y0 = xy.min(axis=0)
    ij = np.floor((xy - (x0, y0)) / cell_size).astype(np.int64)
    ij = np.unique(ij, axis=0)
    return [
        CandidateCell(int(i), int(j), float(x0 + i * cell_size), float(y0 + j * cell_size), float(cell_size))
        for i, j in ij
    ]


def filter_ground_density(cells: Sequence[CandidateCell], cloud: PointCloud, radius: float = 5.0,
                          min_count: int = 50_000, *, ground_index: GroundIndex | None = None
                          ) -> list[CandidateCell]:
    """Keep cells with at least ``min_count`` ground points within ``radius`` of their center."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    cells = list(cells)
    if not cells:
        return []
    index = ground_index or GroundIndex(cloud)
    counts = index.count_within([c.center for c in cells], radius)
    return [c for c, n in zip(cells, counts) if n >= min_count]


def compute_azimuth_profile(cloud: PointCloud, center) -> AzimuthProfile:
    """Sorted counts of points per one-degree azimuth sector about ``center``.

    Elevation is ignored.  Points coinciding with ``center`` are skipped.
    """
    center = np.asarray(center, dtype=np.float64).reshape(-1)
    if center.shape[0] == 2:
        center = np.append(center, 0.0)
    if len(cloud) == 0:
        return AzimuthProfile.zeros()
    R, _, phi = spherical_coordinates(cloud.xyz, center)
    sector = np.floor_divide(phi[R > 0], 1.0).astype(np.int64)
    counts = np.bincount(sector, minlength=N_AZIMUTH_BINS)
    return AzimuthProfile(np.sort(counts))


def compute_minimum_profile(profiles: Iterable[AzimuthProfile]) -> AzimuthProfile:
    """Element-wise minimum of sorted profiles (itself sorted)."""
    stack = [p.counts for p in profiles]
    if not stack:
        raise EmptyInput("need at least one profile")
    return AzimuthProfile(np.min(np.vstack(stack), axis=0))


def filter_azimuth_profile(cells: Sequence[CandidateCell], cloud: PointCloud, min_profile: AzimuthProfile,
                           *, scanner_height: float = DEFAULT_SCANNER_HEIGHT, ground_radius: float = 3.0,
                           ground_index: GroundIndex | None = None) -> list[CandidateCell]:
    """Keep cells whose sorted azimuth profile is at least ``min_profile`` everywhere.

    Each profile is taken about the cell center at the height a scanner
    would sit there (local ground mean plus ``scanner_height``).  Cells
    without ground within ``ground_radius`` cannot host a scanner and are
    dropped.
    """
    cells = list(cells)
    if not cells:
        return []
    index = ground_index or GroundIndex(cloud)
    permissive = not min_profile.counts.any()
    kept = []
    for cell in cells:
        z = index.mean_height(cell.center, ground_radius)
        if z is None:
            continue
        if permissive:
            kept.append(cell)
            continue
        profile = compute_azimuth_profile(cloud, (*cell.center, z + scanner_height))
        if profile.dominates(min_profile):
            kept.append(cell)
    return kept


def select_positions(cells: Sequence[CandidateCell], n: int, seed: int) -> np.ndarray:
    """Draw ``n`` distinct cells uniformly and one uniform position in each.

    Returns an ``(n, 2)`` array of ``x, y`` in draw order.

    Raises:
        NotEnoughCells: ``n`` exceeds the number of cells.
    """
    cells = sorted(cells)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > len(cells):
        raise NotEnoughCells(f"requested {n} positions but only {len(cells)} cells are available")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(cells), size=n, replace=False)
    u = rng.random((n, 2))
    out = np.empty((n, 2))
    for k, c in enumerate(chosen):
        cell = cells[c]
        out[k] = (cell.x_min + u[k, 0] * cell.size, cell.y_min + u[k, 1] * cell.size)
    return out


def candidate_cells(cloud: PointCloud, min_profile: AzimuthProfile | None = None,
                    config: SelectionConfig = SelectionConfig()) -> list[CandidateCell]:
    """Run all three filters and return the surviving cells."""
    index = GroundIndex(cloud)
    cells = build_grid(cloud, config.cell_size)
    cells = filter_ground_density(cells, cloud, config.density_radius, config.min_ground_count,
                                  ground_index=index)
    return filter_azimuth_profile(cells, cloud, min_profile or AzimuthProfile.zeros(),
                                  scanner_height=config.scanner_height,
                                  ground_radius=config.ground_radius, ground_index=index)


def scaled_selection_config(spacing: float, radius_scale: float, reference_spacing: float = 0.005,
                            base: SelectionConfig = SelectionConfig()) -> tuple[SelectionConfig, float]:
    """Shrink the density filter for a scene scaled down from reference size.

    Cell size and radii scale with ``radius_scale``; the ground-count
    threshold scales with point density times radius squared.  Returns the new config and the count
    scale factor.
    """
    density_ratio = (reference_spacing / spacing) ** 2
    count_scale = density_ratio * radius_scale**2
    cfg = SelectionConfig(
        cell_size=base.cell_size * radius_scale,
        density_radius=base.density_radius * radius_scale,
        min_ground_count=max(1, int(math.ceil(round(base.min_ground_count * count_scale, 9)))),
        ground_radius=base.ground_radius * radius_scale,
        scanner_height=base.scanner_height,
    )
    return cfg, count_scale
