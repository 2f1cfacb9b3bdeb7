"""Validation harness comparing simulated scans with true scans.

The experiment runs on a synthetic dense scene, where a true scan from any
position can be produced by scanning the dense cloud itself:

1. generate the dense scene;
2. scan it from the scene center to get the primary cloud;
3. choose candidate cells on the primary cloud and sample positions;
4. at each position, scan the dense cloud (secondary, the truth) and the
   primary cloud (SLR, the simulation) with the same coarse scanner;
5. score each pair by the fraction of secondary points whose nearest SLR
   point is closer than a threshold.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud
from .errors import EmptyCloud, EmptyTarget
from .scan import GroundIndex, ScannerConfig, compute_scanner_origin, simulate_scan
from .scenes import SceneConfig, generate_dense_scene
from .selection import AzimuthProfile, SelectionConfig, candidate_cells, scaled_selection_config, select_positions

__all__ = [
    "SimilarityRecord",
    "ExperimentResult",
    "nearest_neighbor_distances",
    "similarity",
    "run_experiment",
    "iter_scan_pairs",
    "write_records_csv",
    "RECORD_COLUMNS",
]

RECORD_COLUMNS = ("secondary_x", "secondary_y", "scanner_distance", "similarity", "n_rectangles",
                  "primary_theta_res")

PRIMARY_XY = (0.0, 0.0)


@dataclass(frozen=True)
class SimilarityRecord:
    secondary_xy: tuple[float, float]
    scanner_distance: float
    similarity: float
    n_rectangles: int
    primary_theta_res: float

    def row(self) -> list:
        return [self.secondary_xy[0], self.secondary_xy[1], self.scanner_distance, self.similarity,
                self.n_rectangles, self.primary_theta_res]


@dataclass
class ExperimentResult:
    """Records in position order, plus run metadata (scaling factors, counts)."""

    records: list[SimilarityRecord]
    meta: dict = field(default_factory=dict)
    positions: np.ndarray | None = None

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def distances(self) -> np.ndarray:
        return np.array([r.scanner_distance for r in self.records])

    @property
    def similarities(self) -> np.ndarray:
        return np.array([r.similarity for r in self.records])


def nearest_neighbor_distances(query: PointCloud, target: PointCloud) -> np.ndarray:
    """Exact Euclidean distance from each query point to its nearest target point."""
    if len(target) == 0:
        raise EmptyTarget("nearest-neighbor target cloud is empty")
    if len(query) == 0:
        return np.empty(0)
    tree = cKDTree(target.xyz)
    d, _ = tree.query(query.xyz, k=1, eps=0.0)
    return d


def similarity(secondary: PointCloud, slr_cloud: PointCloud, threshold: float = 0.10) -> float:
    """Fraction of ``secondary`` points with an ``slr_cloud`` neighbor closer than ``threshold``."""
    if len(secondary) == 0:
        raise EmptyCloud("secondary cloud is empty")
    if len(slr_cloud) == 0:
        raise EmptyCloud("SLR cloud is empty")
    d = nearest_neighbor_distances(secondary, slr_cloud)
    return float(np.count_nonzero(d < threshold)) / len(d)


def iter_scan_pairs(dense: PointCloud, primary: PointCloud, positions, secondary_cfg: ScannerConfig,
                    ground_radius: float = 3.0) -> Iterator[tuple[np.ndarray, PointCloud, PointCloud]]:
    """Yield ``(origin, secondary, slr_cloud)`` for each position.

    Both scans share the origin derived from the primary cloud's ground, the
    only ground estimate available outside a synthetic setting.
    """
    index = GroundIndex(primary)
    for xy in np.asarray(positions, dtype=np.float64).reshape(-1, 2):
        origin = compute_scanner_origin(primary, xy, secondary_cfg, ground_radius, ground_index=index)
        yield origin, simulate_scan(dense, origin, secondary_cfg), simulate_scan(primary, origin, secondary_cfg)


def run_experiment(scene_cfg: SceneConfig, primary_cfg: ScannerConfig, secondary_cfg: ScannerConfig,
                   n_positions: int, seed: int, *, threshold: float = 0.10,
                   selection: SelectionConfig | None = None, min_profile: AzimuthProfile | None = None,
                   positions=None, dense: PointCloud | None = None, workers: int = 1) -> ExperimentResult:
    """Score SLR scans against true scans at sampled secondary positions.

    Args:
        scene_cfg: dense scene to generate (ignored for generation if
            ``dense`` is given, but still reported).
        primary_cfg: scanner used at the scene center; must be strictly finer
            than ``secondary_cfg`` in both angles.
        secondary_cfg: scanner used for both the true and the simulated scan.
        n_positions: number of secondary positions to sample.
        seed: seed for position sampling.
        selection: cell-filter thresholds.  By default the full-size
            thresholds are scaled to the scene's radius and spacing.
        min_profile: azimuth filter profile; all zeros (disabled) by default.
        positions: explicit ``(n, 2)`` positions, skipping cell selection.
        dense: a pre-generated dense cloud for ``scene_cfg``.
        workers: threads scoring positions concurrently; records keep
            position order either way.

    Raises:
        NotEnoughCells: fewer surviving cells than ``n_positions``.
    """
    if not (primary_cfg.theta_res < secondary_cfg.theta_res and primary_cfg.phi_res < secondary_cfg.phi_res):
        raise ValueError("primary scanner resolution must be strictly finer than the secondary one")
    meta = {"scene": scene_cfg.to_dict(), "primary": primary_cfg.to_dict(),
            "secondary": secondary_cfg.to_dict(), "seed": seed, "threshold": threshold}
    if selection is None:
        selection, count_scale = scaled_selection_config(scene_cfg.grid_spacing, scene_cfg.disk_radius / 100.0)
        meta["selection_count_scale"] = count_scale
        meta["selection_radius_scale"] = scene_cfg.disk_radius / 100.0
    meta["selection"] = dataclasses.asdict(selection)

    if dense is None:
        dense = generate_dense_scene(scene_cfg)
    meta["n_dense"] = len(dense)
    meta["n_rectangles_present"] = dense.meta.get("n_rectangles_present")
    primary_origin = (*PRIMARY_XY, 0.0)
    primary = simulate_scan(dense, primary_origin, primary_cfg)
    meta["n_primary"] = len(primary)

    if positions is None:
        cells = candidate_cells(primary, min_profile, selection)
        meta["n_candidate_cells"] = len(cells)
        positions = select_positions(cells, n_positions, seed)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)

    index = GroundIndex(primary)

    def score(xy):
        origin = compute_scanner_origin(primary, xy, secondary_cfg, selection.ground_radius, ground_index=index)
        secondary = simulate_scan(dense, origin, secondary_cfg)
        slr_cloud = simulate_scan(primary, origin, secondary_cfg)
        return SimilarityRecord(
            secondary_xy=(float(xy[0]), float(xy[1])),
            scanner_distance=math.hypot(xy[0] - PRIMARY_XY[0], xy[1] - PRIMARY_XY[1]),
            similarity=similarity(secondary, slr_cloud, threshold),
            n_rectangles=scene_cfg.n_rectangles,
            primary_theta_res=primary_cfg.theta_res,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(score, positions))
    else:
        records = [score(xy) for xy in positions]
    return ExperimentResult(records, meta, positions)


def write_records_csv(records: Sequence[SimilarityRecord], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r.row()])
