"""Distance statistics of scans: pulse-sized bins, class histograms, height sweeps.

Pulse-sized bins follow an ideal scanner above a flat ground plane.  The
pulse fired ``k`` zenith steps below the horizon hits the ground at radial
distance ``h / sin(k * theta_res)``; consecutive hits delimit one bin.  Bins
therefore widen with distance, and a scan of a flat plane with the same
height and resolution puts exactly one ring of returns in each bin.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .cloud import Label, PointCloud
from .errors import EmptyCloud, NoPointsInRange
from .scan import ScannerConfig, slr

__all__ = [
    "PulseBinEdges",
    "DistanceHistogram",
    "GroundFraction",
    "pulse_sized_bins",
    "distance_histogram",
    "distance_counts",
    "pool_histograms",
    "height_sweep",
    "ground_fraction",
    "total_variation",
    "write_histograms_csv",
    "HISTOGRAM_COLUMNS",
]

CLASS_FILTERS = ("all", "ground", "non_ground")
HISTOGRAM_COLUMNS = ("bin_low", "bin_high", "probability", "class", "height")


@dataclass(frozen=True)
class PulseBinEdges:
    """Ascending bin edges in meters.

    ``distance`` tells whether edges (and the distances binned with them) are
    ``"radial"`` (3D range, what a scanner measures) or ``"horizontal"``.
    """

    edges: np.ndarray
    scanner_height: float
    theta_res: float
    distance: str = "radial"

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.float64)
        if e.ndim != 1 or (np.diff(e) <= 0).any():
            raise ValueError("bin edges must be a strictly ascending 1-D sequence")
        if self.distance not in ("radial", "horizontal"):
            raise ValueError(f"distance must be 'radial' or 'horizontal', got {self.distance!r}")
        e.flags.writeable = False
        object.__setattr__(self, "edges", e)

    @property
    def n_bins(self) -> int:
        return max(len(self.edges) - 1, 0)

    @property
    def lows(self) -> np.ndarray:
        return self.edges[:-1]

    @property
    def highs(self) -> np.ndarray:
        return self.edges[1:]


@dataclass(frozen=True)
class DistanceHistogram:
    edges: PulseBinEdges
    counts: np.ndarray
    class_filter: str
    scanner_height: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def peak_distance(self) -> float:
        """Center of the most populated bin (the nearest one on ties)."""
        k = int(np.argmax(self.counts))
        return float(0.5 * (self.edges.edges[k] + self.edges.edges[k + 1]))


class GroundFraction(NamedTuple):
    fraction: float
    unlabeled: bool  # True when the cloud carries no ground/non-ground labels at all


def pulse_sized_bins(scanner_height: float = 1.65, theta_res: float = 0.144,
                     max_distance: float | None = None, distance: str = "radial") -> PulseBinEdges:
    """Distances at which successive below-horizon pulses meet a flat ground.

    Edge ``k`` (``k = 1 .. floor(90 / theta_res)``) is ``h / sin(k * theta_res)``
    for radial distances, ``h / tan(k * theta_res)`` for horizontal ones.
    Edges are returned nearest first; those beyond ``max_distance`` are
    dropped.

    >>> pulse_sized_bins(1.65, 45.0).edges.round(4).tolist()
    [1.65, 2.3335]
    """
    if theta_res <= 0:
        raise ValueError("theta_res must be positive")
    if scanner_height <= 0:
        raise ValueError("scanner_height must be positive")
    k_max = int(np.floor_divide(90.0, theta_res))
    k = np.arange(k_max, 0, -1)
    angle = np.radians(k * theta_res)
    if distance == "radial":
        edges = scanner_height / np.sin(angle)
        edges[k * theta_res == 90.0] = scanner_height
    elif distance == "horizontal":
        edges = scanner_height / np.tan(angle)
        edges[k * theta_res == 90.0] = 0.0
    else:
        raise ValueError(f"distance must be 'radial' or 'horizontal', got {distance!r}")
    if max_distance is not None:
        edges = edges[edges <= max_distance]
    return PulseBinEdges(edges, scanner_height, theta_res, distance)


def _class_mask(labels: np.ndarray, class_filter: str) -> np.ndarray:
    if class_filter == "all":
        return np.ones(labels.shape, dtype=bool)
    if class_filter == "ground":
        return labels == Label.GROUND
    if class_filter == "non_ground":
        return labels == Label.NON_GROUND
    raise ValueError(f"class_filter must be one of {CLASS_FILTERS}, got {class_filter!r}")


def distance_counts(cloud: PointCloud, origin, edges: PulseBinEdges, class_filter: str = "all",
                    below_horizon_only: bool = False) -> np.ndarray:
    """Unnormalized per-bin counts; see :func:`distance_histogram`."""
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    d = cloud.xyz[_class_mask(cloud.labels, class_filter)] - origin
    if below_horizon_only:
        d = d[d[:, 2] < 0]
    if edges.distance == "radial":
        r = np.sqrt(np.einsum("ij,ij->i", d, d))
    else:
        r = np.hypot(d[:, 0], d[:, 1])
    b = np.searchsorted(edges.edges, r, side="right") - 1
    b = b[(b >= 0) & (b < edges.n_bins)]
    return np.bincount(b, minlength=edges.n_bins).astype(np.int64)


def distance_histogram(cloud: PointCloud, origin, edges: PulseBinEdges, class_filter: str = "all",
                       scanner_height: float | None = None, below_horizon_only: bool = False
                       ) -> DistanceHistogram:
    """Distribution of distances from ``origin`` to the points of one class.

    Bins are half-open ``[low, high)``; points outside the outermost edges
    are left out of the normalization.  Every point is binned by its distance
    whatever its elevation; ``below_horizon_only`` keeps only points below
    the scanner, the region where pulse-sized bins are derived.

    Raises:
        NoPointsInRange: nothing of ``class_filter`` falls inside the bins.
    """
    counts = distance_counts(cloud, origin, edges, class_filter, below_horizon_only)
    if counts.sum() == 0:
        raise NoPointsInRange(f"no {class_filter} points fall within the {edges.n_bins} distance bins")
    h = edges.scanner_height if scanner_height is None else scanner_height
    return DistanceHistogram(edges, counts, class_filter, h)


def pool_histograms(hists: Iterable[DistanceHistogram]) -> DistanceHistogram:
    """Sum raw counts of histograms that share edges, then renormalize."""
    hists = list(hists)
    if not hists:
        raise ValueError("nothing to pool")
    first = hists[0]
    for h in hists[1:]:
        if not np.array_equal(h.edges.edges, first.edges.edges) or h.class_filter != first.class_filter:
            raise ValueError("can only pool histograms with identical edges and class")
    counts = np.sum([h.counts for h in hists], axis=0)
    return DistanceHistogram(first.edges, counts, first.class_filter, first.scanner_height)


EdgesSpec = Optional[Union[PulseBinEdges, Callable[[float], PulseBinEdges]]]


def height_sweep(cloud: PointCloud, xy, heights: Sequence[float], cfg: ScannerConfig,
                 edges_per_height: EdgesSpec = None, *, max_distance: float | None = None,
                 ground_radius: float = 3.0, below_horizon_only: bool = False
                 ) -> list[tuple[DistanceHistogram, DistanceHistogram]]:
    """Ground and non-ground histograms of SLR scans at several scanner heights.

    Args:
        cloud: labeled source cloud.
        xy: horizontal scanner position.
        heights: scanner heights above the local ground.
        cfg: scanner; its ``scanner_height`` is overridden per height.
        edges_per_height: ``None`` recomputes pulse-sized bins for each
            height (with ``cfg.theta_res`` and ``max_distance``); a
            :class:`PulseBinEdges` is used for every height; a callable maps a
            height to its edges.

    Returns:
        ``(ground, non_ground)`` histogram pairs in ``heights`` order.
    """
    out = []
    for height in heights:
        if height <= 0:
            raise ValueError(f"scanner heights must be positive, got {height}")
        cfg_h = cfg.replace(scanner_height=float(height))
        scan = slr(cloud, xy, cfg_h, ground_radius)
        origin = _scan_origin(scan)
        if edges_per_height is None:
            edges = pulse_sized_bins(float(height), cfg.theta_res, max_distance)
        elif isinstance(edges_per_height, PulseBinEdges):
            edges = edges_per_height
        else:
            edges = edges_per_height(float(height))
        out.append((
            distance_histogram(scan, origin, edges, "ground", height, below_horizon_only),
            distance_histogram(scan, origin, edges, "non_ground", height, below_horizon_only),
        ))
    return out


def _scan_origin(scan: PointCloud) -> np.ndarray:
    return np.asarray(json.loads(scan.meta["origin"]), dtype=np.float64)


def ground_fraction(cloud: PointCloud) -> GroundFraction:
    """Share of ground-labeled points; flags clouds with no labels at all."""
    if len(cloud) == 0:
        raise EmptyCloud("ground fraction of an empty cloud is undefined")
    counts = np.bincount(cloud.labels, minlength=3)
    return GroundFraction(counts[Label.GROUND] / len(cloud), bool(counts[Label.UNLABELED] == len(cloud)))


def total_variation(p: DistanceHistogram | np.ndarray, q: DistanceHistogram | np.ndarray) -> float:
    """Half the L1 distance between two distributions on the same bins."""
    if isinstance(p, DistanceHistogram):
        if isinstance(q, DistanceHistogram) and not np.array_equal(p.edges.edges, q.edges.edges):
            raise ValueError("histograms must share bin edges")
        p = p.probabilities
    if isinstance(q, DistanceHistogram):
        q = q.probabilities
    p, q = np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("distributions must have the same number of bins")
    return 0.5 * float(np.abs(p - q).sum())


def write_histograms_csv(hists: Iterable[DistanceHistogram], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(HISTOGRAM_COLUMNS)
        for h in hists:
            for lo, hi, p in zip(h.edges.lows.tolist(), h.edges.highs.tolist(), h.probabilities.tolist()):
                w.writerow([repr(lo), repr(hi), repr(p), h.class_filter, repr(float(h.scanner_height))])
