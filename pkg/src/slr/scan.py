"""Simulated LiDAR scanning by per-pulse nearest-return selection.

Each point is expressed in spherical coordinates about the scanner origin and
assigned to an angular bin ``(v, h) = (floor(theta / theta_res),
floor(phi / phi_res))``.  One bin stands for one laser pulse; the pulse
returns the closest point in its bin and every other point in the bin is
hidden.

Two selection routes are provided and must agree exactly:

* :func:`simulate_scan` streams points through an open-addressing hash table
  that keeps, for every occupied bin, the index of the nearest point seen so
  far.  Memory grows with the number of occupied bins, not with the input.
* :func:`simulate_scan_sorted` sorts all candidates by ``(h, v, R)`` and keeps
  the first point of each bin.  It is the straightforward reference.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .cloud import Label, PointCloud, SphericalPoint, spherical_coordinates
from .errors import NoGroundNearby

__all__ = [
    "ScannerConfig",
    "BinnedCoordinate",
    "bin_coordinates",
    "binned_coordinates",
    "simulate_scan",
    "simulate_scan_sorted",
    "compute_scanner_origin",
    "slr",
    "DEFAULT_SCANNER_HEIGHT",
]

DEFAULT_SCANNER_HEIGHT = 1.65

_CHUNK = 1 << 21
_MAX_LOAD = 0.6
_EMPTY = np.int64(-1)


@dataclass(frozen=True)
class ScannerConfig:
    """Angular sampling and placement of an ideal static scanner.

    Attributes:
        theta_res: zenith resolution in degrees.
        phi_res: azimuth resolution in degrees.
        zenith_min: smallest accepted zenith angle (inclusive).
        zenith_max: largest accepted zenith angle (exclusive).
        max_range: radial range limit in meters, ``None`` for unlimited.
        scanner_height: height of the scanner above the local ground.
    """

    theta_res: float
    phi_res: float
    zenith_min: float = 0.0
    zenith_max: float = 180.0
    max_range: float | None = None
    scanner_height: float = DEFAULT_SCANNER_HEIGHT

    def __post_init__(self):
        for name in ("theta_res", "phi_res"):
            val = getattr(self, name)
            if not (0 < val <= 180):
                raise ValueError(f"{name} must be in (0, 180], got {val}")
        if not (0 <= self.zenith_min < self.zenith_max <= 180):
            raise ValueError(
                f"need 0 <= zenith_min < zenith_max <= 180, got {self.zenith_min}, {self.zenith_max}"
            )
        if self.max_range is not None and not self.max_range > 0:
            raise ValueError(f"max_range must be positive, got {self.max_range}")
        if not math.isfinite(self.scanner_height):
            raise ValueError("scanner_height must be finite")
        if _bins_v(self) * _bins_h(self) >= 2**62:
            raise ValueError("angular resolution too fine to index bins with 64-bit keys")

    @classmethod
    def uniform(cls, res: float, **kw) -> "ScannerConfig":
        """Same resolution in zenith and azimuth."""
        return cls(theta_res=res, phi_res=res, **kw)

    def replace(self, **changes) -> "ScannerConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScannerConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - fields
        if unknown:
            raise ValueError(f"unknown scanner config fields: {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScannerConfig":
        return cls.from_dict(json.loads(text))


def _bins_v(cfg: ScannerConfig) -> int:
    return int(math.floor(180.0 / cfg.theta_res)) + 2


def _bins_h(cfg: ScannerConfig) -> int:
    return int(math.floor(360.0 / cfg.phi_res)) + 2


class BinnedCoordinate(NamedTuple):
    R: float
    v: int
    h: int


def bin_coordinates(s: SphericalPoint, cfg: ScannerConfig) -> BinnedCoordinate:
    """Angular bin of one spherical point.

    >>> bin_coordinates(SphericalPoint(1.0, 0.2, 0.3), ScannerConfig.uniform(0.144))
    BinnedCoordinate(R=1.0, v=1, h=2)
    """
    R, theta, phi = s
    v = int(np.floor_divide(theta, cfg.theta_res))
    h = int(np.floor_divide(phi, cfg.phi_res))
    return BinnedCoordinate(float(R), v, h)


def binned_coordinates(xyz, origin, cfg: ScannerConfig):
    """Vectorized ``(R, v, h, keep)`` for an ``(n, 3)`` array of points.

    ``keep`` flags points that a scanner with ``cfg`` at ``origin`` can see
    at all: ``R > 0``, within ``max_range`` and with zenith angle in
    ``[zenith_min, zenith_max)``.  ``v`` and ``h`` are only meaningful where
    ``keep`` is true.
    """
    R, theta, phi = spherical_coordinates(xyz, origin)
    keep = (R > 0) & (theta >= cfg.zenith_min) & (theta < cfg.zenith_max)
    if cfg.max_range is not None:
        keep &= R <= cfg.max_range
    # floor_divide is exact at bin boundaries, unlike floor(theta / res).
    v = np.floor_divide(theta, cfg.theta_res).astype(np.int64)
    h = np.floor_divide(phi, cfg.phi_res).astype(np.int64)
    return R, v, h, keep


def _candidates(xyz, origin, cfg):
    """Bin keys, ranges and global indices of the visible points in ``xyz``."""
    R, v, h, keep = binned_coordinates(xyz, origin, cfg)
    idx = np.flatnonzero(keep)
    key = h[idx] * _bins_v(cfg) + v[idx]
    return key, R[idx], idx


@numba.njit(cache=True, nogil=True)
def _slot(key, shift):
    return np.int64((np.uint64(key) * np.uint64(0x9E3779B97F4A7C15)) >> np.uint64(shift))


@numba.njit(cache=True, nogil=True)
def _insert(keys, ranges, gidx, tkeys, tidx, tR, shift):
    """Fold candidates into the table; returns the number of new bins."""
    mask = tkeys.shape[0] - 1
    added = 0
    for i in range(keys.shape[0]):
        k = keys[i]
        s = _slot(k, shift)
        while True:
            tk = tkeys[s]
            if tk == -1:
                tkeys[s] = k
                tidx[s] = gidx[i]
                tR[s] = ranges[i]
                added += 1
                break
            if tk == k:
                # strict: on equal range the earlier input point stays
                if ranges[i] < tR[s]:
                    tidx[s] = gidx[i]
                    tR[s] = ranges[i]
                break
            s = (s + 1) & mask
    return added


class _BinTable:
    """Open-addressing map from bin key to (nearest index, nearest range)."""

    def __init__(self, capacity_hint: int):
        cap = 16
        while cap * _MAX_LOAD < capacity_hint:
            cap <<= 1
        self._alloc(cap)
        self.count = 0

    def _alloc(self, cap):
        self.keys = np.full(cap, _EMPTY, dtype=np.int64)
        self.idx = np.zeros(cap, dtype=np.int64)
        self.R = np.zeros(cap, dtype=np.float64)
        self.shift = 64 - (cap.bit_length() - 1)

    def _grow(self, needed):
        cap = self.keys.shape[0]
        while cap * _MAX_LOAD < needed:
            cap <<= 1
        occ = self.keys != _EMPTY
        old = self.keys[occ], self.R[occ], self.idx[occ]
        self._alloc(cap)
        _insert(old[0], old[1], old[2], self.keys, self.idx, self.R, self.shift)

    def add(self, keys, ranges, gidx):
        # Worst case every candidate opens a new bin.
        if self.count + keys.shape[0] > self.keys.shape[0] * _MAX_LOAD:
            self._grow(self.count + keys.shape[0])
        self.count += _insert(keys, ranges, gidx, self.keys, self.idx, self.R, self.shift)

    def winners(self) -> np.ndarray:
        """Indices of the retained points, ordered by bin key."""
        occ = self.keys != _EMPTY
        keys, idx = self.keys[occ], self.idx[occ]
        return idx[np.argsort(keys, kind="stable")]


def _scan_meta(origin, cfg):
    return {"origin": [float(v) for v in origin], "scanner": cfg.to_dict()}


def simulate_scan(cloud: PointCloud, origin, cfg: ScannerConfig, *, chunk_size: int = _CHUNK) -> PointCloud:
    """Points an ideal scanner at ``origin`` would return from ``cloud``.

    Keeps at most one point per ``(v, h)`` bin: the one with the smallest
    range, the earliest in input order on ties.  Points at the origin,
    beyond ``cfg.max_range`` or outside the zenith window are dropped before
    binning.  The result is ordered by ascending ``(h, v)``.
    """
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    if not np.isfinite(origin).all():
        raise ValueError("scanner origin must be finite")
    n = len(cloud)
    n_bins = _bins_v(cfg) * _bins_h(cfg)
    table = _BinTable(min(n, n_bins, chunk_size))
    xyz = cloud.xyz
    for start in range(0, n, chunk_size):
        key, R, idx = _candidates(xyz[start:start + chunk_size], origin, cfg)
        table.add(key, R, idx + start)
    return cloud.take(table.winners(), meta=_scan_meta(origin, cfg))


def simulate_scan_sorted(cloud: PointCloud, origin, cfg: ScannerConfig) -> PointCloud:
    """Reference scan: sort by ``(h, v, R)`` and keep the first point per bin.

    Output-identical to :func:`simulate_scan`; ``O(n log n)`` and holds every
    candidate in memory at once.
    """
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    R, v, h, keep = binned_coordinates(cloud.xyz, origin, cfg)
    idx = np.flatnonzero(keep)
    R, v, h = R[idx], v[idx], h[idx]
    # lexsort is stable and sorts by the last key first.
    order = np.lexsort((R, v, h))
    hs, vs = h[order], v[order]
    first = np.ones(order.shape[0], dtype=bool)
    first[1:] = (hs[1:] != hs[:-1]) | (vs[1:] != vs[:-1])
    return cloud.take(idx[order[first]], meta=_scan_meta(origin, cfg))


class GroundIndex:
    """Horizontal spatial index over the ground points of a cloud.

    Answers the two neighborhood questions position selection asks many
    times: how many ground points lie near a position, and what is their
    mean height.
    """

    def __init__(self, cloud: PointCloud):
        from scipy.spatial import cKDTree

        ground = cloud.labels == Label.GROUND
        self.xy = np.ascontiguousarray(cloud.xyz[ground, :2])
        self.z = np.ascontiguousarray(cloud.xyz[ground, 2])
        self._tree = cKDTree(self.xy) if len(self.z) else None

    def __len__(self):
        return self.z.shape[0]

    def count_within(self, centers, radius: float) -> np.ndarray:
        centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
        if self._tree is None:
            return np.zeros(len(centers), dtype=np.int64)
        return np.asarray(self._tree.query_ball_point(centers, radius, return_length=True), dtype=np.int64)

    def mean_height(self, xy, radius: float) -> float | None:
        """Mean z of ground points within ``radius`` of ``xy``, or ``None``."""
        if self._tree is None:
            return None
        ids = self._tree.query_ball_point(np.asarray(xy, dtype=np.float64).reshape(2), radius)
        if not ids:
            return None
        return float(np.mean(self.z[np.sort(ids)]))


def compute_scanner_origin(cloud: PointCloud, xy, cfg: ScannerConfig, ground_radius: float = 3.0,
                           *, ground_index: GroundIndex | None = None) -> np.ndarray:
    """Place a scanner ``cfg.scanner_height`` above the local ground at ``xy``.

    The ground level is the mean height of the ground points within
    ``ground_radius`` (horizontal distance, inclusive) of ``xy``.

    Raises:
        NoGroundNearby: no ground point within ``ground_radius``.
    """
    x, y = (float(c) for c in np.asarray(xy, dtype=np.float64).reshape(2))
    if ground_index is not None:
        zmean = ground_index.mean_height((x, y), ground_radius)
    else:
        g = cloud.xyz[cloud.labels == Label.GROUND]
        near = np.hypot(g[:, 0] - x, g[:, 1] - y) <= ground_radius
        zmean = float(np.mean(g[near, 2])) if near.any() else None
    if zmean is None:
        raise NoGroundNearby(f"no ground points within {ground_radius} m of ({x}, {y})")
    return np.array([x, y, zmean + cfg.scanner_height])


def slr(cloud: PointCloud, xy, cfg: ScannerConfig, ground_radius: float = 3.0,
        *, ground_index: GroundIndex | None = None) -> PointCloud:
    """Simulated LiDAR repositioning: the scan ``cloud`` would give from ``xy``."""
    origin = compute_scanner_origin(cloud, xy, cfg, ground_radius, ground_index=ground_index)
    out = simulate_scan(cloud, origin, cfg)
    return out.with_meta(source=cloud.meta.get("source", ""), ground_radius=ground_radius)
