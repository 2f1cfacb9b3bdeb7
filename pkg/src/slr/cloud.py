"""Point-cloud data model and spherical coordinate transforms.

A :class:`PointCloud` stores coordinates as an ``(n, 3)`` float64 array and
labels as an ``(n,)`` uint8 array.  Both arrays are made read-only at
construction, so a cloud can be shared freely between threads.

Angles are in degrees everywhere.  The zenith angle ``theta`` is measured
from straight up (0) to straight down (180); the azimuth ``phi`` is measured
counter-clockwise from +x and lies in ``[0, 360)``.
"""

from __future__ import annotations

import enum
import json
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .errors import ZeroRadius

__all__ = [
    "Label",
    "LabeledPoint",
    "PointCloud",
    "SphericalPoint",
    "to_spherical",
    "from_spherical",
    "spherical_coordinates",
    "cartesian_coordinates",
]


class Label(enum.IntEnum):
    GROUND = 0
    NON_GROUND = 1
    UNLABELED = 2


class LabeledPoint(NamedTuple):
    x: float
    y: float
    z: float
    label: Label = Label.UNLABELED


class SphericalPoint(NamedTuple):
    R: float
    theta: float
    phi: float


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _meta_value(v) -> str:
    if isinstance(v, str):
        return v
    return json.dumps(v, sort_keys=True)


class PointCloud:
    """Immutable ordered collection of labeled points.

    Args:
        xyz: array-like of shape ``(n, 3)``; must be finite.
        labels: array-like of shape ``(n,)`` with values in :class:`Label`.
            Defaults to all ``UNLABELED``.
        meta: optional mapping of string keys to values.  Non-string values
            are stored as their JSON encoding.
    """

    __slots__ = ("_xyz", "_labels", "_meta")

    def __init__(self, xyz=None, labels=None, meta: Mapping | None = None):
        if xyz is None:
            xyz = np.empty((0, 3))
        xyz = np.array(xyz, dtype=np.float64, order="C", copy=True)
        if xyz.ndim == 1 and xyz.size == 0:
            xyz = xyz.reshape(0, 3)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise ValueError(f"xyz must have shape (n, 3), got {xyz.shape}")
        if not np.isfinite(xyz).all():
            raise ValueError("point coordinates must be finite")
        n = xyz.shape[0]
        if labels is None:
            labels = np.full(n, Label.UNLABELED, dtype=np.uint8)
        else:
            labels = np.array(labels, copy=True)
            if labels.shape != (n,):
                raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
            if labels.size and (labels.min() < 0 or labels.max() > 2):
                raise ValueError("labels must be 0 (ground), 1 (non_ground) or 2 (unlabeled)")
            labels = labels.astype(np.uint8)
        self._xyz = _freeze(xyz)
        self._labels = _freeze(labels)
        self._meta = {str(k): _meta_value(v) for k, v in (meta or {}).items()}

    @classmethod
    def _wrap(cls, xyz: np.ndarray, labels: np.ndarray, meta=None) -> "PointCloud":
        # Trusted fast path: arrays already validated and owned by the caller.
        obj = cls.__new__(cls)
        obj._xyz = _freeze(np.ascontiguousarray(xyz, dtype=np.float64))
        obj._labels = _freeze(np.ascontiguousarray(labels, dtype=np.uint8))
        obj._meta = {str(k): _meta_value(v) for k, v in (meta or {}).items()}
        return obj

    @classmethod
    def from_points(cls, points: Iterable, meta=None) -> "PointCloud":
        """Build a cloud from ``LabeledPoint`` (or ``(x, y, z[, label])``) items."""
        rows = [tuple(p) for p in points]
        if not rows:
            return cls(meta=meta)
        xyz = [r[:3] for r in rows]
        labels = [int(r[3]) if len(r) > 3 else Label.UNLABELED for r in rows]
        return cls(xyz, labels, meta)

    @classmethod
    def concatenate(cls, clouds: Iterable["PointCloud"], meta=None) -> "PointCloud":
        clouds = list(clouds)
        if not clouds:
            return cls(meta=meta)
        xyz = np.concatenate([c.xyz for c in clouds])
        labels = np.concatenate([c.labels for c in clouds])
        return cls._wrap(xyz, labels, meta)

    @property
    def xyz(self) -> np.ndarray:
        return self._xyz

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def meta(self) -> dict:
        return dict(self._meta)

    def __len__(self) -> int:
        return self._xyz.shape[0]

    def __iter__(self) -> Iterator[LabeledPoint]:
        for (x, y, z), lab in zip(self._xyz.tolist(), self._labels.tolist()):
            yield LabeledPoint(x, y, z, Label(lab))

    def __getitem__(self, i: int) -> LabeledPoint:
        x, y, z = self._xyz[i].tolist()
        return LabeledPoint(x, y, z, Label(int(self._labels[i])))

    def __repr__(self) -> str:
        counts = np.bincount(self._labels, minlength=3)
        return (
            f"PointCloud(n={len(self)}, ground={counts[0]}, "
            f"non_ground={counts[1]}, unlabeled={counts[2]})"
        )

    def take(self, indices, meta=None) -> "PointCloud":
        """Sub-cloud of the points at ``indices`` (index array or boolean mask)."""
        indices = np.asarray(indices)
        return PointCloud._wrap(self._xyz[indices], self._labels[indices], meta)

    def select(self, label: Label) -> "PointCloud":
        return self.take(self._labels == label)

    def with_meta(self, **updates) -> "PointCloud":
        meta = dict(self._meta)
        meta.update(updates)
        return PointCloud._wrap(self._xyz, self._labels, meta)

    def translated(self, offset) -> "PointCloud":
        offset = np.asarray(offset, dtype=np.float64).reshape(3)
        return PointCloud._wrap(self._xyz + offset, self._labels, self._meta)

    def same_points(self, other: "PointCloud") -> bool:
        """True when coordinates and labels are identical, in order."""
        return (
            len(self) == len(other)
            and np.array_equal(self._xyz, other._xyz)
            and np.array_equal(self._labels, other._labels)
        )


def spherical_coordinates(xyz, origin) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized Cartesian to ``(R, theta, phi)`` about ``origin``.

    Points coinciding with the origin get ``R = 0, theta = 0, phi = 0``;
    callers that need to reject them should test ``R > 0``.
    """
    xyz = np.asarray(xyz, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    d = xyz - origin
    dx, dy, dz = d[:, 0], d[:, 1], d[:, 2]
    rho = np.hypot(dx, dy)
    R = np.hypot(rho, dz)
    theta = np.degrees(np.arctan2(rho, dz))
    phi = np.degrees(np.arctan2(dy, dx))
    phi[phi < 0] += 360.0
    # -tiny + 360 rounds to 360, which is outside [0, 360).
    phi[phi >= 360.0] = 0.0
    phi[(theta == 0.0) | (theta == 180.0)] = 0.0
    theta[R == 0] = 0.0
    return R, theta, phi


def cartesian_coordinates(R, theta, phi, origin=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Inverse of :func:`spherical_coordinates`; returns an ``(n, 3)`` array."""
    R = np.asarray(R, dtype=np.float64)
    t = np.radians(theta)
    p = np.radians(phi)
    sin_t = np.sin(t)
    out = np.stack([R * sin_t * np.cos(p), R * sin_t * np.sin(p), R * np.cos(t)], axis=-1)
    return out + np.asarray(origin, dtype=np.float64).reshape(3)


def to_spherical(p, origin=(0.0, 0.0, 0.0)) -> SphericalPoint:
    """Spherical coordinates of a single point relative to ``origin``.

    >>> to_spherical((3.0, 0.0, 0.0))
    SphericalPoint(R=3.0, theta=90.0, phi=0.0)

    Raises:
        ZeroRadius: if ``p`` coincides with ``origin``.
    """
    R, theta, phi = spherical_coordinates(np.asarray(p[:3], dtype=np.float64).reshape(1, 3), origin)
    if R[0] == 0:
        raise ZeroRadius(f"point {tuple(p[:3])} coincides with origin {tuple(origin)}")
    return SphericalPoint(float(R[0]), float(theta[0]), float(phi[0]))


def from_spherical(s: SphericalPoint, origin=(0.0, 0.0, 0.0)) -> tuple[float, float, float]:
    R, theta, phi = s
    if theta == 0.0 or theta == 180.0:
        # Exact poles; avoids sin(pi) ~ 1e-16 leaking into x and y.
        ox, oy, oz = (float(v) for v in origin)
        return (ox, oy, oz + (R if theta == 0.0 else -R))
    x, y, z = cartesian_coordinates([R], [theta], [phi], origin)[0].tolist()
    return (x, y, z)

