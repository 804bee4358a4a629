"""Point/dataset containers and exact Euclidean primitives.

A point is a 1-D float64 array; a dataset is an immutable ``(J, N)`` array
plus its bounding box. Everything downstream addresses points by their
zero-based row index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BBox",
    "Dataset",
    "as_point",
    "bounding_box",
    "distance",
    "distances_to",
]


def as_point(coords, dim: int | None = None) -> np.ndarray:
    """Return ``coords`` as a finite float64 vector, optionally checking its length."""
    p = np.asarray(coords, dtype=np.float64)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1:
        raise ValueError(f"a point must be one-dimensional, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {p.shape[0]}")
    return p


def distance(a, b) -> float:
    """Euclidean distance between two points of equal dimension."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}"
        )
    # |a_i - b_i| is identical both ways round, so the sum is exactly symmetric
    acc = 0.0
    for x, y in zip(a.tolist(), b.tolist()):
        d = x - y
        acc += d * d
    return math.sqrt(acc)


def distances_to(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Vectorised distances from every row of ``points`` to ``center``."""
    diff = points - center
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


@dataclass(frozen=True, eq=False)
class BBox:
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(self.lo <= p) and np.all(p <= self.hi))

    def corners(self) -> np.ndarray:
        return np.vstack([self.lo, self.hi])


def bounding_box(points: Iterable | np.ndarray) -> BBox:
    """Per-coordinate min/max over a nonempty set of points."""
    arr = np.asarray(points if isinstance(points, np.ndarray) else list(points),
                     dtype=np.float64)
    if arr.size == 0 or arr.shape[0] == 0:
        raise ValueError("empty dataset")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    lo.setflags(write=False)
    hi.setflags(write=False)
    return BBox(lo, hi)


@dataclass(frozen=True, eq=False)
class Dataset:
    """The point set S: ``points`` has shape ``(J, dim)`` and is read-only.

    ``bbox`` is ``None`` only for the empty dataset.
    """

    points: np.ndarray
    dim: int = field(default=-1)
    bbox: BBox | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            # a flat sequence is J points in R^1 unless it is empty
            pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, max(self.dim, 0))
        if pts.ndim != 2:
            raise ValueError(f"points must be a (J, N) array, got shape {pts.shape}")
        dim = self.dim if self.dim >= 0 else pts.shape[1]
        if pts.shape[1] != dim:
            raise ValueError(f"dimension mismatch: expected {dim}, got {pts.shape[1]}")
        if dim < 1:
            raise ValueError("dataset dimension must be >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "bbox", bounding_box(pts) if len(pts) else None)

    @classmethod
    def from_points(cls, points: Sequence, dim: int | None = None) -> "Dataset":
        return cls(np.asarray(points, dtype=np.float64), -1 if dim is None else dim)

    @classmethod
    def empty(cls, dim: int) -> "Dataset":
        return cls(np.empty((0, dim)), dim)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.points[i]

    def subset(self, indices) -> "Dataset":
        return Dataset(self.points[np.asarray(indices, dtype=np.intp)], self.dim)
