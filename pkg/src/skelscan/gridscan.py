"""Cubic grid of step ``r``, ball counts at grid nodes, and the ranked density table.

The grid is never materialised. Points are bucketed by the integer cell key
``floor(x / r)``; candidate ball centres are the grid nodes nearest to the
data points; each ball is counted exactly after discarding every occupied
cell whose key is more than ``ceil(radius / r)`` away (Chebyshev) from the
centre's key, which cannot reach the ball.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import Dataset, as_point, distances_to

__all__ = [
    "DensityTable",
    "GridIndex",
    "build_grid_index",
    "candidate_centers",
    "count_ball",
    "coverage_report",
    "density_table",
    "dense_grid_nodes",
    "resolve_threads",
    "round_to_nodes",
    "threshold_K",
]

THREADS_ENV = "SKELSCAN_THREADS"
# full node enumeration grows like (extent / r) ** N
MAX_DENSE_DIM = 3


def _check_step(r) -> float:
    try:
        r = float(r)
    except (TypeError, ValueError):
        raise ValueError("invalid grid step") from None
    if not math.isfinite(r) or r <= 0:
        raise ValueError("invalid grid step")
    return r


def resolve_threads(n_jobs: int | None = None) -> int:
    """Worker count: explicit ``n_jobs``, else ``$SKELSCAN_THREADS``, else 1; 0 means all CPUs."""
    if n_jobs is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        n_jobs = int(raw) if raw else 1
    if n_jobs < 0:
        raise ValueError("thread count must be >= 0")
    if n_jobs == 0:
        n_jobs = os.cpu_count() or 1
    return n_jobs


def cell_keys(points: np.ndarray, r: float) -> np.ndarray:
    return np.floor(points / r).astype(np.int64)


def round_to_nodes(points: np.ndarray, r: float) -> np.ndarray:
    """Integer key of the nearest grid node per coordinate; exact midpoints go up."""
    q = np.asarray(points, dtype=np.float64) / r
    f = np.floor(q)
    # q - f is exact here, unlike q + 0.5 which can round across the midpoint
    return (f + (q - f >= 0.5)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class GridIndex:
    """Sparse grid: occupied cells only, stored CSR-style.

    ``cell_keys[c]`` is the key of cell ``c`` (rows sorted lexicographically),
    ``point_cell[j]`` the cell of point ``j``, and
    ``members[offsets[c]:offsets[c + 1]]`` the point indices of cell ``c``.
    """

    r: float
    dataset: Dataset
    point_keys: np.ndarray
    cell_keys: np.ndarray
    point_cell: np.ndarray
    members: np.ndarray
    offsets: np.ndarray

    @property
    def dim(self) -> int:
        return self.dataset.dim

    @property
    def n_cells(self) -> int:
        return self.cell_keys.shape[0]

    def __len__(self) -> int:
        return len(self.dataset)

    @property
    def cells(self) -> dict[tuple[int, ...], list[int]]:
        return {
            tuple(int(v) for v in key): self.members[self.offsets[c]:self.offsets[c + 1]].tolist()
            for c, key in enumerate(self.cell_keys)
        }

    def ball_members(self, center: np.ndarray, radius: float,
                     center_key: np.ndarray | None = None) -> np.ndarray:
        """Indices of the points in the closed ball, ascending."""
        if len(self) == 0:
            return np.empty(0, dtype=np.intp)
        if center_key is None:
            center_key = cell_keys(center[None, :], self.r)[0]
        reach = math.ceil(radius / self.r)
        near = np.all(np.abs(self.cell_keys - center_key) <= reach, axis=1)
        idx = np.flatnonzero(near[self.point_cell])
        if idx.size == 0:
            return idx
        d = distances_to(self.dataset.points[idx], center)
        return idx[d <= radius]

    def count(self, center: np.ndarray, radius: float,
              center_key: np.ndarray | None = None) -> int:
        return int(self.ball_members(center, radius, center_key).size)


def build_grid_index(dataset: Dataset, r: float) -> GridIndex:
    r = _check_step(r)
    pts = dataset.points
    if len(pts) == 0:
        empty = np.empty((0, dataset.dim), dtype=np.int64)
        return GridIndex(r, dataset, empty, empty, np.empty(0, np.intp),
                         np.empty(0, np.intp), np.zeros(1, np.intp))
    keys = cell_keys(pts, r)
    ukeys, point_cell = np.unique(keys, axis=0, return_inverse=True)
    point_cell = point_cell.reshape(-1).astype(np.intp)
    members = np.argsort(point_cell, kind="stable").astype(np.intp)
    offsets = np.zeros(len(ukeys) + 1, dtype=np.intp)
    np.cumsum(np.bincount(point_cell, minlength=len(ukeys)), out=offsets[1:])
    for a in (keys, ukeys, point_cell, members, offsets):
        a.setflags(write=False)
    return GridIndex(r, dataset, keys, ukeys, point_cell, members, offsets)


def candidate_centers(index: GridIndex) -> np.ndarray:
    """Distinct node keys nearest to the indexed points, sorted lexicographically.

    Node ``c`` sits at coordinates ``c * r``.
    """
    if len(index) == 0:
        return np.empty((0, index.dim), dtype=np.int64)
    return np.unique(round_to_nodes(index.dataset.points, index.r), axis=0)


def dense_grid_nodes(dataset: Dataset, r: float) -> np.ndarray:
    """Every node key whose node lies inside the bounding box (small N only)."""
    r = _check_step(r)
    if dataset.dim > MAX_DENSE_DIM:
        raise ValueError(f"dense node enumeration is limited to N <= {MAX_DENSE_DIM}")
    if len(dataset) == 0:
        return np.empty((0, dataset.dim), dtype=np.int64)
    lo, hi = dataset.bbox.lo, dataset.bbox.hi
    axes = []
    for i in range(dataset.dim):
        a, b = math.ceil(lo[i] / r), math.floor(hi[i] / r)
        # the quotient can land one step off the box after rounding
        cand = np.arange(a - 1, b + 2, dtype=np.int64)
        node = cand * r
        axes.append(cand[(node >= lo[i]) & (node <= hi[i])])
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1).astype(np.int64)


def count_ball(center, radius: float, index: GridIndex) -> int:
    """Exact number of indexed points within closed distance ``radius`` of ``center``."""
    c = as_point(center)
    if c.shape[0] != index.dim:
        raise ValueError(f"dimension mismatch: center has {c.shape[0]}, index has {index.dim}")
    radius = float(radius)
    if not radius > 0:
        raise ValueError("radius must be positive")
    return index.count(c, radius)


@dataclass(frozen=True, eq=False)
class DensityTable:
    """Ball counts ranked by count descending, ties by node key ascending."""

    centers: np.ndarray
    keys: np.ndarray
    counts: np.ndarray
    radius: float
    r: float
    dim: int

    def __len__(self) -> int:
        return int(self.counts.shape[0])

    def __iter__(self):
        return iter(zip(self.centers, self.counts.tolist()))

    def head(self, n: int | None) -> "DensityTable":
        if n is None or n >= len(self):
            return self
        return DensityTable(self.centers[:n], self.keys[:n], self.counts[:n],
                            self.radius, self.r, self.dim)

    @classmethod
    def from_counts(cls, counts, dim: int = 1, r: float = 1.0,
                    radius: float | None = None) -> "DensityTable":
        """Table with synthetic 1-D node keys 0, 1, 2, ... (for tuning and tests)."""
        counts = np.asarray(counts, dtype=np.int64)
        if np.any(np.diff(counts) > 0):
            raise ValueError("counts must be in descending order")
        keys = np.zeros((len(counts), dim), dtype=np.int64)
        keys[:, 0] = np.arange(len(counts))
        return cls(keys * r, keys, counts, r if radius is None else radius, r, dim)


def _count_many(index: GridIndex, nodes: np.ndarray, radius: float, n_jobs: int) -> np.ndarray:
    r = index.r
    out = np.zeros(len(nodes), dtype=np.int64)

    def work(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            out[i] = index.count(nodes[i] * r, radius, nodes[i])

    if n_jobs <= 1 or len(nodes) < 64:
        work(0, len(nodes))
        return out
    bounds = np.linspace(0, len(nodes), min(n_jobs * 4, len(nodes)) + 1).astype(int)
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        # each task writes a disjoint slice, so results do not depend on scheduling
        list(pool.map(work, bounds[:-1], bounds[1:]))
    return out


def _rank(keys: np.ndarray, counts: np.ndarray) -> np.ndarray:
    sort_keys = [keys[:, i] for i in range(keys.shape[1] - 1, -1, -1)]
    return np.lexsort(sort_keys + [-counts])


def density_table(dataset: Dataset, r: float, radius_scale: float = 1.0, *,
                  dense_nodes: bool = False, n_jobs: int | None = None,
                  index: GridIndex | None = None) -> DensityTable:
    """Count every candidate ball and rank the nonzero counts."""
    r = _check_step(r)
    radius_scale = float(radius_scale)
    if not (math.isfinite(radius_scale) and radius_scale > 0):
        raise ValueError("radius_scale must be positive")
    radius = radius_scale * r
    if index is None or index.r != r or index.dataset is not dataset:
        index = build_grid_index(dataset, r)
    nodes = dense_grid_nodes(dataset, r) if dense_nodes else candidate_centers(index)
    counts = _count_many(index, nodes, radius, resolve_threads(n_jobs))
    keep = counts > 0
    nodes, counts = nodes[keep], counts[keep]
    order = _rank(nodes, counts)
    nodes, counts = nodes[order], counts[order]
    centers = nodes * r
    for a in (nodes, counts, centers):
        a.setflags(write=False)
    return DensityTable(centers, nodes, counts, radius, r, dataset.dim)


def threshold_K(table: DensityTable, nu) -> int:
    """Number of leading entries whose count is strictly greater than ``nu``."""
    counts = table.counts if isinstance(table, DensityTable) else np.asarray(table)
    # counts are descending, so the qualifying entries form a prefix
    return int(np.count_nonzero(counts > nu))


def coverage_report(dataset: Dataset, table: DensityTable, K: int) -> tuple[int, int]:
    """(covered, uncovered) point counts w.r.t. the top-``K`` balls of ``table``."""
    if not 0 <= K <= len(table):
        raise ValueError(f"K must lie in [0, {len(table)}], got {K}")
    J = len(dataset)
    if K == 0 or J == 0:
        return 0, J
    index = build_grid_index(dataset, table.r)
    covered = np.zeros(J, dtype=bool)
    for c, key in zip(table.centers[:K], table.keys[:K]):
        covered[index.ball_members(c, table.radius, key)] = True
    n = int(covered.sum())
    return n, J - n
