"""Polylines, triangle strips and s-simplex strips through dense ball centres."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Dataset, distances_to
from .gridscan import DensityTable

__all__ = [
    "Skeleton",
    "chain_by_rank",
    "chain_greedy",
    "chain_greedy_from_table",
    "gap_clusters",
    "simplex_strip",
    "triangle_strip",
    "vertex_coverage",
    "vertex_to_truth_distance",
]


def _windows(component: list[int], s: int) -> list[tuple[int, ...]]:
    return [tuple(component[k:k + s + 1]) for k in range(len(component) - s)]


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Vertices plus sliding-window simplices over each component.

    ``components`` lists vertex indices in chain order; ``ranks[i]`` is the
    density-table rank of vertex ``i`` (``-1`` when unknown) and ``counts[i]``
    its ball count.
    """

    vertices: np.ndarray
    components: list[list[int]]
    dim_s: int = 1
    ranks: np.ndarray | None = None
    counts: np.ndarray | None = None
    simplices: list[tuple[int, ...]] = field(init=False)

    def __post_init__(self) -> None:
        if self.dim_s < 1:
            raise ValueError("simplex dimension must be >= 1")
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("vertices must be a 2-D array")
        object.__setattr__(self, "vertices", v)
        m = len(v)
        ranks = np.full(m, -1, np.int64) if self.ranks is None else np.asarray(self.ranks, np.int64)
        counts = np.zeros(m, np.int64) if self.counts is None else np.asarray(self.counts, np.int64)
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "counts", counts)
        comps = [list(map(int, c)) for c in self.components if len(c)]
        seen = sorted(i for c in comps for i in c)
        if seen != list(range(m)):
            raise ValueError("components must partition the vertex indices")
        object.__setattr__(self, "components", comps)
        object.__setattr__(
            self, "simplices", [w for c in comps for w in _windows(c, self.dim_s)]
        )

    @classmethod
    def empty(cls, dim: int, dim_s: int = 1) -> "Skeleton":
        return cls(np.empty((0, dim)), [], dim_s)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def component_ids(self) -> np.ndarray:
        ids = np.empty(self.n_vertices, dtype=np.int64)
        for c, comp in enumerate(self.components):
            ids[comp] = c
        return ids

    def with_dim(self, s: int) -> "Skeleton":
        return Skeleton(self.vertices, self.components, s, self.ranks, self.counts)


def chain_by_rank(table: DensityTable, K: int) -> Skeleton:
    """Top-``K`` centres joined in table order: one zigzagging component."""
    if K < 0 or K > len(table):
        raise ValueError(f"K must lie in [0, {len(table)}], got {K}")
    if K == 0:
        return Skeleton.empty(table.dim)
    return Skeleton(table.centers[:K], [list(range(K))], 1,
                    np.arange(K), table.counts[:K])


def gap_clusters(points: np.ndarray, gap: float) -> np.ndarray:
    """Single-linkage labels: centres joined by hops of length <= ``gap``.

    Labels are numbered in order of each cluster's first (best-ranked) member.
    """
    n = len(points)
    labels = np.full(n, -1, dtype=np.int64)
    if not np.isfinite(gap):
        labels[:] = 0
        return labels
    c = 0
    for s in range(n):
        if labels[s] >= 0:
            continue
        labels[s] = c
        stack = [s]
        while stack:
            v = stack.pop()
            free = np.flatnonzero(labels < 0)
            if free.size == 0:
                break
            hit = free[distances_to(points[free], points[v]) <= gap]
            labels[hit] = c
            stack.extend(hit.tolist())
        c += 1
    return labels


def chain_greedy(centers, gap_factor: float | None = 3.0, r: float = 1.0, *,
                 counts=None) -> Skeleton:
    """Nearest-neighbour chaining from the first (highest-ranked) centre.

    ``centers`` must be in rank order. The nearest unused centre is appended
    to the tail; equal distances go to the better rank. With ``gap_factor``
    set, centres are first split into groups linked by hops of at most
    ``gap_factor * r``; a chain only moves within its group, and when the
    group is used up the next chain starts at the best-ranked unused centre.
    Vertices of the result are in visit order; ``ranks`` maps back to input.
    """
    pts = np.asarray(centers, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    n = len(pts)
    if n == 0:
        raise ValueError("no centers above threshold")
    gap = np.inf if gap_factor is None else float(gap_factor) * float(r)
    labels = gap_clusters(pts, gap)
    unused = np.ones(n, dtype=bool)
    order: list[int] = []
    comps: list[list[int]] = []
    for g in range(int(labels.max()) + 1):
        members = np.flatnonzero(labels == g)
        # labels follow rank order, so members[0] is the best unused centre
        tail = int(members[0])
        unused[tail] = False
        comp = [len(order)]
        order.append(tail)
        for _ in range(len(members) - 1):
            cand = members[unused[members]]
            d = distances_to(pts[cand], pts[tail])
            # argmin returns the first minimum, i.e. the lowest rank among ties
            tail = int(cand[int(np.argmin(d))])
            unused[tail] = False
            comp.append(len(order))
            order.append(tail)
        comps.append(comp)
    order_arr = np.asarray(order)
    cnt = None if counts is None else np.asarray(counts)[order_arr]
    return Skeleton(pts[order_arr], comps, 1, order_arr, cnt)


def chain_greedy_from_table(table: DensityTable, K: int, gap_factor: float | None = 3.0) -> Skeleton:
    if K == 0:
        return Skeleton.empty(table.dim)
    return chain_greedy(table.centers[:K], gap_factor, table.r, counts=table.counts[:K])


def simplex_strip(chain: Skeleton, s: int) -> Skeleton:
    """Windows of ``s + 1`` consecutive vertices within every component."""
    if s < 1:
        raise ValueError("simplex dimension must be >= 1")
    return chain.with_dim(s)


def triangle_strip(chain: Skeleton) -> Skeleton:
    return simplex_strip(chain, 2)


def vertex_coverage(dataset: Dataset, skel: Skeleton, radius: float) -> float:
    """Fraction of points within closed distance ``radius`` of some vertex."""
    J = len(dataset)
    if J == 0:
        raise ValueError("empty dataset")
    if not radius > 0:
        raise ValueError("radius must be positive")
    if skel.n_vertices == 0:
        return 0.0
    covered = np.zeros(J, dtype=bool)
    for v in skel.vertices:
        covered |= distances_to(dataset.points, v) <= radius
    return float(np.count_nonzero(covered)) / J


def vertex_to_truth_distance(skel: Skeleton, truth) -> float:
    """Largest distance from a skeleton vertex to its nearest truth point."""
    t = np.asarray(truth, dtype=np.float64)
    if skel.n_vertices == 0 or t.size == 0:
        raise ValueError("vertex_to_truth_distance needs nonempty inputs")
    t = t.reshape(len(t), -1)
    return float(max(distances_to(t, v).min() for v in skel.vertices))
