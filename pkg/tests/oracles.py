"""Independent reference computations.

Deliberately naive: plain loops, no grid, no shared code with the package.
"""
from __future__ import annotations

import math

import numpy as np


def two_pass_distance(a, b) -> float:
    diffs = [float(x) - float(y) for x, y in zip(a, b)]
    total = 0.0
    for d in diffs:
        total += d * d
    return math.sqrt(total)


def brute_count(points, center, radius) -> int:
    return sum(1 for p in points if math.dist(p, center) <= radius)


def brute_members(points, centers, radius) -> np.ndarray:
    hit = np.zeros(len(points), dtype=bool)
    for j, p in enumerate(points):
        for c in centers:
            if math.dist(p, c) <= radius:
                hit[j] = True
                break
    return hit


def max_min_distance(a, b) -> float:
    worst = 0.0
    for p in a:
        best = min(math.dist(p, q) for q in b)
        worst = max(worst, best)
    return worst


def nodes_in_box(points, r):
    """All integer node keys whose node ``key * r`` lies in the bounding box (2-D)."""
    pts = np.asarray(points)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    axes = []
    for i in range(pts.shape[1]):
        k = math.floor(lo[i] / r) - 1
        vals = []
        while k * r <= hi[i]:
            if k * r >= lo[i]:
                vals.append(k)
            k += 1
        axes.append(vals)
    if pts.shape[1] == 1:
        return [(a,) for a in axes[0]]
    return [(a, b) for a in axes[0] for b in axes[1]]


def nearest_node(x: float, r: float) -> int:
    """Nearest multiple index of ``r``; exact halves go up."""
    q = x / r
    f = math.floor(q)
    return f + 1 if q - f >= 0.5 else f


def jacobi_eigh(A, tol: float = 1e-15, max_sweeps: int = 100):
    """Cyclic Jacobi rotations on a symmetric matrix.

    Returns eigenvalues descending and eigenvectors as columns.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(A[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off <= tol * max(1.0, float(np.abs(np.diag(A)).max())):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = A[k, p], A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = A[p, k], A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = V[k, p], V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], V[:, order]


def greedy_violations(centers, components) -> list[tuple[int, int]]:
    """Steps where an unused centre (in the same component) is strictly closer than the successor.

    ``components`` lists input indices in visit order.
    """
    bad = []
    for comp in components:
        unused = set(comp)
        for k in range(len(comp) - 1):
            cur, nxt = comp[k], comp[k + 1]
            unused.discard(cur)
            d_next = math.dist(centers[cur], centers[nxt])
            for u in unused:
                if math.dist(centers[cur], centers[u]) < d_next:
                    bad.append((cur, u))
    return bad
