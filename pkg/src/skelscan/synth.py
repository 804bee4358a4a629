"""Seeded datasets with planted low-dimensional structure.

The stream is Philox-4x64 (a counter-based generator) seeded with
``spec.seed``; only its uniform doubles are consumed, and normals come
from the Box-Muller transform applied to pairs of them. Draw order:

1. object geometry (directions, offsets, centres),
2. structured points: positions along the object, then the noise,
3. background points, row by row.

Structured points occupy rows ``0 .. j_structured - 1``, object by object.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .geometry import Dataset

__all__ = ["KINDS", "SynthSpec", "generate", "object_labels"]

KINDS = ("line", "polyline-curve", "plane", "clusters")


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic dataset in the cube ``[box[0], box[1]]^dim``.

    ``n_objects`` planted objects share the structured points evenly. Lines
    are parallel, ``separation`` apart; ``length`` defaults to 0.8 of the
    box side. Cluster centres are snapped to multiples of ``snap`` when set.
    ``n_truth`` noiseless anchors are returned per object (clusters return
    their centres).
    """

    kind: str = "line"
    dim: int = 2
    j_structured: int = 1000
    j_background: int = 0
    noise_sigma: float = 0.0
    seed: int = 0
    box: tuple[float, float] = (0.0, 10.0)
    n_objects: int = 1
    separation: float = 0.0
    length: float | None = None
    snap: float | None = None
    n_truth: int = 1001

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind == "plane" and self.dim < 2:
            raise ValueError("a plane needs dim >= 2")
        if self.j_structured < 0 or self.j_background < 0:
            raise ValueError("point counts must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not self.box[1] > self.box[0]:
            raise ValueError("box must have positive side")
        if self.n_objects < 1 or self.n_truth < 2:
            raise ValueError("need n_objects >= 1 and n_truth >= 2")
        object.__setattr__(self, "box", (float(self.box[0]), float(self.box[1])))

    @property
    def side(self) -> float:
        return self.box[1] - self.box[0]

    @property
    def center(self) -> np.ndarray:
        return np.full(self.dim, 0.5 * (self.box[0] + self.box[1]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["box"] = list(self.box)
        return d


class _Stream:
    def __init__(self, seed: int):
        self._gen = np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))

    def uniform(self, size) -> np.ndarray:
        return self._gen.random(size)

    def normal(self, size) -> np.ndarray:
        n = int(np.prod(size))
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1], keeps log finite
        u2 = self.uniform(m)
        rad = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([rad * np.cos(2 * np.pi * u2), rad * np.sin(2 * np.pi * u2)])
        return z[:n].reshape(size)

    def unit_vector(self, dim: int, against: list[np.ndarray] = ()) -> np.ndarray:
        while True:
            v = self.normal(dim)
            for u in against:
                v = v - (u @ v) * u
            n = np.linalg.norm(v)
            if n > 1e-8:
                return v / n


def _shares(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (i < extra) for i in range(parts)]


def object_labels(spec: SynthSpec) -> np.ndarray:
    """Object id per row of the generated dataset; background rows get -1."""
    labels = [np.full(n, i) for i, n in enumerate(_shares(spec.j_structured, spec.n_objects))]
    labels.append(np.full(spec.j_background, -1))
    return np.concatenate(labels).astype(np.int64)


def _offsets(spec: SynthSpec, normal: np.ndarray) -> list[np.ndarray]:
    mid = (spec.n_objects - 1) / 2
    return [spec.center + (i - mid) * spec.separation * normal for i in range(spec.n_objects)]


def _polyline(anchor: np.ndarray, e1: np.ndarray, e2: np.ndarray, length: float):
    # four vertices on a 3/4 circle whose polygon length is ``length``
    ang = np.linspace(0.0, 1.5 * np.pi, 4)
    unit = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    radius = length / np.sum(np.linalg.norm(np.diff(unit, axis=0), axis=1))
    verts = anchor + radius * (unit[:, :1] * e1 + unit[:, 1:] * e2)
    return verts - (verts.mean(axis=0) - anchor)


def _along_polyline(verts: np.ndarray, t: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = t * cum[-1]
    i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = ((s - cum[i]) / seg[i])[:, None]
    return verts[i] + frac * (verts[i + 1] - verts[i])


def generate(spec: SynthSpec) -> tuple[Dataset, np.ndarray]:
    """Return ``(dataset, truth)``; the same spec always yields identical bits."""
    rng = _Stream(spec.seed)
    N = spec.dim
    length = 0.8 * spec.side if spec.length is None else float(spec.length)
    shares = _shares(spec.j_structured, spec.n_objects)

    if spec.kind == "clusters":
        margin = 0.1 * spec.side
        centers = spec.box[0] + margin + (spec.side - 2 * margin) * rng.uniform((spec.n_objects, N))
        if spec.snap:
            centers = np.round(centers / spec.snap) * spec.snap
        parts = [np.repeat(c[None, :], n, axis=0) for c, n in zip(centers, shares)]
        truth = centers
    else:
        e1 = rng.unit_vector(N)
        e2 = rng.unit_vector(N, [e1]) if N >= 2 else None
        if N >= 3:
            shift_dir = rng.unit_vector(N, [e1, e2])
        else:
            shift_dir = e2 if e2 is not None else e1
        anchors = _offsets(spec, shift_dir)
        parts, truth_parts = [], []
        for anchor, n in zip(anchors, shares):
            if spec.kind == "line":
                t = rng.uniform(n) - 0.5
                parts.append(anchor + length * t[:, None] * e1)
                tt = np.linspace(-0.5, 0.5, spec.n_truth)
                truth_parts.append(anchor + length * tt[:, None] * e1)
            elif spec.kind == "plane":
                st = rng.uniform((n, 2)) - 0.5
                parts.append(anchor + length * (st[:, :1] * e1 + st[:, 1:] * e2))
                g = int(np.ceil(np.sqrt(spec.n_truth)))
                a, b = np.meshgrid(np.linspace(-0.5, 0.5, g), np.linspace(-0.5, 0.5, g))
                truth_parts.append(anchor + length * (a.reshape(-1, 1) * e1 + b.reshape(-1, 1) * e2))
            else:
                if e2 is None:
                    raise ValueError("a polyline-curve needs dim >= 2")
                verts = _polyline(anchor, e1, e2, length)
                parts.append(_along_polyline(verts, rng.uniform(n)))
                truth_parts.append(_along_polyline(verts, np.linspace(0.0, 1.0, spec.n_truth)))
        truth = np.vstack(truth_parts)

    structured = np.vstack(parts) if parts else np.empty((0, N))
    if spec.noise_sigma > 0 and len(structured):
        structured = structured + spec.noise_sigma * rng.normal(structured.shape)
    background = spec.box[0] + spec.side * rng.uniform((spec.j_background, N))
    # u * side + lo may round up to hi + ulp
    background = np.clip(background, spec.box[0], spec.box[1])
    points = np.vstack([structured, background]) if len(background) else structured
    return Dataset(points.reshape(-1, N), N), np.asarray(truth)
