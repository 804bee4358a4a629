"""Multiplicative search for the count threshold and the grid step.

Start from a guess; while too few balls pass, loosen (smaller threshold,
larger step); while too many pass, tighten. The search stops inside the
target range, at the threshold floor of 1, when the direction would
reverse (the multiplicative grid skips the range), or after ``max_steps``
probes. Outside the range the best probe seen is returned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Dataset
from .gridscan import DensityTable, density_table, threshold_K

__all__ = [
    "TuneBounds",
    "TuneResult",
    "adapt_radius",
    "adapt_threshold",
]

IN_RANGE = "in_range"
FLOOR = "floor"
REVERSAL = "reversal"
MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class TuneBounds:
    k_min: int = 5
    k_max: int = 100
    max_steps: int = 20
    factor: float = 10.0

    def __post_init__(self) -> None:
        if self.k_min < 1 or self.k_max < self.k_min:
            raise ValueError("need 1 <= k_min <= k_max")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.factor > 1:
            raise ValueError("factor must be > 1")

    def miss(self, K: int) -> float:
        """Log-ratio distance of ``K`` from ``[k_min, k_max]``; 0 inside, inf for K = 0."""
        if K < self.k_min:
            return math.inf if K == 0 else math.log(self.k_min / K)
        if K > self.k_max:
            return math.log(K / self.k_max)
        return 0.0

    def to_dict(self) -> dict:
        return {"k_min": self.k_min, "k_max": self.k_max,
                "max_steps": self.max_steps, "factor": self.factor}


@dataclass
class TuneResult:
    value: float
    K: int
    trace: list[tuple[float, int]]
    status: str
    table: DensityTable | None = field(default=None, repr=False)

    def __iter__(self):
        return iter((self.value, self.K, self.trace))

    @property
    def in_range(self) -> bool:
        return self.status == IN_RANGE

    @property
    def nu(self) -> int:
        return int(self.value)

    @property
    def r(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return {"value": self.value, "K": self.K, "status": self.status,
                "trace": [[v, k] for v, k in self.trace]}


def _best(trace: list[tuple[float, int]], bounds: TuneBounds) -> tuple[float, int]:
    # closest K to the range, then the smaller parameter value
    return min(trace, key=lambda p: (bounds.miss(p[1]), p[0]))


def _search(probe, start, bounds: TuneBounds, loosen, tighten, at_floor):
    """Shared loop; ``probe(v)`` returns K, ``loosen``/``tighten`` give the next value."""
    trace: list[tuple[float, int]] = []
    seen: set = set()
    direction = None
    v = start
    for _ in range(bounds.max_steps):
        K = probe(v)
        trace.append((v, K))
        seen.add(v)
        if bounds.k_min <= K <= bounds.k_max:
            return v, K, trace, IN_RANGE
        want = "loosen" if K < bounds.k_min else "tighten"
        if want == "loosen" and at_floor(v):
            return v, K, trace, FLOOR
        if direction is not None and want != direction:
            b = _best(trace, bounds)
            return b[0], b[1], trace, REVERSAL
        direction = want
        nxt = loosen(v) if want == "loosen" else tighten(v)
        if nxt in seen:
            break
        v = nxt
    b = _best(trace, bounds)
    return b[0], b[1], trace, MAX_STEPS


def adapt_threshold(table: DensityTable, nu0: int, bounds: TuneBounds = TuneBounds()) -> TuneResult:
    """Search ``nu`` over ``nu0 * factor**j`` (rounded, >= 1) until ``K(nu)`` is in range."""
    if len(table) == 0:
        raise ValueError("nothing above any threshold")
    nu0 = int(nu0)
    if nu0 < 1:
        raise ValueError("nu0 must be >= 1")
    f = bounds.factor

    def lower(nu):
        return max(1, min(nu - 1, round(nu / f)))

    def raise_(nu):
        return max(nu + 1, round(nu * f))

    nu, K, trace, status = _search(lambda nu: threshold_K(table, nu), nu0, bounds,
                                   lower, raise_, lambda nu: nu <= 1)
    return TuneResult(int(nu), K, [(int(a), k) for a, k in trace], status, table)


def adapt_radius(dataset: Dataset, r0: float, nu: int,
                 bounds: TuneBounds = TuneBounds(factor=2.0), *,
                 radius_scale: float = 1.0, n_jobs: int | None = None) -> TuneResult:
    """Search the grid step over ``r0 * factor**j``, rebuilding the table at every probe."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    r0 = float(r0)
    if not (math.isfinite(r0) and r0 > 0):
        raise ValueError("invalid grid step")
    f = bounds.factor
    tables: dict[float, DensityTable] = {}

    def probe(r):
        tables[r] = density_table(dataset, r, radius_scale, n_jobs=n_jobs)
        return threshold_K(tables[r], nu)

    r, K, trace, status = _search(probe, r0, bounds, lambda r: r * f, lambda r: r / f,
                                  lambda r: False)
    return TuneResult(r, K, trace, status, tables[r])
