"""Reference fits: least-squares line ``y = a1*x + a2`` and PCA by power iteration."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Dataset

__all__ = [
    "ConvergenceError",
    "PrincipalFrame",
    "RegressionLine",
    "fit_pca",
    "fit_regression_line",
    "pca_objective",
    "perpendicular_objective",
    "power_eigh",
    "regression_objective",
]

POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000
TIE_GAP = 1e-9
# iterations on the current power of the matrix before squaring it
_SQUARE_EVERY = 32


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class RegressionLine:
    a1: float
    a2: float

    def __call__(self, x):
        return self.a1 * np.asarray(x, dtype=np.float64) + self.a2

    def to_dict(self) -> dict:
        return {"a1": self.a1, "a2": self.a2}


def _xy(samples) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be a sequence of (xi, eta) pairs")
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite")
    return arr[:, 0], arr[:, 1]


def fit_regression_line(samples) -> RegressionLine:
    """Least-squares minimiser of sum (a1*xi + a2 - eta)^2.

    The 2x2 normal equations are solved after centring, which leaves the
    minimiser unchanged and avoids cancellation in the determinant.
    """
    x, y = _xy(samples)
    if len(x) < 2:
        raise ValueError("need at least 2 samples")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("vertical line not representable")
    a1 = float(dx @ (y - ym)) / sxx
    a2 = float(ym - a1 * xm)
    return RegressionLine(a1, a2)


def regression_objective(samples, line: RegressionLine) -> float:
    x, y = _xy(samples)
    res = line.a1 * x + line.a2 - y
    return float(res @ res)


def perpendicular_objective(samples, line: RegressionLine) -> float:
    """Sum of squared perpendicular distances to the line ``y = a1*x + a2``."""
    return regression_objective(samples, line) / (1.0 + line.a1 * line.a1)


@dataclass(frozen=True, eq=False)
class PrincipalFrame:
    """Centroid plus orthonormal ``directions`` (rows) with descending ``variances``.

    ``ties[i]`` marks directions whose eigenvalue is within the tie gap of a
    neighbour; such directions are not unique.
    """

    mean: np.ndarray
    directions: np.ndarray
    variances: np.ndarray
    ties: np.ndarray

    @property
    def k(self) -> int:
        return len(self.variances)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "directions": self.directions.tolist(),
            "variances": self.variances.tolist(),
            "ties": self.ties.tolist(),
        }


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _orthogonalize(v: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    for _ in range(2):
        for u in basis:
            v = v - (u @ v) * u
    return v


def _dominant(A: np.ndarray, basis: list[np.ndarray], rng: np.random.Generator,
              tol: float, max_iter: int) -> np.ndarray:
    n = A.shape[0]
    v = _orthogonalize(rng.standard_normal(n), basis)
    v /= np.linalg.norm(v)
    M = A / np.linalg.norm(A)
    prev = None
    for it in range(1, max_iter + 1):
        w = _orthogonalize(M @ v, basis)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return v
        w /= nw
        if w @ v < 0:
            w = -w
        delta = float(np.linalg.norm(w - v))
        # a small step only means convergence when the contraction ratio is small too
        rho = delta / prev if prev else 1.0
        if delta < tol and (rho < 0.5 or delta < 1e-15):
            return w
        v, prev = w, delta
        if it % _SQUARE_EVERY == 0:
            # iterating with M^2 squares the contraction ratio per step
            M = M @ M
            M /= np.linalg.norm(M)
            prev = None
    residual = float(np.linalg.norm(A @ v - (v @ A @ v) * v))
    raise ConvergenceError("power iteration did not converge", residual)


def power_eigh(C, k: int, *, seed: int = 0, tol: float = POWER_TOL,
               max_iter: int = POWER_MAX_ITER) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-``k`` eigenpairs of a symmetric PSD matrix by power iteration with deflation.

    Returns ``(variances, directions, ties)`` with directions as rows.
    """
    C = np.asarray(C, dtype=np.float64)
    n = C.shape[0]
    if C.shape != (n, n):
        raise ValueError("matrix must be square")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    C = 0.5 * (C + C.T)
    rng = np.random.default_rng(seed)
    scale = float(np.trace(np.abs(C))) or 1.0
    want = min(k + 1, n)
    A = C.copy()
    dirs: list[np.ndarray] = []
    vals: list[float] = []
    for _ in range(want):
        if np.linalg.norm(A) <= 1e-14 * scale:
            # what remains is rounding noise: any completion of the basis will do
            v = _orthogonalize(rng.standard_normal(n), dirs)
            v = _orthogonalize(v / np.linalg.norm(v), dirs)
            v /= np.linalg.norm(v)
        else:
            v = _dominant(A, dirs, rng, tol, max_iter)
        v = _canonical_sign(v)
        lam = float(v @ C @ v)
        A = A - lam * np.outer(v, v)
        dirs.append(v)
        vals.append(lam)
    vals_arr = np.array(vals)
    vals_arr[vals_arr < 0] = 0.0
    gap = TIE_GAP * max(vals_arr[0], np.finfo(float).tiny)
    ties = np.zeros(want, dtype=bool)
    close = np.abs(np.diff(vals_arr)) < gap
    ties[:-1] |= close
    ties[1:] |= close
    return vals_arr[:k], np.array(dirs[:k]), ties[:k]


def _points(data) -> np.ndarray:
    return data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)


def fit_pca(dataset, k: int, *, seed: int = 0) -> PrincipalFrame:
    """Centroid and top-``k`` principal directions (population covariance)."""
    X = _points(dataset)
    J, N = X.shape
    if J < 2:
        raise ValueError("PCA needs at least 2 points")
    if not 1 <= k <= N:
        raise ValueError(f"k must lie in [1, {N}], got {k}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / J
    variances, directions, ties = power_eigh(cov, k, seed=seed)
    return PrincipalFrame(mean, directions, variances, ties)


def pca_objective(dataset, frame: PrincipalFrame, k: int) -> float:
    """Sum of squared distances from the points to ``mean + span(directions[:k])``."""
    if k > frame.k:
        raise ValueError(f"frame has {frame.k} directions, asked for {k}")
    X = _points(dataset)
    Xc = X - frame.mean
    U = frame.directions[:k]
    R = Xc - (Xc @ U.T) @ U
    return float(math.fsum(np.einsum("ij,ij->i", R, R)))
