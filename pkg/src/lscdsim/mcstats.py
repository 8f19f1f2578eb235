"""Monte-Carlo point estimates with batch-means standard errors."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

MIN_BATCHES = 30


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float
    reps: int

    def ci(self, width: float = 3.0) -> tuple[float, float]:
        return self.mean - width * self.se, self.mean + width * self.se

    def to_dict(self) -> dict:
        lo, hi = self.ci()
        return {"mean": self.mean, "se": self.se, "reps": self.reps, "ci_lo": lo, "ci_hi": hi}


def _batches(n: int, n_batches: int) -> np.ndarray:
    # contiguous batches of near-equal size; boundaries depend on n only
    return np.linspace(0, n, n_batches + 1).round().astype(np.int64)


def batch_means(values: Sequence[float] | np.ndarray, n_batches: int = MIN_BATCHES) -> Estimate:
    """Sample mean with a batch-means standard error.

    Falls back to one observation per batch when fewer than ``n_batches``
    values are given.
    """
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise ValueError("no values to average")
    mean = math.fsum(x) / n
    if n < 2:
        return Estimate(mean, math.inf, n)
    nb = min(n_batches, n)
    edges = _batches(n, nb)
    sizes = np.diff(edges)
    sums = np.add.reduceat(x, edges[:-1])
    bm = sums / sizes
    # weighted batch-means variance of the grand mean
    var = float(np.sum(sizes * (bm - mean) ** 2) / (nb - 1)) / n
    return Estimate(mean, math.sqrt(var), n)


def batch_cov(x: np.ndarray, y: np.ndarray, n_batches: int = MIN_BATCHES) -> float:
    """Batch-means covariance of the two sample means."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    if n < 2:
        return 0.0
    nb = min(n_batches, n)
    edges = _batches(n, nb)
    sizes = np.diff(edges)
    bx = np.add.reduceat(x, edges[:-1]) / sizes
    by = np.add.reduceat(y, edges[:-1]) / sizes
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    return float(np.sum(sizes * (bx - mx) * (by - my)) / (nb - 1)) / n


def ratio_estimate(num: np.ndarray, den: np.ndarray, n_batches: int = MIN_BATCHES) -> Estimate:
    """``sum(num)/sum(den)`` with a batch-means standard error of the ratio."""
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    n = len(num)
    r = math.fsum(num) / math.fsum(den)
    if n < 2:
        return Estimate(r, math.inf, n)
    nb = min(n_batches, n)
    edges = _batches(n, nb)
    bn = np.add.reduceat(num, edges[:-1])
    bd = np.add.reduceat(den, edges[:-1])
    ok = bd > 0
    br = bn[ok] / bd[ok]
    if len(br) < 2:
        return Estimate(r, math.inf, n)
    return Estimate(r, float(np.std(br, ddof=1) / math.sqrt(len(br))), n)


def delta_se(fn: Callable[[np.ndarray], float], x: np.ndarray, cov: np.ndarray, rel_step: float = 1e-6) -> float:
    """Standard error of ``fn(x)`` by the delta method with central differences."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(len(x)):
        h = rel_step * max(abs(x[i]), 1e-3)
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (fn(xp) - fn(xm)) / (2 * h)
    var = float(grad @ cov @ grad)
    return math.sqrt(max(var, 0.0))
