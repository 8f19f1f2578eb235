"""Observation laws for one monitored location and their log-likelihood-ratio analytics."""
from __future__ import annotations

import enum
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
from scipy import integrate, optimize, stats


class Regime(enum.Enum):
    PRE = "pre"
    POST = "post"


class AnalyticsError(RuntimeError):
    """Numerical evaluation of an LLR functional did not converge."""


@dataclass(frozen=True)
class LlrAnalytics:
    """Moments of the LLR ``Z = log g(Y) - log f(Y)`` consumed by the bound formulas.

    ``d_f_g`` and ``d_g_f`` are the two KL divergences, ``q = P_g(Z > 0)``,
    ``z_plus_mean = E_f[Z 1{Z >= 0}]``, ``j = E_g[Z^2]``,
    ``k = q exp(-j / (q d_g_f))`` and ``c = z_plus_mean / d_f_g``.
    """

    d_f_g: float
    d_g_f: float
    q: float
    z_plus_mean: float
    j: float
    k: float
    c: float

    @classmethod
    def from_moments(cls, d_f_g: float, d_g_f: float, q: float, z_plus_mean: float, j: float) -> "LlrAnalytics":
        k = q * math.exp(-j / (q * d_g_f))
        return cls(d_f_g=d_f_g, d_g_f=d_g_f, q=q, z_plus_mean=z_plus_mean, j=j, k=k, c=z_plus_mean / d_f_g)


class DistributionModel(ABC):
    """Pre-change law ``f`` and post-change law ``g`` at a single location.

    Subclasses provide log-densities, sampling and a finite integration range;
    :meth:`analytics` defaults to adaptive quadrature and may be overridden
    with closed forms.
    """

    @abstractmethod
    def logpdf_f(self, y): ...

    @abstractmethod
    def logpdf_g(self, y): ...

    @abstractmethod
    def sample(self, regime: Regime, rng: np.random.Generator, size: int | None = None): ...

    @abstractmethod
    def integration_range(self) -> tuple[float, float]:
        """Finite interval holding all but a negligible tail of both laws."""

    @abstractmethod
    def to_spec(self) -> dict[str, Any]: ...

    def llr(self, y: float) -> float:
        y = float(y)
        if not math.isfinite(y):
            raise ValueError(f"observation must be finite, got {y!r}")
        return float(self.logpdf_g(y) - self.logpdf_f(y))

    def llr_array(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.logpdf_g(y) - self.logpdf_f(y), dtype=np.float64)

    def sample_llr(self, regime: Regime, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.llr_array(self.sample(regime, rng, size))

    def analytics(self) -> LlrAnalytics:
        return self.numerical_analytics()

    def numerical_analytics(self, tol: float = 1e-9) -> LlrAnalytics:
        """All LLR functionals by adaptive quadrature, split at the LLR zero crossings."""
        lo, hi = self.integration_range()
        grid = np.linspace(lo, hi, 4001)
        zg = self.llr_array(grid)
        breaks = [lo]
        for i in np.flatnonzero(np.sign(zg[:-1]) * np.sign(zg[1:]) < 0):
            breaks.append(optimize.brentq(lambda y: self.llr(y), grid[i], grid[i + 1], xtol=1e-14))
        breaks.append(hi)

        def f(y):
            return math.exp(self.logpdf_f(y))

        def g(y):
            return math.exp(self.logpdf_g(y))

        def quad(fn) -> float:
            total = 0.0
            for a, b in zip(breaks[:-1], breaks[1:]):
                val, err = integrate.quad(fn, a, b, epsabs=tol / 10, epsrel=1e-12, limit=500)
                if not err < tol:
                    raise AnalyticsError(f"quadrature on [{a}, {b}] reached error {err:.3g} > {tol:g}")
                total += val
            return total

        z = self.llr
        d_f_g = quad(lambda y: -z(y) * f(y))
        d_g_f = quad(lambda y: z(y) * g(y))
        q = quad(lambda y: g(y) if z(y) > 0 else 0.0)
        z_plus = quad(lambda y: max(z(y), 0.0) * f(y))
        j = quad(lambda y: z(y) ** 2 * g(y))
        return LlrAnalytics.from_moments(d_f_g, d_g_f, q, z_plus, j)


@dataclass(frozen=True)
class GaussianPair(DistributionModel):
    """``f = N(mu0, sigma^2)`` before the change, ``g = N(mu1, sigma^2)`` after."""

    mu0: float
    mu1: float
    sigma: float

    def __post_init__(self) -> None:
        for name in ("mu0", "mu1", "sigma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.mu0 == self.mu1:
            raise ValueError("mu0 and mu1 must differ")

    @property
    def _slope(self) -> float:
        return (self.mu1 - self.mu0) / self.sigma**2

    @property
    def _intercept(self) -> float:
        return -(self.mu1**2 - self.mu0**2) / (2 * self.sigma**2)

    def logpdf_f(self, y):
        return stats.norm.logpdf(y, self.mu0, self.sigma)

    def logpdf_g(self, y):
        return stats.norm.logpdf(y, self.mu1, self.sigma)

    def llr(self, y: float) -> float:
        y = float(y)
        if not math.isfinite(y):
            raise ValueError(f"observation must be finite, got {y!r}")
        return self._slope * y + self._intercept

    def llr_array(self, y: np.ndarray) -> np.ndarray:
        return self._slope * np.asarray(y, dtype=np.float64) + self._intercept

    def sample(self, regime: Regime, rng: np.random.Generator, size: int | None = None):
        mu = self.mu0 if regime is Regime.PRE else self.mu1
        return rng.normal(mu, self.sigma, size)

    def integration_range(self) -> tuple[float, float]:
        lo, hi = min(self.mu0, self.mu1), max(self.mu0, self.mu1)
        return lo - 40 * self.sigma, hi + 40 * self.sigma

    def analytics(self) -> LlrAnalytics:
        # Z ~ N(-D, 2D) under f and N(D, 2D) under g, D = delta^2 / 2
        delta = abs(self.mu1 - self.mu0) / self.sigma
        d = delta**2 / 2
        s = delta
        q = float(stats.norm.cdf(delta / 2))
        m = -d
        z_plus = m * float(stats.norm.cdf(m / s)) + s * float(stats.norm.pdf(m / s))
        j = s**2 + d**2
        return LlrAnalytics.from_moments(d, d, q, z_plus, j)

    def to_spec(self) -> dict[str, Any]:
        return {"family": "gaussian", "mu0": self.mu0, "mu1": self.mu1, "sigma": self.sigma}


def model_from_spec(spec: Mapping[str, Any]) -> DistributionModel:
    family = spec.get("family")
    if family == "gaussian":
        return GaussianPair(float(spec["mu0"]), float(spec["mu1"]), float(spec["sigma"]))
    raise ValueError(f"unknown distribution family {family!r}")
