"""Closed-form performance bounds for LS-CD.

Everything here is a pure function of thresholds, switch count, travel time
and the LLR analytics of each location. Overshoot corrections of unknown
size are omitted from every value; tests compare against simulation with an
explicit slack instead.

Geometric terms of the form ``(1 - x^n) / (1 - x)`` with ``1 - x = a e^{-gamma}``
are evaluated through ``log1p``/``expm1`` so that the asymptotic regime
(``gamma`` of 30 to 40) keeps full relative precision.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .models import LlrAnalytics

FLAGS = (
    "C convention: C = E_inf[Z 1{Z>=0}] / D(f||g); upper bounds use the factor (1 + C)",
    "ARL lower-bound denominator: 1 - u(gamma_l)^n * u(gamma_l')^n",
    "O(1) overshoot corrections omitted from all bounds; simulation checks use slack 2 + 2*tau",
    "tilting parameters fixed at theta = 1 (pre-change) and theta~ = -1 (post-change)",
)


def _check(gamma_l: float, gamma_lp: float, n: int, tau: float) -> None:
    if not gamma_l > 0 or not gamma_lp > 0:
        raise ValueError("thresholds must be > 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    if tau < 0:
        raise ValueError("tau must be >= 0")


def _geometric(a: float, gamma: float, n: int) -> tuple[float, float, float]:
    """With ``x = 1 - a e^{-gamma}`` return ``(log x, x^n, (1 - x^n)/(1 - x))``."""
    eps = a * math.exp(-gamma)
    log_x = math.log1p(-eps)
    return log_x, math.exp(n * log_x), -math.expm1(n * log_x) / eps


def _arl_form(a_l: float, a_lp: float, w_l: float, w_lp: float, gamma_l: float, gamma_lp: float, n: int, tau: float) -> float:
    lx_l, xn_l, s_l = _geometric(a_l, gamma_l, n)
    lx_lp, xn_lp, s_lp = _geometric(a_lp, gamma_lp, n)
    num = w_l * s_l + w_lp * s_lp * xn_l + tau * xn_l * (1.0 + xn_lp)
    den = -math.expm1(n * (lx_l + lx_lp))
    return num / den


def arl_lower_bound(gamma_l: float, gamma_lp: float, n: int, tau: float) -> float:
    """ARL lower bound from ``psi <= e^{-gamma}`` and unit cycle length, ``u = 1 - e^{-gamma}``."""
    _check(gamma_l, gamma_lp, n, tau)
    return _arl_form(1.0, 1.0, 1.0, 1.0, gamma_l, gamma_lp, n, tau)


def arl_upper_bound(gamma_l: float, gamma_lp: float, n: int, tau: float, analytics_l: LlrAnalytics, analytics_lp: LlrAnalytics) -> float:
    """ARL upper bound with ``v = 1 - K e^{-gamma}`` and cycle length at most ``1 + C``."""
    _check(gamma_l, gamma_lp, n, tau)
    for a in (analytics_l, analytics_lp):
        if not 0 < a.k < 1:
            raise ValueError(f"K must lie in (0, 1), got {a.k}")
    return _arl_form(analytics_l.k, analytics_lp.k, 1.0 + analytics_l.c, 1.0 + analytics_lp.c, gamma_l, gamma_lp, n, tau)


def corollary_constants(n: int, tau: float, analytics: LlrAnalytics) -> tuple[float, float]:
    """Symmetric large-threshold limits of ``ARL / e^gamma``: ``(1 + tau/n, (1 + C + tau/n) / K)``."""
    return 1.0 + tau / n, (1.0 + analytics.c + tau / n) / analytics.k


@dataclass(frozen=True)
class WaddBound:
    value: float
    c1: float
    c2: float
    c_prime: float
    branch: str  # "max" or "c2"


def wadd_upper_bound(
    gamma_l: float,
    gamma_lp: float,
    n: int,
    tau: float,
    analytics_l: LlrAnalytics,
    analytics_lp: LlrAnalytics,
    w_star: float | None = None,
    w_star_interior: bool = True,
) -> WaddBound:
    """Upper bound on the worst-case delay at ``l``: ``gamma_l / D(g_l||f_l) + C'``.

    ``w_star=None`` uses ``e^{-w*} <= 1``. The ``C2``-only branch applies when
    the maximizer of the remaining sojourn is not interior: ``w_star`` outside
    ``(0, gamma_lp)``, ``w_star_interior=False``, or ``gamma_lp == 0``.
    """
    if not gamma_l > 0:
        raise ValueError("gamma_l must be > 0")
    if gamma_lp < 0 or n < 1 or tau < 0:
        raise ValueError("need gamma_lp >= 0, n >= 1, tau >= 0")
    qbar_n = (1.0 - analytics_l.q) ** n
    if not qbar_n < 1.0:
        raise ValueError("1 - q_l must be < 1")
    c_lp = analytics_lp.z_plus_mean / analytics_lp.d_f_g
    c2 = (2 * tau + n + n * c_lp) / (1.0 - qbar_n)
    e_w = 1.0 if w_star is None else math.exp(-w_star)
    c1 = (
        tau * (1.0 + qbar_n) / (1.0 - qbar_n)
        + (1.0 + c_lp) * (n * qbar_n / (1.0 - qbar_n) + (n - 1) * (1.0 + e_w - 0.5 * math.exp(-analytics_lp.d_f_g)))
    )
    interior = w_star_interior and gamma_lp > 0 and (w_star is None or 0 < w_star < gamma_lp)
    if interior:
        c_prime = max(c1 + gamma_lp / analytics_lp.d_f_g, c2)
        branch = "max"
    else:
        c_prime = c2
        branch = "c2"
    return WaddBound(gamma_l / analytics_l.d_g_f + c_prime, c1, c2, c_prime, branch)


@dataclass(frozen=True)
class LemmaBounds:
    lemma1_T_w: dict[float, float]
    lemma1_T: float
    lemma2_beta: float
    lemma3_psi_w: dict[float, float]
    lemma4_e0T: float


def pointwise_lemma_bounds(analytics: LlrAnalytics, gamma: float, w_grid: Sequence[float]) -> LemmaBounds:
    """Single-cycle bounds: cycle lengths, bottom-exit probability and top-exit probability from ``w``."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    d = analytics.d_f_g
    return LemmaBounds(
        lemma1_T_w={float(w): w / d for w in w_grid},
        lemma1_T=1.0 + analytics.z_plus_mean / d,
        lemma2_beta=1.0 - analytics.q,
        lemma3_psi_w={float(w): 0.5 * math.exp(-d) - math.exp(-w) for w in w_grid},
        lemma4_e0T=analytics.q * gamma / analytics.d_g_f,
    )


@dataclass(frozen=True)
class BoundsReport:
    location: str
    gamma_l: float
    gamma_lp: float
    n: int
    tau: float
    lemma1_T_w: dict[float, float]
    lemma1_T: float
    lemma2_beta: float
    lemma3_psi_w: dict[float, float]
    lemma4_e0T: float
    arl_lower: float
    arl_upper: float
    corollary_lo: float
    corollary_hi: float
    wadd_upper: float
    c1: float
    c2: float
    c_prime: float
    flags: list[str] = field(default_factory=lambda: list(FLAGS))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lemma1_T_w"] = {f"{w:.17g}": v for w, v in self.lemma1_T_w.items()}
        d["lemma3_psi_w"] = {f"{w:.17g}": v for w, v in self.lemma3_psi_w.items()}
        return d

    def scalar_items(self) -> list[tuple[str, float]]:
        keys = ("gamma_l", "gamma_lp", "n", "tau", "lemma1_T", "lemma2_beta", "lemma4_e0T", "arl_lower",
                "arl_upper", "corollary_lo", "corollary_hi", "wadd_upper", "c1", "c2", "c_prime")
        return [(k, getattr(self, k)) for k in keys]


def bounds_report(
    location: str,
    gamma_l: float,
    gamma_lp: float,
    n: int,
    tau: float,
    analytics_l: LlrAnalytics,
    analytics_lp: LlrAnalytics,
    w_grid: Sequence[float],
    w_star: float | None = None,
) -> BoundsReport:
    lem = pointwise_lemma_bounds(analytics_l, gamma_l, w_grid)
    wb = wadd_upper_bound(gamma_l, gamma_lp, n, tau, analytics_l, analytics_lp, w_star)
    lo, hi = corollary_constants(n, tau, analytics_l)
    return BoundsReport(
        location=location, gamma_l=gamma_l, gamma_lp=gamma_lp, n=n, tau=tau,
        lemma1_T_w=lem.lemma1_T_w, lemma1_T=lem.lemma1_T, lemma2_beta=lem.lemma2_beta,
        lemma3_psi_w=lem.lemma3_psi_w, lemma4_e0T=lem.lemma4_e0T,
        arl_lower=arl_lower_bound(gamma_l, gamma_lp, n, tau),
        arl_upper=arl_upper_bound(gamma_l, gamma_lp, n, tau, analytics_l, analytics_lp),
        corollary_lo=lo, corollary_hi=hi,
        wadd_upper=wb.value, c1=wb.c1, c2=wb.c2, c_prime=wb.c_prime,
    )
