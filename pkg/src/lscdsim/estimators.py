"""Monte-Carlo estimates of SPRT-cycle and LS-CD quantities, and the exact
renewal recursions that assemble them into ARL, sojourn and WADD values."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import seeding
from .lscd import (
    DEFAULT_HORIZON,
    LOCATIONS,
    NEVER,
    Location,
    LocationConfig,
    RunResult,
    Scenario,
    StartState,
    UavConfig,
    energy_rate,
    simulate_many,
)
from .mcstats import Estimate, batch_cov, batch_means, delta_se
from .models import DistributionModel, Regime
from .parallel import ordered_map
from .sprt import DEFAULT_MAX_STEPS, simulate_cycles

DEFAULT_W_GRID_SIZE = 33
MAX_CENSORED_FRACTION = 0.01


class CensoringError(RuntimeError):
    """Too many replications reached the horizon for an unbiased estimate."""


class FeasibilityClass(enum.Enum):
    FEASIBLE = "Feasible"
    ENERGY = "EnergyViolation"
    ARL = "ArlViolation"
    BOTH = "BothViolation"
    ERROR = "Error"


def default_w_grid(gamma: float, size: int = DEFAULT_W_GRID_SIZE) -> tuple[float, ...]:
    """``size`` evenly spaced interior points of ``(0, gamma)``."""
    if size < 1:
        raise ValueError("w-grid needs at least one point")
    return tuple(float(w) for w in np.linspace(0.0, gamma, size + 2)[1:-1])


@dataclass(frozen=True)
class CycleSummary:
    """Exit probability at the top and mean length of SPRT cycles started at ``w``."""

    w: float
    top: Estimate
    duration: Estimate
    cov: float  # covariance of the two sample means

    @classmethod
    def from_batch(cls, w: float, top: np.ndarray, duration: np.ndarray) -> "CycleSummary":
        x = top.astype(np.float64)
        y = duration.astype(np.float64)
        return cls(w, batch_means(x), batch_means(y), batch_cov(x, y))

    @property
    def bottom(self) -> Estimate:
        return Estimate(1.0 - self.top.mean, self.top.se, self.top.reps)


@dataclass(frozen=True)
class SprtStats:
    gamma: float
    pre: CycleSummary
    post: CycleSummary
    w_grid: tuple[float, ...] = ()
    pre_w: tuple[CycleSummary, ...] = ()
    post_w: tuple[CycleSummary, ...] = ()

    @property
    def psi_inf(self) -> Estimate:
        return self.pre.top

    @property
    def beta(self) -> Estimate:
        return self.post.bottom

    @property
    def e_inf_T(self) -> Estimate:
        return self.pre.duration

    @property
    def e0_T(self) -> Estimate:
        return self.post.duration

    @property
    def psi_inf_w(self) -> dict[float, Estimate]:
        return {c.w: c.top for c in self.pre_w}

    @property
    def e_inf_T_w(self) -> dict[float, Estimate]:
        return {c.w: c.duration for c in self.pre_w}

    @property
    def e0_T_w(self) -> dict[float, Estimate]:
        return {c.w: c.duration for c in self.post_w}

    @property
    def beta_w(self) -> dict[float, Estimate]:
        return {c.w: c.bottom for c in self.post_w}

    @classmethod
    def exact(cls, gamma: float, psi_inf: float, e_inf_T: float, beta: float = 0.0, e0_T: float = 1.0,
              w_grid: Sequence[float] = (), psi_inf_w: Sequence[float] = (), e_inf_T_w: Sequence[float] = ()) -> "SprtStats":
        """Noise-free statistics, for evaluating the recursions at given values."""

        def cs(w, p, t):
            return CycleSummary(w, Estimate(p, 0.0, 0), Estimate(t, 0.0, 0), 0.0)

        pre_w = tuple(cs(w, p, t) for w, p, t in zip(w_grid, psi_inf_w, e_inf_T_w))
        return cls(gamma, cs(0.0, psi_inf, e_inf_T), cs(0.0, 1.0 - beta, e0_T), tuple(w_grid), pre_w, ())


def estimate_sprt_stats(
    model: DistributionModel,
    gamma: float,
    w_grid: Sequence[float] | None = None,
    reps: int = 100_000,
    seed: int = 0,
    w_reps: int | None = None,
    threads: int = 1,
    job: Sequence[int] = (),
    max_steps: int = DEFAULT_MAX_STEPS,
) -> SprtStats:
    """Independent cycle replications under both regimes, from 0 and from each grid point.

    Stream for regime ``i`` and start index ``j`` (0 is ``w = 0``) is
    ``(seed, CYCLES, *job, i, j)``.
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    grid = tuple(default_w_grid(gamma) if w_grid is None else (float(w) for w in w_grid))
    if any(not 0 <= w < gamma for w in grid):
        raise ValueError("w-grid must lie in [0, gamma)")
    w_reps = reps if w_reps is None else w_reps
    tasks = [(ri, j, w, reps if j == 0 else w_reps) for ri in (0, 1) for j, w in enumerate((0.0,) + grid)]
    regimes = (Regime.PRE, Regime.POST)

    def work(task) -> CycleSummary:
        ri, j, w, count = task
        rng = seeding.generator(seed, seeding.CYCLES, *job, ri, j)
        b = simulate_cycles(model, regimes[ri], gamma, w, count, rng, max_steps)
        return CycleSummary.from_batch(w, b.top, b.duration)

    out = ordered_map(work, tasks, threads)
    k = len(grid) + 1
    return SprtStats(gamma, out[0], out[k], grid, tuple(out[1:k]), tuple(out[k + 1:]))


def _sojourn(psi: float, t: float, n: int) -> float:
    # sum_{k=1..n} (1 - psi)^(k-1) * t
    keep = 1.0 - psi
    if keep == 1.0:
        return n * t
    return t * (1.0 - keep**n) / psi


def mean_sojourn(stats: SprtStats, n: int) -> float:
    """Mean no-change sojourn: cycles until a top exit or ``n`` resets."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _sojourn(stats.psi_inf.mean, stats.e_inf_T.mean, n)


def _grid_value(stats: SprtStats, w: float) -> tuple[float, float]:
    grid = np.asarray(stats.w_grid)
    if len(grid) == 0:
        raise ValueError("statistics carry no w-grid")
    if w < grid[0] or w > grid[-1]:
        raise ValueError(f"w={w} outside the estimated grid [{grid[0]}, {grid[-1]}]; no extrapolation")
    psi = np.array([c.top.mean for c in stats.pre_w])
    t = np.array([c.duration.mean for c in stats.pre_w])
    return float(np.interp(w, grid, psi)), float(np.interp(w, grid, t))


def _remaining(psi_w: float, t_w: float, psi: float, t: float, n: int) -> float:
    return t_w + (1.0 - psi_w) * (_sojourn(psi, t, n - 1) if n > 1 else 0.0)


def mean_remaining_sojourn(stats: SprtStats, w: float, n: int) -> float:
    """Mean rest of a no-change sojourn entered mid first cycle with statistic ``w``.

    Values between grid points are linearly interpolated.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    psi_w, t_w = _grid_value(stats, w)
    return _remaining(psi_w, t_w, stats.psi_inf.mean, stats.e_inf_T.mean, n)


def _arl_pair(psi_a: float, t_a: float, psi_b: float, t_b: float, n_a: int, n_b: int, tau: float) -> tuple[float, float]:
    s_a, s_b = _sojourn(psi_a, t_a, n_a), _sojourn(psi_b, t_b, n_b)
    p_a, p_b = (1.0 - psi_a) ** n_a, (1.0 - psi_b) ** n_b
    den = 1.0 - p_a * p_b
    if not den > 0:
        raise ValueError("degenerate recursion: no false alarm ever occurs (1 - psi = 1 at both sites)")
    arl_a = (s_a + p_a * (tau + s_b + p_b * tau)) / den
    arl_b = (s_b + p_b * (tau + s_a + p_a * tau)) / den
    return arl_a, arl_b


def arl_recursion(stats_a: SprtStats, stats_b: SprtStats, n_a: int, n_b: int, tau: int) -> tuple[Estimate, Estimate]:
    """Solve the two coupled ARL renewal equations exactly; SEs by the delta method."""
    x = np.array([stats_a.psi_inf.mean, stats_a.e_inf_T.mean, stats_b.psi_inf.mean, stats_b.e_inf_T.mean])
    cov = np.zeros((4, 4))
    for i, s in ((0, stats_a), (2, stats_b)):
        cov[i, i] = s.psi_inf.se**2
        cov[i + 1, i + 1] = s.e_inf_T.se**2
        cov[i, i + 1] = cov[i + 1, i] = s.pre.cov
    if stats_a is stats_b:
        cov[0:2, 2:4] = cov[0:2, 0:2]
        cov[2:4, 0:2] = cov[0:2, 0:2]
    arl_a, arl_b = (float(v) for v in _arl_pair(*x, n_a, n_b, tau))
    reps = min(stats_a.pre.top.reps, stats_b.pre.top.reps)
    if not np.any(cov):
        return Estimate(arl_a, 0.0, reps), Estimate(arl_b, 0.0, reps)
    se_a = delta_se(lambda v: _arl_pair(*v, n_a, n_b, tau)[0], x, cov)
    se_b = delta_se(lambda v: _arl_pair(*v, n_a, n_b, tau)[1], x, cov)
    return Estimate(arl_a, se_a, reps), Estimate(arl_b, se_b, reps)


@dataclass(frozen=True)
class ArlEstimate(Estimate):
    censored: int = 0


def _check_censoring(runs: Sequence[RunResult]) -> int:
    censored = sum(r.censored for r in runs)
    if censored > MAX_CENSORED_FRACTION * len(runs):
        raise CensoringError(
            f"{censored} of {len(runs)} replications reached the horizon; raise the horizon or lower the thresholds"
        )
    return censored


def arl_from_runs(runs: Sequence[RunResult]) -> ArlEstimate:
    censored = _check_censoring(runs)
    times = [r.alarm_time for r in runs if not r.censored]
    e = batch_means(times)
    return ArlEstimate(e.mean, e.se, e.reps, censored)


def arl_runs(loc_a: LocationConfig, loc_b: LocationConfig, uav: UavConfig, start: Location, reps: int, seed: int,
             horizon: int = DEFAULT_HORIZON, threads: int = 1, job: Sequence[int] = (0,),
             purpose: int = seeding.RUN) -> list[RunResult]:
    if reps < 100:
        raise ValueError("reps must be >= 100")
    return simulate_many(loc_a, loc_b, uav, NEVER, start, reps, seed, job, horizon, threads, purpose=purpose)


def estimate_arl(loc_a: LocationConfig, loc_b: LocationConfig, uav: UavConfig, start: Location, reps: int, seed: int,
                 horizon: int = DEFAULT_HORIZON, threads: int = 1, job: Sequence[int] = (0,)) -> ArlEstimate:
    """Mean time to the first (false) alarm with no change anywhere, starting at ``start``.

    Censored replications are excluded and counted; more than 1% is an error.
    """
    return arl_from_runs(arl_runs(loc_a, loc_b, uav, start, reps, seed, horizon, threads, job))


def sojourn_means(runs: Sequence[RunResult]) -> tuple[Estimate, Estimate]:
    """Pooled mean sojourn time per location over every sojourn recorded in ``runs``."""
    out = []
    for i in (0, 1):
        count = np.array([r.sojourn_count[i] for r in runs], dtype=np.float64)
        total = np.array([r.sojourn_sum[i] for r in runs], dtype=np.float64)
        if count.sum() == 0:
            raise ValueError(f"no completed sojourn at {LOCATIONS[i]}")
        mean = math.fsum(total) / math.fsum(count)
        sq = math.fsum(r.sojourn_sumsq[i] for r in runs)
        n = int(count.sum())
        var = max(sq / n - mean**2, 0.0)
        out.append(Estimate(mean, math.sqrt(var / n), n))
    return out[0], out[1]


@dataclass(frozen=True)
class EnergyEstimate(Estimate):
    direct: float = math.nan  # total energy / total time over the same runs


def energy_from_runs(runs: Sequence[RunResult], uav: UavConfig, n_batches: int = 30) -> EnergyEstimate:
    """Renewal-reward energy rate fed by the empirical sojourn means of ``runs``."""
    ta, tb = sojourn_means(runs)
    rate = energy_rate(ta.mean, tb.mean, uav)
    edges = np.linspace(0, len(runs), min(n_batches, len(runs)) + 1).round().astype(int)
    vals = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        part = runs[lo:hi]
        na = sum(r.sojourn_count[0] for r in part)
        nb = sum(r.sojourn_count[1] for r in part)
        if na and nb:
            vals.append(energy_rate(sum(r.sojourn_sum[0] for r in part) / na,
                                    sum(r.sojourn_sum[1] for r in part) / nb, uav))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.inf
    direct = math.fsum(r.energy for r in runs) / math.fsum(r.end_time for r in runs)
    return EnergyEstimate(rate, se, len(runs), direct)


@dataclass(frozen=True)
class WaddBreakdown:
    """Worst-case delay assembled from scenario terms.

    ``value = max(s1, s2) + detection + beta_n * tilde_wadd``.
    """

    value: float
    s1: float
    s2: float
    w_star: float | None
    sojourn_other: float
    detection: float
    beta_n: float
    tilde_wadd: float
    se: float = 0.0

    def recomposed(self) -> float:
        return max(self.s1, self.s2) + self.detection + self.beta_n * self.tilde_wadd

    def to_dict(self) -> dict:
        return {
            "value": self.value, "se": self.se, "s1": self.s1, "s2": self.s2, "w_star": self.w_star,
            "sojourn_other": self.sojourn_other, "detection": self.detection, "beta_n": self.beta_n,
            "tilde_wadd": self.tilde_wadd,
        }


def _wadd_terms(beta: float, e0_t: float, psi_p: float, t_p: float, rem_max: float | None, n_l: int, n_lp: int, tau: int):
    beta_n = beta**n_l
    if not beta_n < 1.0:
        raise ValueError("beta >= 1: post-change cycles never raise an alarm")
    sojourn = _sojourn(psi_p, t_p, n_lp)
    s1 = 2 * tau + sojourn
    s2 = tau + rem_max if rem_max is not None else -math.inf
    detection = _sojourn(1.0 - beta, e0_t, n_l)
    tilde = (2 * tau + sojourn + detection) / (1.0 - beta_n)
    return max(s1, s2) + detection + beta_n * tilde, s1, s2, sojourn, detection, beta_n, tilde


def compute_wadd(stats_l: SprtStats, stats_lp: SprtStats, n_l: int, n_lp: int, tau: int) -> WaddBreakdown:
    """Worst-case delay at ``l`` from post-change stats at ``l`` and pre-change stats at ``l'``.

    The supremum over the partial statistic at ``l'`` is a maximum over the
    grid of ``stats_lp``. SE by the delta method at the maximizing grid point.
    """
    psi_p, t_p = stats_lp.psi_inf.mean, stats_lp.e_inf_T.mean
    rem = [_remaining(c.top.mean, c.duration.mean, psi_p, t_p, n_lp) for c in stats_lp.pre_w]
    j = int(np.argmax(rem)) if rem else None
    w_star = stats_lp.pre_w[j].w if j is not None else None
    terms = _wadd_terms(stats_l.beta.mean, stats_l.e0_T.mean, psi_p, t_p, rem[j] if rem else None, n_l, n_lp, tau)
    value, s1, s2, sojourn, detection, beta_n, tilde = terms

    x = [stats_l.beta.mean, stats_l.e0_T.mean, psi_p, t_p]
    cov = np.zeros((6, 6))
    cov[0, 0], cov[1, 1] = stats_l.beta.se**2, stats_l.e0_T.se**2
    cov[0, 1] = cov[1, 0] = -stats_l.post.cov
    cov[2, 2], cov[3, 3] = stats_lp.psi_inf.se**2, stats_lp.e_inf_T.se**2
    cov[2, 3] = cov[3, 2] = stats_lp.pre.cov
    if j is not None:
        c = stats_lp.pre_w[j]
        x += [c.top.mean, c.duration.mean]
        cov[4, 4], cov[5, 5] = c.top.se**2, c.duration.se**2
        cov[4, 5] = cov[5, 4] = c.cov
    else:
        x += [0.0, 0.0]

    def fn(v):
        r = _remaining(v[4], v[5], v[2], v[3], n_lp) if j is not None else None
        return _wadd_terms(v[0], v[1], v[2], v[3], r, n_l, n_lp, tau)[0]

    se = delta_se(fn, np.array(x), cov) if np.any(cov) else 0.0
    return WaddBreakdown(value, s1, s2, w_star, sojourn, detection, beta_n, tilde, se)


@dataclass(frozen=True)
class JustDeparted:
    """The UAV leaves the changed location at the change instant."""


@dataclass(frozen=True)
class AtOtherWithW:
    """The UAV hovers at the other location, first cycle, statistic ``w``."""

    w: float


@dataclass(frozen=True)
class AtChangedWithW:
    """The UAV hovers at the changed location in its ``m``-th cycle with statistic ``w``."""

    m: int
    w: float


ScenarioKind = JustDeparted | AtOtherWithW | AtChangedWithW


def scenario_start(kind: ScenarioKind, changed: Location, uav: UavConfig) -> StartState:
    other: Location = "B" if changed == "A" else "A"
    if isinstance(kind, JustDeparted):
        if uav.tau == 0:
            return StartState(other)
        return StartState(changed, traveling=True, travel_left=uav.tau)
    if isinstance(kind, AtOtherWithW):
        return StartState(other, w=kind.w)
    if isinstance(kind, AtChangedWithW):
        if kind.m < 1:
            raise ValueError("m must be >= 1")
        return StartState(changed, w=kind.w, resets=kind.m - 1)
    raise TypeError(f"unknown scenario kind {kind!r}")


def simulate_wadd_scenario(
    kind: ScenarioKind,
    changed: Location,
    loc_a: LocationConfig,
    loc_b: LocationConfig,
    uav: UavConfig,
    reps: int,
    seed: int,
    horizon: int = DEFAULT_HORIZON,
    threads: int = 1,
    job: Sequence[int] = (0,),
) -> Estimate:
    """Mean detection delay when the change at ``changed`` hits the UAV in state ``kind``.

    Every observation at ``changed`` is post-change; alarms at the other
    location end that sojourn instead of the run, matching the sojourn
    accounting of the WADD recursion.
    """
    other: Location = "B" if changed == "A" else "A"
    start = scenario_start(kind, changed, uav)
    scenario = Scenario(nu_a=0) if changed == "A" else Scenario(nu_b=0)
    runs = simulate_many(loc_a, loc_b, uav, scenario, start, reps, seed, job, horizon, threads,
                         dismiss=(other,), purpose=seeding.WADD)
    if any(r.censored for r in runs):
        raise CensoringError("a detection-delay replication reached the horizon")
    return batch_means([r.detection_delay for r in runs])


@dataclass(frozen=True)
class MetricsEstimate:
    arl_a: Estimate
    arl_b: Estimate
    wadd_a: WaddBreakdown
    wadd_b: WaddBreakdown
    energy_rate: EnergyEstimate
    feasible: FeasibilityClass
    sojourn_a: Estimate | None = None
    sojourn_b: Estimate | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def est(e):
            d = e.to_dict()
            if isinstance(e, ArlEstimate):
                d["censored"] = e.censored
            if isinstance(e, EnergyEstimate):
                d["direct"] = e.direct
            return d

        out = {
            "arl_a": est(self.arl_a), "arl_b": est(self.arl_b),
            "wadd_a": self.wadd_a.to_dict(), "wadd_b": self.wadd_b.to_dict(),
            "energy_rate": est(self.energy_rate), "feasible": self.feasible.value,
        }
        if self.sojourn_a is not None:
            out["sojourn_a"] = est(self.sojourn_a)
            out["sojourn_b"] = est(self.sojourn_b)
        out.update(self.extras)
        return out

    def table(self, seed: int) -> str:
        """CSV rows ``quantity,location,mean,se,reps,seed``."""
        rows = ["quantity,location,mean,se,reps,seed"]

        def add(q, loc, mean, se, reps):
            rows.append(f"{q},{loc},{mean:.17g},{se:.17g},{reps},{seed}")

        add("arl", "A", self.arl_a.mean, self.arl_a.se, self.arl_a.reps)
        add("arl", "B", self.arl_b.mean, self.arl_b.se, self.arl_b.reps)
        add("wadd", "A", self.wadd_a.value, self.wadd_a.se, 0)
        add("wadd", "B", self.wadd_b.value, self.wadd_b.se, 0)
        add("energy_rate", "", self.energy_rate.mean, self.energy_rate.se, self.energy_rate.reps)
        if self.sojourn_a is not None:
            add("mean_sojourn", "A", self.sojourn_a.mean, self.sojourn_a.se, self.sojourn_a.reps)
            add("mean_sojourn", "B", self.sojourn_b.mean, self.sojourn_b.se, self.sojourn_b.reps)
        return "\n".join(rows) + "\n"
