"""Grid search over ``(gamma_A, gamma_B, n)`` against the ARL and energy constraints."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import seeding
from .estimators import (
    ArlEstimate,
    EnergyEstimate,
    FeasibilityClass,
    MetricsEstimate,
    SprtStats,
    WaddBreakdown,
    arl_from_runs,
    arl_runs,
    compute_wadd,
    default_w_grid,
    energy_from_runs,
    estimate_sprt_stats,
    sojourn_means,
)
from .lscd import DEFAULT_HORIZON, LocationConfig, UavConfig
from .mcstats import Estimate
from .models import DistributionModel
from .parallel import ordered_map

CSV_HEADER = "gamma_a,gamma_b,n,arl_a,arl_a_se,arl_b,arl_b_se,energy,energy_se,wadd_a,wadd_b,objective,class"


@dataclass(frozen=True)
class Constraints:
    r_a: float
    r_b: float
    e_bar: float

    def __post_init__(self) -> None:
        if self.r_a < 0 or self.r_b < 0 or not self.e_bar > 0:
            raise ValueError("need r_a, r_b >= 0 and e_bar > 0")


def classify(arl_a: Estimate, arl_b: Estimate, energy: Estimate, c: Constraints, strict: bool = False) -> FeasibilityClass:
    """Constraint check on point estimates; ``strict`` uses the pessimistic 3-sigma ends."""
    k = 3.0 if strict else 0.0
    arl_ok = arl_a.mean - k * arl_a.se >= c.r_a and arl_b.mean - k * arl_b.se >= c.r_b
    energy_ok = energy.mean + k * energy.se <= c.e_bar
    if arl_ok and energy_ok:
        return FeasibilityClass.FEASIBLE
    if arl_ok:
        return FeasibilityClass.ENERGY
    if energy_ok:
        return FeasibilityClass.ARL
    return FeasibilityClass.BOTH


def evaluate_point(
    loc_a: LocationConfig,
    loc_b: LocationConfig,
    uav: UavConfig,
    constraints: Constraints,
    stats_a: SprtStats,
    stats_b: SprtStats,
    reps: int,
    seed: int,
    horizon: int = DEFAULT_HORIZON,
    threads: int = 1,
    job: Sequence[int] = (0,),
    strict: bool = False,
) -> MetricsEstimate:
    """ARLs and energy from no-change runs started at each site; WADDs from the recursion."""
    key = tuple(job)
    runs_a = arl_runs(loc_a, loc_b, uav, "A", reps, seed, horizon, threads, key + (0,), purpose=seeding.SWEEP_ARL)
    runs_b = arl_runs(loc_a, loc_b, uav, "B", reps, seed, horizon, threads, key + (1,), purpose=seeding.SWEEP_ARL)
    arl_a, arl_b = arl_from_runs(runs_a), arl_from_runs(runs_b)
    runs = runs_a + runs_b
    energy = energy_from_runs(runs, uav)
    soj_a, soj_b = sojourn_means(runs)
    wadd_a = compute_wadd(stats_a, stats_b, loc_a.n, loc_b.n, uav.tau)
    wadd_b = compute_wadd(stats_b, stats_a, loc_b.n, loc_a.n, uav.tau)
    cls = classify(arl_a, arl_b, energy, constraints, strict)
    return MetricsEstimate(arl_a, arl_b, wadd_a, wadd_b, energy, cls, soj_a, soj_b)


@dataclass(frozen=True)
class SweepRecord:
    gamma_a: float
    gamma_b: float
    n: int
    arl_a: ArlEstimate | None
    arl_b: ArlEstimate | None
    energy_rate: EnergyEstimate | None
    wadd_a: float
    wadd_b: float
    objective: float
    cls: FeasibilityClass
    wadd_a_detail: WaddBreakdown | None = None
    wadd_b_detail: WaddBreakdown | None = None
    error: str | None = None

    def csv_row(self) -> str:
        def f(x):
            return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.17g}"

        if self.arl_a is None:
            vals = ["", "", "", "", "", "", f(self.wadd_a), f(self.wadd_b), f(self.objective)]
        else:
            vals = [f(self.arl_a.mean), f(self.arl_a.se), f(self.arl_b.mean), f(self.arl_b.se),
                    f(self.energy_rate.mean), f(self.energy_rate.se), f(self.wadd_a), f(self.wadd_b), f(self.objective)]
        return ",".join([f(self.gamma_a), f(self.gamma_b), str(self.n)] + vals + [self.cls.value])

    def to_dict(self) -> dict:
        d = {"gamma_a": self.gamma_a, "gamma_b": self.gamma_b, "n": self.n, "wadd_a": self.wadd_a,
             "wadd_b": self.wadd_b, "objective": self.objective, "class": self.cls.value}
        if self.arl_a is not None:
            d.update(arl_a=self.arl_a.to_dict(), arl_b=self.arl_b.to_dict(),
                     energy=self.energy_rate.to_dict(), energy_direct=self.energy_rate.direct)
        if self.error:
            d["error"] = self.error
        return d


def parse_grid(spec: str) -> list[tuple[float, float, int]]:
    """Parse e.g. ``"gamma_a=2:8:1;gamma_b=2:8:1;n=1,3,5"`` (``gamma=`` sets both).

    Ranges ``lo:hi:step`` are inclusive. Order: ``n``, then ``gamma_a``, then ``gamma_b``.
    """
    axes: dict[str, list[float]] = {}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        if "=" not in part:
            raise ValueError(f"grid axis {part!r} must look like name=values")
        name, vals = (s.strip() for s in part.split("=", 1))
        if name not in ("gamma", "gamma_a", "gamma_b", "n"):
            raise ValueError(f"unknown grid axis {name!r}")
        if ":" in vals:
            lo, hi, step = (float(v) for v in vals.split(":"))
            if not step > 0 or hi < lo:
                raise ValueError(f"bad range {vals!r}")
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            values = [round(lo + i * step, 12) for i in range(count)]
        else:
            values = [float(v) for v in vals.split(",") if v.strip()]
        if name == "gamma":
            axes["gamma_a"] = axes["gamma_b"] = values
        else:
            axes[name] = values
    missing = {"gamma_a", "gamma_b", "n"} - axes.keys()
    if missing:
        raise ValueError(f"grid spec misses {sorted(missing)}")
    ns = [int(v) for v in axes["n"]]
    if any(n < 1 for n in ns) or any(g <= 0 for g in axes["gamma_a"] + axes["gamma_b"]):
        raise ValueError("grid needs n >= 1 and gamma > 0")
    return [(ga, gb, n) for n in ns for ga in axes["gamma_a"] for gb in axes["gamma_b"]]


DEFAULT_GRID = "gamma=2:8:1;n=1,3,5"


def run_sweep(
    grid: Sequence[tuple[float, float, int]],
    model_a: DistributionModel,
    model_b: DistributionModel,
    uav: UavConfig,
    constraints: Constraints,
    reps: int = 2000,
    seed: int = 0,
    cycle_reps: int = 100_000,
    w_grid_size: int = 33,
    horizon: int = DEFAULT_HORIZON,
    threads: int = 1,
    strict: bool = False,
) -> list[SweepRecord]:
    """One record per grid tuple, in grid order.

    Cycle statistics are estimated once per (location, threshold) and shared
    by all tuples; every tuple's runs use streams keyed by the tuple's values.
    """
    if not grid:
        raise ValueError("empty grid")
    models = {"A": model_a, "B": model_b}
    needed = sorted({("A", g) for g, _, _ in grid} | {("B", g) for _, g, _ in grid})

    def stats_job(item):
        loc, g = item
        return estimate_sprt_stats(models[loc], g, default_w_grid(g, w_grid_size), cycle_reps, seed,
                                   job=(seeding.SWEEP_STATS, "AB".index(loc), seeding.gamma_key(g)))

    stats = dict(zip(needed, ordered_map(stats_job, needed, threads)))

    def point(t: tuple[float, float, int]) -> SweepRecord:
        ga, gb, n = t
        sa, sb = stats[("A", ga)], stats[("B", gb)]
        wa = wb = math.nan
        da = db = None
        try:
            da = compute_wadd(sa, sb, n, n, uav.tau)
            db = compute_wadd(sb, sa, n, n, uav.tau)
            wa, wb = da.value, db.value
            m = evaluate_point(LocationConfig(ga, n, model_a), LocationConfig(gb, n, model_b), uav, constraints,
                               sa, sb, reps, seed, horizon, 1,
                               job=(seeding.gamma_key(ga), seeding.gamma_key(gb), n), strict=strict)
        except Exception as exc:  # recorded, not fatal to the sweep
            obj = max(wa, wb) if not (math.isnan(wa) or math.isnan(wb)) else math.nan
            return SweepRecord(ga, gb, n, None, None, None, wa, wb, obj, FeasibilityClass.ERROR, da, db,
                               f"{type(exc).__name__}: {exc}")
        return SweepRecord(ga, gb, n, m.arl_a, m.arl_b, m.energy_rate, wa, wb, max(wa, wb), m.feasible, da, db)

    return ordered_map(point, grid, threads)


def best_feasible(records: Iterable[SweepRecord]) -> SweepRecord | None:
    """Feasible record with the smallest objective; ties go to lower energy, then lower ``gamma_A + gamma_B``."""
    feas = [r for r in records if r.cls is FeasibilityClass.FEASIBLE]
    if not feas:
        return None
    return min(feas, key=lambda r: (r.objective, r.energy_rate.mean if r.energy_rate else math.inf, r.gamma_a + r.gamma_b))


def to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in records:
        buf.write(r.csv_row() + "\n")
    return buf.getvalue()


def summary(records: Sequence[SweepRecord]) -> dict:
    counts: dict[str, int] = {c.value: 0 for c in FeasibilityClass}
    per_n: dict[str, dict[str, int]] = {}
    for r in records:
        counts[r.cls.value] += 1
        per_n.setdefault(str(r.n), {c.value: 0 for c in FeasibilityClass})[r.cls.value] += 1
    best = best_feasible(records)
    return {
        "records": len(records),
        "counts": counts,
        "counts_by_n": per_n,
        "best_feasible": best.to_dict() if best else None,
        "errors": [r.to_dict() for r in records if r.error],
    }
