"""The two-location switching detector (LS-CD) as a slot-level state machine.

One UAV hovers at a location running repeated one-sided SPRT cycles, raises
an alarm when the statistic reaches the location's threshold, and relocates
after ``n`` consecutive resets, spending ``tau`` travel slots in transit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from . import _layout as L
from . import seeding
from ._backend import kernels
from .models import DistributionModel, Regime
from .parallel import chunks, ordered_map
from .sprt import DEFAULT_MAX_STEPS, TruncationError

Location = Literal["A", "B"]
LOCATIONS: tuple[Location, Location] = ("A", "B")
DEFAULT_HORIZON = 100_000_000
_FIRST_BLOCK = 64
_MAX_BLOCK = 1 << 16


def _loc_index(loc: str) -> int:
    if loc not in LOCATIONS:
        raise ValueError(f"location must be 'A' or 'B', got {loc!r}")
    return LOCATIONS.index(loc)


class ScriptExhausted(RuntimeError):
    """A scripted LLR sequence ran out before the run finished."""


@dataclass(frozen=True)
class LocationConfig:
    gamma: float
    n: int
    model: DistributionModel

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError("gamma must be > 0")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be an integer >= 1")


@dataclass(frozen=True)
class UavConfig:
    tau: int
    e_sense: float = 1.0
    e_move: float = 4.0
    e_budget: float = math.inf

    def __post_init__(self) -> None:
        if int(self.tau) != self.tau or self.tau < 0:
            raise ValueError("tau must be an integer >= 0")
        if self.e_sense < 0 or self.e_move < 0:
            raise ValueError("energies must be nonnegative")
        if not self.e_budget > 0:
            raise ValueError("e_budget must be > 0")


@dataclass(frozen=True)
class Scenario:
    """Change times; ``None`` means the change never happens.

    With ``clock="local"`` a change time counts the pre-change observations
    drawn at that location (0: every observation there is post-change). With
    ``clock="global"`` it is the global slot after which the location is in
    its post-change regime.
    """

    nu_a: int | None = None
    nu_b: int | None = None
    clock: Literal["local", "global"] = "local"

    def __post_init__(self) -> None:
        for nu in (self.nu_a, self.nu_b):
            if nu is not None and (int(nu) != nu or nu < 0):
                raise ValueError("change times must be integers >= 0 or None")
        if self.nu_a is not None and self.nu_b is not None:
            raise ValueError("a change can occur at most at one location")
        if self.clock not in ("local", "global"):
            raise ValueError("clock must be 'local' or 'global'")

    @property
    def changed(self) -> Location | None:
        if self.nu_a is not None:
            return "A"
        if self.nu_b is not None:
            return "B"
        return None

    def nu(self, loc: Location) -> int | None:
        return self.nu_a if loc == "A" else self.nu_b

    @classmethod
    def parse(cls, text: str, clock: str = "local") -> "Scenario":
        """Parse ``"nu_a,nu_b"`` where each entry is an integer or ``never``."""
        parts = [p.strip().lower() for p in text.split(",")]
        if len(parts) != 2:
            raise ValueError("scenario must look like 'A,B', e.g. 'never,never' or '0,never'")
        vals = [None if p in ("never", "inf", "none") else int(p) for p in parts]
        return cls(vals[0], vals[1], clock)  # type: ignore[arg-type]


NEVER = Scenario()


@dataclass(frozen=True)
class StartState:
    """UAV state at ``t = 0``. Default: hovering at a fresh sojourn with ``W = 0``."""

    location: Location
    traveling: bool = False
    travel_left: int = 0
    w: float = 0.0
    resets: int = 0


@dataclass(frozen=True)
class RunResult:
    alarm_time: int | None
    alarm_location: Location | None
    energy: float
    detection_delay: int | None
    false_alarm: bool
    end_time: int
    hover_slots: int
    travel_slots: int
    change_time: int | None = None
    censored: bool = False
    dismissed_alarms: int = 0
    sojourn_count: tuple[int, int] = (0, 0)
    sojourn_sum: tuple[int, int] = (0, 0)
    sojourn_sumsq: tuple[float, float] = (0.0, 0.0)

    def to_dict(self) -> dict:
        return {
            "alarm_time": self.alarm_time,
            "alarm_location": self.alarm_location,
            "energy": self.energy,
            "detection_delay": self.detection_delay,
            "false_alarm": self.false_alarm,
            "end_time": self.end_time,
            "hover_slots": self.hover_slots,
            "travel_slots": self.travel_slots,
            "change_time": self.change_time,
            "censored": self.censored,
        }


def energy_rate(mean_sojourn_a: float, mean_sojourn_b: float, uav: UavConfig) -> float:
    """Long-run energy per slot of the no-change renewal cycle (two sojourns, two legs)."""
    if not (mean_sojourn_a > 0 and mean_sojourn_b > 0):
        raise ValueError("mean sojourn times must be positive")
    hover = mean_sojourn_a + mean_sojourn_b
    return (2 * uav.tau * uav.e_move + hover * uav.e_sense) / (hover + 2 * uav.tau)


class _RngSource:
    def __init__(self, model: DistributionModel, rng: np.random.Generator, nu_local: int | None, post: bool = False):
        self.model = model
        self.rng = rng
        self.nu = nu_local
        self.post = post
        self.generated = 0
        self.size = _FIRST_BLOCK

    def block(self) -> np.ndarray:
        size = self.size
        self.size = min(2 * size, _MAX_BLOCK)
        if self.post or self.nu == 0:
            z = self.model.sample_llr(Regime.POST, self.rng, size)
        elif self.nu is None:
            z = self.model.sample_llr(Regime.PRE, self.rng, size)
        else:
            n_pre = min(max(self.nu - self.generated, 0), size)
            z = np.concatenate((
                self.model.sample_llr(Regime.PRE, self.rng, n_pre),
                self.model.sample_llr(Regime.POST, self.rng, size - n_pre),
            ))
        self.generated += size
        return np.ascontiguousarray(z, dtype=np.float64)


class _ScriptSource:
    def __init__(self, zs: Sequence[float], loc: str):
        self.zs = np.ascontiguousarray(zs, dtype=np.float64)
        self.loc = loc
        self.used = False

    def block(self) -> np.ndarray:
        if self.used or len(self.zs) == 0:
            raise ScriptExhausted(f"scripted LLR stream at {self.loc} exhausted")
        self.used = True
        return self.zs


def simulate_run(
    loc_a: LocationConfig,
    loc_b: LocationConfig,
    uav: UavConfig,
    scenario: Scenario,
    start: Location | StartState,
    rng: np.random.Generator | None = None,
    horizon: int = DEFAULT_HORIZON,
    z_script: Mapping[str, Sequence[float]] | None = None,
    dismiss: Sequence[Location] = (),
    max_steps: int = DEFAULT_MAX_STEPS,
) -> RunResult:
    """Simulate one trajectory until an alarm or ``horizon`` slots.

    ``z_script`` replaces sampling by fixed LLR sequences per location.
    Alarms at locations listed in ``dismiss`` do not stop the run; they end
    the sojourn there and the UAV relocates, as after ``n`` resets.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    state = start if isinstance(start, StartState) else StartState(start)
    here = _loc_index(state.location)
    locs = (loc_a, loc_b)
    if state.traveling:
        if state.travel_left < 1:
            raise ValueError("a traveling start needs travel_left >= 1")
    elif not 0 <= state.w < locs[here].gamma:
        raise ValueError("start statistic must lie in [0, gamma)")
    if not 0 <= state.resets < locs[here].n:
        raise ValueError("start reset count must lie in [0, n)")

    changed = scenario.changed
    ci = _loc_index(changed) if changed is not None else -1
    global_clock = scenario.clock == "global"

    if z_script is not None:
        sources = [_ScriptSource(z_script.get(name, ()), name) for name in LOCATIONS]
    else:
        if rng is None:
            raise ValueError("need rng or z_script")
        sources = []
        for i, name in enumerate(LOCATIONS):
            nu = scenario.nu(name)
            if global_clock:
                sources.append(_RngSource(locs[i].model, rng, None, post=(nu == 0)))
            else:
                sources.append(_RngSource(locs[i].model, rng, nu))

    ist = np.zeros(L.N_ISTATE, dtype=np.int64)
    fst = np.zeros(L.N_FSTATE, dtype=np.float64)
    ipar = np.zeros(L.N_IPAR, dtype=np.int64)
    fpar = np.array([loc_a.gamma, loc_b.gamma], dtype=np.float64)
    ist[L.LOC] = here
    ist[L.PHASE] = L.TRAVEL if state.traveling else L.HOVER
    ist[L.TRAVEL_LEFT] = state.travel_left if state.traveling else 0
    ist[L.RESETS] = state.resets
    ist[L.ALARM_LOC] = -1
    ist[L.CHANGE_T] = -1
    fst[L.W] = 0.0 if state.traveling else state.w
    ipar[L.N_A], ipar[L.N_B] = loc_a.n, loc_b.n
    ipar[L.TAU] = uav.tau
    ipar[L.HORIZON_P] = horizon
    ipar[L.PAUSE_AT] = -1
    ipar[L.NU_LOCAL_A] = ipar[L.NU_LOCAL_B] = -1
    ipar[L.DISMISS_A] = "A" in dismiss
    ipar[L.DISMISS_B] = "B" in dismiss
    ipar[L.MAX_STEPS] = max_steps
    change_nu = scenario.nu(changed) if changed is not None else None
    if changed is not None:
        if global_clock:
            ist[L.CHANGE_T] = change_nu
            if change_nu > 0:
                ipar[L.PAUSE_AT] = change_nu
        elif change_nu == 0:
            ist[L.CHANGE_T] = 0
        else:
            ipar[L.NU_LOCAL_A + ci] = change_nu

    bufs = [np.empty(0), np.empty(0)]
    pos_slot = (L.POS_A, L.POS_B)
    while True:
        status = kernels.advance(ist, fst, bufs[0], bufs[1], ipar, fpar)
        if status == L.NEED_A or status == L.NEED_B:
            i = 0 if status == L.NEED_A else 1
            bufs[i] = sources[i].block()
            ist[pos_slot[i]] = 0
        elif status == L.PAUSED:
            ipar[L.PAUSE_AT] = -1
            src = sources[ci]
            if isinstance(src, _RngSource):
                src.post = True
                bufs[ci] = np.empty(0)
                ist[pos_slot[ci]] = 0
        elif status == L.TRUNCATED:
            raise TruncationError(f"SPRT cycle exceeded max_steps={max_steps}")
        else:
            break

    t = int(ist[L.T])
    hover = int(ist[L.HOVER_SLOTS])
    travel = int(ist[L.TRAVEL_SLOTS])
    change_t = int(ist[L.CHANGE_T])
    alarm_time = alarm_loc = delay = None
    false_alarm = False
    if status == L.ALARM:
        ai = int(ist[L.ALARM_LOC])
        alarm_time, alarm_loc = t, LOCATIONS[ai]
        if ai == ci:
            if global_clock:
                post = t > change_nu
            else:
                post = int(ist[L.OBS_A + ai]) > change_nu
            false_alarm = not post
            if post:
                delay = t - change_t
        else:
            false_alarm = True
    return RunResult(
        alarm_time=alarm_time,
        alarm_location=alarm_loc,
        energy=float(uav.e_sense * hover + uav.e_move * travel),
        detection_delay=delay,
        false_alarm=false_alarm,
        end_time=t,
        hover_slots=hover,
        travel_slots=travel,
        change_time=change_t if change_t >= 0 else None,
        censored=status == L.HORIZON,
        dismissed_alarms=int(ist[L.DISMISSED]),
        sojourn_count=(int(ist[L.SOJ_N_A]), int(ist[L.SOJ_N_B])),
        sojourn_sum=(int(ist[L.SOJ_SUM_A]), int(ist[L.SOJ_SUM_B])),
        sojourn_sumsq=(float(fst[L.SOJ_SQ_A]), float(fst[L.SOJ_SQ_B])),
    )


def simulate_many(
    loc_a: LocationConfig,
    loc_b: LocationConfig,
    uav: UavConfig,
    scenario: Scenario,
    start: Location | StartState,
    reps: int,
    seed: int,
    job: Sequence[int] = (0,),
    horizon: int = DEFAULT_HORIZON,
    threads: int = 1,
    dismiss: Sequence[Location] = (),
    purpose: int = seeding.RUN,
) -> list[RunResult]:
    """``reps`` independent runs; replication ``r`` uses the stream ``(seed, purpose, *job, r)``."""

    def work(block: range) -> list[RunResult]:
        return [
            simulate_run(loc_a, loc_b, uav, scenario, start, seeding.generator(seed, purpose, *job, r), horizon, dismiss=dismiss)
            for r in block
        ]

    out: list[RunResult] = []
    for part in ordered_map(work, chunks(reps, 64), threads):
        out.extend(part)
    return out


@dataclass
class TraceWriter:
    """Per-run CSV records: ``run_id,alarm_time,alarm_location,delay,energy,false_alarm``."""

    rows: list[str] = field(default_factory=lambda: ["run_id,alarm_time,alarm_location,delay,energy,false_alarm"])

    def add(self, run_id: int, r: RunResult) -> None:
        def fmt(v):
            return "" if v is None else str(v)

        self.rows.append(
            f"{run_id},{fmt(r.alarm_time)},{fmt(r.alarm_location)},{fmt(r.detection_delay)},{r.energy:.17g},{str(r.false_alarm).lower()}"
        )

    def text(self) -> str:
        return "\n".join(self.rows) + "\n"
