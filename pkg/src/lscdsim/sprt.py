"""One-sided SPRT cycles: the clamped CUSUM update, single cycles from an
arbitrary start, batched cycle simulation and ladder epochs."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from ._backend import kernels
from .models import DistributionModel, Regime

DEFAULT_MAX_STEPS = 10_000_000
_MAX_BLOCK = 1 << 20


class TruncationError(RuntimeError):
    """A walk ran past ``max_steps`` without leaving the continuation region."""


class Exit(enum.Enum):
    TOP = "HitTop"
    BOTTOM = "HitBottom"


@dataclass(frozen=True)
class CycleOutcome:
    exit: Exit
    duration: int
    terminal: float


@dataclass(frozen=True)
class CycleBatch:
    """Outcomes of consecutive independent cycles (``top`` is the HitTop indicator)."""

    top: np.ndarray
    duration: np.ndarray
    terminal: np.ndarray

    def __len__(self) -> int:
        return len(self.top)


def cusum_update(w: float, z: float) -> float:
    if w < 0:
        raise ValueError(f"CUSUM statistic must be nonnegative, got {w}")
    if not math.isfinite(z):
        raise ValueError(f"LLR increment must be finite, got {z}")
    return max(w + z, 0.0)


def _llr_stream(model: DistributionModel | None, regime: Regime, rng, z_stream, block: int = 256) -> Iterator[float]:
    if z_stream is not None:
        yield from (float(z) for z in z_stream)
        return
    if model is None or rng is None:
        raise ValueError("need either a model and rng, or an injected z_stream")
    while True:
        yield from model.sample_llr(regime, rng, block).tolist()


def run_cycle(
    model: DistributionModel | None,
    regime: Regime,
    gamma: float,
    w0: float = 0.0,
    rng: np.random.Generator | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    z_stream: Iterable[float] | None = None,
) -> CycleOutcome:
    """One SPRT cycle: the unclamped walk from ``w0`` until it leaves ``(0, gamma)``.

    Pass ``z_stream`` to script the LLR increments instead of sampling.
    """
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    if not 0 <= w0 < gamma:
        raise ValueError(f"w0 must lie in [0, gamma), got {w0}")
    s = w0
    for d, z in enumerate(_llr_stream(model, regime, rng, z_stream), start=1):
        s += z
        if s >= gamma:
            return CycleOutcome(Exit.TOP, d, s)
        if s <= 0.0:
            return CycleOutcome(Exit.BOTTOM, d, s)
        if d >= max_steps:
            raise TruncationError(f"cycle exceeded max_steps={max_steps}")
    raise ValueError("z_stream exhausted before the cycle ended")


def first_ascent_time(
    model: DistributionModel | None,
    rng: np.random.Generator | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    z_stream: Iterable[float] | None = None,
) -> int:
    """First ``t`` at which the reflected statistic started at 0 is strictly positive.

    Draws are post-change; under the reflected recursion this is the index of
    the first strictly positive increment.
    """
    for t, z in enumerate(_llr_stream(model, Regime.POST, rng, z_stream), start=1):
        if z > 0:
            return t
        if t >= max_steps:
            raise TruncationError(f"first ascent exceeded max_steps={max_steps}")
    raise ValueError("z_stream exhausted before the first ascent")


def simulate_cycles(
    model: DistributionModel,
    regime: Regime,
    gamma: float,
    w0: float,
    count: int,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> CycleBatch:
    """``count`` independent cycles from ``w0``, consuming one LLR stream in order.

    The first ``k`` cycles depend only on the stream, never on ``count``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    if not 0 <= w0 < gamma:
        raise ValueError(f"w0 must lie in [0, gamma), got {w0}")
    top = np.zeros(count, dtype=np.int8)
    dur = np.zeros(count, dtype=np.int64)
    term = np.zeros(count, dtype=np.float64)
    done = 0
    carry = np.empty(0)
    while done < count:
        block = int(min(_MAX_BLOCK, 2 * (count - done) + 64))
        z = np.ascontiguousarray(np.concatenate((carry, model.sample_llr(regime, rng, block))))
        k, consumed, truncated = kernels.run_cycles(z, float(gamma), float(w0), count - done, max_steps, top, dur, term, done)
        if truncated:
            raise TruncationError(f"cycle exceeded max_steps={max_steps}")
        done += k
        carry = z[consumed:]
        if len(carry) >= max_steps:
            raise TruncationError(f"cycle exceeded max_steps={max_steps}")
    return CycleBatch(top.astype(bool), dur, term)


def simulate_first_ascents(model: DistributionModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. first-ascent times under the post-change law."""
    out = np.zeros(count, dtype=np.int64)
    done = 0
    carry = 0
    while done < count:
        z = np.ascontiguousarray(model.sample_llr(Regime.POST, rng, int(min(_MAX_BLOCK, 2 * (count - done) + 64))))
        k, consumed = kernels.first_ascents(z, out, done)
        if k:
            out[done] += carry
            carry = len(z) - consumed
        else:
            carry += len(z)
        done += k
    return out
