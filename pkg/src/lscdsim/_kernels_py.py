"""Pure-Python kernels; reference semantics for the compiled ``_kernels``."""
from __future__ import annotations

import numpy as np

from . import _layout as L

NAME = "python"


def advance(ist, fst, za, zb, ipar, fpar) -> int:
    """Run the two-location state machine until it needs data or stops.

    Returns one of the ``_layout`` status codes. State is updated in place.
    """
    loc = int(ist[L.LOC])
    phase = int(ist[L.PHASE])
    travel_left = int(ist[L.TRAVEL_LEFT])
    resets = int(ist[L.RESETS])
    t = int(ist[L.T])
    hover = int(ist[L.HOVER_SLOTS])
    travel = int(ist[L.TRAVEL_SLOTS])
    pos = [int(ist[L.POS_A]), int(ist[L.POS_B])]
    obs = [int(ist[L.OBS_A]), int(ist[L.OBS_B])]
    change_t = int(ist[L.CHANGE_T])
    cur_soj = int(ist[L.CUR_SOJ])
    soj_n = [int(ist[L.SOJ_N_A]), int(ist[L.SOJ_N_B])]
    soj_sum = [int(ist[L.SOJ_SUM_A]), int(ist[L.SOJ_SUM_B])]
    alarm_loc = int(ist[L.ALARM_LOC])
    dismissed = int(ist[L.DISMISSED])
    cycle_len = int(ist[L.CYCLE_LEN])
    w = float(fst[L.W])
    soj_sq = [float(fst[L.SOJ_SQ_A]), float(fst[L.SOJ_SQ_B])]

    n = (int(ipar[L.N_A]), int(ipar[L.N_B]))
    tau = int(ipar[L.TAU])
    horizon = int(ipar[L.HORIZON_P])
    pause_at = int(ipar[L.PAUSE_AT])
    nu_local = (int(ipar[L.NU_LOCAL_A]), int(ipar[L.NU_LOCAL_B]))
    dismiss = (bool(ipar[L.DISMISS_A]), bool(ipar[L.DISMISS_B]))
    max_steps = int(ipar[L.MAX_STEPS])
    gamma = (float(fpar[L.GAMMA_A]), float(fpar[L.GAMMA_B]))
    bufs = (za.tolist(), zb.tolist())

    while True:
        if t >= horizon:
            status = L.HORIZON
            break
        if pause_at >= 0 and t == pause_at:
            status = L.PAUSED
            break
        if phase == L.TRAVEL:
            step = min(travel_left, horizon - t)
            if pause_at > t:
                step = min(step, pause_at - t)
            t += step
            travel += step
            travel_left -= step
            if travel_left == 0:
                loc = 1 - loc
                phase = L.HOVER
                w = 0.0
                resets = 0
                cur_soj = 0
                cycle_len = 0
            continue
        buf = bufs[loc]
        p = pos[loc]
        if p >= len(buf):
            status = L.NEED_A if loc == 0 else L.NEED_B
            break
        z = buf[p]
        pos[loc] = p + 1
        t += 1
        hover += 1
        cur_soj += 1
        cycle_len += 1
        obs[loc] += 1
        if obs[loc] == nu_local[loc]:
            change_t = t
        w += z
        depart = False
        if w >= gamma[loc]:
            soj_n[loc] += 1
            soj_sum[loc] += cur_soj
            soj_sq[loc] += float(cur_soj) * cur_soj
            cur_soj = 0
            if not dismiss[loc]:
                alarm_loc = loc
                status = L.ALARM
                break
            dismissed += 1
            depart = True
        elif w <= 0.0:
            w = 0.0
            cycle_len = 0
            resets += 1
            if resets >= n[loc]:
                soj_n[loc] += 1
                soj_sum[loc] += cur_soj
                soj_sq[loc] += float(cur_soj) * cur_soj
                cur_soj = 0
                depart = True
        elif cycle_len >= max_steps:
            status = L.TRUNCATED
            break
        if depart:
            w = 0.0
            resets = 0
            cycle_len = 0
            if tau == 0:
                loc = 1 - loc
            else:
                phase = L.TRAVEL
                travel_left = tau

    ist[L.LOC] = loc
    ist[L.PHASE] = phase
    ist[L.TRAVEL_LEFT] = travel_left
    ist[L.RESETS] = resets
    ist[L.T] = t
    ist[L.HOVER_SLOTS] = hover
    ist[L.TRAVEL_SLOTS] = travel
    ist[L.POS_A], ist[L.POS_B] = pos
    ist[L.OBS_A], ist[L.OBS_B] = obs
    ist[L.CHANGE_T] = change_t
    ist[L.CUR_SOJ] = cur_soj
    ist[L.SOJ_N_A], ist[L.SOJ_N_B] = soj_n
    ist[L.SOJ_SUM_A], ist[L.SOJ_SUM_B] = soj_sum
    ist[L.ALARM_LOC] = alarm_loc
    ist[L.DISMISSED] = dismissed
    ist[L.CYCLE_LEN] = cycle_len
    fst[L.W] = w
    fst[L.SOJ_SQ_A], fst[L.SOJ_SQ_B] = soj_sq
    return status


def run_cycles(z, gamma, w0, max_cycles, max_steps, out_exit, out_dur, out_term, offset):
    """Run back-to-back one-sided SPRT cycles from ``w0`` over the stream ``z``.

    Writes outcomes to ``out_*[offset:]`` and returns
    ``(cycles_done, consumed, truncated)``; ``consumed`` stops at the end of
    the last completed cycle.
    """
    zs = z.tolist()
    done = 0
    consumed = 0
    s = w0
    d = 0
    for i, zi in enumerate(zs):
        if done >= max_cycles:
            break
        s += zi
        d += 1
        if s >= gamma or s <= 0.0:
            k = offset + done
            out_exit[k] = 1 if s >= gamma else 0
            out_dur[k] = d
            out_term[k] = s
            done += 1
            consumed = i + 1
            s = w0
            d = 0
        elif d >= max_steps:
            return done, consumed, True
    return done, consumed, False


def first_ascents(z, out, offset):
    """Ladder epochs of the reflected walk: gaps between strictly positive draws.

    Returns ``(count, consumed)``.
    """
    idx = np.flatnonzero(np.asarray(z) > 0.0)
    room = len(out) - offset
    idx = idx[:room]
    if len(idx) == 0:
        return 0, 0
    gaps = np.diff(np.concatenate(([-1], idx)))
    out[offset:offset + len(gaps)] = gaps
    return len(gaps), int(idx[-1]) + 1
