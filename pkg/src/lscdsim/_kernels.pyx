# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same contract as ``_kernels_py``; see ``_layout`` for slots."""
from libc.stdint cimport int64_t, int8_t

NAME = "cython"

cdef enum:
    NEED_A = 0
    NEED_B = 1
    ALARM = 2
    HORIZON = 3
    PAUSED = 4
    TRUNCATED = 5
    HOVER = 0
    TRAVEL = 1

# keep in sync with _layout.py
# slot indices as hard-coded below; a test checks them against _layout
LAYOUT = dict(
    NEED_A=0, NEED_B=1, ALARM=2, HORIZON=3, PAUSED=4, TRUNCATED=5, HOVER=0, TRAVEL=1,
    N_ISTATE=20, N_FSTATE=3, N_IPAR=10, N_FPAR=2,
    LOC=0, PHASE=1, TRAVEL_LEFT=2, RESETS=3, T=4, HOVER_SLOTS=5, TRAVEL_SLOTS=6, POS_A=7, POS_B=8,
    OBS_A=9, OBS_B=10, CHANGE_T=11, CUR_SOJ=12, SOJ_N_A=13, SOJ_N_B=14, SOJ_SUM_A=15, SOJ_SUM_B=16,
    ALARM_LOC=17, DISMISSED=18, CYCLE_LEN=19, W=0, SOJ_SQ_A=1, SOJ_SQ_B=2,
    N_A=0, N_B=1, TAU=2, HORIZON_P=3, PAUSE_AT=4, NU_LOCAL_A=5, NU_LOCAL_B=6, DISMISS_A=7, DISMISS_B=8,
    MAX_STEPS=9, GAMMA_A=0, GAMMA_B=1,
)


cdef int _advance(int64_t[::1] ist, double[::1] fst,
                  const double[::1] za, const double[::1] zb,
                  const int64_t[::1] ipar, const double[::1] fpar) noexcept nogil:
    cdef int64_t loc = ist[0], phase = ist[1], travel_left = ist[2]
    cdef int64_t resets = ist[3], t = ist[4], hover = ist[5], travel = ist[6]
    cdef int64_t pos0 = ist[7], pos1 = ist[8], obs0 = ist[9], obs1 = ist[10]
    cdef int64_t change_t = ist[11], cur_soj = ist[12]
    cdef int64_t sn0 = ist[13], sn1 = ist[14], ss0 = ist[15], ss1 = ist[16]
    cdef int64_t alarm_loc = ist[17], dismissed = ist[18], cycle_len = ist[19]
    cdef double w = fst[0], sq0 = fst[1], sq1 = fst[2]

    cdef int64_t n0 = ipar[0], n1 = ipar[1], tau = ipar[2], horizon = ipar[3]
    cdef int64_t pause_at = ipar[4], nu0 = ipar[5], nu1 = ipar[6]
    cdef int64_t dis0 = ipar[7], dis1 = ipar[8], max_steps = ipar[9]
    cdef double g0 = fpar[0], g1 = fpar[1]

    cdef Py_ssize_t len0 = za.shape[0], len1 = zb.shape[0]
    cdef int64_t step, nl, nul, disl
    cdef double z, gl
    cdef int status, depart

    while True:
        if t >= horizon:
            status = HORIZON
            break
        if pause_at >= 0 and t == pause_at:
            status = PAUSED
            break
        if phase == TRAVEL:
            step = travel_left
            if horizon - t < step:
                step = horizon - t
            if pause_at > t and pause_at - t < step:
                step = pause_at - t
            t += step
            travel += step
            travel_left -= step
            if travel_left == 0:
                loc = 1 - loc
                phase = HOVER
                w = 0.0
                resets = 0
                cur_soj = 0
                cycle_len = 0
            continue
        if loc == 0:
            if pos0 >= len0:
                status = NEED_A
                break
            z = za[pos0]
            pos0 += 1
            obs0 += 1
            if obs0 == nu0:
                change_t = t + 1
            gl = g0
            nl = n0
            disl = dis0
        else:
            if pos1 >= len1:
                status = NEED_B
                break
            z = zb[pos1]
            pos1 += 1
            obs1 += 1
            if obs1 == nu1:
                change_t = t + 1
            gl = g1
            nl = n1
            disl = dis1
        t += 1
        hover += 1
        cur_soj += 1
        cycle_len += 1
        w += z
        depart = 0
        if w >= gl:
            if loc == 0:
                sn0 += 1
                ss0 += cur_soj
                sq0 += <double>cur_soj * cur_soj
            else:
                sn1 += 1
                ss1 += cur_soj
                sq1 += <double>cur_soj * cur_soj
            cur_soj = 0
            if disl == 0:
                alarm_loc = loc
                status = ALARM
                break
            dismissed += 1
            depart = 1
        elif w <= 0.0:
            w = 0.0
            cycle_len = 0
            resets += 1
            if resets >= nl:
                if loc == 0:
                    sn0 += 1
                    ss0 += cur_soj
                    sq0 += <double>cur_soj * cur_soj
                else:
                    sn1 += 1
                    ss1 += cur_soj
                    sq1 += <double>cur_soj * cur_soj
                cur_soj = 0
                depart = 1
        elif cycle_len >= max_steps:
            status = TRUNCATED
            break
        if depart:
            w = 0.0
            resets = 0
            cycle_len = 0
            if tau == 0:
                loc = 1 - loc
            else:
                phase = TRAVEL
                travel_left = tau

    ist[0] = loc; ist[1] = phase; ist[2] = travel_left; ist[3] = resets
    ist[4] = t; ist[5] = hover; ist[6] = travel; ist[7] = pos0; ist[8] = pos1
    ist[9] = obs0; ist[10] = obs1; ist[11] = change_t; ist[12] = cur_soj
    ist[13] = sn0; ist[14] = sn1; ist[15] = ss0; ist[16] = ss1
    ist[17] = alarm_loc; ist[18] = dismissed; ist[19] = cycle_len
    fst[0] = w; fst[1] = sq0; fst[2] = sq1
    return status


def advance(int64_t[::1] ist, double[::1] fst, const double[::1] za,
            const double[::1] zb, const int64_t[::1] ipar, const double[::1] fpar):
    cdef int status
    with nogil:
        status = _advance(ist, fst, za, zb, ipar, fpar)
    return status


def run_cycles(const double[::1] z, double gamma, double w0, Py_ssize_t max_cycles,
               Py_ssize_t max_steps, int8_t[::1] out_exit, int64_t[::1] out_dur,
               double[::1] out_term, Py_ssize_t offset):
    cdef Py_ssize_t i, k, done = 0, consumed = 0, d = 0, nz = z.shape[0]
    cdef double s = w0
    cdef bint truncated = False
    with nogil:
        for i in range(nz):
            if done >= max_cycles:
                break
            s += z[i]
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
                truncated = True
                break
    return done, consumed, truncated


def first_ascents(const double[::1] z, int64_t[::1] out, Py_ssize_t offset):
    cdef Py_ssize_t i, done = 0, consumed = 0, last = -1, room = out.shape[0] - offset
    with nogil:
        for i in range(z.shape[0]):
            if done >= room:
                break
            if z[i] > 0.0:
                out[offset + done] = i - last
                last = i
                done += 1
                consumed = i + 1
    return done, consumed
