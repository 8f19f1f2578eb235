"""Slot layout of the flat state/parameter arrays shared by both kernel backends.

The state machine is driven through small contiguous ``int64``/``float64``
arrays so that the compiled and pure-Python kernels have one calling
convention. Keep these numbers in sync with ``_kernels.pyx``.
"""

# status codes returned by ``advance``
NEED_A = 0
NEED_B = 1
ALARM = 2
HORIZON = 3
PAUSED = 4
TRUNCATED = 5

HOVER = 0
TRAVEL = 1

# integer state
LOC = 0
PHASE = 1
TRAVEL_LEFT = 2
RESETS = 3
T = 4
HOVER_SLOTS = 5
TRAVEL_SLOTS = 6
POS_A = 7
POS_B = 8
OBS_A = 9
OBS_B = 10
CHANGE_T = 11
CUR_SOJ = 12
SOJ_N_A = 13
SOJ_N_B = 14
SOJ_SUM_A = 15
SOJ_SUM_B = 16
ALARM_LOC = 17
DISMISSED = 18
CYCLE_LEN = 19
N_ISTATE = 20

# float state
W = 0
SOJ_SQ_A = 1
SOJ_SQ_B = 2
N_FSTATE = 3

# integer parameters
N_A = 0
N_B = 1
TAU = 2
HORIZON_P = 3
PAUSE_AT = 4
NU_LOCAL_A = 5
NU_LOCAL_B = 6
DISMISS_A = 7
DISMISS_B = 8
MAX_STEPS = 9
N_IPAR = 10

# float parameters
GAMMA_A = 0
GAMMA_B = 1
N_FPAR = 2
