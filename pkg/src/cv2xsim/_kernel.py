"""Hot per-period simulation kernels.

Everything in this module operates on flat NumPy arrays so that the same
source compiles under numba's nopython mode and also runs as plain
Python/NumPy. The jitted path is the default; setting the environment
variable ``CV2XSIM_NO_NUMBA=1`` (or running without numba installed) selects
the interpreted fallback. Both paths consume pseudo-random draws in exactly
the same order, so simulation output is bit-identical either way.

Randomness is PCG32: one (state, increment) pair per agent, kept in a
(n_agents + 1, 2) uint64 array. Row layout: target vehicles first, then
attackers, then one spare channel/tie-break stream.

Draw-order contract (fixed; the object-level ops in sps.py / attacker.py and
the reference driver in engine.py follow the same order):

  init      per target v ascending: resource, C_s, [C_o]
            per attacker a ascending: resource, hold counter
  phase 1   per target v ascending, only when a one-shot is pending:
            candidate draw, C_o redraw
  phase 6   per target v ascending, on counter expiry:
            keep/reselect uniform, [candidate draw], C_s redraw, [C_o redraw]
  phase 7   per attacker a ascending, on hold expiry:
            target-set draw, hold redraw
"""

import functools
import os

import numpy as np

ENV_FLAG = "CV2XSIM_NO_NUMBA"


def _numba_enabled() -> bool:
    if os.environ.get(ENV_FLAG, "").strip() not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USING_NUMBA = _numba_enabled()

if USING_NUMBA:
    from numba import njit

    def _jit(fn):
        return njit(cache=True, nogil=True)(fn)

else:

    def _jit(fn):
        # NumPy warns on scalar uint64 wraparound; the PCG state update
        # overflows by design, so silence it on the interpreted path.
        @functools.wraps(fn)
        def wrapper(*args):
            with np.errstate(over="ignore"):
                return fn(*args)

        return wrapper


U64 = np.uint64
_PCG_MULT = U64(6364136223846793005)
_MASK32 = U64(0xFFFFFFFF)
_TWO32 = U64(0x100000000)
_SH18 = U64(18)
_SH27 = U64(27)
_SH59 = U64(59)
_B32 = U64(32)
_B31 = U64(31)
_INV32 = 1.0 / 4294967296.0


@_jit
def pcg32_next(states, row):
    """Advance stream `row` and return the next 32-bit output (as uint64)."""
    old = states[row, 0]
    states[row, 0] = old * _PCG_MULT + states[row, 1]
    xorshifted = (((old >> _SH18) ^ old) >> _SH27) & _MASK32
    rot = old >> _SH59
    return ((xorshifted >> rot) | (xorshifted << ((_B32 - rot) & _B31))) & _MASK32


@_jit
def rand_index(states, row, n):
    """Exactly uniform draw from [0, n) via Lemire multiply with rejection."""
    un = U64(n)
    threshold = (_TWO32 - un) % un
    while True:
        m = pcg32_next(states, row) * un
        if (m & _MASK32) >= threshold:
            return np.int64(m >> _B32)


@_jit
def rand_int(states, row, lo, hi):
    """Uniform integer on the closed interval [lo, hi]."""
    return lo + rand_index(states, row, hi - lo + 1)


@_jit
def rand_unit(states, row):
    """Uniform float64 in [0, 1) with 32-bit resolution."""
    return np.float64(pcg32_next(states, row)) * _INV32


@_jit
def pick_candidate(states, row, usage, own, floor_n, cand, mark):
    """Uniform draw from the sensing-based reselection candidate pool.

    The pool is every resource with zero observed usage, minus the caller's
    own grant. When that leaves fewer than floor_n entries it is topped up
    with the least-used busy resources (ties to the lowest index); the own
    grant re-enters only when no other resource is left.
    """
    m = usage.shape[0]
    for j in range(m):
        mark[j] = False
    n = 0
    for j in range(m):
        if usage[j] == 0 and j != own:
            cand[n] = j
            mark[j] = True
            n += 1
    while n < floor_n:
        best = -1
        for j in range(m):
            if j == own or mark[j] or usage[j] == 0:
                continue
            if best < 0 or usage[j] < usage[best]:
                best = j
        if best < 0:
            break
        cand[n] = best
        mark[best] = True
        n += 1
    if n < floor_n:
        cand[n] = own
        n += 1
    return cand[rand_index(states, row, n)]


@_jit
def run_periods(
    rng,
    n_targets,
    n_attackers,
    n_resources,
    sps_lo,
    sps_hi,
    oneshot_on,
    oneshot_lo,
    oneshot_hi,
    p_resel,
    att_lo,
    att_hi,
    window,
    sensing_targets,
    sensing_oneshot,
    cand_floor,
    sense_any,
    extra_co_decr,
    sim_periods,
    warmup,
    trace_on,
    tr_res,
    tr_shot,
    tr_cs,
    tr_co,
    tr_att_res,
    tr_att_hold,
    tr_s_size,
):
    """Run one full replication and return per-transmitter metric counts.

    Per period, in order: (1) target transmit decisions, (2) attacker
    transmissions, (3) collision resolution, (4) metric recording once the
    warm-up has passed, (5) sensing-ledger update, (6) target counter
    advance, (7) attacker hold advance.

    Returns (rx_events, ipg_hist, aoi_hist) where rx_events counts delivered
    target-periods and the histograms are keyed in periods. Because the
    network is fully connected, every receiver observes the same reception
    process per transmitter; the caller scales by (n_targets - 1) to obtain
    ordered-pair totals.
    """
    V = n_targets
    A = n_attackers
    M = n_resources

    measured = sim_periods - warmup
    if measured < 0:
        measured = 0
    hsize = measured + 1
    ipg_hist = np.zeros(hsize, np.int64)
    aoi_hist = np.zeros(hsize, np.int64)
    rx_events = 0

    cur = np.empty(V, np.int64)
    cs = np.empty(V, np.int64)
    co = np.zeros(V, np.int64)
    pending = np.zeros(V, np.bool_)
    tx = np.empty(V, np.int64)
    shot = np.zeros(V, np.bool_)
    att = np.empty(A, np.int64)
    hold = np.empty(A, np.int64)

    ring = np.zeros((window, M), np.uint8)
    usage = np.zeros(M, np.int64)
    head = 0
    filled = 0

    tgt_cnt = np.zeros(M, np.int64)
    att_cnt = np.zeros(M, np.int64)
    touched = np.empty(V + A, np.int64)
    cand = np.empty(M, np.int64)
    mark = np.zeros(M, np.bool_)

    last_rx = np.full(V, -1, np.int64)
    last_gen = np.full(V, warmup - 1, np.int64)

    for v in range(V):
        cur[v] = rand_index(rng, v, M)
        cs[v] = rand_int(rng, v, sps_lo, sps_hi)
        if oneshot_on:
            co[v] = rand_int(rng, v, oneshot_lo, oneshot_hi)
    for a in range(A):
        att[a] = rand_index(rng, V + a, M)
        hold[a] = rand_int(rng, V + a, att_lo, att_hi)

    for t in range(sim_periods):
        # phase 1: transmit decisions
        for v in range(V):
            if pending[v]:
                if sensing_oneshot:
                    tx[v] = pick_candidate(rng, v, usage, cur[v], cand_floor, cand, mark)
                else:
                    tx[v] = rand_index(rng, v, M)
                shot[v] = True
                co[v] = rand_int(rng, v, oneshot_lo, oneshot_hi)
                pending[v] = False
            else:
                tx[v] = cur[v]
                shot[v] = False

        # phases 2-3: attackers jam their held resource; resolve collisions
        ntouch = 0
        for v in range(V):
            r = tx[v]
            if tgt_cnt[r] == 0 and att_cnt[r] == 0:
                touched[ntouch] = r
                ntouch += 1
            tgt_cnt[r] += 1
        for a in range(A):
            r = att[a]
            if tgt_cnt[r] == 0 and att_cnt[r] == 0:
                touched[ntouch] = r
                ntouch += 1
            att_cnt[r] += 1
            if trace_on:
                tr_att_res[t, a] = np.int32(r)

        # phase 4: metrics, measured periods only
        if t >= warmup:
            for v in range(V):
                r = tx[v]
                if tgt_cnt[r] == 1 and att_cnt[r] == 0:
                    rx_events += 1
                    if last_rx[v] >= 0:
                        ipg_hist[t - last_rx[v]] += 1
                    last_rx[v] = t
                    last_gen[v] = t
            for v in range(V):
                aoi_hist[t - last_gen[v]] += 1

        # phase 5: sensing ledger row (decodable-only unless energy sensing)
        if filled == window:
            for j in range(M):
                if ring[head, j] != 0:
                    usage[j] -= 1
                    ring[head, j] = 0
        else:
            filled += 1
        for k in range(ntouch):
            r = touched[k]
            if sense_any or (tgt_cnt[r] == 1 and att_cnt[r] == 0):
                ring[head, r] = 1
                usage[r] += 1
        head += 1
        if head == window:
            head = 0

        if trace_on:
            ssz = np.int32(0)
            for j in range(M):
                if usage[j] > 0:
                    ssz += 1
            tr_s_size[t] = ssz

        for k in range(ntouch):
            r = touched[k]
            tgt_cnt[r] = 0
            att_cnt[r] = 0

        # phase 6: SPS / one-shot counter advance
        for v in range(V):
            cs[v] -= 1
            if cs[v] < 0:
                cs[v] = 0
            if oneshot_on:
                co[v] -= 1
                if co[v] < 0:
                    co[v] = 0
                if cs[v] == 0 and co[v] > 0:
                    if rand_unit(rng, v) < p_resel:
                        if sensing_targets:
                            cur[v] = pick_candidate(rng, v, usage, cur[v], cand_floor, cand, mark)
                        else:
                            cur[v] = rand_index(rng, v, M)
                        cs[v] = rand_int(rng, v, sps_lo, sps_hi)
                        co[v] = rand_int(rng, v, oneshot_lo, oneshot_hi)
                    else:
                        cs[v] = rand_int(rng, v, sps_lo, sps_hi)
                        if extra_co_decr:
                            co[v] -= 1
                            if co[v] < 0:
                                co[v] = 0
                elif co[v] == 0 and cs[v] > 0:
                    pending[v] = True
                elif cs[v] == 0 and co[v] == 0:
                    if rand_unit(rng, v) < p_resel:
                        if sensing_targets:
                            cur[v] = pick_candidate(rng, v, usage, cur[v], cand_floor, cand, mark)
                        else:
                            cur[v] = rand_index(rng, v, M)
                    cs[v] = rand_int(rng, v, sps_lo, sps_hi)
                    co[v] = rand_int(rng, v, oneshot_lo, oneshot_hi)
            else:
                if cs[v] == 0:
                    if rand_unit(rng, v) < p_resel:
                        if sensing_targets:
                            cur[v] = pick_candidate(rng, v, usage, cur[v], cand_floor, cand, mark)
                        else:
                            cur[v] = rand_index(rng, v, M)
                    cs[v] = rand_int(rng, v, sps_lo, sps_hi)

        # phase 7: attacker hold advance (always reselect on expiry)
        for a in range(A):
            hold[a] -= 1
            if hold[a] == 0:
                ns = 0
                for j in range(M):
                    if usage[j] > 0:
                        cand[ns] = j
                        ns += 1
                if ns > 0:
                    att[a] = cand[rand_index(rng, V + a, ns)]
                else:
                    att[a] = rand_index(rng, V + a, M)
                hold[a] = rand_int(rng, V + a, att_lo, att_hi)

        if trace_on:
            for v in range(V):
                tr_res[t, v] = np.int32(tx[v])
                tr_shot[t, v] = np.int8(1) if shot[v] else np.int8(0)
                tr_cs[t, v] = np.int32(cs[v])
                tr_co[t, v] = np.int32(co[v])
            for a in range(A):
                tr_att_hold[t, a] = np.int32(hold[a])

    return rx_events, ipg_hist, aoi_hist
