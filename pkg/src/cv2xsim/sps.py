"""Target-vehicle scheduling state machine.

Each vehicle persistently transmits on one granted resource and carries a
reselection counter C_s; when one-shot transmissions are enabled it also
carries an independent counter C_o whose expiry diverts a single
transmission onto a freshly selected resource while the grant stays put.

These object-level operations are the readable reference implementation; the
compiled kernel in _kernel.py fuses the same logic and consumes random draws
in the same order, which the test suite checks end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import ScenarioConfig
from .ledger import UsageLedger
from .rng import Pcg32


@dataclass
class VehicleState:
    vehicle_id: int
    current_resource: int
    cs: int                      # remaining SPS reselection counter
    co: int = 0                  # remaining one-shot counter (when enabled)
    pending_oneshot: bool = False
    sensing: UsageLedger = None  # observation window, shared across agents


@dataclass(frozen=True)
class TxDecision:
    resource: int
    is_oneshot: bool


def draw_counter(counter_range: tuple[int, int], rng: Pcg32) -> int:
    """Uniform counter draw from a closed positive interval."""
    lo, hi = counter_range
    if not 0 < lo <= hi:
        raise ValueError(f"invalid counter range {counter_range}")
    return rng.rand_int(lo, hi)


def candidate_floor(min_fraction: float, num_resources: int) -> int:
    """Minimum candidate-pool size: ceil(min_fraction * M), float-noise safe."""
    return max(1, math.ceil(min_fraction * num_resources - 1e-9))


def sensing_candidates(ledger: UsageLedger, own_resource: int, num_resources: int,
                       min_fraction: float) -> list[int]:
    """Reselection candidate pool, in canonical draw order.

    All resources unobserved over the window except the caller's own grant,
    ascending; topped up with the least-observed busy resources (ties to the
    lowest index) whenever that falls short of the minimum pool size. The own
    grant re-enters only when no other resource remains.
    """
    usage = ledger.usage_vector()
    floor_n = candidate_floor(min_fraction, num_resources)
    cand = [j for j in range(num_resources) if usage[j] == 0 and j != own_resource]
    if len(cand) < floor_n:
        busy = sorted(
            (j for j in range(num_resources) if usage[j] > 0 and j != own_resource),
            key=lambda j: (usage[j], j),
        )
        cand.extend(busy[: floor_n - len(cand)])
        if len(cand) < floor_n:
            cand.append(own_resource)
    return cand


def select_resource(state: VehicleState, policy: str, cfg: ScenarioConfig,
                    rng: Pcg32) -> int:
    """Draw a resource: uniform over all M, or uniform over the sensing pool."""
    if policy == "uniform":
        return rng.rand_index(cfg.num_resources)
    cand = sensing_candidates(state.sensing, state.current_resource,
                              cfg.num_resources, cfg.candidate_min_fraction)
    return cand[rng.rand_index(len(cand))]


def tx_decision(state: VehicleState, cfg: ScenarioConfig, rng: Pcg32) -> TxDecision:
    """Choose this period's transmit resource (mutates `state`).

    A pending one-shot transmits on a freshly selected resource, restarts
    C_o, and leaves the persistent grant untouched; otherwise the grant is
    used as-is.
    """
    if state.pending_oneshot:
        resource = select_resource(state, cfg.oneshot_policy, cfg, rng)
        state.pending_oneshot = False
        state.co = draw_counter(cfg.oneshot_range, rng)
        return TxDecision(resource, True)
    return TxDecision(state.current_resource, False)


def advance_after_tx(state: VehicleState, cfg: ScenarioConfig, rng: Pcg32) -> str:
    """Decrement the counters after a transmission and resolve expiries.

    Exactly one of three expiry cases can fire per call (mutates `state`;
    returns which case did, for conformance checks):

    - "sps_expiry":     C_s hit zero alone; reselect the grant with
                        probability 1 - keep_prob (restarting both counters),
                        otherwise restart C_s only.
    - "oneshot_expiry": C_o hit zero alone; flag the next transmission as a
                        one-shot (C_o restarts inside tx_decision).
    - "both_expiry":    simultaneous expiry; both counters restart and the
                        keep/reselect draw decides the grant.

    With one-shot disabled only the C_s logic applies.
    """
    p_resel = cfg.reselect_prob
    state.cs = max(state.cs - 1, 0)

    if not cfg.oneshot_enabled:
        if state.cs == 0:
            if rng.rand_unit() < p_resel:
                state.current_resource = select_resource(state, cfg.selection_policy, cfg, rng)
            state.cs = draw_counter(cfg.sps_range, rng)
            return "sps_expiry"
        return "tick"

    state.co = max(state.co - 1, 0)
    if state.cs == 0 and state.co > 0:
        if rng.rand_unit() < p_resel:
            state.current_resource = select_resource(state, cfg.selection_policy, cfg, rng)
            state.cs = draw_counter(cfg.sps_range, rng)
            state.co = draw_counter(cfg.oneshot_range, rng)
        else:
            state.cs = draw_counter(cfg.sps_range, rng)
            if cfg.extra_co_decrement_on_keep:
                state.co = max(state.co - 1, 0)
        return "sps_expiry"
    if state.co == 0 and state.cs > 0:
        state.pending_oneshot = True
        return "oneshot_expiry"
    if state.cs == 0 and state.co == 0:
        if rng.rand_unit() < p_resel:
            state.current_resource = select_resource(state, cfg.selection_policy, cfg, rng)
        state.cs = draw_counter(cfg.sps_range, rng)
        state.co = draw_counter(cfg.oneshot_range, rng)
        return "both_expiry"
    return "tick"
