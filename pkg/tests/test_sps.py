import numpy as np
import pytest

from cv2xsim import Pcg32, UsageLedger, validate_config
from cv2xsim.engine import run_replication_with_trace
from cv2xsim.sps import (
    VehicleState,
    advance_after_tx,
    candidate_floor,
    draw_counter,
    select_resource,
    sensing_candidates,
    tx_decision,
)


def make_ledger(num_resources, busy_rows):
    ledger = UsageLedger(window_periods=max(len(busy_rows), 1), num_resources=num_resources)
    for row in busy_rows:
        ledger.record_period(row)
    return ledger


def make_vehicle(resource=0, cs=5, co=0, pending=False, ledger=None, num_resources=10):
    if ledger is None:
        ledger = make_ledger(num_resources, [])
    return VehicleState(vehicle_id=0, current_resource=resource, cs=cs, co=co,
                        pending_oneshot=pending, sensing=ledger)


# --- draw_counter -----------------------------------------------------------

def test_draw_counter_uniform_over_5_15():
    rng = Pcg32.from_seed(2024)
    counts = np.zeros(11, dtype=np.int64)
    n = 1_000_000
    for _ in range(n):
        counts[draw_counter((5, 15), rng) - 5] += 1
    expected = n / 11
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # df=10; 29.6 is the p=0.001 critical point
    assert chi2 < 35.0
    assert np.all(np.abs(counts / n - 1 / 11) < 0.002)


def test_draw_counter_degenerate_interval():
    rng = Pcg32.from_seed(1)
    assert all(draw_counter((4, 4), rng) == 4 for _ in range(50))


def test_draw_counter_mean_matches_discrete_uniform():
    # analytic oracle: mean of the discrete uniform on [2, 6] is (2 + 6) / 2
    rng = Pcg32.from_seed(99)
    n = 1_000_000
    total = sum(draw_counter((2, 6), rng) for _ in range(n))
    assert abs(total / n - 4.0) < 0.01


def test_draw_counter_rejects_bad_range():
    rng = Pcg32.from_seed(0)
    with pytest.raises(ValueError):
        draw_counter((5, 3), rng)
    with pytest.raises(ValueError):
        draw_counter((0, 3), rng)


# --- sensing candidates -----------------------------------------------------

def test_candidate_floor_avoids_float_noise():
    assert candidate_floor(0.2, 5) == 1
    assert candidate_floor(0.2, 100) == 20
    assert candidate_floor(1.0, 7) == 7
    assert candidate_floor(0.21, 5) == 2
    assert candidate_floor(0.001, 5) == 1


def test_candidates_exclude_busy_and_own():
    ledger = make_ledger(100, [{5, 7}])
    cand = sensing_candidates(ledger, own_resource=3, num_resources=100, min_fraction=0.2)
    assert len(cand) == 97
    assert set(cand) == set(range(100)) - {3, 5, 7}


def test_candidates_topped_up_by_least_used():
    # every resource busy; usage totals 1..5 by index; the floor of one entry
    # forces the least-used resource in
    ledger = UsageLedger(window_periods=5, num_resources=5)
    rows = [{4}, {3, 4}, {2, 3, 4}, {1, 2, 3, 4}, {0, 1, 2, 3, 4}]
    for row in rows:
        ledger.record_period(row)
    assert [ledger.usage_total(j) for j in range(5)] == [1, 2, 3, 4, 5]
    cand = sensing_candidates(ledger, own_resource=4, num_resources=5, min_fraction=0.2)
    assert cand == [0]


def test_candidates_all_free():
    ledger = make_ledger(10, [])
    cand = sensing_candidates(ledger, own_resource=0, num_resources=10, min_fraction=0.2)
    assert cand == list(range(1, 10))


def test_topup_ties_break_by_lowest_index():
    ledger = UsageLedger(window_periods=2, num_resources=6)
    ledger.record_period({0, 1, 2, 3, 4, 5})
    ledger.record_period({0, 1, 2, 3, 4, 5})
    cand = sensing_candidates(ledger, own_resource=5, num_resources=6, min_fraction=0.5)
    assert cand == [0, 1, 2]  # all tied at usage 2; lowest indices win


def test_own_resource_reenters_only_when_nothing_left():
    ledger = make_ledger(1, [])
    assert sensing_candidates(ledger, own_resource=0, num_resources=1, min_fraction=0.2) == [0]
    ledger = make_ledger(3, [])
    assert sensing_candidates(ledger, own_resource=1, num_resources=3, min_fraction=1.0) == [0, 2, 1]


# --- select_resource --------------------------------------------------------

def test_select_uniform_single_resource():
    cfg = validate_config({"num_resources": 1})
    vehicle = make_vehicle(num_resources=1)
    assert select_resource(vehicle, "uniform", cfg, Pcg32.from_seed(3)) == 0


def test_select_sensing_singleton_candidate():
    cfg = validate_config({"num_resources": 5})
    ledger = make_ledger(5, [{1, 2, 3}])
    vehicle = make_vehicle(resource=0, ledger=ledger)
    assert sensing_candidates(ledger, 0, 5, 0.2) == [4]
    assert select_resource(vehicle, "sensing", cfg, Pcg32.from_seed(4)) == 4


def test_select_uniform_frequencies():
    cfg = validate_config({"num_resources": 100})
    vehicle = make_vehicle(num_resources=100)
    rng = Pcg32.from_seed(31337)
    n = 1_000_000
    counts = np.zeros(100, dtype=np.int64)
    for _ in range(n):
        counts[select_resource(vehicle, "uniform", cfg, rng)] += 1
    freq = counts / n
    assert np.all(np.abs(freq - 0.01) < 0.001)


# --- tx_decision ------------------------------------------------------------

def test_tx_decision_without_pending_uses_grant():
    cfg = validate_config({"num_resources": 100, "oneshot_enabled": True})
    vehicle = make_vehicle(resource=17, cs=4, co=3, num_resources=100)
    decision = tx_decision(vehicle, cfg, Pcg32.from_seed(8))
    assert (decision.resource, decision.is_oneshot) == (17, False)
    assert (vehicle.current_resource, vehicle.cs, vehicle.co) == (17, 4, 3)


def test_tx_decision_oneshot_keeps_grant_and_restarts_counter():
    cfg = validate_config({"num_resources": 5, "oneshot_enabled": True,
                           "oneshot_range": [2, 6]})
    ledger = make_ledger(5, [{1, 2, 3}])
    vehicle = make_vehicle(resource=0, cs=4, co=0, pending=True, ledger=ledger)
    decision = tx_decision(vehicle, cfg, Pcg32.from_seed(8))
    assert decision.is_oneshot
    assert decision.resource == 4  # the only candidate
    assert vehicle.current_resource == 0
    assert 2 <= vehicle.co <= 6
    assert not vehicle.pending_oneshot
    # the next opportunity falls back to the persistent grant
    decision2 = tx_decision(vehicle, cfg, Pcg32.from_seed(9))
    assert (decision2.resource, decision2.is_oneshot) == (0, False)


# --- advance_after_tx -------------------------------------------------------

def test_advance_plain_tick_decrements_both():
    cfg = validate_config({"oneshot_enabled": True})
    vehicle = make_vehicle(resource=2, cs=3, co=5, num_resources=100)
    assert advance_after_tx(vehicle, cfg, Pcg32.from_seed(5)) == "tick"
    assert (vehicle.cs, vehicle.co, vehicle.current_resource) == (2, 4, 2)


def test_advance_sps_expiry_keep_branch():
    # keep_prob 1 forces the keep branch: C_s restarts, C_o keeps ticking down
    cfg = validate_config({"oneshot_enabled": True, "keep_prob": 1.0,
                           "sps_range": [5, 15]})
    vehicle = make_vehicle(resource=9, cs=1, co=4, num_resources=100)
    assert advance_after_tx(vehicle, cfg, Pcg32.from_seed(6)) == "sps_expiry"
    assert 5 <= vehicle.cs <= 15
    assert vehicle.co == 3
    assert vehicle.current_resource == 9
    assert not vehicle.pending_oneshot


def test_advance_sps_expiry_reselect_branch_resets_both():
    # reselect certain; fresh counters prove the C_o reset (old value unreachable)
    cfg = validate_config({"oneshot_enabled": True, "keep_prob": 0.0,
                           "sps_range": [5, 15], "oneshot_range": [2, 3],
                           "selection_policy": "sensing", "num_resources": 10})
    vehicle = make_vehicle(resource=4, cs=1, co=6, num_resources=10)
    assert advance_after_tx(vehicle, cfg, Pcg32.from_seed(7)) == "sps_expiry"
    assert vehicle.current_resource != 4  # sensing candidates exclude the own grant
    assert 5 <= vehicle.cs <= 15
    assert 2 <= vehicle.co <= 3


def test_advance_oneshot_expiry_sets_pending():
    cfg = validate_config({"oneshot_enabled": True})
    vehicle = make_vehicle(resource=1, cs=4, co=1, num_resources=100)
    assert advance_after_tx(vehicle, cfg, Pcg32.from_seed(6)) == "oneshot_expiry"
    assert (vehicle.cs, vehicle.co) == (3, 0)
    assert vehicle.pending_oneshot
    assert vehicle.current_resource == 1


def test_advance_simultaneous_expiry_resets_both():
    cfg = validate_config({"oneshot_enabled": True, "keep_prob": 0.0,
                           "sps_range": [5, 15], "oneshot_range": [2, 6],
                           "selection_policy": "sensing", "num_resources": 10})
    vehicle = make_vehicle(resource=3, cs=1, co=1, num_resources=10)
    assert advance_after_tx(vehicle, cfg, Pcg32.from_seed(12)) == "both_expiry"
    assert vehicle.current_resource != 3
    assert 5 <= vehicle.cs <= 15
    assert 2 <= vehicle.co <= 6
    assert not vehicle.pending_oneshot


def test_advance_simultaneous_expiry_keep_branch():
    cfg = validate_config({"oneshot_enabled": True, "keep_prob": 1.0})
    vehicle = make_vehicle(resource=3, cs=1, co=1, num_resources=100)
    assert advance_after_tx(vehicle, cfg, Pcg32.from_seed(12)) == "both_expiry"
    assert vehicle.current_resource == 3
    assert vehicle.cs >= 5 and vehicle.co >= 2


def test_advance_classic_sps_without_oneshot():
    cfg = validate_config({"oneshot_enabled": False, "keep_prob": 1.0})
    vehicle = make_vehicle(resource=6, cs=1, num_resources=100)
    assert advance_after_tx(vehicle, cfg, Pcg32.from_seed(2)) == "sps_expiry"
    assert vehicle.current_resource == 6
    assert 5 <= vehicle.cs <= 15
    assert vehicle.co == 0


def test_extra_co_decrement_switch():
    cfg = validate_config({"oneshot_enabled": True, "keep_prob": 1.0,
                           "extra_co_decrement_on_keep": True})
    vehicle = make_vehicle(resource=0, cs=1, co=4, num_resources=100)
    advance_after_tx(vehicle, cfg, Pcg32.from_seed(3))
    assert vehicle.co == 2  # one per-transmission decrement plus the keep-branch one


def test_grant_never_moves_with_full_keep_and_no_oneshot():
    cfg = validate_config({"oneshot_enabled": False, "keep_prob": 1.0})
    vehicle = make_vehicle(resource=42, cs=5, num_resources=100)
    rng = Pcg32.from_seed(100)
    for _ in range(1000):
        tx = tx_decision(vehicle, cfg, rng)
        assert tx.resource == 42 and not tx.is_oneshot
        advance_after_tx(vehicle, cfg, rng)
    assert vehicle.current_resource == 42


def test_randomized_steps_keep_counter_invariants():
    rng = Pcg32.from_seed(2718)
    cfg = validate_config({"oneshot_enabled": True, "num_resources": 12,
                           "sps_range": [2, 7], "oneshot_range": [1, 5],
                           "keep_prob": 0.5, "sensing_window_periods": 3,
                           "selection_policy": "sensing"})
    ledger = make_ledger(12, [])
    vehicle = make_vehicle(resource=5, cs=4, co=3, ledger=ledger)
    cases = set()
    for _ in range(20000):
        tx = tx_decision(vehicle, cfg, rng)
        assert 0 <= tx.resource < 12
        ledger.record_period({rng.rand_index(12) for _ in range(rng.rand_index(5))})
        cases.add(advance_after_tx(vehicle, cfg, rng))
        assert 0 <= vehicle.cs <= 7
        assert 0 <= vehicle.co <= 5
        assert 0 <= vehicle.current_resource < 12
    assert cases == {"tick", "sps_expiry", "oneshot_expiry", "both_expiry"}


def test_expiry_cadence_uniform_under_certain_reselection():
    # classic SPS with reselection probability 1: reselection-to-reselection
    # gaps replay the counter draws, so they are uniform on [5, 15]
    cfg = validate_config({
        "num_targets": 1, "num_attackers": 0, "oneshot_enabled": False,
        "keep_prob": 0.0, "selection_policy": "uniform",
        "sim_periods": 11_000_000, "master_seed": 77,
    })
    _store, trace = run_replication_with_trace(cfg, 0)
    cs = trace.target_cs[:, 0].astype(np.int64)
    expiries = np.flatnonzero(cs[1:] > cs[:-1]) + 1
    gaps = np.diff(expiries)
    assert gaps.min() >= 5 and gaps.max() <= 15
    counts = np.bincount(gaps, minlength=16)[5:16]
    n = counts.sum()
    assert n > 1_000_000
    expected = n / 11
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 35.0
