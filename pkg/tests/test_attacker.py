import numpy as np

from cv2xsim import AttackerState, Pcg32, UsageLedger, attacker_advance, build_target_set


def ledger_with_usage(num_resources, rows):
    ledger = UsageLedger(window_periods=max(len(rows), 1), num_resources=num_resources)
    for row in rows:
        ledger.record_period(row)
    return ledger


def test_target_set_from_usage():
    ledger = ledger_with_usage(4, [{1}, {1, 3}, {1}])
    assert [ledger.usage_total(j) for j in range(4)] == [0, 3, 0, 1]
    assert build_target_set(ledger) == {1, 3}


def test_target_set_empty_ledger():
    ledger = ledger_with_usage(8, [])
    assert build_target_set(ledger) == set()


def test_target_set_all_resources():
    ledger = ledger_with_usage(6, [set(range(6))])
    assert build_target_set(ledger) == set(range(6))


def test_hold_counter_ticks_without_reselection():
    ledger = ledger_with_usage(10, [{2}])
    attacker = AttackerState(attacker_id=0, attack_resource=7, hold_counter=3)
    attacker_advance(attacker, ledger, (5, 15), Pcg32.from_seed(1))
    assert attacker.hold_counter == 2
    assert attacker.attack_resource == 7


def test_expiry_selects_uniformly_from_target_set():
    ledger = ledger_with_usage(16, [{5, 9}])
    rng = Pcg32.from_seed(404)
    hits = {5: 0, 9: 0}
    n = 1_000_000
    for _ in range(n):
        attacker = AttackerState(attacker_id=0, attack_resource=0, hold_counter=1)
        attacker_advance(attacker, ledger, 3, rng)
        hits[attacker.attack_resource] += 1
        assert attacker.hold_counter == 3
    assert abs(hits[5] / n - 0.5) < 0.005
    assert abs(hits[9] / n - 0.5) < 0.005


def test_empty_set_falls_back_to_uniform_over_all():
    # fallback oracle: uniform over all M resources, checked empirically
    ledger = ledger_with_usage(100, [])
    rng = Pcg32.from_seed(505)
    n = 200_000
    counts = np.zeros(100, dtype=np.int64)
    for _ in range(n):
        attacker = AttackerState(attacker_id=0, attack_resource=0, hold_counter=1)
        attacker_advance(attacker, ledger, (5, 15), rng)
        counts[attacker.attack_resource] += 1
        assert 5 <= attacker.hold_counter <= 15
    expected = n / 100
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 160.0  # df=99


def test_reselection_happens_exactly_on_expiry():
    # with a fixed hold of k, reselection draws land every k periods: the gap
    # between hold restarts equals k and the counter never goes negative
    ledger = ledger_with_usage(10, [{1, 2, 3}])
    rng = Pcg32.from_seed(7)
    attacker = AttackerState(attacker_id=0, attack_resource=1, hold_counter=4)
    restarts = []
    for t in range(200):
        attacker_advance(attacker, ledger, 4, rng)
        assert attacker.hold_counter >= 1
        if attacker.hold_counter == 4:
            restarts.append(t)
    assert restarts == list(range(3, 200, 4))


def test_uncoordinated_attackers_collide_on_singleton_set():
    ledger = ledger_with_usage(10, [{6}])
    rng = Pcg32.from_seed(99)
    chosen = []
    for a in range(5):
        attacker = AttackerState(attacker_id=a, attack_resource=0, hold_counter=1)
        attacker_advance(attacker, ledger, (5, 15), rng)
        chosen.append(attacker.attack_resource)
    assert chosen == [6] * 5


def test_decodable_sensing_blinds_attacker_to_collisions():
    # a resource carrying two simultaneous target transmitters is not
    # decodable, so under decodable-only sensing it never enters the ledger
    # and the target set stays sound: everything in it was decodable within
    # the window
    from cv2xsim import resolve_period

    ledger = UsageLedger(window_periods=3, num_resources=10)
    decodable_history = []
    periods = [
        ({0: 4, 1: 4, 2: 7}, {0: 9}),   # 4 collides, 7 clean, 9 jammed only
        ({0: 4, 1: 4, 2: 8}, {0: 8}),   # 8 jammed
        ({0: 1, 1: 2, 2: 3}, {}),
    ]
    for t, (targets, attackers) in enumerate(periods):
        report = resolve_period(t, targets, attackers)
        ledger.record_period(report.decodable_set)
        decodable_history.append(report.decodable_set)
    assert ledger.usage_total(4) == 0
    assert ledger.usage_total(8) == 0
    assert ledger.usage_total(9) == 0
    target_set = build_target_set(ledger)
    assert target_set == {7, 1, 2, 3}
    assert target_set == set().union(*decodable_history)
