"""Smart jamming attacker.

An attacker watches the sensing ledger for resources that carried decodable
(single-transmitter) packets within the window, jams one of them chosen
uniformly at random, holds it for its hold-counter's worth of periods, and on
expiry always reselects - there is no keep probability on the attacker side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .config import attacker_bounds
from .ledger import UsageLedger
from .rng import Pcg32


@dataclass
class AttackerState:
    attacker_id: int
    attack_resource: int
    hold_counter: int


def build_target_set(ledger: UsageLedger) -> set[int]:
    """Resources observed at least once within the window."""
    usage = ledger.usage_vector()
    return {j for j in range(ledger.num_resources) if usage[j] > 0}


def attacker_advance(state: AttackerState, ledger: UsageLedger,
                     interval: Union[int, tuple[int, int]], rng: Pcg32) -> None:
    """Advance the hold counter; on expiry reselect unconditionally.

    The new resource is drawn uniformly from the target set, falling back to
    all resources while the set is empty (cold start), and the hold counter
    restarts from `interval` (a fixed value or closed range). Mutates
    `state`.
    """
    state.hold_counter -= 1
    if state.hold_counter > 0:
        return
    targets = sorted(build_target_set(ledger))
    if targets:
        state.attack_resource = targets[rng.rand_index(len(targets))]
    else:
        state.attack_resource = rng.rand_index(ledger.num_resources)
    lo, hi = attacker_bounds(interval)
    state.hold_counter = rng.rand_int(lo, hi)
