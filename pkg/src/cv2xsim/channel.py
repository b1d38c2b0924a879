"""Slotted broadcast channel over a fully connected network.

Per period every target transmits one message on one resource and every
attacker jams one resource. There is no fading or capture: a transmission is
delivered if and only if its resource carries no other transmitter of any
kind, and a delivered message reaches every other target vehicle.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping


@dataclass(frozen=True)
class PeriodReport:
    """Collision-resolution outcome of one transmission period."""

    period: int
    resources: dict[int, int]      # target id -> resource used
    delivered: dict[int, bool]     # target id -> unique transmitter on its resource
    decodable_set: frozenset[int]  # resources with exactly one target and no attacker


def resolve_period(period: int, target_tx: Mapping[int, int],
                   attacker_tx: Mapping[int, int]) -> PeriodReport:
    """Resolve all collisions of one period.

    A target is delivered iff no other target and no attacker share its
    resource; the decodable set is exactly the resources carrying one target
    transmitter and no attacker.
    """
    tgt_count = Counter(target_tx.values())
    att_count = Counter(attacker_tx.values())
    delivered = {
        v: tgt_count[r] == 1 and att_count[r] == 0 for v, r in target_tx.items()
    }
    decodable = frozenset(
        r for r, c in tgt_count.items() if c == 1 and att_count[r] == 0
    )
    return PeriodReport(period=period, resources=dict(target_tx),
                        delivered=delivered, decodable_set=decodable)
