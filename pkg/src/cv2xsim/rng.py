"""Seeded, agent-indexed random streams.

Every agent (target vehicle or attacker) owns an independent PCG32 stream
derived from (master_seed, replication_id, agent_id) by SplitMix64 mixing,
plus one spare channel/tie-break stream per replication. Streams never
interact, so adding an agent or permuting the order in which agents consume
draws cannot perturb anyone else's sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernel

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_SLOT_SALT = 0xD1B54A32D192ED03

# Reserved stream slot for the channel/tie-break stream; never collides with
# an agent index.
CHANNEL_SLOT = 1 << 62


def _mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit word."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def stream_state(master_seed: int, replication_id: int, slot: int) -> tuple[int, int]:
    """Derive the PCG32 (state, increment) pair for one stream slot."""
    h = (master_seed ^ _GOLDEN) & _MASK64
    h = _mix64(h + _GOLDEN * (replication_id + 1))
    h = _mix64(h + _SLOT_SALT * (slot + 1))
    state = _mix64(h)
    inc = ((_mix64(h ^ _MIX_B) << 1) | 1) & _MASK64
    return state, inc


class Pcg32:
    """Handle on one stream row of a shared uint64 state array.

    Delegates to the kernel primitives, so draws taken through this object
    are bit-identical to draws the simulation kernel takes from the same row.
    """

    def __init__(self, states: np.ndarray, row: int):
        self._states = states
        self._row = row

    @classmethod
    def from_seed(cls, master_seed: int, replication_id: int = 0, slot: int = 0) -> "Pcg32":
        state, inc = stream_state(master_seed, replication_id, slot)
        return cls(np.array([[state, inc]], dtype=np.uint64), 0)

    def next_uint32(self) -> int:
        return int(_kernel.pcg32_next(self._states, self._row))

    def rand_index(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return int(_kernel.rand_index(self._states, self._row, n))

    def rand_int(self, lo: int, hi: int) -> int:
        """Uniform integer on the closed interval [lo, hi]."""
        return int(_kernel.rand_int(self._states, self._row, lo, hi))

    def rand_unit(self) -> float:
        """Uniform float in [0, 1)."""
        return float(_kernel.rand_unit(self._states, self._row))


@dataclass
class RngStreams:
    """All random streams of one replication.

    `states` has one (state, increment) row per agent plus a final
    channel/tie-break row; the same array backs both the object-level
    operations and the compiled kernel.
    """

    replication_id: int
    states: np.ndarray = field(repr=False)

    @property
    def agent_count(self) -> int:
        return self.states.shape[0] - 1

    def agent(self, agent_id: int) -> Pcg32:
        if not 0 <= agent_id < self.agent_count:
            raise IndexError(f"agent_id {agent_id} out of range")
        return Pcg32(self.states, agent_id)

    def channel(self) -> Pcg32:
        return Pcg32(self.states, self.agent_count)


def derive_streams(master_seed: int, replication_id: int, agent_count: int) -> RngStreams:
    """Build the independent per-agent streams for one replication.

    Deterministic: identical arguments yield identical stream states, agent
    i's stream does not depend on agent_count, and distinct replication ids
    give disjoint streams.
    """
    states = np.empty((agent_count + 1, 2), dtype=np.uint64)
    for i in range(agent_count):
        state, inc = stream_state(master_seed, replication_id, i)
        states[i, 0] = state
        states[i, 1] = inc
    c_state, c_inc = stream_state(master_seed, replication_id, CHANNEL_SLOT)
    states[agent_count, 0] = c_state
    states[agent_count, 1] = c_inc
    return RngStreams(replication_id=replication_id, states=states)
