"""Replication drivers.

`run_replication` packs a validated scenario into flat arrays and hands the
whole period loop to the compiled kernel; `run_replication_reference` drives
the same simulation through the object-level operations (vehicle state
machine, attacker, channel, pairwise metrics recording) one period at a
time. Both consume the same per-agent random streams in the same order and
produce identical finalized metrics, which the test suite verifies; the
reference driver exists for conformance and stays practical only at small
scales.
"""

from __future__ import annotations

import importlib.util
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernel
from .attacker import AttackerState, attacker_advance
from .channel import resolve_period
from .config import ScenarioConfig, attacker_bounds
from .ledger import UsageLedger
from .metrics import MetricsStore, record_report
from .rng import RngStreams, derive_streams
from .sps import VehicleState, advance_after_tx, candidate_floor, draw_counter, tx_decision

_PURE_KERNEL = None


def load_kernel(pure: bool = False):
    """Return the kernel module; `pure=True` forces the interpreted fallback.

    The fallback instance is loaded fresh from source with the environment
    flag set, so it carries no jitted code regardless of how this process was
    started. Used by the equivalence tests and the benchmark.
    """
    global _PURE_KERNEL
    if not pure or not _kernel.USING_NUMBA:
        return _kernel
    if _PURE_KERNEL is None:
        old = os.environ.get(_kernel.ENV_FLAG)
        os.environ[_kernel.ENV_FLAG] = "1"
        try:
            spec = importlib.util.spec_from_file_location(
                "cv2xsim._kernel_pure", _kernel.__file__
            )
            mod = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(mod)
        finally:
            if old is None:
                os.environ.pop(_kernel.ENV_FLAG, None)
            else:
                os.environ[_kernel.ENV_FLAG] = old
        _PURE_KERNEL = mod
    return _PURE_KERNEL


@dataclass
class TraceBuffers:
    """Per-period conformance traces (end-of-period snapshots)."""

    target_resource: np.ndarray   # (periods, V) resource used
    target_oneshot: np.ndarray    # (periods, V) 1 when the use was a one-shot
    target_cs: np.ndarray         # (periods, V) C_s after the advance
    target_co: np.ndarray         # (periods, V) C_o after the advance
    attacker_resource: np.ndarray  # (periods, A) resource jammed
    attacker_hold: np.ndarray     # (periods, A) hold counter after the advance
    target_set_size: np.ndarray   # (periods,) observed-set size this period


def _alloc_trace(cfg: ScenarioConfig) -> TraceBuffers:
    T, V, A = cfg.sim_periods, cfg.num_targets, cfg.num_attackers
    return TraceBuffers(
        target_resource=np.zeros((T, V), np.int32),
        target_oneshot=np.zeros((T, V), np.int8),
        target_cs=np.zeros((T, V), np.int32),
        target_co=np.zeros((T, V), np.int32),
        attacker_resource=np.zeros((T, A), np.int32),
        attacker_hold=np.zeros((T, A), np.int32),
        target_set_size=np.zeros(T, np.int32),
    )


def kernel_args(cfg: ScenarioConfig, streams: RngStreams,
                trace: Optional[TraceBuffers] = None) -> tuple:
    """Build the positional argument tuple for `run_periods`.

    The stream state array is mutated by the kernel; derive fresh streams for
    every invocation.
    """
    att_lo, att_hi = attacker_bounds(cfg.attacker_interval)
    if trace is None:
        tr = (
            np.zeros((1, 1), np.int32), np.zeros((1, 1), np.int8),
            np.zeros((1, 1), np.int32), np.zeros((1, 1), np.int32),
            np.zeros((1, 1), np.int32), np.zeros((1, 1), np.int32),
            np.zeros(1, np.int32),
        )
    else:
        tr = (
            trace.target_resource, trace.target_oneshot,
            trace.target_cs, trace.target_co,
            trace.attacker_resource, trace.attacker_hold,
            trace.target_set_size,
        )
    return (
        streams.states,
        cfg.num_targets,
        cfg.num_attackers,
        cfg.num_resources,
        cfg.sps_range[0],
        cfg.sps_range[1],
        cfg.oneshot_enabled,
        cfg.oneshot_range[0],
        cfg.oneshot_range[1],
        cfg.reselect_prob,
        att_lo,
        att_hi,
        cfg.sensing_window_periods,
        cfg.selection_policy == "sensing",
        cfg.oneshot_policy == "sensing",
        candidate_floor(cfg.candidate_min_fraction, cfg.num_resources),
        cfg.sense_any_energy,
        cfg.extra_co_decrement_on_keep,
        cfg.sim_periods,
        cfg.warmup_periods,
        trace is not None,
    ) + tr


def _store_from_kernel(cfg: ScenarioConfig, rx_events: int,
                       ipg: np.ndarray, aoi: np.ndarray) -> MetricsStore:
    """Scale per-transmitter kernel counts to ordered-pair totals."""
    V = cfg.num_targets
    receivers = V - 1
    measured = max(0, cfg.sim_periods - cfg.warmup_periods)
    store = MetricsStore(measure_start=cfg.warmup_periods)
    store.attempt_count = measured * V * receivers
    store.rx_count = int(rx_events) * receivers
    if receivers > 0:
        for g in np.nonzero(ipg)[0]:
            store.ipg_hist[int(g)] = int(ipg[g]) * receivers
        for age in np.nonzero(aoi)[0]:
            store.aoi_hist[int(age)] = int(aoi[age]) * receivers
    store.finalize()
    _check_store(store)
    return store


def _check_store(store: MetricsStore) -> None:
    # zero age happens exactly on reception, and every pair-period samples once
    assert store.aoi_hist.get(0, 0) == store.rx_count
    assert sum(store.aoi_hist.values()) == store.attempt_count


def run_replication(cfg: ScenarioConfig, replication_id: int) -> MetricsStore:
    """Run one replication through the compiled kernel.

    Deterministic: the result is a pure function of (cfg, replication_id).
    """
    streams = derive_streams(cfg.master_seed, replication_id,
                             cfg.num_targets + cfg.num_attackers)
    out = _kernel.run_periods(*kernel_args(cfg, streams))
    return _store_from_kernel(cfg, *out)


def run_replication_with_trace(cfg: ScenarioConfig, replication_id: int
                               ) -> tuple[MetricsStore, TraceBuffers]:
    """As run_replication, also collecting per-period traces (memory-heavy)."""
    streams = derive_streams(cfg.master_seed, replication_id,
                             cfg.num_targets + cfg.num_attackers)
    trace = _alloc_trace(cfg)
    out = _kernel.run_periods(*kernel_args(cfg, streams, trace))
    return _store_from_kernel(cfg, *out), trace


def run_replication_reference(cfg: ScenarioConfig, replication_id: int) -> MetricsStore:
    """Slow conformance driver composed from the object-level operations."""
    V, A = cfg.num_targets, cfg.num_attackers
    streams = derive_streams(cfg.master_seed, replication_id, V + A)
    rngs = [streams.agent(i) for i in range(V + A)]
    shared_ledger = UsageLedger(cfg.sensing_window_periods, cfg.num_resources)

    vehicles = []
    for v in range(V):
        resource = rngs[v].rand_index(cfg.num_resources)
        cs = draw_counter(cfg.sps_range, rngs[v])
        co = draw_counter(cfg.oneshot_range, rngs[v]) if cfg.oneshot_enabled else 0
        vehicles.append(VehicleState(vehicle_id=v, current_resource=resource,
                                     cs=cs, co=co, sensing=shared_ledger))
    attackers = []
    att_lo, att_hi = attacker_bounds(cfg.attacker_interval)
    for a in range(A):
        resource = rngs[V + a].rand_index(cfg.num_resources)
        hold = rngs[V + a].rand_int(att_lo, att_hi)
        attackers.append(AttackerState(attacker_id=a, attack_resource=resource,
                                       hold_counter=hold))

    store = MetricsStore(measure_start=cfg.warmup_periods)
    for t in range(cfg.sim_periods):
        decisions = {v.vehicle_id: tx_decision(v, cfg, rngs[v.vehicle_id])
                     for v in vehicles}
        target_tx = {vid: d.resource for vid, d in decisions.items()}
        attacker_tx = {a.attacker_id: a.attack_resource for a in attackers}
        report = resolve_period(t, target_tx, attacker_tx)
        if t >= cfg.warmup_periods:
            record_report(store, report, t)
        if cfg.sense_any_energy:
            row = set(target_tx.values()) | set(attacker_tx.values())
        else:
            row = report.decodable_set
        shared_ledger.record_period(row)
        for v in vehicles:
            advance_after_tx(v, cfg, rngs[v.vehicle_id])
        for a in attackers:
            attacker_advance(a, shared_ledger, cfg.attacker_interval, rngs[V + a.attacker_id])
    store.finalize()
    _check_store(store)
    return store
