"""Deterministic Monte Carlo simulator of periodic broadcast scheduling
with semi-persistent grants, interleaved one-shot transmissions, and smart
jamming attackers, reporting delivery-ratio / inter-packet-gap /
information-age statistics."""

from .attacker import AttackerState, attacker_advance, build_target_set
from .channel import PeriodReport, resolve_period
from .config import (
    ConfigError,
    ScenarioConfig,
    load_config,
    save_config,
    to_dict,
    validate_config,
)
from .engine import (
    TraceBuffers,
    load_kernel,
    run_replication,
    run_replication_reference,
    run_replication_with_trace,
)
from .ledger import UsageLedger
from .metrics import (
    MetricsStore,
    MetricsSummary,
    ccdf_value,
    merge,
    merge_all,
    pdr,
    prob_at,
    record_report,
)
from .rng import Pcg32, RngStreams, derive_streams
from .runner import (
    SweepSpec,
    SweepTable,
    builtin_sweeps,
    emit_table,
    parse_table,
    run_sweep,
)
from .sps import (
    TxDecision,
    VehicleState,
    advance_after_tx,
    draw_counter,
    select_resource,
    sensing_candidates,
    tx_decision,
)

__version__ = "0.1.0"
