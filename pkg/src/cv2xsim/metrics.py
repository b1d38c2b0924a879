"""Delivery-ratio, inter-packet-gap, and information-age statistics.

All three metrics are computed over ordered (receiver, transmitter) pairs of
target vehicles:

- delivery ratio: successful receptions R over transmission attempts T,
  where every transmitter contributes one attempt per receiver per period;
- inter-packet gap (IPG): periods between consecutive successful receptions
  of a pair, pooled into one histogram across pairs;
- information age (AoI): periods since the generation of the pair's most
  recently received message, sampled once per pair per measured period after
  reception resolution.

Histograms are keyed in whole periods and converted to milliseconds only at
reporting time. Ages reset to zero on reception, so the zero-age probability
equals the delivery ratio exactly; the age cursor starts one period before
measurement begins to keep that identity bit-exact from the first sample.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .channel import PeriodReport

Histogram = Counter


@dataclass(frozen=True)
class MetricsSummary:
    """Flat summary record; field names double as report column names."""

    pdr: Optional[float]
    ipg_tail_1e5_ms: Optional[int]
    ipg_tail_1e4_ms: Optional[int]
    prob_ipg_100ms: Optional[float]
    aoi_tail_1e5_ms: Optional[int]
    aoi_tail_1e4_ms: Optional[int]
    prob_aoi_0ms: Optional[float]
    n_ipg: int
    n_aoi: int
    r: int
    t: int


class MetricsStore:
    """Accumulates one replication's pair metrics.

    Pair-local cursors (last reception period and generation) live only until
    finalize(); merging across replications operates on finalized stores.
    """

    def __init__(self, measure_start: int = 0):
        self.rx_count = 0
        self.attempt_count = 0
        self.ipg_hist: Histogram = Counter()
        self.aoi_hist: Histogram = Counter()
        self.last_rx_period: Optional[dict] = {}
        self.last_rx_gen: Optional[dict] = {}
        self.measure_start = measure_start
        self.finalized = False

    def finalize(self) -> "MetricsStore":
        """Drop pair-local cursors; the store becomes mergeable."""
        self.last_rx_period = None
        self.last_rx_gen = None
        self.finalized = True
        return self

    def summary(self, period_ms: int = 100) -> MetricsSummary:
        return MetricsSummary(
            pdr=pdr(self),
            ipg_tail_1e5_ms=ccdf_value(self.ipg_hist, 1e-5, period_ms),
            ipg_tail_1e4_ms=ccdf_value(self.ipg_hist, 1e-4, period_ms),
            prob_ipg_100ms=prob_at(self.ipg_hist, 1),
            aoi_tail_1e5_ms=ccdf_value(self.aoi_hist, 1e-5, period_ms),
            aoi_tail_1e4_ms=ccdf_value(self.aoi_hist, 1e-4, period_ms),
            prob_aoi_0ms=prob_at(self.aoi_hist, 0),
            n_ipg=sum(self.ipg_hist.values()),
            n_aoi=sum(self.aoi_hist.values()),
            r=self.rx_count,
            t=self.attempt_count,
        )


def record_report(store: MetricsStore, report: PeriodReport, t: int) -> None:
    """Fold one resolved period into the store (measured periods only).

    For every ordered (receiver, transmitter) pair: one attempt; on delivery
    one reception, a gap sample when the pair already received before, and a
    cursor reset. Afterwards every pair books one age sample, zero iff the
    pair received this period.
    """
    if store.finalized:
        raise ValueError("cannot record into a finalized store")
    if t < store.measure_start:
        raise ValueError(f"period {t} precedes measurement start {store.measure_start}")
    default_gen = store.measure_start - 1
    for tx_v in report.resources:
        ok = report.delivered[tx_v]
        for rx_v in report.resources:
            if rx_v == tx_v:
                continue
            key = (rx_v, tx_v)
            store.attempt_count += 1
            if ok:
                store.rx_count += 1
                prev = store.last_rx_period.get(key)
                if prev is not None:
                    store.ipg_hist[t - prev] += 1
                store.last_rx_period[key] = t
                store.last_rx_gen[key] = t
            store.aoi_hist[t - store.last_rx_gen.get(key, default_gen)] += 1


def pdr(store: MetricsStore) -> Optional[float]:
    """Delivery ratio R/T; absent when no pair ever attempted."""
    if store.attempt_count == 0:
        return None
    return store.rx_count / store.attempt_count


def ccdf_value(hist: Histogram, p: float, period_ms: int = 100) -> Optional[int]:
    """Tail value at probability point p, in milliseconds.

    Smallest observed value v such that the fraction of samples strictly
    exceeding v is at most p. Absent for an empty histogram.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("probability point must lie strictly between 0 and 1")
    if not hist:
        return None
    total = sum(hist.values())
    greater = total
    for v in sorted(hist):
        greater -= hist[v]
        if greater / total <= p:
            return period_ms * v
    return period_ms * max(hist)  # unreachable: greater hits 0 at the maximum


def prob_at(hist: Histogram, v: int) -> Optional[float]:
    """Point-mass probability of value v (in periods); absent when empty."""
    if not hist:
        return None
    return hist.get(v, 0) / sum(hist.values())


def merge(a: MetricsStore, b: MetricsStore) -> MetricsStore:
    """Pointwise sum of two finalized stores (associative and commutative)."""
    if not (a.finalized and b.finalized):
        raise ValueError("merge requires finalized stores")
    out = MetricsStore(measure_start=min(a.measure_start, b.measure_start))
    out.rx_count = a.rx_count + b.rx_count
    out.attempt_count = a.attempt_count + b.attempt_count
    out.ipg_hist = a.ipg_hist + b.ipg_hist
    out.aoi_hist = a.aoi_hist + b.aoi_hist
    return out.finalize()


def merge_all(stores) -> MetricsStore:
    """Merge an iterable of finalized stores; empty input yields an empty store."""
    out = MetricsStore().finalize()
    for s in stores:
        out = merge(out, s)
    return out
