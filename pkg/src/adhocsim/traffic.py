"""Constant-bit-rate traffic description and the three run metrics:
delivery ratio, mean end-to-end delay, and normalized routing overhead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

CSV_HEADER = (
    "protocol,preset,net_type,nodes,seed,pdr,e2ed_s,nro,"
    "data_sent,data_delivered,routing_pkts"
)


class MetricUndefinedError(ValueError):
    """A metric's denominator is zero for this run."""


@dataclass(frozen=True)
class FlowConfig:
    """One CBR flow: fixed-size packets at a fixed rate over [start, stop)."""

    src: int
    dst: int
    rate: float
    start_t: float
    stop_t: float
    packet_size: int = 1000

    def validate(self, horizon: float) -> None:
        if self.src == self.dst:
            raise ValueError(f"flow src and dst must differ, got {self.src}")
        if self.rate <= 0:
            raise ValueError(f"flow rate must be > 0, got {self.rate}")
        if not self.start_t < self.stop_t <= horizon:
            raise ValueError(
                f"flow window must satisfy start < stop <= horizon, "
                f"got [{self.start_t}, {self.stop_t}] with horizon {horizon}"
            )
        if self.packet_size <= 0:
            raise ValueError(f"packet size must be > 0, got {self.packet_size}")

    def emission_count(self) -> int:
        return math.floor((self.stop_t - self.start_t) * self.rate)

    def emission_times(self):
        return [
            self.start_t + i / self.rate for i in range(self.emission_count())
        ]


@dataclass
class RunMetrics:
    """Counters accumulated over one run.

    Data packets are tracked end to end: every generated packet ends up in
    exactly one of delivered / dropped / in flight.  Routing packets are
    tracked per delivery attempt (one attempt per in-range receiver), with
    routing_packets counting per-hop transmissions for the overhead ratio.
    """

    data_sent: int = 0
    data_delivered: int = 0
    data_dropped: int = 0
    data_in_flight: int = 0
    routing_packets: int = 0
    routing_bytes: int = 0
    routing_attempts: int = 0
    routing_attempt_delivered: int = 0
    routing_attempt_dropped: int = 0
    routing_attempt_in_flight: int = 0
    latency_sum: float = 0.0
    latencies: list = field(default_factory=list)


def pdr(m: RunMetrics) -> float:
    """Packet delivery ratio, in percent."""
    if m.data_sent <= 0:
        raise MetricUndefinedError("no data packets sent")
    return 100.0 * m.data_delivered / m.data_sent


def e2ed(m: RunMetrics) -> float:
    """Mean end-to-end delay of delivered data packets, in seconds.

    Latency counts from application send time, so time spent buffered
    while a route is being discovered is included.
    """
    if m.data_delivered <= 0:
        raise MetricUndefinedError("no data packets delivered")
    return m.latency_sum / m.data_delivered


def nro(m: RunMetrics) -> float:
    """Normalized routing overhead: per-hop routing transmissions divided
    by delivered data packets.
    """
    if m.data_delivered <= 0:
        raise MetricUndefinedError("no data packets delivered")
    return m.routing_packets / m.data_delivered


def csv_row(protocol, preset, net_type, nodes, seed, m: RunMetrics) -> str:
    """One result row per the fixed column contract; metrics whose
    denominator is zero render as nan.
    """

    def safe(fn):
        try:
            return repr(fn(m))
        except MetricUndefinedError:
            return "nan"

    return (
        f"{protocol},{preset},{net_type},{nodes},{seed},"
        f"{safe(pdr)},{safe(e2ed)},{safe(nro)},"
        f"{m.data_sent},{m.data_delivered},{m.routing_packets}"
    )


def write_csv(rows, fileobj) -> None:
    fileobj.write(CSV_HEADER + "\n")
    for row in rows:
        fileobj.write(row + "\n")
