"""Deterministic discrete-event engine with a fixed-radius radio and a
parametric MAC latency/loss abstraction.

Determinism rules:
  * events pop in (time, insertion sequence) order;
  * a single run never touches global RNG state — per-packet loss rolls
    come from a keyed hash of (run seed, packet id, receiver), so they are
    independent of event processing order;
  * node positions are evaluated lazily on a fixed 0.1 s grid for
    neighbor/contender queries, and exactly (interpolated) for
    link-forecast distance sampling.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from adhocsim import linkmath
from adhocsim.mobility import position_at
from adhocsim.traffic import FlowConfig, RunMetrics

BROADCAST = -1
MOBILITY_STEP = 0.1
DATA_TTL = 30
TIME_EPS = 1e-9


class CausalityError(RuntimeError):
    """An event handler tried to schedule into the past."""


class EventKind(enum.Enum):
    PACKET_RX = "rx"
    TIMER_FIRE = "timer"
    MOBILITY_SAMPLE = "mobility"
    TRAFFIC_SEND = "send"


class MacProfile(enum.Enum):
    MAC_80211 = "mac80211"
    MAC_80211P = "mac80211p"


@dataclass(frozen=True)
class RadioConfig:
    """Fixed-radius radio plus a contention-scaled latency/loss curve.

    A transmission with k contenders (in-range nodes beyond the first)
    arrives after base_delay + per_contender_delay*k and is lost with
    probability min(1, loss_base + loss_per_contender*k), independently
    per receiver.
    """

    radius: float = 250.0
    mac_profile: MacProfile = MacProfile.MAC_80211
    base_delay: float = 2e-3
    per_contender_delay: float = 1e-3
    loss_base: float = 0.01
    loss_per_contender: float = 0.004

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"radio radius must be > 0, got {self.radius}")
        for name in ("base_delay", "per_contender_delay"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("loss_base", "loss_per_contender"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0,1]")

    @staticmethod
    def mac80211(**overrides) -> "RadioConfig":
        return RadioConfig(**overrides)

    @staticmethod
    def mac80211p(**overrides) -> "RadioConfig":
        base = dict(
            mac_profile=MacProfile.MAC_80211P,
            base_delay=1e-3,
            per_contender_delay=0.5e-3,
            loss_base=0.005,
            loss_per_contender=0.002,
        )
        base.update(overrides)
        return RadioConfig(**base)


@dataclass
class Packet:
    pkt_id: str
    kind: str  # "data" | "routing"
    src: int
    dst: int
    size: int
    ttl: int
    payload: Any
    created_t: float
    hop_src: int = -1
    hops: int = 0


@dataclass
class Event:
    t: float
    seq: int
    kind: EventKind
    payload: Any


class EventQueue:
    """Priority queue popping in (t, seq) order; refuses past scheduling."""

    def __init__(self) -> None:
        self._heap: list[tuple[float, int, Event]] = []
        self._seq = 0
        self.now = 0.0

    def push(self, t: float, kind: EventKind, payload: Any) -> None:
        if t < self.now - TIME_EPS:
            raise CausalityError(f"event at {t} scheduled from {self.now}")
        ev = Event(t=t, seq=self._seq, kind=kind, payload=payload)
        self._seq += 1
        heapq.heappush(self._heap, (t, ev.seq, ev))

    def peek_time(self) -> Optional[float]:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        t, _, ev = heapq.heappop(self._heap)
        self.now = t
        return ev

    def drain(self):
        while self._heap:
            yield heapq.heappop(self._heap)[2]

    def __len__(self) -> int:
        return len(self._heap)


class RoutingAgent:
    """Protocol agent contract; one instance per node per run.

    All methods run in event-handler context (single-threaded within a
    run).  Agents that take ownership of a data packet (buffering it for
    later re-injection) must eventually call api.forward_data or
    api.drop_data on it, otherwise it stays counted as in flight.
    """

    node_id: int

    def start(self, api) -> None:
        pass

    def on_timer(self, api, tag: str, data) -> None:
        pass

    def on_routing_packet(self, api, pkt: Packet) -> None:
        pass

    def next_hop(self, api, dst: int) -> Optional[int]:
        return None

    def on_no_route(self, api, pkt: Packet) -> bool:
        """Data packet with no usable route here; True = agent took it."""
        return False

    def on_unicast_failure(self, api, pkt: Packet, failed_hop: int) -> bool:
        """Link-layer unicast failed; True = agent took the data packet."""
        return False


class NodeApi:
    """Kernel surface exposed to one node's agent."""

    __slots__ = ("_sim", "node_id")

    def __init__(self, sim: "Simulation", node_id: int):
        self._sim = sim
        self.node_id = node_id

    @property
    def now(self) -> float:
        return self._sim.now

    def send_routing(self, payload, size: int, dst: int = BROADCAST, ttl: int = 1):
        self._sim.send_routing(self.node_id, payload, size, dst, ttl)

    def set_timer(self, delay: float, tag: str, data=None) -> None:
        if delay < 0:
            raise ValueError(f"timer delay must be >= 0, got {delay}")
        self._sim.queue.push(
            self._sim.now + delay, EventKind.TIMER_FIRE, (self.node_id, tag, data)
        )

    def forward_data(self, pkt: Packet) -> None:
        """Re-inject a buffered data packet through the normal route path."""
        self._sim.route_data(pkt, self.node_id)

    def send_data(self, pkt: Packet, next_hop: int) -> None:
        self._sim.dispatch_data(pkt, self.node_id, next_hop)

    def drop_data(self, pkt: Packet, reason: str) -> None:
        self._sim.drop_data(pkt, self.node_id, reason)


@dataclass
class NodeState:
    node_id: int
    trajectory: list
    agent: RoutingAgent
    api: NodeApi = None


@dataclass
class RunResult:
    metrics: RunMetrics
    trace_lines: list

    def trace_text(self) -> str:
        return "\n".join(self.trace_lines) + "\n"


class Simulation:
    """One deterministic run over prebuilt trajectories, agents and flows."""

    def __init__(
        self,
        trajectories: dict,
        agents: dict,
        flows,
        radio: RadioConfig,
        horizon: float,
        seed: int,
        data_ttl: int = DATA_TTL,
        collect_trace: bool = True,
    ):
        if len(trajectories) < 2:
            raise ValueError("a run needs at least 2 nodes")
        if set(trajectories) != set(agents):
            raise ValueError("trajectories and agents must cover the same nodes")
        if not flows:
            raise ValueError("a run needs at least 1 flow")
        self.radio = radio
        self.horizon = horizon
        self.seed = seed
        self.data_ttl = data_ttl
        self.collect_trace = collect_trace
        self.queue = EventQueue()
        self.metrics = RunMetrics()
        self.trace: list[str] = []
        self.flows = list(flows)
        self.nodes: dict[int, NodeState] = {}
        for node_id in sorted(trajectories):
            agent = agents[node_id]
            agent.node_id = node_id
            state = NodeState(node_id, trajectories[node_id], agent)
            state.api = NodeApi(self, node_id)
            self.nodes[node_id] = state
        self._node_ids = sorted(self.nodes)
        self._pos_tick = -1
        self._pos_array = None
        self._nbr_table: dict[int, tuple] = {}
        self._data_state: dict[str, str] = {}  # pkt_id -> net|done
        self._data_counter = 0
        self._routing_counter = 0
        self.drop_reasons: dict[str, int] = {}
        self._seed_key = str(seed).encode()

    # -- time and geometry -------------------------------------------------

    @property
    def now(self) -> float:
        return self.queue.now

    def _tick_of(self, t: float) -> int:
        return int(t / MOBILITY_STEP + TIME_EPS)

    def _ensure_tick(self, tick: int) -> None:
        if tick == self._pos_tick:
            return
        tq = tick * MOBILITY_STEP
        pos = np.empty((len(self._node_ids), 2))
        for row, node_id in enumerate(self._node_ids):
            pos[row] = position_at(self.nodes[node_id].trajectory, tq)
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        within = dist <= self.radio.radius
        np.fill_diagonal(within, False)
        table = {}
        for row, node_id in enumerate(self._node_ids):
            table[node_id] = tuple(
                self._node_ids[c] for c in np.flatnonzero(within[row])
            )
        self._pos_tick = tick
        self._pos_array = pos
        self._nbr_table = table

    def neighbors(self, node_id: int, t: float) -> tuple:
        """Nodes within the closed radio ball of node_id at the latest
        mobility sample at or before t (sorted, excluding self).
        """
        self._ensure_tick(self._tick_of(t))
        return self._nbr_table[node_id]

    def exact_distance(self, a: int, b: int, t: float) -> float:
        pa = position_at(self.nodes[a].trajectory, t)
        pb = position_at(self.nodes[b].trajectory, t)
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def link_forecast(self, a: int, b: int, horizon: float, t: float = None):
        """Distance-only forecast for the (a, b) link from three exact
        samples on the mobility grid ending at t (default: now).
        """
        t = self.now if t is None else t
        if t < 2 * MOBILITY_STEP:
            raise ValueError("need two grid steps of history for a forecast")
        samples = [
            linkmath.DistanceSample(ts, self.exact_distance(a, b, ts))
            for ts in (t - 2 * MOBILITY_STEP, t - MOBILITY_STEP, t)
        ]
        return linkmath.forecast_link(
            *samples, radius=self.radio.radius, horizon=horizon
        )

    # -- trace -------------------------------------------------------------

    def _log(self, kind: str, node: int, pkt: Packet) -> None:
        if self.collect_trace:
            self.trace.append(
                f"{self.now:.6f} {kind} {node} {pkt.src} {pkt.dst} "
                f"{pkt.pkt_id} {pkt.size} {pkt.ttl}"
            )

    # -- loss model ----------------------------------------------------------

    def _loss_roll(self, pkt_id: str, receiver: int) -> float:
        digest = hashlib.blake2b(
            f"{pkt_id}:{receiver}".encode(),
            key=self._seed_key,
            digest_size=8,
        ).digest()
        return int.from_bytes(digest, "big") / 2**64

    # -- transmission --------------------------------------------------------

    def send_routing(self, src: int, payload, size: int, dst: int, ttl: int):
        self._routing_counter += 1
        pkt = Packet(
            pkt_id=f"r{self._routing_counter}",
            kind="routing",
            src=src,
            dst=dst,
            size=size,
            ttl=ttl,
            payload=payload,
            created_t=self.now,
            hops=0,
        )
        self._transmit(pkt, src, dst)

    def _transmit(self, pkt: Packet, sender: int, link_dst: int) -> None:
        nbrs = self.neighbors(sender, self.now)
        contenders = max(0, len(nbrs) - 1)
        delay = (
            self.radio.base_delay + self.radio.per_contender_delay * contenders
        )
        loss = min(
            1.0,
            self.radio.loss_base + self.radio.loss_per_contender * contenders,
        )
        pkt.hop_src = sender
        if pkt.kind == "routing":
            self.metrics.routing_packets += 1
            self.metrics.routing_bytes += pkt.size
        self._log("TX", sender, pkt)
        if link_dst == BROADCAST:
            receivers = nbrs
        elif link_dst in nbrs:
            receivers = (link_dst,)
        else:
            # Out-of-range unicast: fails at the sender, silently from the
            # network's point of view.
            agent = self.nodes[sender].agent
            if pkt.kind == "routing":
                self._attempt_dropped(pkt, sender, "range")
                agent.on_unicast_failure(self.nodes[sender].api, pkt, link_dst)
            else:
                consumed = agent.on_unicast_failure(
                    self.nodes[sender].api, pkt, link_dst
                )
                if not consumed:
                    self._finish_data(pkt, sender, "range")
            return
        for rx in receivers:
            deliver = self._loss_roll(pkt.pkt_id, rx) >= loss
            if pkt.kind == "routing":
                self.metrics.routing_attempts += 1
            self.queue.push(
                self.now + delay, EventKind.PACKET_RX, (pkt, rx, deliver)
            )

    def _attempt_dropped(self, pkt: Packet, node: int, reason: str) -> None:
        # Routing-packet attempt that never reached a receiver.
        self.drop_reasons[reason] = self.drop_reasons.get(reason, 0) + 1
        self.metrics.routing_attempts += 1
        self.metrics.routing_attempt_dropped += 1
        self._log("DROP", node, pkt)

    # -- data path -----------------------------------------------------------

    def _finish_data(self, pkt: Packet, node: int, reason: str) -> None:
        """Terminal drop of a data packet (app-level accounting)."""
        state = self._data_state.get(pkt.pkt_id)
        if state != "net":
            raise RuntimeError(f"double release of data packet {pkt.pkt_id}")
        self._data_state[pkt.pkt_id] = "done"
        self.metrics.data_dropped += 1
        self.drop_reasons[reason] = self.drop_reasons.get(reason, 0) + 1
        self._log("DROP", node, pkt)

    def drop_data(self, pkt: Packet, node: int, reason: str) -> None:
        self._finish_data(pkt, node, reason)

    def route_data(self, pkt: Packet, at_node: int) -> None:
        """Route a data packet held at at_node toward pkt.dst."""
        agent = self.nodes[at_node].agent
        api = self.nodes[at_node].api
        hop = agent.next_hop(api, pkt.dst)
        if hop is None:
            if not agent.on_no_route(api, pkt):
                self._finish_data(pkt, at_node, "noroute")
            return
        self.dispatch_data(pkt, at_node, hop)

    def dispatch_data(self, pkt: Packet, at_node: int, next_hop: int) -> None:
        if pkt.ttl <= 0:
            self._finish_data(pkt, at_node, "ttl")
            return
        pkt.ttl -= 1
        pkt.hops += 1
        self._transmit(pkt, at_node, next_hop)

    # -- event handlers --------------------------------------------------------

    def _handle_traffic_send(self, flow: FlowConfig) -> None:
        self._data_counter += 1
        pkt = Packet(
            pkt_id=f"d{self._data_counter}",
            kind="data",
            src=flow.src,
            dst=flow.dst,
            size=flow.packet_size,
            ttl=self.data_ttl,
            payload=None,
            created_t=self.now,
        )
        self._data_state[pkt.pkt_id] = "net"
        self.metrics.data_sent += 1
        self._log("SEND", flow.src, pkt)
        self.route_data(pkt, flow.src)

    def _handle_rx(self, pkt: Packet, receiver: int, deliver: bool) -> None:
        if not deliver:
            if pkt.kind == "routing":
                self.metrics.routing_attempt_dropped += 1
                self.drop_reasons["loss"] = self.drop_reasons.get("loss", 0) + 1
                self._log("DROP", receiver, pkt)
            else:
                self._finish_data(pkt, receiver, "loss")
            return
        self._log("RX", receiver, pkt)
        if pkt.kind == "routing":
            self.metrics.routing_attempt_delivered += 1
            agent = self.nodes[receiver].agent
            agent.on_routing_packet(self.nodes[receiver].api, pkt)
            return
        if receiver == pkt.dst:
            state = self._data_state.get(pkt.pkt_id)
            if state != "net":
                raise RuntimeError(f"double release of {pkt.pkt_id}")
            self._data_state[pkt.pkt_id] = "done"
            self.metrics.data_delivered += 1
            latency = self.now - pkt.created_t
            self.metrics.latency_sum += latency
            self.metrics.latencies.append(latency)
            return
        self.route_data(pkt, receiver)

    # -- run ---------------------------------------------------------------

    def run(self) -> RunResult:
        for flow in self.flows:
            flow.validate(self.horizon)
            if flow.src not in self.nodes or flow.dst not in self.nodes:
                raise ValueError(f"flow endpoints unknown: {flow}")
            for t in flow.emission_times():
                self.queue.push(t, EventKind.TRAFFIC_SEND, flow)
        for node_id in self._node_ids:
            state = self.nodes[node_id]
            state.agent.start(state.api)
        while len(self.queue):
            if self.queue.peek_time() > self.horizon:
                break
            ev = self.queue.pop()
            if ev.kind is EventKind.TRAFFIC_SEND:
                self._handle_traffic_send(ev.payload)
            elif ev.kind is EventKind.PACKET_RX:
                self._handle_rx(*ev.payload)
            elif ev.kind is EventKind.TIMER_FIRE:
                node_id, tag, data = ev.payload
                state = self.nodes[node_id]
                state.agent.on_timer(state.api, tag, data)
        for ev in self.queue.drain():
            if ev.kind is EventKind.PACKET_RX:
                pkt = ev.payload[0]
                if pkt.kind == "routing":
                    self.metrics.routing_attempt_in_flight += 1
        self.metrics.data_in_flight = sum(
            1 for state in self._data_state.values() if state == "net"
        )
        return RunResult(metrics=self.metrics, trace_lines=self.trace)
