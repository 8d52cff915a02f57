"""Reactive distance-vector routing agent.

Route discovery floods route requests with an expanding TTL ring, routes
are confirmed by unicast route replies (optionally gratuitous ones from
intermediate responders), HELLO beacons sense link liveness, and broken
links are either repaired locally or reported upstream with route errors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from adhocsim.simkernel import NodeApi, Packet, RoutingAgent

HELLO_SIZE = 24
RREQ_SIZE = 48
RREP_SIZE = 44
RERR_BASE_SIZE = 20
RERR_PER_DEST = 8
SEEN_RREQ_HOLD = 5.0


@dataclass(frozen=True)
class AodvParams:
    ttl_start: int = 1
    ttl_increment: int = 2
    ttl_threshold: int = 7
    net_diameter: int = 30
    hello_interval: float = 1.0
    allowed_hello_loss: int = 2
    local_repair: bool = True
    grat_rrep: bool = True
    rreq_retries: int = 2
    node_traversal_time: float = 0.04
    active_route_timeout: float = 10.0
    buffer_timeout: float = 30.0
    local_add_ttl: int = 2
    # Failed discoveries back off exponentially (base * 2^fails, capped)
    # before the next attempt for the same destination.
    discovery_backoff: float = 1.0
    discovery_backoff_cap: float = 30.0

    def validate(self) -> None:
        if self.ttl_start < 1:
            raise ValueError(f"ttl_start must be >= 1, got {self.ttl_start}")
        if self.ttl_threshold > self.net_diameter:
            raise ValueError(
                f"ttl_threshold {self.ttl_threshold} exceeds "
                f"net_diameter {self.net_diameter}"
            )
        if self.ttl_start > self.net_diameter:
            raise ValueError("ttl_start exceeds net_diameter")
        if self.ttl_increment < 1:
            raise ValueError("ttl_increment must be >= 1")


DEF_PARAMS = AodvParams()
MOD_PARAMS = AodvParams(ttl_increment=4, ttl_threshold=9, net_diameter=10)


def expanding_ring_ttls(params: AodvParams) -> list[int]:
    """TTL schedule for one route discovery: climb by ttl_increment while
    within ttl_threshold, then retry at net_diameter up to rreq_retries
    more times.
    """
    params.validate()
    seq = [params.ttl_start]
    ttl = params.ttl_start
    while ttl + params.ttl_increment <= params.ttl_threshold:
        ttl += params.ttl_increment
        seq.append(ttl)
    seq.extend([params.net_diameter] * (1 + params.rreq_retries))
    return seq


class RouteState(enum.Enum):
    VALID = "valid"
    UNDER_REPAIR = "under_repair"
    INVALID = "invalid"


@dataclass
class RouteEntry:
    dest: int
    next_hop: int
    hop_count: int
    dest_seq: int
    lifetime: float
    state: RouteState = RouteState.VALID
    last_used: float = -1.0e30  # last time data was forwarded on it


@dataclass(frozen=True)
class Hello:
    pass


@dataclass(frozen=True)
class Rreq:
    origin: int
    origin_seq: int
    rreq_id: int
    dst: int
    dst_seq: int
    hop_count: int


@dataclass(frozen=True)
class Rrep:
    route_dst: int  # node this reply advertises a route to
    dst_seq: int
    requester: int  # node the reply travels toward
    hop_count: int
    lifetime: float


@dataclass(frozen=True)
class Rerr:
    unreachable: tuple  # of (dest, dest_seq)


@dataclass
class Discovery:
    """In-progress route discovery (or local repair) for one destination."""

    ring: list
    idx: int = 0
    repair: bool = False
    buffer: list = field(default_factory=list)  # (pkt, enqueue_t)


class AodvAgent(RoutingAgent):
    def __init__(self, params: AodvParams = DEF_PARAMS):
        params.validate()
        self.params = params
        self.routes: dict[int, RouteEntry] = {}
        self.own_seq = 0
        self.rreq_id = 0
        self.seen_rreqs: dict[tuple, float] = {}
        self.last_heard: dict[int, float] = {}
        self.pending: dict[int, Discovery] = {}
        self.backoff: dict[int, tuple] = {}  # dst -> (blocked_until, fails)

    # -- kernel hooks --------------------------------------------------------

    def start(self, api: NodeApi) -> None:
        api.set_timer(self.params.hello_interval, "hello")

    def on_timer(self, api: NodeApi, tag: str, data) -> None:
        if tag == "hello":
            api.send_routing(Hello(), size=HELLO_SIZE, ttl=1)
            self._sweep(api)
            api.set_timer(self.params.hello_interval, "hello")
        elif tag == "ring":
            self._ring_timeout(api, data)

    def on_routing_packet(self, api: NodeApi, pkt: Packet) -> None:
        self._heard(api, pkt.hop_src)
        payload = pkt.payload
        if isinstance(payload, Rreq):
            self.on_rreq(api, pkt, payload)
        elif isinstance(payload, Rrep):
            self._on_rrep(api, pkt.hop_src, payload)
        elif isinstance(payload, Rerr):
            self._on_rerr(api, pkt.hop_src, payload)

    def next_hop(self, api: NodeApi, dst: int):
        entry = self.routes.get(dst)
        if (
            entry is None
            or entry.state is not RouteState.VALID
            or entry.lifetime < api.now
        ):
            return None
        entry.lifetime = api.now + self.params.active_route_timeout
        entry.last_used = api.now
        return entry.next_hop

    def on_no_route(self, api: NodeApi, pkt: Packet) -> bool:
        disc = self.pending.get(pkt.dst)
        if disc is not None:
            disc.buffer.append((pkt, api.now))
            return True
        if pkt.src == api.node_id:
            if not self._start_discovery(api, pkt.dst):
                return False  # backing off after repeated failures
            self.pending[pkt.dst].buffer.append((pkt, api.now))
            return True
        # Mid-path hole with no repair in progress: report upstream.
        entry = self.routes.get(pkt.dst)
        seq = entry.dest_seq if entry else 0
        self._send_rerr(api, [(pkt.dst, seq)])
        return False

    def on_unicast_failure(self, api: NodeApi, pkt: Packet, failed_hop: int) -> bool:
        return self.on_link_break(api, failed_hop, pkt)

    # -- protocol logic --------------------------------------------------------

    def on_rreq(self, api: NodeApi, pkt: Packet, rreq: Rreq) -> None:
        hops_here = rreq.hop_count + 1
        # Reverse routes live just long enough for the reply to come back;
        # only replies and data promote them to full lifetime.
        net_traversal = 2.0 * self.params.node_traversal_time * self.params.net_diameter
        rev_life = max(
            2.0 * net_traversal - 2.0 * hops_here * self.params.node_traversal_time,
            1.0,
        )
        self._update_route(
            api, rreq.origin, pkt.hop_src, hops_here, rreq.origin_seq,
            lifetime=rev_life,
        )
        key = (rreq.origin, rreq.rreq_id)
        if key in self.seen_rreqs:
            return
        self.seen_rreqs[key] = api.now
        me = api.node_id
        if rreq.dst == me:
            self.own_seq = max(self.own_seq, rreq.dst_seq) + 1
            self._send_rrep_toward(
                api,
                requester=rreq.origin,
                route_dst=me,
                dst_seq=self.own_seq,
                hop_count=0,
            )
            return
        entry = self.routes.get(rreq.dst)
        fresh = (
            entry is not None
            and entry.state is RouteState.VALID
            and entry.lifetime >= api.now
            and entry.dest_seq >= rreq.dst_seq
            and entry.dest_seq > 0
        )
        if fresh:
            self._send_rrep_toward(
                api,
                requester=rreq.origin,
                route_dst=rreq.dst,
                dst_seq=entry.dest_seq,
                hop_count=entry.hop_count,
            )
            if self.params.grat_rrep:
                # Tell the destination how to reach the originator so both
                # ends of the route come up.
                grat = Rrep(
                    route_dst=rreq.origin,
                    dst_seq=rreq.origin_seq,
                    requester=rreq.dst,
                    hop_count=hops_here,
                    lifetime=self.params.active_route_timeout,
                )
                self._unicast(api, grat, entry.next_hop)
            return
        if pkt.ttl > 1:
            fwd = replace(rreq, hop_count=hops_here)
            api.send_routing(fwd, size=RREQ_SIZE, ttl=pkt.ttl - 1)

    def _on_rrep(self, api: NodeApi, from_node: int, rrep: Rrep) -> None:
        me = api.node_id
        hops_here = rrep.hop_count + 1
        if rrep.route_dst != me:
            self._update_route(
                api, rrep.route_dst, from_node, hops_here, rrep.dst_seq
            )
        if rrep.requester == me:
            self._discovery_resolved(api, rrep.route_dst)
            return
        entry = self.routes.get(rrep.requester)
        if entry is None or entry.state is not RouteState.VALID:
            return  # reverse route evaporated; reply dies here
        fwd = replace(rrep, hop_count=hops_here)
        self._unicast(api, fwd, entry.next_hop)

    def _on_rerr(self, api: NodeApi, from_node: int, rerr: Rerr) -> None:
        invalidated = []
        for dest, seq in rerr.unreachable:
            entry = self.routes.get(dest)
            if (
                entry is not None
                and entry.state is RouteState.VALID
                and entry.next_hop == from_node
            ):
                entry.state = RouteState.INVALID
                entry.dest_seq = max(entry.dest_seq, seq)
                invalidated.append((dest, entry.dest_seq))
        if invalidated:
            self._send_rerr(api, invalidated)

    def on_link_break(self, api: NodeApi, lost_hop: int, pkt: Packet = None) -> bool:
        """Handle a broken next hop; returns True when a data packet in
        hand was taken into a repair buffer.
        """
        self.last_heard.pop(lost_hop, None)
        consumed = False
        errors = []
        for dest in sorted(self.routes):
            entry = self.routes[dest]
            if entry.state is not RouteState.VALID or entry.next_hop != lost_hop:
                continue
            data_for_dest = (
                pkt is not None and pkt.kind == "data" and pkt.dst == dest
            )
            active = (
                data_for_dest
                or api.now - entry.last_used <= self.params.active_route_timeout
            )
            # The destination is now at least one sequence number ahead of
            # anything cached upstream, so stale routes back through this
            # node can never answer the repair request.
            entry.dest_seq += 1
            if not active:
                # Nobody is using this route: invalidate quietly instead of
                # flooding repairs and errors for idle state.
                entry.state = RouteState.INVALID
                continue
            if (
                self.params.local_repair
                and self._repair_worthwhile(entry, pkt)
                and self._start_discovery(api, dest, repair=True)
            ):
                entry.state = RouteState.UNDER_REPAIR
                if data_for_dest:
                    self.pending[dest].buffer.append((pkt, api.now))
                    consumed = True
            else:
                entry.state = RouteState.INVALID
                errors.append((dest, entry.dest_seq))
        if errors:
            self._send_rerr(api, errors)
        return consumed

    def _repair_worthwhile(self, entry: RouteEntry, pkt) -> bool:
        # Repair when the break sits in the downstream half of the path:
        # this node must be at least as close to the destination as to the
        # data origin (falling back to a diameter bound without a packet).
        if pkt is not None and pkt.kind == "data":
            return entry.hop_count <= max(pkt.hops, 1)
        return entry.hop_count <= max(self.params.net_diameter // 2, 2)

    # -- discovery machinery -----------------------------------------------------

    def _start_discovery(self, api: NodeApi, dst: int, repair: bool = False) -> bool:
        if dst in self.pending:
            return False
        blocked_until, _ = self.backoff.get(dst, (0.0, 0))
        if api.now < blocked_until:
            return False
        if repair:
            entry = self.routes[dst]
            ttl = max(entry.hop_count // 2, 2) + self.params.local_add_ttl
            disc = Discovery(ring=[min(ttl, self.params.net_diameter)], repair=True)
        else:
            disc = Discovery(ring=expanding_ring_ttls(self.params))
        self.pending[dst] = disc
        self._send_rreq(api, dst)
        return True

    def _send_rreq(self, api: NodeApi, dst: int) -> None:
        disc = self.pending[dst]
        ttl = disc.ring[disc.idx]
        self.own_seq += 1
        self.rreq_id += 1
        entry = self.routes.get(dst)
        rreq = Rreq(
            origin=api.node_id,
            origin_seq=self.own_seq,
            rreq_id=self.rreq_id,
            dst=dst,
            dst_seq=entry.dest_seq if entry else 0,
            hop_count=0,
        )
        api.send_routing(rreq, size=RREQ_SIZE, ttl=ttl)
        timeout = 2.0 * self.params.node_traversal_time * (ttl + 2)
        api.set_timer(timeout, "ring", dst)

    def _ring_timeout(self, api: NodeApi, dst: int) -> None:
        disc = self.pending.get(dst)
        if disc is None:
            return
        disc.idx += 1
        if disc.idx < len(disc.ring):
            self._send_rreq(api, dst)
            return
        # Give up: drop whatever was waiting, error out repairs, and back
        # off before retrying this destination.
        del self.pending[dst]
        _, fails = self.backoff.get(dst, (0.0, 0))
        delay = min(
            self.params.discovery_backoff * 2**fails,
            self.params.discovery_backoff_cap,
        )
        self.backoff[dst] = (api.now + delay, fails + 1)
        for pkt, _ in disc.buffer:
            api.drop_data(pkt, "noroute")
        entry = self.routes.get(dst)
        if entry is not None and entry.state is not RouteState.VALID:
            entry.state = RouteState.INVALID
            entry.dest_seq += 1
            if disc.repair:
                self._send_rerr(api, [(dst, entry.dest_seq)])

    def _discovery_resolved(self, api: NodeApi, dst: int) -> None:
        self.backoff.pop(dst, None)
        disc = self.pending.pop(dst, None)
        if disc is None:
            return
        for pkt, _ in disc.buffer:
            api.forward_data(pkt)

    # -- helpers -------------------------------------------------------------

    def _heard(self, api: NodeApi, nbr: int) -> None:
        self.last_heard[nbr] = api.now
        entry = self.routes.get(nbr)
        lifetime = api.now + self.params.active_route_timeout
        if entry is None or entry.state is not RouteState.VALID:
            seq = entry.dest_seq if entry else 0
            self.routes[nbr] = RouteEntry(nbr, nbr, 1, seq, lifetime)
        elif entry.next_hop == nbr and entry.hop_count == 1:
            entry.lifetime = max(entry.lifetime, lifetime)

    def _update_route(
        self, api: NodeApi, dest: int, next_hop: int, hop_count: int, seq: int,
        lifetime: float = None,
    ) -> None:
        if dest == api.node_id:
            return
        entry = self.routes.get(dest)
        expiry = api.now + (
            self.params.active_route_timeout if lifetime is None else lifetime
        )
        if entry is None:
            self.routes[dest] = RouteEntry(dest, next_hop, hop_count, seq, expiry)
            return
        accept = (
            seq > entry.dest_seq
            or (seq == entry.dest_seq and hop_count < entry.hop_count)
            or entry.state is not RouteState.VALID
            or entry.lifetime < api.now
        )
        if accept:
            entry.next_hop = next_hop
            entry.hop_count = hop_count
            entry.dest_seq = max(entry.dest_seq, seq)
            entry.lifetime = max(entry.lifetime, expiry)
            entry.state = RouteState.VALID

    def _send_rrep_toward(self, api, requester, route_dst, dst_seq, hop_count):
        entry = self.routes.get(requester)
        if entry is None or entry.state is not RouteState.VALID:
            return
        rrep = Rrep(
            route_dst=route_dst,
            dst_seq=dst_seq,
            requester=requester,
            hop_count=hop_count,
            lifetime=self.params.active_route_timeout,
        )
        self._unicast(api, rrep, entry.next_hop)

    def _unicast(self, api: NodeApi, payload, next_hop: int) -> None:
        size = RREP_SIZE if isinstance(payload, Rrep) else RREQ_SIZE
        api.send_routing(payload, size=size, dst=next_hop, ttl=1)

    def _send_rerr(self, api: NodeApi, unreachable) -> None:
        payload = Rerr(unreachable=tuple(unreachable))
        size = RERR_BASE_SIZE + RERR_PER_DEST * len(payload.unreachable)
        api.send_routing(payload, size=size, ttl=1)

    def _sweep(self, api: NodeApi) -> None:
        now = api.now
        deadline = self.params.allowed_hello_loss * self.params.hello_interval
        for nbr in sorted(self.last_heard):
            if now - self.last_heard[nbr] > deadline:
                self.on_link_break(api, nbr)
        for key in [k for k, t in self.seen_rreqs.items() if now - t > SEEN_RREQ_HOLD]:
            del self.seen_rreqs[key]
        for entry in self.routes.values():
            if entry.state is RouteState.VALID and entry.lifetime < now:
                entry.state = RouteState.INVALID
        for dst in sorted(self.pending):
            disc = self.pending[dst]
            kept = []
            for pkt, enq_t in disc.buffer:
                if now - enq_t > self.params.buffer_timeout:
                    api.drop_data(pkt, "buffer_timeout")
                else:
                    kept.append((pkt, enq_t))
            disc.buffer = kept
