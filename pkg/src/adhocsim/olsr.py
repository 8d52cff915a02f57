"""Proactive link-state agent with multipoint-relay flooding.

HELLO beacons build 1- and 2-hop neighborhoods; each node picks a minimal
relay subset covering its strict 2-hop neighbors; topology-control
messages advertising relay-selector sets flood the network, re-forwarded
only by selected relays.
"""

from __future__ import annotations

from dataclasses import dataclass

from adhocsim.simkernel import NodeApi, Packet, RoutingAgent
from adhocsim.topology import shortest_next_hops

HELLO_BASE_SIZE = 16
TC_BASE_SIZE = 16
PER_ID_SIZE = 4
TC_TTL = 255
DUP_HOLD = 30.0


@dataclass(frozen=True)
class OlsrParams:
    hello_interval: float = 2.0
    tc_interval: float = 5.0
    hold_time_multiplier: float = 3.0

    def validate(self) -> None:
        if self.hello_interval <= 0 or self.tc_interval <= 0:
            raise ValueError("message intervals must be > 0")
        if self.hold_time_multiplier < 3:
            raise ValueError(
                f"hold_time_multiplier must be >= 3, got {self.hold_time_multiplier}"
            )


DEF_PARAMS = OlsrParams()
MOD_PARAMS = OlsrParams(hello_interval=1.0, tc_interval=3.0)


@dataclass(frozen=True)
class OlsrHello:
    neighbors: tuple  # sender's symmetric 1-hop set
    mprs: tuple  # relays the sender selected

    def wire_size(self) -> int:
        return HELLO_BASE_SIZE + PER_ID_SIZE * (len(self.neighbors) + len(self.mprs))


@dataclass(frozen=True)
class OlsrTc:
    origin: int
    ansn: int
    selectors: tuple  # nodes that picked the origin as a relay

    def wire_size(self) -> int:
        return TC_BASE_SIZE + PER_ID_SIZE * len(self.selectors)


def select_mprs(one_hop, two_hop_coverage) -> set:
    """Greedy relay selection: first every 1-hop node that is the unique
    cover of some 2-hop node, then repeatedly the node covering the most
    still-uncovered 2-hop nodes (ties to the lowest id).  The result
    covers every node appearing in the coverage map.
    """
    uncovered = set()
    for nodes in two_hop_coverage.values():
        uncovered |= set(nodes)
    uncovered -= set(one_hop)
    mprs: set = set()
    for target in sorted(uncovered):
        coverers = [n for n in one_hop if target in two_hop_coverage.get(n, ())]
        if len(coverers) == 1:
            mprs.add(coverers[0])
    uncovered -= {t for m in mprs for t in two_hop_coverage.get(m, ())}
    while uncovered:
        best = max(
            sorted(one_hop),
            key=lambda n: (len(uncovered & set(two_hop_coverage.get(n, ()))), -n),
        )
        gain = uncovered & set(two_hop_coverage.get(best, ()))
        if not gain:
            # Remaining 2-hop nodes are uncoverable from here; nothing a
            # relay set can do about them.
            break
        mprs.add(best)
        uncovered -= gain
    return mprs


class OlsrAgent(RoutingAgent):
    def __init__(self, params: OlsrParams = DEF_PARAMS):
        params.validate()
        self.params = params
        self.one_hop: dict[int, float] = {}  # nbr -> last heard
        self.two_hop: dict[int, tuple] = {}  # nbr -> its neighbor tuple
        self.mpr_set: set = set()
        self.mpr_selectors: dict[int, float] = {}  # selector -> last confirmed
        self.topology: dict[int, tuple] = {}  # origin -> (selectors, t)
        self.last_ansn: dict[int, int] = {}
        self.forwarded: dict[tuple, float] = {}  # (origin, ansn) -> t
        self.ansn = 0
        self.hello_emitted = 0
        self.tc_emitted = 0
        self._routes = {}
        self._dirty = True

    # -- kernel hooks --------------------------------------------------------

    def start(self, api: NodeApi) -> None:
        api.set_timer(self.params.hello_interval, "hello")
        api.set_timer(self.params.tc_interval, "tc")

    def on_timer(self, api: NodeApi, tag: str, data) -> None:
        if tag == "hello":
            payload = self.emit_hello(api.now)
            api.send_routing(payload, size=payload.wire_size(), ttl=1)
            self._expire(api.now)
            api.set_timer(self.params.hello_interval, "hello")
        elif tag == "tc":
            payload = self.emit_tc(api.now)
            if payload is not None:
                api.send_routing(payload, size=payload.wire_size(), ttl=TC_TTL)
            api.set_timer(self.params.tc_interval, "tc")

    def on_routing_packet(self, api: NodeApi, pkt: Packet) -> None:
        payload = pkt.payload
        if isinstance(payload, OlsrHello):
            self._on_hello(api.now, pkt.hop_src, payload)
        elif isinstance(payload, OlsrTc):
            self.on_tc(api, pkt, payload)

    def next_hop(self, api: NodeApi, dst: int):
        route = self._route_table(api.now).get(dst)
        return route[0] if route else None

    # -- protocol logic --------------------------------------------------------

    def emit_hello(self, now: float) -> OlsrHello:
        self.hello_emitted += 1
        self._refresh_mprs(now)
        return OlsrHello(
            neighbors=tuple(sorted(self._live_one_hop(now))),
            mprs=tuple(sorted(self.mpr_set)),
        )

    def emit_tc(self, now: float):
        """Topology-control payload, or None while nobody selected this
        node as a relay (standard suppression).
        """
        selectors = self._live_selectors(now)
        if not selectors:
            return None
        self.tc_emitted += 1
        self.ansn += 1
        return OlsrTc(
            origin=self.node_id, ansn=self.ansn, selectors=tuple(sorted(selectors))
        )

    def _on_hello(self, now: float, sender: int, hello: OlsrHello) -> None:
        self.one_hop[sender] = now
        if self.two_hop.get(sender) != hello.neighbors:
            self._dirty = True
        self.two_hop[sender] = hello.neighbors
        if self.node_id in hello.mprs:
            self.mpr_selectors[sender] = now
        elif sender in self.mpr_selectors:
            del self.mpr_selectors[sender]

    def on_tc(self, api: NodeApi, pkt: Packet, tc: OlsrTc) -> None:
        if tc.origin == api.node_id:
            return
        last = self.last_ansn.get(tc.origin)
        if last is not None and tc.ansn < last:
            return  # stale
        if last is None or tc.ansn > last:
            self.last_ansn[tc.origin] = tc.ansn
            if self.topology.get(tc.origin, (None,))[0] != tc.selectors:
                self._dirty = True
            self.topology[tc.origin] = (tc.selectors, api.now)
        # Default forwarding rule: only relays of the sender re-forward,
        # and each (origin, ansn) is re-forwarded at most once.
        key = (tc.origin, tc.ansn)
        if key in self.forwarded:
            return
        if pkt.hop_src in self.mpr_selectors and pkt.ttl > 1:
            self.forwarded[key] = api.now
            api.send_routing(tc, size=tc.wire_size(), ttl=pkt.ttl - 1)

    # -- neighborhoods and routes ------------------------------------------------

    def _live_one_hop(self, now: float):
        hold = self.params.hold_time_multiplier * self.params.hello_interval
        return [n for n, t in self.one_hop.items() if now - t <= hold]

    def _live_selectors(self, now: float):
        hold = self.params.hold_time_multiplier * self.params.hello_interval
        return [n for n, t in self.mpr_selectors.items() if now - t <= hold]

    def _refresh_mprs(self, now: float) -> None:
        one_hop = set(self._live_one_hop(now))
        coverage = {}
        for nbr in one_hop:
            two = set(self.two_hop.get(nbr, ())) - one_hop - {self.node_id}
            coverage[nbr] = two
        self.mpr_set = select_mprs(one_hop, coverage)

    def _expire(self, now: float) -> None:
        hello_hold = self.params.hold_time_multiplier * self.params.hello_interval
        tc_hold = self.params.hold_time_multiplier * self.params.tc_interval
        for n in [n for n, t in self.one_hop.items() if now - t > hello_hold]:
            del self.one_hop[n]
            self.two_hop.pop(n, None)
            self._dirty = True
        for n in [n for n, t in self.mpr_selectors.items() if now - t > hello_hold]:
            del self.mpr_selectors[n]
        for o in [o for o, (_, t) in self.topology.items() if now - t > tc_hold]:
            del self.topology[o]
            self._dirty = True
        for key in [k for k, t in self.forwarded.items() if now - t > DUP_HOLD]:
            del self.forwarded[key]

    def _adjacency(self, now: float):
        adj: dict[int, set] = {self.node_id: set()}
        for nbr in self._live_one_hop(now):
            adj[self.node_id].add(nbr)
            adj.setdefault(nbr, set()).add(self.node_id)
            for two in self.two_hop.get(nbr, ()):
                adj[nbr].add(two)
                adj.setdefault(two, set()).add(nbr)
        for origin, (selectors, _) in self.topology.items():
            for sel in selectors:
                adj.setdefault(origin, set()).add(sel)
                adj.setdefault(sel, set()).add(origin)
        return {k: sorted(v) for k, v in adj.items()}

    def _route_table(self, now: float):
        if self._dirty:
            self._routes = shortest_next_hops(self._adjacency(now), self.node_id)
            self._dirty = False
        return self._routes

    def route_hops(self, now: float):
        """dest -> (next_hop, hop_count) snapshot (testing/introspection)."""
        return dict(self._route_table(now))
