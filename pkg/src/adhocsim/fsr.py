"""Proactive fisheye link-state agent.

Every node periodically broadcasts link-state entries to its 1-hop
neighbors only (no flooding): nearby origins at the fast cadence, the
whole table at the slow one.  Knowledge of distant topology therefore
propagates hop by hop at a graded frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from adhocsim.simkernel import NodeApi, Packet, RoutingAgent
from adhocsim.topology import hop_distances, shortest_next_hops

UPDATE_BASE_SIZE = 16
ENTRY_BASE_SIZE = 12
PER_NEIGHBOR_SIZE = 4
NEIGHBOR_HOLD_MULT = 3
ENTRY_HOLD_MULT = 3


@dataclass(frozen=True)
class FsrParams:
    intra_scope_interval: float = 5.0
    inter_scope_interval: float = 15.0
    scope_radius: int = 2
    # True recomputes routes the moment an update changes the topology;
    # False (default) defers to the next route lookup, which yields the
    # same tables at a fraction of the cost in dense mobile networks.
    route_recompute: bool = False

    def validate(self) -> None:
        if self.intra_scope_interval <= 0 or self.inter_scope_interval <= 0:
            raise ValueError("scope intervals must be > 0")
        if self.intra_scope_interval > self.inter_scope_interval:
            raise ValueError(
                f"intra interval {self.intra_scope_interval} exceeds "
                f"inter interval {self.inter_scope_interval}"
            )
        if self.scope_radius < 1:
            raise ValueError(f"scope radius must be >= 1, got {self.scope_radius}")


DEF_PARAMS = FsrParams()
MOD_PARAMS = FsrParams(intra_scope_interval=1.0, inter_scope_interval=3.0)


@dataclass(frozen=True)
class FsrUpdate:
    """Link-state broadcast: (origin, seq, neighbors) triples."""

    entries: tuple

    def wire_size(self) -> int:
        return UPDATE_BASE_SIZE + sum(
            ENTRY_BASE_SIZE + PER_NEIGHBOR_SIZE * len(nbrs)
            for _, _, nbrs in self.entries
        )


@dataclass
class TableEntry:
    origin: int
    seq: int
    neighbors: tuple
    received_t: float


@dataclass
class LinkStateTable:
    """Per-origin freshest neighbor lists; stale sequence numbers never
    overwrite fresher ones.

    The undirected adjacency implied by the entries is maintained
    incrementally (an edge lives while either endpoint still lists it).
    """

    entries: dict = field(default_factory=dict)
    adj: dict = field(default_factory=dict)
    _edge_refs: dict = field(default_factory=dict)

    def merge(self, triples, now: float):
        """Apply validated (origin, seq, neighbors) triples; returns True
        when any origin's neighbor list actually changed.  Malformed
        triples raise ValueError before any state is touched.
        """
        accepted = []
        for triple in triples:
            origin, seq, nbrs = triple
            cur = self.entries.get(origin)
            if cur is not None and seq <= cur.seq:
                continue
            if (
                type(origin) is not int
                or type(seq) is not int
                or type(nbrs) is not tuple
                or any(type(n) is not int for n in nbrs)
            ):
                raise ValueError(f"malformed link-state entry: {triple!r}")
            accepted.append((origin, seq, nbrs, cur))
        changed = False
        for origin, seq, nbrs, cur in accepted:
            if cur is None or cur.neighbors != nbrs:
                changed = True
                old = cur.neighbors if cur is not None else ()
                self._apply_edge_delta(origin, old, nbrs)
            self.entries[origin] = TableEntry(origin, seq, nbrs, now)
        return changed

    def prune(self, now: float, hold: float) -> bool:
        stale = [o for o, e in self.entries.items() if now - e.received_t > hold]
        for origin in stale:
            self._apply_edge_delta(origin, self.entries[origin].neighbors, ())
            del self.entries[origin]
        return bool(stale)

    def _apply_edge_delta(self, origin, old_nbrs, new_nbrs) -> None:
        removed = set(old_nbrs) - set(new_nbrs)
        added = set(new_nbrs) - set(old_nbrs)
        for nbr in removed:
            key = (origin, nbr) if origin < nbr else (nbr, origin)
            refs = self._edge_refs.get(key, 0) - 1
            if refs <= 0:
                self._edge_refs.pop(key, None)
                self._drop_edge(origin, nbr)
            else:
                self._edge_refs[key] = refs
        for nbr in added:
            key = (origin, nbr) if origin < nbr else (nbr, origin)
            refs = self._edge_refs.get(key, 0) + 1
            self._edge_refs[key] = refs
            if refs == 1:
                self.adj.setdefault(origin, set()).add(nbr)
                self.adj.setdefault(nbr, set()).add(origin)

    def _drop_edge(self, a, b) -> None:
        row = self.adj.get(a)
        if row is not None:
            row.discard(b)
            if not row:
                del self.adj[a]
        row = self.adj.get(b)
        if row is not None:
            row.discard(a)
            if not row:
                del self.adj[b]


class FsrAgent(RoutingAgent):
    def __init__(self, params: FsrParams = DEF_PARAMS):
        params.validate()
        self.params = params
        self.table = LinkStateTable()
        self.neighbors_heard: dict[int, float] = {}
        self.own_seq = 0
        self.emissions = 0
        self.intra_emitted = 0
        self.inter_emitted = 0
        self.malformed = 0
        self._routes = {}
        self._dirty = True

    # -- kernel hooks --------------------------------------------------------

    def start(self, api: NodeApi) -> None:
        api.set_timer(self.params.intra_scope_interval, "update")

    def on_timer(self, api: NodeApi, tag: str, data) -> None:
        if tag != "update":
            return
        self.emissions += 1
        payload = self.periodic_update(api.now)
        api.send_routing(payload, size=payload.wire_size(), ttl=1)
        self._expire(api.now)
        api.set_timer(self.params.intra_scope_interval, "update")

    def on_routing_packet(self, api: NodeApi, pkt: Packet) -> None:
        self.on_update_received(pkt.payload, api.now, from_node=pkt.hop_src)

    def next_hop(self, api: NodeApi, dst: int):
        route = self._route_table(api.now).get(dst)
        return route[0] if route else None

    # -- protocol logic --------------------------------------------------------

    def periodic_update(self, now: float) -> FsrUpdate:
        """Build this round's broadcast: in-scope entries at the fast
        cadence, the full table on inter_scope_interval boundaries.
        """
        self.own_seq += 1
        full = self._is_full_round()
        live = self._live_neighbors(now)
        own = (self.node_id, self.own_seq, tuple(sorted(live)))
        entries = [own]
        if full:
            self.inter_emitted += 1
            origins = sorted(self.table.entries)
        else:
            self.intra_emitted += 1
            scope = hop_distances(
                self._adjacency(now), self.node_id, max_depth=self.params.scope_radius
            )
            origins = sorted(o for o in self.table.entries if o in scope)
        for origin in origins:
            if origin == self.node_id:
                continue
            e = self.table.entries[origin]
            entries.append((origin, e.seq, e.neighbors))
        return FsrUpdate(entries=tuple(entries))

    def _is_full_round(self) -> bool:
        ratio = self.params.inter_scope_interval / self.params.intra_scope_interval
        k = round(ratio)
        if abs(ratio - k) < 1e-9:
            return self.emissions % k == 0
        t = self.emissions * self.params.intra_scope_interval
        return abs(t / self.params.inter_scope_interval - round(
            t / self.params.inter_scope_interval)) < 1e-9

    def on_update_received(self, payload, now: float, from_node: int = None):
        """Merge a received update; malformed payloads are counted and
        ignored without touching any state.
        """
        if not isinstance(payload, FsrUpdate) or type(payload.entries) is not tuple:
            self.malformed += 1
            return
        try:
            changed = self.table.merge(payload.entries, now)
        except (TypeError, ValueError):
            self.malformed += 1
            return
        if from_node is not None:
            self.neighbors_heard[from_node] = now
        if changed:
            self._dirty = True
            if self.params.route_recompute:
                self._recompute(now)

    # -- tables ---------------------------------------------------------------

    def _live_neighbors(self, now: float):
        hold = NEIGHBOR_HOLD_MULT * self.params.intra_scope_interval
        return [n for n, t in self.neighbors_heard.items() if now - t <= hold]

    def _adjacency(self, now: float):
        """Merged topology view: table adjacency plus this node's own
        sensed links.  Only rows touched by the overlay are copied.
        """
        adj = dict(self.table.adj)
        me = self.node_id
        mine = set(adj.get(me, ()))
        for nbr in self._live_neighbors(now):
            mine.add(nbr)
            row = adj.get(nbr)
            if row is None or me not in row:
                row = set(row) if row is not None else set()
                row.add(me)
                adj[nbr] = row
        adj[me] = mine
        return adj

    def _expire(self, now: float) -> None:
        hold = ENTRY_HOLD_MULT * self.params.inter_scope_interval
        if self.table.prune(now, hold):
            self._dirty = True
        stale = [
            n
            for n, t in self.neighbors_heard.items()
            if now - t > NEIGHBOR_HOLD_MULT * self.params.intra_scope_interval
        ]
        for n in stale:
            del self.neighbors_heard[n]
            self._dirty = True

    def _route_table(self, now: float):
        if self._dirty:
            self._recompute(now)
        return self._routes

    def _recompute(self, now: float) -> None:
        self._routes = shortest_next_hops(self._adjacency(now), self.node_id)
        self._dirty = False

    def route_hops(self, now: float):
        """dest -> (next_hop, hop_count) snapshot (testing/introspection)."""
        return dict(self._route_table(now))
