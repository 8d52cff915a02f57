"""Shortest-path helpers shared by the table-driven routing agents."""

from __future__ import annotations


def shortest_next_hops(adjacency, source):
    """Hop-count shortest paths over an adjacency mapping.

    Returns {dest: (next_hop, hop_count)}.  Among equal-length paths the
    lowest next-hop id wins, which keeps route tables deterministic no
    matter the insertion order of the adjacency.
    """
    routes: dict[int, tuple[int, int]] = {}
    seen = {source}
    frontier = [source]
    depth = 0
    while frontier:
        depth += 1
        candidates: dict[int, int] = {}
        for v in frontier:
            for w in adjacency.get(v, ()):
                if w in seen:
                    continue
                via = w if depth == 1 else routes[v][0]
                prev = candidates.get(w)
                if prev is None or via < prev:
                    candidates[w] = via
        for w, via in candidates.items():
            routes[w] = (via, depth)
            seen.add(w)
        frontier = sorted(candidates)
    return routes


def hop_distances(adjacency, source, max_depth=None):
    """Breadth-first hop counts from source, optionally truncated."""
    dist = {source: 0}
    frontier = [source]
    depth = 0
    while frontier and (max_depth is None or depth < max_depth):
        depth += 1
        nxt = []
        for v in frontier:
            for w in adjacency.get(v, ()):
                if w not in dist:
                    dist[w] = depth
                    nxt.append(w)
        frontier = nxt
    return dist
