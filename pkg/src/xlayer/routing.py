"""Channel graph view and fee-minimal routing.

Fees are carried exactly as integers in micro-millisatoshis
(base_fee_msat * 1e6 + amount_sat * 1000 * rate_ppm), so ties are exact.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .errors import NoPath
from .model import Channel, Snapshot

MICRO = 1_000_000


@dataclass(frozen=True)
class ChannelGraph:
    nodes: tuple[str, ...]
    channels: tuple[Channel, ...]

    @classmethod
    def build(cls, channels: Iterable[Channel], nodes: Iterable[str] = ()) -> "ChannelGraph":
        channels = tuple(sorted(channels, key=lambda c: c.chpoint))
        names = set(nodes)
        for c in channels:
            names.update(c.nodes)
        return cls(tuple(sorted(names)), channels)

    @classmethod
    def from_snapshot(cls, snapshot: Snapshot, at_time: int | None = None) -> "ChannelGraph":
        """Channels open at ``at_time`` (default: still open at snapshot end)."""
        if at_time is None:
            chans = [c for c in snapshot.channels if c.is_open]
        else:
            chans = [
                c for c in snapshot.channels
                if (c.open_time is None or c.open_time <= at_time) and (c.close_time is None or c.close_time > at_time)
            ]
        return cls.build(chans)

    @cached_property
    def adjacency(self) -> dict[str, list[tuple[str, int]]]:
        adj: dict[str, list[tuple[str, int]]] = {n: [] for n in self.nodes}
        for i, c in enumerate(self.channels):
            adj[c.node1].append((c.node2, i))
            adj[c.node2].append((c.node1, i))
        return adj

    @cached_property
    def total_capacity(self) -> int:
        return sum(c.capacity for c in self.channels)

    def without(self, removed: Iterable[str]) -> "ChannelGraph":
        gone = set(removed)
        return ChannelGraph(
            tuple(n for n in self.nodes if n not in gone),
            tuple(c for c in self.channels if c.node1 not in gone and c.node2 not in gone),
        )

    def components(self) -> list[set[str]]:
        seen: set[str] = set()
        out = []
        for start in self.nodes:
            if start in seen:
                continue
            comp, stack = {start}, [start]
            seen.add(start)
            while stack:
                u = stack.pop()
                for v, _ in self.adjacency[u]:
                    if v not in seen:
                        seen.add(v)
                        comp.add(v)
                        stack.append(v)
            out.append(comp)
        return out

    def pair_capacities(self) -> dict[tuple[str, str], int]:
        """Undirected capacity per node pair, parallel channels summed."""
        caps: dict[tuple[str, str], int] = defaultdict(int)
        for c in self.channels:
            caps[tuple(sorted(c.nodes))] += c.capacity
        return dict(caps)


def hop_fee(channel: Channel, from_node: str, amount: int) -> int | None:
    """Fee charged by ``from_node`` for forwarding over ``channel``; None if it announced no policy."""
    pol = channel.policy_from(from_node)
    if pol is None:
        return None
    return pol.base_fee * MICRO + amount * 1000 * pol.rate


@dataclass(frozen=True)
class Route:
    nodes: tuple[str, ...]
    fee: int  # micro-msat

    @property
    def fee_msat(self) -> float:
        return self.fee / MICRO

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    @property
    def intermediaries(self) -> tuple[str, ...]:
        return self.nodes[1:-1]


def cheapest_paths_from(graph: ChannelGraph, src: str, amount: int) -> dict[str, Route]:
    """Fee-minimal routes from ``src`` to every reachable node.

    The sender forwards for free; every intermediary charges its own policy on
    the outgoing channel. Channels below ``amount`` are unusable. Ties go to
    fewer hops, then the lexicographically smaller node sequence.
    """
    if amount <= 0:
        raise ValueError("amount must be > 0")
    adj = graph.adjacency
    if src not in adj:
        return {}
    chans = graph.channels
    best: dict[str, tuple[int, int, tuple[str, ...]]] = {src: (0, 0, (src,))}
    heap = [(0, 0, (src,))]
    done: dict[str, Route] = {}
    while heap:
        cost, hops, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done[u] = Route(path, cost)
        for v, ci in adj[u]:
            if v in done:
                continue
            ch = chans[ci]
            if ch.capacity < amount:
                continue
            if u == src:
                step = 0
            else:
                step = hop_fee(ch, u, amount)
                if step is None:
                    continue
            label = (cost + step, hops + 1, path + (v,))
            if v not in best or label < best[v]:
                best[v] = label
                heapq.heappush(heap, label)
    del done[src]
    return done


def cheapest_path(graph: ChannelGraph, src: str, dst: str, amount: int) -> Route:
    route = cheapest_paths_from(graph, src, amount).get(dst)
    if route is None:
        raise NoPath(f"no route {src} -> {dst} for {amount} sat", src=src, dst=dst, amount=amount)
    return route


def route_table(
    graph: ChannelGraph,
    amount: int,
    pairs: Sequence[tuple[str, str]] | None = None,
) -> dict[tuple[str, str], Route | None]:
    """Cheapest routes for the given ordered pairs (all ordered pairs when None)."""
    if pairs is None:
        pairs = [(s, d) for s in graph.nodes for d in graph.nodes if s != d]
    by_src: dict[str, list[str]] = defaultdict(list)
    for s, d in pairs:
        by_src[s].append(d)
    out: dict[tuple[str, str], Route | None] = {}
    for s in sorted(by_src):
        routes = cheapest_paths_from(graph, s, amount)
        for d in by_src[s]:
            out[(s, d)] = routes.get(d)
    return out
