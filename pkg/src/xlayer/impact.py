"""Actor-level security and privacy impact on a channel graph."""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .dsu import DisjointSet
from .errors import ActorUnknown
from .model import ChannelPoint, Snapshot
from .routing import ChannelGraph, Route, route_table

INT32_MAX = 2**31 - 1


def advantage(before: float, after: float) -> float:
    """|1 - m'/m|; zero when the a-priori measurement is zero."""
    if before == 0:
        return 0.0
    return abs(1.0 - after / before)


# -- actors and capacity --------------------------------------------------------------------------

def build_actors(
    nodes: Iterable[str],
    actor_clusters: Iterable[Iterable[str]] = (),
    links: Iterable[tuple[int, str]] = (),
) -> dict[str, frozenset[str]]:
    """Partition nodes into actors: off-chain clusters joined with nodes linked to a common entity.

    Multi-node actors are labelled A0, A1, ... by smallest member; singletons keep their nid.
    """
    dsu: DisjointSet[str] = DisjointSet(nodes)
    for cl in actor_clusters:
        dsu.union_all(sorted(cl))
    by_entity: dict[int, list[str]] = defaultdict(list)
    for e, n in links:
        by_entity[e].append(n)
    for ns in by_entity.values():
        dsu.union_all(sorted(ns))
    out: dict[str, frozenset[str]] = {}
    k = 0
    for g in sorted(dsu.groups(), key=min):
        if len(g) == 1:
            out[next(iter(g))] = frozenset(g)
        else:
            out[f"A{k}"] = frozenset(g)
            k += 1
    return out


def linked_openers(snapshot: Snapshot, links: Iterable[tuple[int, str]]) -> dict[ChannelPoint, str]:
    """Channel -> endpoint linked to the channel's funding entity, when exactly one endpoint is."""
    linked: dict[int, set[str]] = defaultdict(set)
    for e, n in links:
        linked[e].add(n)
    chan_addrs = snapshot.channel_addresses
    out = {}
    for c in snapshot.channels:
        tx = snapshot.transactions[c.chpoint.txid]
        if tx.is_coinjoin:
            continue
        funders = {snapshot.entity_of[a] for a in tx.input_addresses if a not in chan_addrs}
        hits = {n for f in funders for n in linked.get(f, ()) if n in c.nodes}
        if len(hits) == 1:
            out[c.chpoint] = hits.pop()
    return out


@dataclass(frozen=True)
class CapacityRow:
    actor: str
    node_count: int
    capacity: Fraction
    share: float


def capacity_distribution(
    graph: ChannelGraph,
    actors: Mapping[str, Iterable[str]],
    openers: Mapping[ChannelPoint, str] | None = None,
) -> list[CapacityRow]:
    """Capacity per actor, largest first.

    A channel whose opener is known is credited in full to the opener; any
    other channel is split evenly between its endpoints.
    """
    openers = openers or {}
    owner = {n: a for a, ns in actors.items() for n in ns}
    per_node: dict[str, Fraction] = defaultdict(Fraction)
    for c in graph.channels:
        op = openers.get(c.chpoint)
        if op in c.nodes:
            per_node[op] += c.capacity
        else:
            per_node[c.node1] += Fraction(c.capacity, 2)
            per_node[c.node2] += Fraction(c.capacity, 2)
    per_actor: dict[str, Fraction] = defaultdict(Fraction)
    for n, cap in per_node.items():
        per_actor[owner.get(n, n)] += cap
    total = sum(per_actor.values(), Fraction(0))
    rows = [
        CapacityRow(a, len(list(actors.get(a, [a]))), cap, float(cap / total) if total else 0.0)
        for a, cap in per_actor.items()
    ]
    rows.sort(key=lambda r: (-r.capacity, r.actor))
    return rows


# -- DoS advantage ---------------------------------------------------------------------------------

def sample_pairs(nodes: Sequence[str], count: int, seed: int) -> list[tuple[str, str]]:
    """Uniform ordered pairs of distinct nodes, with replacement."""
    nodes = sorted(nodes)
    if len(nodes) < 2:
        return []
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        u, v = rng.choice(nodes), rng.choice(nodes)
        if u != v:
            out.append((u, v))
    return out


def largest_component_size(graph: ChannelGraph) -> int:
    comps = graph.components()
    return max((len(c) for c in comps), default=0)


def _flows_scipy(graph: ChannelGraph, pairs: Iterable[tuple[str, str]], caps) -> dict[tuple[str, str], int]:
    index = {n: i for i, n in enumerate(graph.nodes)}
    rows, cols, vals = [], [], []
    for (u, v), cap in caps.items():
        rows += [index[u], index[v]]
        cols += [index[v], index[u]]
        vals += [cap, cap]
    n = len(graph.nodes)
    mat = csr_matrix((np.array(vals, dtype=np.int32), (rows, cols)), shape=(n, n))
    return {(u, v): int(maximum_flow(mat, index[u], index[v]).flow_value) for u, v in pairs}


def _flows_networkx(graph: ChannelGraph, pairs: Iterable[tuple[str, str]], caps) -> dict[tuple[str, str], int]:
    g = nx.Graph()
    g.add_nodes_from(graph.nodes)
    for (u, v), cap in caps.items():
        g.add_edge(u, v, capacity=cap)
    return {(u, v): int(nx.maximum_flow_value(g, u, v)) for u, v in pairs}


def max_flow_values(
    graph: ChannelGraph,
    pairs: Iterable[tuple[str, str]],
    backend: str = "auto",
) -> dict[tuple[str, str], int]:
    """Exact max flow per pair, channel capacities as undirected limits."""
    caps = graph.pair_capacities()
    comp_of = {}
    for k, comp in enumerate(graph.components()):
        for n in comp:
            comp_of[n] = k
    wanted = set()
    out: dict[tuple[str, str], int] = {}
    for u, v in pairs:
        key = (u, v) if u < v else (v, u)
        if u not in comp_of or v not in comp_of or comp_of[u] != comp_of[v]:
            out[key] = 0
        else:
            wanted.add(key)
    if wanted:
        if backend == "auto":
            backend = "scipy" if max(caps.values(), default=0) <= INT32_MAX else "networkx"
        solver = _flows_scipy if backend == "scipy" else _flows_networkx
        out.update(solver(graph, sorted(wanted), caps))
    return out


def reachable_at(graph: ChannelGraph, src: str, amount: int) -> set[str]:
    """Nodes a payment of ``amount`` from ``src`` can reach (same usability rules as routing)."""
    if src not in graph.adjacency:
        return set()
    chans = graph.channels
    seen, stack = {src}, [src]
    while stack:
        u = stack.pop()
        for v, ci in graph.adjacency[u]:
            ch = chans[ci]
            if v in seen or ch.capacity < amount:
                continue
            if u != src and ch.policy_from(u) is None:
                continue
            seen.add(v)
            stack.append(v)
    return seen


def success_ratio(graph: ChannelGraph, pairs: Sequence[tuple[str, str]], amount: int) -> float:
    if not pairs:
        return 0.0
    cache: dict[str, set[str]] = {}
    ok = 0
    for u, v in pairs:
        if u not in cache:
            cache[u] = reachable_at(graph, u, amount)
        ok += v in cache[u]
    return ok / len(pairs)


def mean_max_flow(graph: ChannelGraph, pairs: Sequence[tuple[str, str]]) -> float:
    if not pairs:
        return 0.0
    present = set(graph.nodes)
    live = [(u, v) for u, v in pairs if u in present and v in present]
    flows = max_flow_values(graph, live)
    total = sum(flows[(u, v) if u < v else (v, u)] for u, v in live)
    return total / len(pairs)


@dataclass(frozen=True)
class AdvantageReport:
    delta_r: float
    delta_f: float
    delta_s: float
    sample_count: int
    removed_actor: str
    before: dict = field(default_factory=dict, compare=False)
    after: dict = field(default_factory=dict, compare=False)
    flow_model: str = "undirected"


def dos_advantage(
    graph: ChannelGraph,
    actor_nodes: Iterable[str],
    amount: int,
    samples: int = 1000,
    rng_seed: int = 0,
    actor: str = "",
) -> AdvantageReport:
    """Advantage of knocking out every node of one actor (or actor set).

    The same sampled pairs are evaluated before and after removal; pairs with
    a removed endpoint count as zero flow and a failed payment.
    """
    removed = set(actor_nodes)
    unknown = removed - set(graph.nodes)
    if unknown:
        raise ActorUnknown(f"nodes not in graph: {sorted(unknown)}", nodes=sorted(unknown))
    after_graph = graph.without(removed)
    pairs = sample_pairs(graph.nodes, samples, rng_seed)
    before = {
        "largest_component": largest_component_size(graph),
        "mean_max_flow": mean_max_flow(graph, pairs),
        "success_ratio": success_ratio(graph, pairs, amount),
    }
    after = {
        "largest_component": largest_component_size(after_graph),
        "mean_max_flow": mean_max_flow(after_graph, pairs),
        "success_ratio": success_ratio(after_graph, pairs, amount),
    }
    return AdvantageReport(
        delta_r=advantage(before["largest_component"], after["largest_component"]),
        delta_f=advantage(before["mean_max_flow"], after["mean_max_flow"]),
        delta_s=advantage(before["success_ratio"], after["success_ratio"]),
        sample_count=len(pairs),
        removed_actor=actor or ",".join(sorted(removed)),
        before=before,
        after=after,
    )


# -- griefing ---------------------------------------------------------------------------------------

@dataclass(frozen=True)
class GriefingResult:
    blocked_channel_fraction: float
    blocked_capacity_fraction: float
    locked: int
    paths: tuple[tuple[str, ...], ...]


def _attack_paths(graph: ChannelGraph, actor: set[str], max_hops: int) -> list[tuple[tuple[int, ...], tuple[str, ...]]]:
    """Simple paths (or cycles back to the start) of 2..max_hops channels between actor nodes.

    Paths end at the first actor node reached.
    """
    adj = graph.adjacency
    found: dict[frozenset, tuple[tuple[int, ...], tuple[str, ...]]] = {}

    def walk(path_nodes: list[str], path_chans: list[int]):
        u = path_nodes[-1]
        for v, ci in adj[u]:
            if ci in path_chans:
                continue
            if v in actor:
                if len(path_chans) + 1 >= 2 and v not in path_nodes[1:]:
                    chans = tuple(path_chans + [ci])
                    nodes = tuple(path_nodes + [v])
                    key = frozenset(chans)
                    cand = (chans, nodes)
                    rev = (chans[::-1], nodes[::-1])
                    cand = min(cand, rev, key=lambda x: x[1])
                    if key not in found or cand[1] < found[key][1]:
                        found[key] = cand
                continue
            if v in path_nodes or len(path_chans) + 1 >= max_hops:
                continue
            path_nodes.append(v)
            path_chans.append(ci)
            walk(path_nodes, path_chans)
            path_nodes.pop()
            path_chans.pop()

    for s in sorted(actor):
        if s in adj:
            walk([s], [])
    return sorted(found.values(), key=lambda p: p[1])


def griefing_reach(
    graph: ChannelGraph,
    actor_nodes: Iterable[str],
    lock_budget: int,
    max_hops: int = 4,
) -> GriefingResult:
    """Greedy lock model for an attacker routing never-settled payments between its own nodes.

    Each round picks the path that newly saturates the most channel capacity
    per locked satoshi, locks the path's residual bottleneck along it, and
    charges that amount to the budget.
    """
    actor = set(actor_nodes) & set(graph.nodes)
    n_chan = len(graph.channels)
    if lock_budget <= 0 or not actor or n_chan == 0:
        return GriefingResult(0.0, 0.0, 0, ())
    caps = [c.capacity for c in graph.channels]
    residual = list(caps)
    blocked: set[int] = set()
    budget = lock_budget
    chosen = []
    candidates = _attack_paths(graph, actor, max_hops)
    while True:
        best = None
        for chans, nodes in candidates:
            lock = min(residual[c] for c in chans)
            if lock <= 0 or lock > budget:
                continue
            gain = sum(caps[c] for c in chans if residual[c] == lock and c not in blocked)
            if gain == 0:
                continue
            # best ratio, then fewer hops, then smaller node sequence
            key = (-Fraction(gain, lock), len(chans), nodes)
            if best is None or key < best[0]:
                best = (key, chans, nodes, lock)
        if best is None:
            break
        _, chans, nodes, lock = best
        for c in chans:
            residual[c] -= lock
            if residual[c] == 0:
                blocked.add(c)
        budget -= lock
        chosen.append(nodes)
    total_cap = sum(caps)
    return GriefingResult(
        blocked_channel_fraction=len(blocked) / n_chan,
        blocked_capacity_fraction=sum(caps[c] for c in blocked) / total_cap,
        locked=lock_budget - budget,
        paths=tuple(chosen),
    )


# -- path privacy -----------------------------------------------------------------------------------

def breaks_value_privacy(route: Route, actor: set[str]) -> bool:
    return any(n in actor for n in route.intermediaries)


def breaks_relationship_anonymity(route: Route, actor: set[str]) -> bool:
    # a single intermediary sees both endpoints and counts
    mids = route.intermediaries
    return bool(mids) and mids[0] in actor and mids[-1] in actor


def wormhole_prone(route: Route, actor: set[str]) -> bool:
    """Two actor intermediaries with at least one honest intermediary between them."""
    state = 0  # 0: no actor yet, 1: actor seen, 2: honest after actor
    for n in route.intermediaries:
        if n in actor:
            if state == 2:
                return True
            state = 1
        elif state == 1:
            state = 2
    return False


def _fraction(routes: Mapping[tuple[str, str], Route | None], pairs: Sequence[tuple[str, str]], test) -> float:
    live = [routes[p] for p in pairs if routes.get(p) is not None]
    if not live:
        return 0.0
    return sum(1 for r in live if test(r)) / len(live)


def _routes(graph, amount, pairs, routes):
    if routes is None:
        routes = route_table(graph, amount, pairs)
    if pairs is None:
        pairs = sorted(routes)
    return routes, pairs


def value_privacy(graph: ChannelGraph, actors: Iterable[str], amount: int,
                  pairs: Sequence[tuple[str, str]] | None = None, routes=None) -> float:
    """Share of routed pairs whose cheapest path has an actor intermediary."""
    routes, pairs = _routes(graph, amount, pairs, routes)
    actor = set(actors)
    return _fraction(routes, pairs, lambda r: breaks_value_privacy(r, actor))


def relationship_anonymity_exposure(graph: ChannelGraph, actors: Iterable[str], amount: int,
                                    pairs: Sequence[tuple[str, str]] | None = None, routes=None) -> float:
    routes, pairs = _routes(graph, amount, pairs, routes)
    actor = set(actors)
    return _fraction(routes, pairs, lambda r: breaks_relationship_anonymity(r, actor))


def wormhole_exposure(graph: ChannelGraph, actors: Iterable[str], amount: int,
                      pairs: Sequence[tuple[str, str]] | None = None, routes=None) -> float:
    routes, pairs = _routes(graph, amount, pairs, routes)
    actor = set(actors)
    return _fraction(routes, pairs, lambda r: wormhole_prone(r, actor))


@dataclass(frozen=True)
class PathPrivacyReport:
    fraction_value_privacy_broken: float
    fraction_relationship_anonymity_broken: float
    fraction_wormhole_prone: float
    amount: int
    actors: frozenset[str]
    routed_pairs: int


def path_privacy(graph: ChannelGraph, actors: Iterable[str], amount: int,
                 pairs: Sequence[tuple[str, str]] | None = None, routes=None) -> PathPrivacyReport:
    routes, pairs = _routes(graph, amount, pairs, routes)
    actor = frozenset(actors)
    return PathPrivacyReport(
        _fraction(routes, pairs, lambda r: breaks_value_privacy(r, actor)),
        _fraction(routes, pairs, lambda r: breaks_relationship_anonymity(r, actor)),
        _fraction(routes, pairs, lambda r: wormhole_prone(r, actor)),
        amount,
        actor,
        sum(1 for p in pairs if routes.get(p) is not None),
    )
