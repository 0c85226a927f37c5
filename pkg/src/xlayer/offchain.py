"""Grouping channel-graph nodes into actors from alias similarity, hosting ASN and shared addresses."""

from __future__ import annotations

import ipaddress
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .aliases import AliasMetric, condensed_distances
from .dsu import DisjointSet
from .errors import AnchorUnsatisfiable, MissingASN
from .model import NetKind, NodeRecord

ALIAS_ASN = "alias-asn"
SHARED_IP = "shared-ip"


@dataclass(frozen=True)
class ActorCluster:
    actor_id: int
    nodes: frozenset[str]
    evidence: frozenset[str]


class AsnMap:
    """Longest-prefix CIDR -> ASN lookup."""

    def __init__(self, prefixes: Iterable[tuple[str, int]] = ()):
        self._by_len: dict[tuple[int, int], dict[int, int]] = defaultdict(dict)
        for cidr, asn in prefixes:
            net = ipaddress.ip_network(cidr, strict=False)
            self._by_len[(net.version, net.prefixlen)][int(net.network_address)] = int(asn)
        self._lens = sorted(self._by_len, key=lambda k: -k[1])

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_len.values())

    def lookup(self, ip: str) -> int | None:
        addr = ipaddress.ip_address(ip)
        bits = 32 if addr.version == 4 else 128
        val = int(addr)
        for version, plen in self._lens:
            if version != addr.version:
                continue
            key = val >> (bits - plen) << (bits - plen) if plen else 0
            asn = self._by_len[(version, plen)].get(key)
            if asn is not None:
                return asn
        return None

    def prefixes(self) -> list[tuple[str, int]]:
        out = []
        for (version, plen), table in self._by_len.items():
            for net_int, asn in table.items():
                net = ipaddress.ip_network((net_int, plen)) if version == 4 else ipaddress.IPv6Network((net_int, plen))
                out.append((str(net), asn))
        return sorted(out)


def routable_ips(node: NodeRecord) -> list[str]:
    """Public IP hosts of a node; special-purpose ranges (private, loopback, ...) are dropped."""
    out = []
    for na in node.net_addresses:
        if na.kind is NetKind.ONION:
            continue
        try:
            ip = ipaddress.ip_address(na.host)
        except ValueError:
            continue
        if ip.is_global:
            out.append(str(ip))
    return out


def onion_hosts(node: NodeRecord) -> list[str]:
    return [na.host for na in node.net_addresses if na.kind is NetKind.ONION]


# -- alias clustering ---------------------------------------------------------------------------

def _alias_owners(nodes: Iterable[NodeRecord]) -> tuple[list[str], list[frozenset[str]]]:
    owners: dict[str, set[str]] = defaultdict(set)
    for n in nodes:
        for a in n.aliases:
            if a:
                owners[a].add(n.nid)
    aliases = sorted(owners)
    return aliases, [frozenset(owners[a]) for a in aliases]


@dataclass
class AliasDendrogram:
    """Complete-linkage dendrogram over the distinct aliases of a node set."""

    aliases: list[str]
    owners: list[frozenset[str]]
    metric: AliasMetric
    linkage: np.ndarray | None = field(repr=False, default=None)

    @classmethod
    def build(cls, nodes: Iterable[NodeRecord], metric: AliasMetric | str = AliasMetric.RELATIVE_LCS,
              workers: int = 1) -> "AliasDendrogram":
        metric = AliasMetric(metric)
        aliases, owners = _alias_owners(nodes)
        z = None
        if len(aliases) >= 2:
            z = linkage(condensed_distances(aliases, metric, workers), method="complete")
        return cls(aliases, owners, metric, z)

    def labels(self, threshold: float) -> np.ndarray:
        if self.linkage is None:
            return np.ones(len(self.aliases), dtype=int)
        return fcluster(self.linkage, t=threshold, criterion="distance")

    def cut(self, threshold: float) -> list[frozenset[str]]:
        """Node sets per alias cluster. A node joins every cluster one of its aliases falls in."""
        members: dict[int, set[str]] = defaultdict(set)
        for lab, own in zip(self.labels(threshold), self.owners):
            members[int(lab)] |= own
        return sorted({frozenset(m) for m in members.values() if len(m) >= 2}, key=sorted)

    def summary(self, threshold: float) -> dict:
        labels = self.labels(threshold)
        groups: dict[int, list[str]] = defaultdict(list)
        for lab, a in zip(labels, self.aliases):
            groups[int(lab)].append(a)
        clusters = sorted((sorted(g) for g in groups.values() if len(g) > 1), key=lambda g: g[0])
        return {
            "metric": self.metric.value,
            "linkage": "complete",
            "threshold": threshold,
            "n_aliases": len(self.aliases),
            "n_alias_clusters": len(clusters),
            "merge_heights": [round(float(h), 12) for h in (self.linkage[:, 2] if self.linkage is not None else [])],
            "alias_clusters": clusters,
        }


def cluster_aliases(
    nodes: Iterable[NodeRecord],
    metric: AliasMetric | str = AliasMetric.RELATIVE_LCS,
    threshold: float = 0.46,
    workers: int = 1,
) -> list[frozenset[str]]:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    return AliasDendrogram.build(nodes, metric, workers).cut(threshold)


def _cluster_asns(cluster: Iterable[str], nodes: Mapping[str, NodeRecord], asn_map) -> tuple[set[int], bool, list[str]]:
    asns, unresolved, has_onion_only = set(), [], False
    for nid in cluster:
        node = nodes[nid]
        ips = routable_ips(node)
        if not ips:
            if onion_hosts(node):
                has_onion_only = True
            continue
        for ip in ips:
            asn = node.asn_per_ip.get(ip)
            if asn is None and asn_map is not None:
                asn = asn_map.lookup(ip) if isinstance(asn_map, AsnMap) else asn_map.get(ip)
            if asn is None:
                unresolved.append(ip)
            else:
                asns.add(asn)
    return asns, has_onion_only, unresolved


def is_asn_pure(cluster: Iterable[str], nodes: Mapping[str, NodeRecord], asn_map=None) -> bool:
    """Exactly one ASN across member IPs; all-onion clusters pass, onion/IP mixes fail.

    Members without any advertised address are neutral.
    """
    asns, onion_only, unresolved = _cluster_asns(cluster, nodes, asn_map)
    if unresolved:
        raise MissingASN(f"no ASN for {sorted(set(unresolved))}", ips=sorted(set(unresolved)))
    if not asns:
        return True
    return len(asns) == 1 and not onion_only


def asn_purity_filter(
    clusters: Sequence[frozenset[str]],
    nodes: Mapping[str, NodeRecord],
    asn_map: AsnMap | Mapping[str, int] | None = None,
) -> list[frozenset[str]]:
    unresolved = set()
    for c in clusters:
        unresolved.update(_cluster_asns(c, nodes, asn_map)[2])
    if unresolved:
        raise MissingASN(f"no ASN for {sorted(unresolved)}", ips=sorted(unresolved))
    return [c for c in clusters if is_asn_pure(c, nodes, asn_map)]


def cluster_by_ip(nodes: Iterable[NodeRecord]) -> list[frozenset[str]]:
    """Nodes that ever shared an IP (port ignored) or onion host, grouped transitively."""
    dsu: DisjointSet[str] = DisjointSet()
    seen: dict[str, str] = {}
    for n in nodes:
        for host in (*routable_ips(n), *onion_hosts(n)):
            if host in seen:
                dsu.union(seen[host], n.nid)
            else:
                seen[host] = n.nid
                dsu.add(n.nid)
    return sorted((frozenset(g) for g in dsu.groups() if len(g) >= 2), key=sorted)


def merge_actor_clusters(
    alias_clusters: Iterable[frozenset[str]],
    ip_clusters: Iterable[frozenset[str]],
) -> list[ActorCluster]:
    """Transitive union of overlapping clusters. Actor ids follow the smallest member nid."""
    dsu: DisjointSet[str] = DisjointSet()
    tagged: list[tuple[frozenset[str], str]] = []
    for tag, clusters in ((ALIAS_ASN, alias_clusters), (SHARED_IP, ip_clusters)):
        for c in clusters:
            dsu.union_all(sorted(c))
            tagged.append((frozenset(c), tag))
    evidence: dict[str, set[str]] = defaultdict(set)
    for c, tag in tagged:
        evidence[dsu.find(next(iter(c)))].add(tag)
    groups = sorted(dsu.groups(), key=min)
    return [
        ActorCluster(k, frozenset(g), frozenset(evidence[dsu.find(next(iter(g)))]))
        for k, g in enumerate(groups)
        if len(g) >= 2
    ]


def cluster_offchain(
    nodes: Mapping[str, NodeRecord],
    asn_map: AsnMap | Mapping[str, int] | None = None,
    metric: AliasMetric | str = AliasMetric.RELATIVE_LCS,
    threshold: float = 0.46,
    workers: int = 1,
) -> list[ActorCluster]:
    alias = asn_purity_filter(cluster_aliases(nodes.values(), metric, threshold, workers), nodes, asn_map)
    return merge_actor_clusters(alias, cluster_by_ip(nodes.values()))


# -- threshold selection ------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    threshold: float
    grid: tuple[float, ...]
    clustered_nodes: tuple[int, ...]
    anchor_ok: tuple[bool, ...]


def _anchor_satisfied(pure: list[frozenset[str]], anchor_nodes: set[str], min_size: int) -> bool:
    if not anchor_nodes:
        return False
    dsu: DisjointSet[str] = DisjointSet()
    for c in pure:
        dsu.union_all(sorted(c))
    roots = {dsu.find(n) for n in anchor_nodes if n in dsu}
    if len(roots) != 1 or not all(n in dsu for n in anchor_nodes):
        return False
    root = roots.pop()
    return sum(1 for x in dsu if dsu.find(x) == root) >= min_size


def sweep_threshold(
    nodes: Mapping[str, NodeRecord],
    anchor: tuple[str, int],
    asn_map: AsnMap | Mapping[str, int] | None = None,
    metric: AliasMetric | str = AliasMetric.RELATIVE_LCS,
    step: float = 0.01,
    workers: int = 1,
) -> SweepResult:
    """Smallest grid threshold maximizing ASN-pure clustered nodes while the anchor family stays whole.

    ``anchor`` is (alias prefix, minimum size): every node with an alias
    starting with the prefix must end up in a single merged cluster of at
    least that many nodes.
    """
    prefix, min_size = anchor
    dendro = AliasDendrogram.build(nodes.values(), metric, workers)
    anchor_nodes = {n.nid for n in nodes.values() if any(a.startswith(prefix) for a in n.aliases)}
    steps = int(round(1.0 / step))
    grid = tuple(round(i * step, 10) for i in range(steps + 1))
    counts, oks = [], []
    for t in grid:
        pure = asn_purity_filter(dendro.cut(t), nodes, asn_map)
        counts.append(len(set().union(*pure)) if pure else 0)
        oks.append(_anchor_satisfied(pure, anchor_nodes, min_size))
    feasible = [(c, -i) for i, (c, ok) in enumerate(zip(counts, oks)) if ok]
    if not feasible:
        raise AnchorUnsatisfiable(f"no threshold keeps {prefix!r} together with >= {min_size} nodes")
    best = grid[-max(feasible)[1]]
    return SweepResult(best, grid, tuple(counts), tuple(oks))
