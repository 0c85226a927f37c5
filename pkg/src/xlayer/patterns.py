"""Star, snake, collector and proxy detection on ego components."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .dsu import DisjointSet
from .entities import EgoComponent, Side


class PatternKind(str, Enum):
    STAR = "star"
    SNAKE = "snake"
    COLLECTOR = "collector"
    PROXY = "proxy"


@dataclass(frozen=True)
class PatternCluster:
    kind: PatternKind
    entities: frozenset[int]
    component_id: str


def _degrees(comp: EgoComponent) -> tuple[dict[int, int], dict[int, int]]:
    outd: dict[int, int] = defaultdict(int)
    ind: dict[int, int] = defaultdict(int)
    for u, v in comp.edges:
        outd[u] += 1
        ind[v] += 1
    return outd, ind


def detect_star(comp: EgoComponent, strict: bool = True) -> PatternCluster | None:
    """One pure source feeding funding entities; fan-out >= 2 unless ``strict`` is off."""
    if comp.side is not Side.FUNDING:
        return None
    outd, _ = _degrees(comp)
    sources = [v for v in comp.vertices if outd[v] > 0]
    if len(sources) != 1:
        return None
    root = sources[0]
    if root in comp.role_members:
        return None
    if outd[root] < (2 if strict else 1):
        return None
    return PatternCluster(PatternKind.STAR, comp.vertices, comp.component_id)


def detect_snake(comp: EgoComponent) -> PatternCluster | None:
    """A tree hanging off one pure source in which some funding entity also acts as a source."""
    if comp.side is not Side.FUNDING:
        return None
    outd, ind = _degrees(comp)
    roots = [v for v in comp.vertices if ind[v] == 0]
    if len(roots) != 1 or roots[0] in comp.role_members:
        return None
    root = roots[0]
    dual = False
    for v in comp.vertices:
        if v == root:
            continue
        if ind[v] != 1 or v not in comp.role_members:
            return None
        if outd[v] > 0:
            dual = True
    if not dual:
        return None
    return PatternCluster(PatternKind.SNAKE, comp.vertices, comp.component_id)


def detect_collector(comp: EgoComponent, strict: bool = True) -> PatternCluster | None:
    """Settlement entities with no other role merging into one pure destination."""
    if comp.side is not Side.SETTLEMENT:
        return None
    outd, ind = _degrees(comp)
    sinks = [v for v in comp.vertices if outd[v] == 0]
    if len(sinks) != 1:
        return None
    sink = sinks[0]
    if sink in comp.role_members or ind[sink] < (2 if strict else 1):
        return None
    for v in comp.vertices:
        if v != sink and (ind[v] > 0 or v not in comp.role_members):
            return None
    return PatternCluster(PatternKind.COLLECTOR, comp.vertices, comp.component_id)


def detect_proxy(comp: EgoComponent) -> PatternCluster | None:
    """An in-tree towards one final destination with a settlement entity that is also a destination."""
    if comp.side is not Side.SETTLEMENT:
        return None
    outd, ind = _degrees(comp)
    sinks = [v for v in comp.vertices if outd[v] == 0]
    if len(sinks) != 1:
        return None
    sink = sinks[0]
    intermediate = False
    for v in comp.vertices:
        if v == sink:
            continue
        if outd[v] != 1 or v not in comp.role_members:
            return None
        if ind[v] > 0:
            intermediate = True
    if not intermediate:
        return None
    return PatternCluster(PatternKind.PROXY, comp.vertices, comp.component_id)


def classify(comp: EgoComponent, strict: bool = True) -> PatternCluster | None:
    """At most one kind per component: snake before star, proxy before collector."""
    if comp.side is Side.FUNDING:
        return detect_snake(comp) or detect_star(comp, strict)
    return detect_proxy(comp) or detect_collector(comp, strict)


@dataclass(frozen=True)
class PatternResult:
    clusters: tuple[PatternCluster, ...]
    super_of: Mapping[int, int]  # only entities that were merged; super id = smallest member

    def counts(self) -> dict[PatternKind, int]:
        out = {k: 0 for k in PatternKind}
        for c in self.clusters:
            out[c.kind] += 1
        return out


def merge_clusters(clusters: Iterable[PatternCluster], kinds: Iterable[PatternKind] | None = None) -> dict[int, int]:
    """Union the entity sets of the selected clusters; funding- and settlement-side memberships chain."""
    wanted = set(PatternKind) if kinds is None else {PatternKind(k) for k in kinds}
    dsu: DisjointSet[int] = DisjointSet()
    for c in clusters:
        if c.kind in wanted:
            dsu.union_all(sorted(c.entities))
    super_of = {}
    for group in dsu.groups():
        rep = min(group)
        for e in group:
            super_of[e] = rep
    return super_of


def apply_patterns(components: Iterable[EgoComponent], strict: bool = True) -> PatternResult:
    clusters = []
    for comp in sorted(components, key=lambda c: (c.side.value, int(c.component_id[1:]))):
        hit = classify(comp, strict)
        if hit is not None:
            clusters.append(hit)
    return PatternResult(tuple(clusters), merge_clusters(clusters))
