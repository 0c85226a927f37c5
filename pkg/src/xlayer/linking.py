"""Linking on-chain entities to channel-graph nodes.

Two seed heuristics feed a shared counterparty propagation:

* coin reuse: an entity receives coins from closing channel c1 and funds
  channel c2 with them; the one node common to c1 and c2 is its node;
* entity reuse: an entity funds several channels that all touch exactly
  one common node.

Both can run on a coarser entity partition (after on-chain pattern merges),
which is how the combined configurations work.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping

from .model import ActivityPeriod, Channel, ChannelPoint, SettlementKind, Snapshot, _period_of, periods_overlap

DEFAULT_ITERATION_CAP = 20


class Heuristic(str, Enum):
    COIN_REUSE = "coin-reuse"
    ENTITY_REUSE = "entity-reuse"
    COUNTERPARTY = "counterparty"
    INDIRECT_ACTOR = "indirect-actor"
    INDIRECT_ONCHAIN = "indirect-onchain"


@dataclass(frozen=True)
class LinkRecord:
    entity_id: int
    nid: str
    heuristic: Heuristic
    iteration: int = 0
    supporting_txids: tuple[str, ...] = ()

    @property
    def pair(self) -> tuple[int, str]:
        return (self.entity_id, self.nid)


@dataclass(frozen=True)
class EligibleSettlement:
    txid: str
    channel: Channel
    output_entities: tuple[int, int]


@dataclass
class LinkDiagnostics:
    ambiguous: int = 0  # candidate channel sets sharing zero or two nodes
    guard_rejected: int = 0
    conflicts: list[tuple[str, int]] = field(default_factory=list)  # (settlement txid, entity)
    iterations: int = 0
    converged: bool = True

    def as_dict(self) -> dict:
        return {
            "ambiguous": self.ambiguous,
            "guard_rejected": self.guard_rejected,
            "conflicts": len(self.conflicts),
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class LinkResult:
    links: tuple[LinkRecord, ...]
    diagnostics: LinkDiagnostics

    @property
    def pairs(self) -> set[tuple[int, str]]:
        return {r.pair for r in self.links}

    def by_heuristic(self, h: Heuristic | str) -> list[LinkRecord]:
        h = Heuristic(h)
        return [r for r in self.links if r.heuristic is h]

    def multi_node_entities(self) -> dict[int, set[str]]:
        nodes: dict[int, set[str]] = defaultdict(set)
        for r in self.links:
            nodes[r.entity_id].add(r.nid)
        return {e: ns for e, ns in nodes.items() if len(ns) > 1}


class LinkView:
    """Channel/entity relations needed by both algorithms, under an optional entity merge."""

    def __init__(self, snapshot: Snapshot, super_of: Mapping[int, int] | None = None):
        self.snapshot = snapshot
        self.super_of = dict(super_of or {})
        txs = snapshot.transactions
        chan_addrs = snapshot.channel_addresses
        ent = self.entity

        self.funders: dict[ChannelPoint, frozenset[int]] = {}
        self.funded_by: dict[int, list[Channel]] = defaultdict(list)
        for c in sorted(snapshot.channels, key=lambda c: c.chpoint):
            tx = txs[c.chpoint.txid]
            if tx.is_coinjoin:
                continue
            fs = frozenset(ent(a) for a in tx.input_addresses if a not in chan_addrs)
            self.funders[c.chpoint] = fs
            for f in fs:
                self.funded_by[f].append(c)

        self.settlements: list[EligibleSettlement] = []
        self.settlement_of: dict[ChannelPoint, EligibleSettlement] = {}
        for c in sorted(snapshot.channels, key=lambda c: c.chpoint):
            if c.settlement_txid is None or c.settlement_kind is not SettlementKind.COOPERATIVE_2_OUTPUT:
                continue
            stx = txs[c.settlement_txid]
            if stx.is_coinjoin or stx.is_punishment:
                continue
            outs = sorted({ent(a) for a in stx.output_addresses if a not in chan_addrs})
            if len(outs) != 2:
                continue
            es = EligibleSettlement(stx.txid, c, (outs[0], outs[1]))
            self.settlements.append(es)
            self.settlement_of[c.chpoint] = es

        self._periods: dict[str, ActivityPeriod] = {}

    def entity(self, address: str) -> int:
        e = self.snapshot.entity_of[address]
        return self.super_of.get(e, e)

    def period(self, nid: str) -> ActivityPeriod:
        p = self._periods.get(nid)
        if p is None:
            p = self._periods[nid] = _period_of(self.snapshot.channels_by_node[nid], self.snapshot)
        return p

    def overlap(self, a: str, b: str) -> bool:
        return periods_overlap(self.period(a), self.period(b))


def _as_view(snapshot_or_view, super_of=None) -> LinkView:
    if isinstance(snapshot_or_view, LinkView):
        return snapshot_or_view
    return LinkView(snapshot_or_view, super_of)


# -- seeds ----------------------------------------------------------------------------------------

def coin_reuse_seeds(view: LinkView, overlap_guard: bool = True, diag: LinkDiagnostics | None = None) -> list[LinkRecord]:
    diag = diag if diag is not None else LinkDiagnostics()
    found: dict[tuple[int, str], LinkRecord] = {}
    for e in sorted(view.funded_by):
        chans = view.funded_by[e]
        for c1 in chans:
            es = view.settlement_of.get(c1.chpoint)
            if es is None or e not in es.output_entities:
                continue
            for c2 in chans:
                if c2.chpoint == c1.chpoint:
                    continue
                shared = set(c1.nodes) & set(c2.nodes)
                if len(shared) != 1:
                    diag.ambiguous += 1
                    continue
                n = shared.pop()
                if overlap_guard and not view.overlap(c1.other(n), c2.other(n)):
                    diag.guard_rejected += 1
                    continue
                if (e, n) not in found:
                    found[(e, n)] = LinkRecord(
                        e, n, Heuristic.COIN_REUSE, 0, (c1.chpoint.txid, es.txid, c2.chpoint.txid)
                    )
    return [found[k] for k in sorted(found)]


def entity_reuse_seeds(view: LinkView, overlap_guard: bool = True, diag: LinkDiagnostics | None = None) -> list[LinkRecord]:
    diag = diag if diag is not None else LinkDiagnostics()
    out = []
    for e in sorted(view.funded_by):
        chans = view.funded_by[e]
        if len(chans) < 2:
            continue
        common = set(chans[0].nodes)
        for c in chans[1:]:
            common &= set(c.nodes)
        if len(common) != 1:
            diag.ambiguous += 1
            continue
        n = common.pop()
        others = sorted({c.other(n) for c in chans})
        if overlap_guard:
            ok = any(view.overlap(a, b) for i, a in enumerate(others) for b in others[i + 1:])
            if not ok:
                diag.guard_rejected += 1
                continue
        out.append(LinkRecord(e, n, Heuristic.ENTITY_REUSE, 0, tuple(c.chpoint.txid for c in chans)))
    return out


# -- propagation ----------------------------------------------------------------------------------

def propagate_counterparty(
    links: Iterable[LinkRecord],
    settlements: Iterable[EligibleSettlement],
    cap: int = DEFAULT_ITERATION_CAP,
    diag: LinkDiagnostics | None = None,
    start_iteration: int = 1,
) -> list[LinkRecord]:
    """Rounds of: a settlement whose output e_x is linked to one channel node links
    the other output to the other node.

    Each round reads the link set as it stood at the round start. When a
    settlement would leave one of its output entities linked to both channel
    nodes, the conflict is recorded and none of its proposals are added.
    Returns only the new records.
    """
    diag = diag if diag is not None else LinkDiagnostics()
    settlements = list(settlements)
    linked: dict[int, set[str]] = defaultdict(set)
    for r in links:
        linked[r.entity_id].add(r.nid)
    new: list[LinkRecord] = []
    conflicts_seen: set[tuple[str, int]] = set()
    it = start_iteration
    diag.converged = False
    while it < start_iteration + cap:
        round_links: dict[tuple[int, str], LinkRecord] = {}
        for es in settlements:
            na, nb = es.channel.nodes
            ex, ey = es.output_entities
            proposals = []
            for src, dst in ((ex, ey), (ey, ex)):
                if na in linked[src]:
                    proposals.append((dst, nb))
                if nb in linked[src]:
                    proposals.append((dst, na))
            if not proposals:
                continue
            would = {ex: set(linked[ex]), ey: set(linked[ey])}
            for e, n in proposals:
                would[e].add(n)
            bad = [e for e in (ex, ey) if na in would[e] and nb in would[e]]
            if bad:
                for e in bad:
                    if (es.txid, e) not in conflicts_seen:
                        conflicts_seen.add((es.txid, e))
                        diag.conflicts.append((es.txid, e))
                continue
            for e, n in proposals:
                if n not in linked[e] and (e, n) not in round_links:
                    round_links[(e, n)] = LinkRecord(e, n, Heuristic.COUNTERPARTY, it, (es.txid,))
        if not round_links:
            diag.converged = True
            break
        for key in sorted(round_links):
            rec = round_links[key]
            linked[rec.entity_id].add(rec.nid)
            new.append(rec)
        diag.iterations = it
        it += 1
    return new


def _run(view: LinkView, seeder: Callable, overlap_guard: bool, cap: int) -> LinkResult:
    diag = LinkDiagnostics()
    seeds = seeder(view, overlap_guard, diag)
    grown = propagate_counterparty(seeds, view.settlements, cap, diag)
    return LinkResult(tuple(seeds) + tuple(grown), diag)


def link_coin_reuse(snapshot, overlap_guard: bool = True, cap: int = DEFAULT_ITERATION_CAP,
                    super_of: Mapping[int, int] | None = None) -> LinkResult:
    """Linking by reused settlement coins, grown by counterparty propagation to a fixpoint."""
    return _run(_as_view(snapshot, super_of), coin_reuse_seeds, overlap_guard, cap)


def link_entity_reuse(snapshot, overlap_guard: bool = True, cap: int = DEFAULT_ITERATION_CAP,
                      super_of: Mapping[int, int] | None = None) -> LinkResult:
    """Linking by one funding entity opening several channels around one node."""
    return _run(_as_view(snapshot, super_of), entity_reuse_seeds, overlap_guard, cap)


ALGORITHMS = {1: link_coin_reuse, 2: link_entity_reuse}


# -- combination ----------------------------------------------------------------------------------

def combine_with_clusters(
    snapshot: Snapshot,
    algorithm: int | Callable = 1,
    super_of: Mapping[int, int] | None = None,
    actor_clusters: Iterable[Iterable[str]] = (),
    overlap_guard: bool = True,
    cap: int = DEFAULT_ITERATION_CAP,
    base: LinkResult | None = None,
) -> LinkResult:
    """Re-run a linking algorithm on the pattern-merged entity partition, then spread links.

    Links found for a merged entity are handed to every member; members whose
    own (unmerged) run did not already produce the pair get ``indirect-onchain``.
    Afterwards each link reaches the other nodes of the actor cluster of its
    node as ``indirect-actor``.
    """
    run = ALGORITHMS[algorithm] if isinstance(algorithm, int) else algorithm
    if base is None:
        base = run(snapshot, overlap_guard=overlap_guard, cap=cap)
    super_of = dict(super_of or {})
    base_by_pair = {r.pair: r for r in base.links}
    if super_of:
        merged = run(snapshot, overlap_guard=overlap_guard, cap=cap, super_of=super_of)
        members: dict[int, list[int]] = defaultdict(list)
        for e, s in super_of.items():
            members[s].append(e)
        out: dict[tuple[int, str], LinkRecord] = dict(base_by_pair)
        for r in merged.links:
            for e in sorted(members.get(r.entity_id, [r.entity_id])):
                if (e, r.nid) not in out:
                    out[(e, r.nid)] = LinkRecord(e, r.nid, Heuristic.INDIRECT_ONCHAIN, r.iteration, r.supporting_txids)
        diag = merged.diagnostics
    else:
        out = dict(base_by_pair)
        diag = base.diagnostics

    cluster_of: dict[str, frozenset[str]] = {}
    for cl in actor_clusters:
        cl = frozenset(cl)
        for n in cl:
            cluster_of[n] = cl
    if cluster_of:
        for (e, n), r in sorted(out.items()):
            for m in sorted(cluster_of.get(n, ())):
                if m != n and (e, m) not in out:
                    out[(e, m)] = LinkRecord(e, m, Heuristic.INDIRECT_ACTOR, r.iteration, r.supporting_txids)
    return LinkResult(tuple(out[k] for k in sorted(out)), diag)


# -- agreement ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class AgreementReport:
    intersection: int
    only_first: int
    only_second: int
    contradictions: dict[int, tuple[str, ...]]

    def as_dict(self) -> dict:
        return {
            "intersection": self.intersection,
            "only_alg1": self.only_first,
            "only_alg2": self.only_second,
            "contradictions": {str(e): list(ns) for e, ns in sorted(self.contradictions.items())},
        }


def cross_validate(
    links_a: Iterable[LinkRecord],
    links_b: Iterable[LinkRecord],
    actor_of: Mapping[str, str] | None = None,
) -> AgreementReport:
    """Common pairs, plus entities that the two link sets together tie to more than one node.

    With ``actor_of``, nodes of one actor count as a single node, so links fanned out over an
    actor cluster are not reported as contradictions.
    """
    a = {r.pair for r in links_a}
    b = {r.pair for r in links_b}
    actor_of = actor_of or {}
    nodes: dict[int, set[str]] = defaultdict(set)
    groups: dict[int, set[str]] = defaultdict(set)
    for e, n in a | b:
        nodes[e].add(n)
        groups[e].add(actor_of.get(n, n))
    contra = {e: tuple(sorted(nodes[e])) for e, gs in groups.items() if len(gs) > 1}
    return AgreementReport(len(a & b), len(a - b), len(b - a), contra)
