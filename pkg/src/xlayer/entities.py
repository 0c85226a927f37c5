"""Co-spend entity clustering, role tables and ego-network components."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .dsu import DisjointSet
from .errors import DanglingReference
from .model import Entity, ServiceCategory, Snapshot, Transaction


def cluster_cospend(transactions: Iterable[Transaction]) -> dict[str, int]:
    """Map every address to an entity id using the multi-input heuristic.

    CoinJoin-flagged transactions contribute their addresses but never merge
    them. Ids are dense and ordered by each entity's smallest address id, so
    the result does not depend on transaction or input order.
    """
    dsu: DisjointSet[str] = DisjointSet()
    for tx in transactions:
        ins = tx.input_addresses
        if tx.is_coinjoin:
            for a in ins:
                dsu.add(a)
        else:
            dsu.union_all(ins)
        for a in tx.output_addresses:
            dsu.add(a)
    groups = sorted((min(g), g) for g in dsu.groups())
    out: dict[str, int] = {}
    for eid, (_, members) in enumerate(groups):
        for a in members:
            out[a] = eid
    return out


def build_entities(
    assignment: Mapping[str, int],
    service_tags: Mapping[str, ServiceCategory] | None = None,
) -> tuple[Entity, ...]:
    members: dict[int, set[str]] = defaultdict(set)
    for a, eid in assignment.items():
        members[eid].add(a)
    service_tags = service_tags or {}
    entities = []
    for eid in range(len(members)):
        addrs = members[eid]
        tags = [service_tags[a] for a in sorted(addrs) if a in service_tags]
        entities.append(Entity(eid, frozenset(addrs), tags[0] if tags else None))
    return tuple(entities)


@dataclass(frozen=True)
class RoleTables:
    funding_entities: frozenset[int]
    settlement_entities: frozenset[int]
    source_entities: frozenset[int]
    destination_entities: frozenset[int]
    funding_relations: frozenset[tuple[int, int]]  # source -> funding
    settlement_relations: frozenset[tuple[int, int]]  # settlement -> destination


def derive_roles(snapshot: Snapshot) -> RoleTables:
    """Role tables over non-CoinJoin transactions.

    A funding relation s -> f is any transfer from s into a funding entity f,
    including change outputs of funding transactions (the snake shape depends
    on those). A settlement relation t -> d is a transfer out of a settlement
    entity t in a transaction that is neither a funding nor a settlement
    transaction. Channel multi-sig addresses never take part in relations.
    """
    txs = snapshot.transactions
    ent = snapshot.entity_of
    chan_addrs = snapshot.channel_addresses
    funding_txids: set[str] = set()
    settlement_txids: set[str] = set()
    for c in snapshot.channels:
        if c.chpoint.txid not in txs:
            raise DanglingReference(f"channel {c.chpoint}: funding tx not found", chpoint=str(c.chpoint))
        funding_txids.add(c.chpoint.txid)
        if c.settlement_txid is not None:
            if c.settlement_txid not in txs:
                raise DanglingReference(
                    f"channel {c.chpoint}: settlement tx {c.settlement_txid} not found", chpoint=str(c.chpoint)
                )
            settlement_txids.add(c.settlement_txid)

    funding, settlement = set(), set()
    for txid in funding_txids:
        tx = txs[txid]
        if not tx.is_coinjoin:
            funding.update(ent[a] for a in tx.input_addresses if a not in chan_addrs)
    for txid in settlement_txids:
        tx = txs[txid]
        if not tx.is_coinjoin:
            settlement.update(ent[a] for a in tx.output_addresses if a not in chan_addrs)

    frel, srel = set(), set()
    for tx in txs.values():
        if tx.is_coinjoin or tx.txid in settlement_txids:
            continue
        ins = {ent[a] for a in tx.input_addresses if a not in chan_addrs}
        outs = {ent[a] for a in tx.output_addresses if a not in chan_addrs}
        for f in outs & funding:
            frel.update((s, f) for s in ins if s != f)
        if tx.txid not in funding_txids:
            for t in ins & settlement:
                srel.update((t, d) for d in outs if d != t)

    return RoleTables(
        funding_entities=frozenset(funding),
        settlement_entities=frozenset(settlement),
        source_entities=frozenset(s for s, _ in frel),
        destination_entities=frozenset(d for _, d in srel),
        funding_relations=frozenset(frel),
        settlement_relations=frozenset(srel),
    )


class Side(str, Enum):
    FUNDING = "funding"
    SETTLEMENT = "settlement"


@dataclass(frozen=True)
class EgoComponent:
    component_id: str
    side: Side
    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]
    # funding entities (funding side) or settlement entities (settlement side) among vertices
    role_members: frozenset[int]


def ego_components(
    tables: RoleTables,
    side: Side | str,
    service_entities: Iterable[int] = (),
) -> list[EgoComponent]:
    """Weakly connected components of one side's relation graph.

    Components containing a service entity are dropped. Ids ("F0", "S3", ...)
    are assigned before filtering, in order of each component's smallest vertex.
    """
    side = Side(side)
    if side is Side.FUNDING:
        rels, roles = tables.funding_relations, tables.funding_entities
    else:
        rels, roles = tables.settlement_relations, tables.settlement_entities
    dsu: DisjointSet[int] = DisjointSet()
    for u, v in rels:
        dsu.union(u, v)
    edges_by_root: dict[int, set[tuple[int, int]]] = defaultdict(set)
    for u, v in rels:
        edges_by_root[dsu.find(u)].add((u, v))
    services = set(service_entities)
    prefix = "F" if side is Side.FUNDING else "S"
    out = []
    groups = sorted(dsu.groups(), key=min)
    for k, verts in enumerate(groups):
        if verts & services:
            continue
        out.append(
            EgoComponent(
                component_id=f"{prefix}{k}",
                side=side,
                vertices=frozenset(verts),
                edges=frozenset(edges_by_root[dsu.find(next(iter(verts)))]),
                role_members=frozenset(verts & roles),
            )
        )
    return out
