from __future__ import annotations

import random

from hypothesis import given, settings, strategies as st

from xlayer.dsu import DisjointSet
from xlayer.entities import RoleTables, Side, build_entities, cluster_cospend, derive_roles, ego_components
from xlayer.model import ServiceCategory, Transaction, TxInput, TxOutput

from conftest import Ledger, reuse_ledger
from oracles import bipartite_components, partition_of, random_ledger, undirected_components


def _tx(txid, ins, outs=()):
    return Transaction(txid, tuple(TxInput(a, 1) for a in ins), tuple(TxOutput(a, 1, i) for i, a in enumerate(outs)), 0, 0)


def test_cospend_chain_merges():
    part = partition_of(cluster_cospend([_tx("t1", ["a1", "a2"]), _tx("t2", ["a2", "a3"])]))
    assert part == {frozenset({"a1", "a2", "a3"})}


def test_disjoint_inputs_stay_apart():
    part = partition_of(cluster_cospend([_tx("t1", ["a1", "a2"]), _tx("t2", ["b1", "b2"])]))
    assert part == {frozenset({"a1", "a2"}), frozenset({"b1", "b2"})}


def test_coinjoin_does_not_merge():
    cj = Transaction("cj", (TxInput("a", 1), TxInput("b", 1)), (TxOutput("c", 1, 0),), 0, 0, is_coinjoin=True)
    part = partition_of(cluster_cospend([cj]))
    assert part == {frozenset({"a"}), frozenset({"b"}), frozenset({"c"})}


def test_empty_input():
    assert cluster_cospend([]) == {}


def test_cospend_matches_bfs_on_50_random_transactions():
    rng = random.Random(11)
    txs = random_ledger(rng, 50, 120)
    assert partition_of(cluster_cospend(txs)) == set(bipartite_components(txs))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 60), st.integers(2, 80))
def test_cospend_oracle_property(seed, n_tx, n_addr):
    txs = random_ledger(random.Random(seed), n_tx, n_addr)
    assert partition_of(cluster_cospend(txs)) == set(bipartite_components(txs))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_cospend_order_independent(seed, shuffler):
    txs = random_ledger(random.Random(seed), 40, 60)
    ref = cluster_cospend(txs)
    permuted = []
    for tx in txs:
        ins = list(tx.inputs)
        shuffler.shuffle(ins)
        permuted.append(Transaction(tx.txid, tuple(ins), tx.outputs, tx.timestamp, tx.height, tx.is_coinjoin))
    shuffler.shuffle(permuted)
    assert cluster_cospend(permuted) == ref


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_adding_a_transaction_never_splits(seed):
    rng = random.Random(seed)
    txs = random_ledger(rng, 30, 50)
    before = cluster_cospend(txs[:-1])
    after = cluster_cospend(txs)
    for a in before:
        for b in before:
            if before[a] == before[b]:
                assert after[a] == after[b]


def test_entity_ids_dense_and_ordered():
    assignment = cluster_cospend([_tx("t", ["b", "c"]), _tx("u", ["a"])])
    assert assignment == {"a": 0, "b": 1, "c": 1}
    ents = build_entities(assignment, {"c": ServiceCategory.EXCHANGE})
    assert [e.entity_id for e in ents] == [0, 1]
    assert ents[1].service_category is ServiceCategory.EXCHANGE


def test_reuse_ledger_roles():
    s = reuse_ledger().snapshot(end=1000)
    roles = derive_roles(s)
    e = s.entity_of
    assert roles.source_entities == {e["a1"]}
    assert e["a2"] in roles.funding_entities
    assert roles.settlement_entities == {e["a2"], e["a3"]}
    assert roles.destination_entities == {e["a4"]}
    assert roles.funding_relations == {(e["a1"], e["a2"])}
    assert roles.settlement_relations == {(e["a3"], e["a4"])}


def test_never_closed_channel_has_no_settlement_roles():
    L = Ledger()
    L.tx("top", ["s"], ["f"], 1)
    L.channel(["f"], "ms", "n1", "n2", 2)
    roles = derive_roles(L.snapshot())
    assert roles.settlement_entities == frozenset() and roles.destination_entities == frozenset()


def test_entity_funding_two_channels_listed_once():
    L = Ledger()
    L.channel(["f"], "ms1", "n1", "n2", 2)
    L.channel(["f"], "ms2", "n1", "n3", 3)
    s = L.snapshot()
    assert derive_roles(s).funding_entities == {s.entity_of["f"]}


def _tables(funding_rel=(), settlement_rel=(), funding=(), settlement=()):
    return RoleTables(
        frozenset(funding), frozenset(settlement),
        frozenset(u for u, _ in funding_rel), frozenset(v for _, v in settlement_rel),
        frozenset(funding_rel), frozenset(settlement_rel),
    )


def test_ego_component_simple():
    comps = ego_components(_tables([(1, 2), (1, 3)], funding={2, 3}), Side.FUNDING)
    assert len(comps) == 1
    assert comps[0].vertices == {1, 2, 3}
    assert comps[0].edges == {(1, 2), (1, 3)}


def test_service_component_dropped():
    t = _tables([(1, 2), (1, 3)], funding={2, 3})
    assert ego_components(t, "funding", service_entities=[1]) == []


@settings(max_examples=60, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 99), st.integers(0, 99)).filter(lambda e: e[0] != e[1]), max_size=150))
def test_ego_components_match_bfs(edges):
    comps = ego_components(_tables(edges), Side.FUNDING)
    assert {c.vertices for c in comps} == undirected_components(edges)
    for c in comps:
        assert all(u in c.vertices and v in c.vertices for u, v in c.edges)
        assert c.vertices == {x for e in c.edges for x in e}


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), max_size=60))
def test_dsu_matches_bfs(pairs):
    d = DisjointSet(range(31))
    for a, b in pairs:
        d.union(a, b)
    comps = undirected_components(pairs)
    for comp in comps:
        assert len({d.find(x) for x in comp}) == 1
    assert len(d.groups()) == len(comps) + (31 - len(set().union(*comps)) if comps else 31)
