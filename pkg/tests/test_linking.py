from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from xlayer.linking import (
    EligibleSettlement,
    Heuristic,
    LinkDiagnostics,
    LinkRecord,
    LinkView,
    combine_with_clusters,
    cross_validate,
    link_coin_reuse,
    link_entity_reuse,
    propagate_counterparty,
)
from xlayer.model import Channel, ChannelPoint
from xlayer.synth import ScenarioConfig, generate
from xlayer.validation import validate_against_ground_truth

from conftest import Ledger, reuse_ledger


def pairs_of(result):
    return {(r.entity_id, r.nid, r.heuristic.value) for r in result.links}


def test_coin_reuse_then_counterparty(reuse_snap):
    e = reuse_snap.entity_of
    res = link_coin_reuse(reuse_snap)
    assert pairs_of(res) == {(e["a2"], "n2", "coin-reuse"), (e["a3"], "n1", "counterparty")}
    seed = res.by_heuristic("coin-reuse")[0]
    assert seed.iteration == 0 and set(seed.supporting_txids) == {"f-ms1", "s-ms1", "f-ms2"}
    assert res.by_heuristic(Heuristic.COUNTERPARTY)[0].iteration == 1


def test_third_party_funded_channel_is_ignored():
    L = Ledger()
    L.channel(["w1"], "ms1", "n1", "n2", 200)  # opened from someone else's wallet
    L.channel(["x9"], "ms0", "n1", "n4", 150)
    L.close("ms1", ["a2", "a3"], 300)
    L.channel(["a2"], "ms2", "n2", "n3", 400)
    assert link_coin_reuse(L.snapshot(end=1000)).links == ()


def _id_change(open_keepalive: bool):
    """n1 stops before n3 starts: looks like a node-id change unless n1 stays active."""
    L = Ledger()
    L.channel(["a2"], "ms1", "n1", "n2", 200)
    if open_keepalive:
        L.channel(["x9"], "ms0", "n1", "n4", 150)
    L.close("ms1", ["a2", "a3"], 300)
    L.channel(["a2"], "ms2", "n2", "n3", 400)
    return L.snapshot(end=1000)


def test_overlap_guard_blocks_id_change():
    snap = _id_change(False)
    assert link_coin_reuse(snap).links == ()
    assert link_coin_reuse(snap).diagnostics.guard_rejected >= 1
    assert {r.nid for r in link_coin_reuse(snap, overlap_guard=False).links} >= {"n2"}
    assert link_coin_reuse(_id_change(True)).links


def _chan(n1, n2, txid="s"):
    return Channel(ChannelPoint("f" + txid, 0), n1, n2, 1000, settlement_txid=txid, close_time=1)


def test_propagation_rule():
    st_ = [EligibleSettlement("s", _chan("na", "nb"), (1, 2))]
    new = propagate_counterparty([LinkRecord(1, "na", Heuristic.COIN_REUSE)], st_)
    assert [(r.entity_id, r.nid, r.heuristic) for r in new] == [(2, "nb", Heuristic.COUNTERPARTY)]
    # reversed roles resolve symmetrically
    new = propagate_counterparty([LinkRecord(2, "na", Heuristic.COIN_REUSE)], st_)
    assert [(r.entity_id, r.nid) for r in new] == [(1, "nb")]


def test_propagation_consistent_is_noop():
    st_ = [EligibleSettlement("s", _chan("na", "nb"), (1, 2))]
    known = [LinkRecord(1, "na", Heuristic.COIN_REUSE), LinkRecord(2, "nb", Heuristic.COIN_REUSE)]
    assert propagate_counterparty(known, st_) == []


def test_propagation_conflict_adds_nothing():
    st_ = [EligibleSettlement("s", _chan("na", "nb"), (1, 2))]
    diag = LinkDiagnostics()
    known = [LinkRecord(1, "na", Heuristic.COIN_REUSE), LinkRecord(1, "nb", Heuristic.COIN_REUSE)]
    assert propagate_counterparty(known, st_, diag=diag) == []
    assert diag.conflicts


def test_propagation_chain_and_cap():
    chain = [EligibleSettlement(f"s{i}", _chan(f"n{i}", f"n{i + 1}", f"s{i}"), (i, i + 1)) for i in range(6)]
    seed = [LinkRecord(0, "n0", Heuristic.COIN_REUSE)]
    full = propagate_counterparty(seed, chain)
    assert [(r.entity_id, r.nid, r.iteration) for r in full] == [(i, f"n{i}", i) for i in range(1, 7)]
    diag = LinkDiagnostics()
    capped = propagate_counterparty(seed, chain, cap=3, diag=diag)
    assert len(capped) == 3 and not diag.converged


def test_entity_reuse_three_channels_around_one_node():
    L = Ledger()
    for k, peer in enumerate(["n2", "n3", "n4"]):
        L.channel(["e1a"], f"ms{k}", "n1", peer, 100 + k)
    snap = L.snapshot(end=1000)
    res = link_entity_reuse(snap)
    assert pairs_of(res) == {(snap.entity_of["e1a"], "n1", "entity-reuse")}


def test_entity_reuse_same_pair_is_ambiguous():
    L = Ledger()
    L.channel(["e"], "ms0", "n1", "n2", 100)
    L.channel(["e"], "ms1", "n1", "n2", 110)
    assert link_entity_reuse(L.snapshot(end=1000)).links == ()


def test_entity_reuse_disjoint_periods_blocked():
    L = Ledger()
    L.channel(["e"], "ms0", "n1", "n2", 100)
    L.close("ms0", ["e", "z"], 200)
    L.channel(["e"], "ms1", "n1", "n3", 300)
    snap = L.snapshot(end=1000)
    assert link_entity_reuse(snap).links == ()
    assert link_entity_reuse(snap, overlap_guard=False).links


def test_single_user_scenario_has_no_links():
    sc = generate(ScenarioConfig(seed=1, n_hubs=2, n_plain=1, channels_per_user=(1, 1), close_rate=0.0, target_transactions=0))
    assert link_coin_reuse(sc.snapshot).links == ()
    assert link_entity_reuse(sc.snapshot).links == ()


def test_combine_onchain_inherits_links():
    L = reuse_ledger()
    L.tx("t-extra", ["b5"], ["b6"], 600)
    snap = L.snapshot(end=1000)
    e = snap.entity_of
    super_of = {e["a2"]: e["a2"], e["b5"]: e["a2"]}
    res = combine_with_clusters(snap, 1, super_of=super_of)
    assert (e["b5"], "n2", "indirect-onchain") in pairs_of(res)


def test_combine_actor_expansion_and_identity(reuse_snap):
    e = reuse_snap.entity_of
    res = combine_with_clusters(reuse_snap, 1, actor_clusters=[{"n2", "n8"}])
    assert (e["a2"], "n8", "indirect-actor") in pairs_of(res)
    base = link_coin_reuse(reuse_snap)
    assert combine_with_clusters(reuse_snap, 1).pairs == base.pairs


def test_cross_validate_cases():
    a = [LinkRecord(1, "n1", Heuristic.COIN_REUSE)]
    b = [LinkRecord(2, "n2", Heuristic.ENTITY_REUSE)]
    rep = cross_validate(a, b)
    assert rep.intersection == 0 and rep.contradictions == {}
    clash = cross_validate(a, [LinkRecord(1, "n9", Heuristic.ENTITY_REUSE)])
    assert clash.contradictions == {1: ("n1", "n9")}
    grouped = cross_validate(a, [LinkRecord(1, "n9", Heuristic.INDIRECT_ACTOR)], {"n1": "A0", "n9": "A0"})
    assert grouped.contradictions == {}


def test_validation_report_degenerate_and_perfect():
    truth_e = {1: "u1", 2: "u2"}
    truth_n = {"n1": "u1", "n2": "u2"}
    empty = validate_against_ground_truth([], truth_e, truth_n, {"coin-reuse": [(1, "n1")]})
    assert empty["all"].precision is None and empty["all"].as_dict()["precision"] == "n/a"
    assert empty["coin-reuse"].recall == 0.0
    good = validate_against_ground_truth(
        [LinkRecord(1, "n1", Heuristic.COIN_REUSE), LinkRecord(2, "n2", Heuristic.COUNTERPARTY)], truth_e, truth_n,
        {"coin-reuse": [(1, "n1")]},
    )
    assert good["all"].precision == 1.0 and good["coin-reuse"].recall == 1.0
    assert good["all"].validated_nodes == 2


@pytest.fixture(scope="module")
def corpus():
    return generate(ScenarioConfig(seed=21, n_coin_reuse=6, n_entity_reuse=6, n_star=2, n_snake=2, n_collector=2, n_proxy=2))


@pytest.mark.parametrize("algo", [link_coin_reuse, link_entity_reuse])
def test_generator_precision_and_recall(corpus, algo):
    snap, truth = corpus
    res = algo(snap)
    scores = validate_against_ground_truth(res.links, truth.entity_user(snap), truth.node_user, truth.injected_pairs(snap))
    assert scores["all"].precision == 1.0
    key = "coin-reuse" if algo is link_coin_reuse else "entity-reuse"
    assert scores[key].recall == 1.0


def test_generator_algorithms_agree(corpus):
    snap, _ = corpus
    rep = cross_validate(link_coin_reuse(snap).links, link_entity_reuse(snap).links)
    assert rep.contradictions == {}
    assert rep.intersection > 0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_fixpoint_and_monotone_iterations(seed):
    snap, _ = generate(ScenarioConfig(seed=seed, n_plain=8, n_coin_reuse=3, n_entity_reuse=2, target_transactions=0))
    res = link_coin_reuse(snap)
    view = LinkView(snap)
    assert propagate_counterparty(res.links, view.settlements, cap=50) == []
    assert res.diagnostics.iterations <= 20 and res.diagnostics.converged
    iters = sorted(r.iteration for r in res.links)
    for k in range(max(iters, default=0) + 1):
        assert sum(1 for i in iters if i <= k) <= sum(1 for i in iters if i <= k + 1)
