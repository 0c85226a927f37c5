from __future__ import annotations

from hypothesis import given, settings, strategies as st

from xlayer.linking import cross_validate, link_coin_reuse, link_entity_reuse
from xlayer.synth import ScenarioConfig, generate
from xlayer.validation import validate_against_ground_truth


def test_injected_coin_reuse_bookkeeping():
    snap, truth = generate(ScenarioConfig(seed=4, n_coin_reuse=10))
    assert sum(1 for h, _, _ in truth.injected if h == "coin-reuse") == 10
    assert len(truth.injected_pairs(snap)["coin-reuse"]) == 10


def test_adversarial_with_guards_is_clean():
    snap, truth = generate(ScenarioConfig(seed=2, n_adversarial=3, n_coin_reuse=2))
    for algo in (link_coin_reuse, link_entity_reuse):
        res = algo(snap)
        scores = validate_against_ground_truth(res.links, truth.entity_user(snap), truth.node_user)
        assert scores["all"].precision in (1.0, None)


def test_adversarial_without_guards_misfires():
    snap, truth = generate(ScenarioConfig(seed=2, n_adversarial=3))
    eu, nu = truth.entity_user(snap), truth.node_user
    wrong = 0
    for algo in (link_coin_reuse, link_entity_reuse):
        res = algo(snap, overlap_guard=False)
        wrong += sum(1 for r in res.links if eu.get(r.entity_id) != nu.get(r.nid))
    assert wrong >= 1
    rep = cross_validate(link_coin_reuse(snap, overlap_guard=False).links, link_entity_reuse(snap, overlap_guard=False).links)
    assert rep.contradictions


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_snapshots_always_pass_integrity(seed):
    sc = generate(ScenarioConfig(seed=seed, n_plain=6, n_coin_reuse=1, n_star=1, n_snake=1, n_collector=1, n_proxy=1,
                                 n_service_star=1, n_adversarial=1, n_shared_ip_groups=1, target_transactions=150))
    sc.snapshot.check_integrity()
    labelled = set(sc.truth.address_user)
    assert labelled == set(sc.snapshot.entity_of)
    assert set(sc.truth.node_user) == set(sc.snapshot.nodes)
