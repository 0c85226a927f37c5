from __future__ import annotations

import random
from dataclasses import dataclass, field

import pytest

from xlayer.formats import ChannelSpec, build_snapshot
from xlayer.model import ChannelPoint, FeePolicy, NodeRecord, ScriptKind, Transaction, TxInput, TxOutput
from xlayer.routing import ChannelGraph
from xlayer.model import Channel


@dataclass
class Ledger:
    """Tiny builder for hand-made snapshots: addresses are plain strings, values are nominal."""

    txs: list = field(default_factory=list)
    specs: list = field(default_factory=list)
    nodes: dict = field(default_factory=dict)

    def tx(self, txid, inputs, outputs, t, multisig=(), coinjoin=False, punishment=False):
        ins = tuple(TxInput(a, 1000) for a in inputs)
        outs = tuple(
            TxOutput(a, 900, i, ScriptKind.MULTI_SIG if a in multisig else ScriptKind.OTHER)
            for i, a in enumerate(outputs)
        )
        self.txs.append(Transaction(txid, ins, outs, t, t, coinjoin, punishment))
        return txid

    def channel(self, funder_inputs, ms, n1, n2, t, capacity=100_000, txid=None):
        """Funding tx paying one multisig output; returns the txid."""
        txid = txid or f"f-{ms}"
        self.tx(txid, funder_inputs, [ms], t, multisig={ms})
        self.specs.append(ChannelSpec(ChannelPoint(txid, 0), n1, n2, capacity))
        return txid

    def close(self, ms, outputs, t, txid=None, punishment=False):
        return self.tx(txid or f"s-{ms}", [ms], outputs, t, punishment=punishment)

    def node(self, nid, aliases=(), addrs=()):
        from xlayer.model import NetAddress

        self.nodes[nid] = NodeRecord(nid, tuple(aliases), tuple(NetAddress.parse(a) for a in addrs))

    def snapshot(self, end=None, services=None):
        return build_snapshot(self.txs, self.nodes.values(), self.specs, end, services)


def reuse_ledger() -> Ledger:
    """Channel life cycle: e1 tops up e2, e2 funds c1(n1,n2), the cooperative close pays
    e2 and e3, e2 reuses the coins for c2(n2,n3), and e3 forwards to e4. Node n1 keeps an
    open channel to n4 so its activity overlaps n3's."""
    L = Ledger()
    L.tx("t-src", ["a1"], ["a2"], 100)
    L.channel(["a2"], "ms1", "n1", "n2", 200)
    L.channel(["x9"], "ms0", "n1", "n4", 150)
    L.close("ms1", ["a2", "a3"], 300)
    L.channel(["a2"], "ms2", "n2", "n3", 400)
    L.tx("t-dst", ["a3"], ["a4"], 500)
    return L


@pytest.fixture
def reuse_snap():
    return reuse_ledger().snapshot(end=1000)


def line_graph(names="abcde", capacity=100_000, base=1000, rate=1):
    chans = []
    for i, (u, v) in enumerate(zip(names, names[1:])):
        p = FeePolicy(base, rate)
        chans.append(Channel(ChannelPoint(f"c{i}", 0), u, v, capacity, p, p))
    return ChannelGraph.build(chans, names)


def random_channel_graph(rng: random.Random, n: int, p: float = 0.4, names=None) -> ChannelGraph:
    """Erdos-Renyi style multigraph-free channel graph with random capacities and policies."""
    names = names or [f"n{i}" for i in range(n)]
    chans = []
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                pol = [None if rng.random() < 0.05 else FeePolicy(rng.randint(0, 2000), rng.randint(0, 3000)) for _ in range(2)]
                u, v = (names[i], names[j]) if rng.random() < 0.5 else (names[j], names[i])
                chans.append(Channel(ChannelPoint(f"c{k}", 0), u, v, rng.choice([10_000, 50_000, 200_000, 1_000_000]), *pol))
                k += 1
    return ChannelGraph.build(chans, names)
