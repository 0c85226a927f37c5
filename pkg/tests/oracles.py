"""Independent brute-force reference implementations used by the tests.

Each oracle is deliberately naive and shares no code with the package beyond
the plain data types.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from fractions import Fraction

from xlayer.model import Transaction, TxInput, TxOutput


def random_ledger(rng: random.Random, n_tx: int, n_addr: int, coinjoin_rate: float = 0.05) -> list[Transaction]:
    txs = []
    for k in range(n_tx):
        ins = rng.sample(range(n_addr), rng.randint(1, min(4, n_addr)))
        outs = rng.sample(range(n_addr), rng.randint(1, min(3, n_addr)))
        txs.append(
            Transaction(
                f"tx{k}",
                tuple(TxInput(f"a{i:03d}", 1) for i in ins),
                tuple(TxOutput(f"a{o:03d}", 1, j) for j, o in enumerate(outs)),
                k,
                k,
                rng.random() < coinjoin_rate,
            )
        )
    return txs


def bipartite_components(txs) -> list[frozenset[str]]:
    """Connected components of the address-transaction graph, inputs only, CoinJoins cut."""
    adj: dict[str, set[str]] = {}
    for tx in txs:
        t = "#" + tx.txid
        for a in [i.address for i in tx.inputs] + [o.address for o in tx.outputs]:
            adj.setdefault("@" + a, set())
        if tx.is_coinjoin:
            continue
        adj.setdefault(t, set())
        for i in tx.inputs:
            adj[t].add("@" + i.address)
            adj["@" + i.address].add(t)
    seen, out = set(), []
    for v in sorted(adj):
        if v in seen or not v.startswith("@"):
            continue
        comp, q = set(), deque([v])
        seen.add(v)
        while q:
            u = q.popleft()
            if u.startswith("@"):
                comp.add(u[1:])
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    q.append(w)
        out.append(frozenset(comp))
    return out


def partition_of(assignment) -> set[frozenset[str]]:
    groups: dict[int, set[str]] = {}
    for a, e in assignment.items():
        groups.setdefault(e, set()).add(a)
    return {frozenset(g) for g in groups.values()}


def undirected_components(edges) -> set[frozenset]:
    adj: dict = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    seen, out = set(), set()
    for s in adj:
        if s in seen:
            continue
        comp, q = {s}, deque([s])
        seen.add(s)
        while q:
            u = q.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    q.append(w)
        out.add(frozenset(comp))
    return out


def lcs_by_enumeration(a: str, b: str) -> int:
    """Length of the longest substring of ``a`` that occurs in ``b``, by enumerating all substrings."""
    best = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a) + 1):
            if j - i > best and a[i:j] in b:
                best = j - i
    return best


def relative_lcs(a: str, b: str) -> Fraction:
    return 1 - Fraction(lcs_by_enumeration(a, b), max(len(a), len(b)))


# -- routing --------------------------------------------------------------------------------------

def _hop_fee_micro(policy, amount: int) -> int | None:
    """Fee in micro-msat (1e-6 msat): base [msat] + amount[sat] * 1000 * rate[ppm] / 1e6."""
    if policy is None:
        return None
    return policy.base_fee * 1_000_000 + amount * 1000 * policy.rate


def all_simple_paths(adj: dict, src: str, dst: str):
    stack = [(src, (src,))]
    while stack:
        u, path = stack.pop()
        if u == dst:
            yield path
            continue
        for v in adj.get(u, ()):
            if v not in path:
                stack.append((v, path + (v,)))


def brute_cheapest(channels, src: str, dst: str, amount: int):
    """Enumerate every simple path; a hop u->v may use any channel between them with
    capacity >= amount. Intermediary k charges its outgoing-hop policy. Returns
    (fee_micro, path) minimising (fee, hops, path), or None."""
    best_hop: dict[tuple[str, str], int] = {}
    adj: dict[str, set[str]] = {}
    for c in channels:
        if c.capacity < amount:
            continue
        for u, v, pol in ((c.node1, c.node2, c.policy1), (c.node2, c.node1, c.policy2)):
            adj.setdefault(u, set()).add(v)
            f = _hop_fee_micro(pol, amount)
            if f is not None and ((u, v) not in best_hop or f < best_hop[(u, v)]):
                best_hop[(u, v)] = f
    best = None
    for path in all_simple_paths(adj, src, dst):
        if len(path) < 2:
            continue
        fee = 0
        ok = True
        for u, v in zip(path[1:-1], path[2:]):
            if (u, v) not in best_hop:
                ok = False
                break
            fee += best_hop[(u, v)]
        if not ok:
            continue
        key = (fee, len(path), path)
        if best is None or key < best:
            best = key
    return None if best is None else (best[0], best[2])


def brute_cheapest_from(channels, src: str, amount: int) -> dict[str, tuple[int, tuple[str, ...]]]:
    """Same rule as ``brute_cheapest`` for every destination, enumerating each simple path once."""
    best_hop: dict[tuple[str, str], int] = {}
    adj: dict[str, set[str]] = {}
    for c in channels:
        if c.capacity < amount:
            continue
        for u, v, pol in ((c.node1, c.node2, c.policy1), (c.node2, c.node1, c.policy2)):
            adj.setdefault(u, set()).add(v)
            f = _hop_fee_micro(pol, amount)
            if f is not None and ((u, v) not in best_hop or f < best_hop[(u, v)]):
                best_hop[(u, v)] = f
    best: dict[str, tuple[int, int, tuple[str, ...]]] = {}
    stack = [((src,), 0)]
    while stack:
        path, fee = stack.pop()
        u = path[-1]
        if len(path) > 1:
            key = (fee, len(path), path)
            if u not in best or key < best[u]:
                best[u] = key
        for v in adj.get(u, ()):
            if v in path:
                continue
            if u == src:
                step = 0
            elif (u, v) in best_hop:
                step = best_hop[(u, v)]
            else:
                continue
            stack.append((path + (v,), fee + step))
    return {d: (k[0], k[2]) for d, k in best.items()}


# -- path privacy ---------------------------------------------------------------------------------

def vp_broken(path, actor) -> bool:
    return any(v in actor for v in path[1:-1])


def ra_broken(path, actor) -> bool:
    return len(path) >= 3 and path[1] in actor and path[-2] in actor


def wormhole(path, actor) -> bool:
    mids = path[1:-1]
    idx = [i for i, v in enumerate(mids) if v in actor]
    for i, j in itertools.combinations(idx, 2):
        if any(mids[k] not in actor for k in range(i + 1, j)):
            return True
    return False
