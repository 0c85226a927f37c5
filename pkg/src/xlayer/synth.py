"""Deterministic synthetic ledgers and channel graphs with ownership labels.

Each simulated user owns wallets and nodes and runs one behaviour (plain
channels, coin reuse, entity reuse, star or snake funding, collector or
proxy settlement, ...). Every event is mined in its own block, so
timestamps are strictly increasing and activity periods are well defined.
A ring of long-lived hub nodes is the counterparty of user channels.
"""

from __future__ import annotations

import hashlib
import random
import string
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping

from .errors import ConfigInvalid
from .formats import ChannelSpec, build_snapshot, read_csv, write_csv, write_snapshot
from .model import (
    ChannelPoint,
    FeePolicy,
    NetAddress,
    NodeRecord,
    ScriptKind,
    ServiceCategory,
    Snapshot,
    Transaction,
    TxInput,
    TxOutput,
)
from .patterns import PatternKind

GENESIS = 1_600_000_000
BLOCK_SECONDS = 600
FEE = 250

DECOY_WORDS = (
    "Wilder", "Gopher", "Falcon", "Badger", "Walrus", "Condor", "Marmot", "Jackal",
    "Beaver", "Ferret", "Puffin", "Iguana", "Jaguar", "Parrot", "Toucan", "Weasel",
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Counts are numbers of users running each behaviour; rates are per-channel probabilities."""

    seed: int
    n_hubs: int = 6
    n_plain: int = 20
    n_coin_reuse: int = 0
    n_entity_reuse: int = 0
    n_star: int = 0
    n_snake: int = 0
    n_collector: int = 0
    n_proxy: int = 0
    n_service_star: int = 0
    n_adversarial: int = 0
    themed_families: tuple[tuple[str, int], ...] = ()
    n_decoy_aliases: int = 0
    n_shared_ip_groups: int = 0
    channels_per_user: tuple[int, int] = (1, 3)
    capacity_range: tuple[int, int] = (100_000, 5_000_000)
    base_fee_range: tuple[int, int] = (0, 2_000)
    fee_rate_range: tuple[int, int] = (1, 1_000)
    close_rate: float = 0.5
    multi_output_rate: float = 0.0
    punishment_rate: float = 0.0
    service_rate: float = 0.0
    coinjoin_rate: float = 0.0
    onion_rate: float = 0.1
    target_transactions: int = 0

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigInvalid("seed must be an integer", field="seed")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name.startswith("n_") or f.name == "target_transactions":
                if not isinstance(v, int) or v < 0:
                    raise ConfigInvalid(f"{f.name} must be a non-negative integer", field=f.name)
            elif f.name.endswith("_rate"):
                if not 0.0 <= v <= 1.0:
                    raise ConfigInvalid(f"{f.name} must lie in [0, 1]", field=f.name)
            elif f.name.endswith("_range") or f.name == "channels_per_user":
                lo, hi = v
                if lo > hi or lo < 0:
                    raise ConfigInvalid(f"{f.name} must be an ordered non-negative pair", field=f.name)
        if self.capacity_range[0] < 1 or self.channels_per_user[0] < 1:
            raise ConfigInvalid("capacities and channel counts must be >= 1")
        for theme, size in self.themed_families:
            if size < 2 or len(theme) < 9:
                raise ConfigInvalid("themed families need >= 2 nodes and a theme of >= 9 characters", field="themed_families")
        if self.n_decoy_aliases > len(DECOY_WORDS):
            raise ConfigInvalid(f"at most {len(DECOY_WORDS)} decoy aliases", field="n_decoy_aliases")
        users = (self.n_plain + self.n_coin_reuse + self.n_entity_reuse + self.n_star + self.n_snake
                 + self.n_collector + self.n_proxy + self.n_service_star + self.n_adversarial
                 + len(self.themed_families) + self.n_decoy_aliases + self.n_shared_ip_groups)
        if users and self.n_hubs < 1:
            raise ConfigInvalid("users need at least one hub to open channels with", field="n_hubs")
        multi = (self.n_coin_reuse + self.n_entity_reuse + self.n_star + self.n_snake + self.n_collector
                 + self.n_proxy + self.n_service_star + self.n_adversarial + len(self.themed_families))
        if multi and self.n_hubs < 2:
            raise ConfigInvalid("reuse and pattern behaviours need at least two hubs", field="n_hubs")

    @classmethod
    def from_mapping(cls, raw: Mapping) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys {sorted(unknown)}")
        if "seed" not in raw:
            raise ConfigInvalid("seed is mandatory", field="seed")
        kw = dict(raw)
        for key in ("channels_per_user", "capacity_range", "base_fee_range", "fee_rate_range"):
            if key in kw:
                kw[key] = tuple(kw[key])
        if "themed_families" in kw:
            kw["themed_families"] = tuple((str(t), int(s)) for t, s in kw["themed_families"])
        cfg = cls(**kw)
        cfg.validate()
        return cfg


@dataclass
class GroundTruth:
    address_user: dict[str, str] = field(default_factory=dict)
    node_user: dict[str, str] = field(default_factory=dict)
    # (kind, member addresses); every member address is its own entity by construction
    patterns: list[tuple[PatternKind, frozenset[str]]] = field(default_factory=list)
    # (heuristic, wallet address, nid)
    injected: list[tuple[str, str, str]] = field(default_factory=list)

    def entity_user(self, snapshot: Snapshot) -> dict[int, str]:
        out: dict[int, str] = {}
        for a, e in snapshot.entity_of.items():
            u = self.address_user.get(a)
            if u is not None:
                out.setdefault(e, u)
        return out

    def injected_pairs(self, snapshot: Snapshot) -> dict[str, set[tuple[int, str]]]:
        out: dict[str, set[tuple[int, str]]] = {}
        for h, a, n in self.injected:
            out.setdefault(h, set()).add((snapshot.entity_of[a], n))
        return out

    def pattern_entities(self, snapshot: Snapshot) -> list[tuple[PatternKind, frozenset[int]]]:
        return [(k, frozenset(snapshot.entity_of[a] for a in addrs)) for k, addrs in self.patterns]

    def __eq__(self, other):
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return (
            self.address_user == other.address_user
            and self.node_user == other.node_user
            and sorted((k.value, sorted(a)) for k, a in self.patterns)
            == sorted((k.value, sorted(a)) for k, a in other.patterns)
            and sorted(self.injected) == sorted(other.injected)
        )


@dataclass
class Scenario:
    snapshot: Snapshot
    truth: GroundTruth
    asn_prefixes: list[tuple[str, int]]
    config: ScenarioConfig

    def __iter__(self):
        # allows ``snapshot, truth = generate(cfg)``
        return iter((self.snapshot, self.truth))


@dataclass
class _Chan:
    chpoint: ChannelPoint
    multisig: str
    capacity: int
    local: str
    remote: str
    user: str


class _Generator:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.truth = GroundTruth()
        self.txs: list[Transaction] = []
        self.nodes: dict[str, NodeRecord] = {}
        self.specs: list[ChannelSpec] = []
        self.services: dict[str, ServiceCategory] = {}
        self.asn_prefixes: list[tuple[str, int]] = []
        self.hubs: list[tuple[str, str]] = []  # (nid, user)
        self._n_addr = 0
        self._n_tx = 0
        self._n_node = 0
        self._n_user = 0
        self._height = 0
        self._exchange: str | None = None
        self._mixer: str | None = None
        self._bystanders: list[str] = []

    # -- primitives ------------------------------------------------------------------------------

    def _hash(self, kind: str, n: int) -> str:
        return hashlib.sha256(f"{self.cfg.seed}/{kind}/{n}".encode()).hexdigest()

    def user(self, prefix: str = "u") -> str:
        self._n_user += 1
        return f"{prefix}{self._n_user:05d}"

    def addr(self, user: str) -> str:
        self._n_addr += 1
        a = f"bc1q{self._n_addr:010x}"
        self.truth.address_user[a] = user
        return a

    def tx(self, inputs, outputs, coinjoin: bool = False, punishment: bool = False) -> Transaction:
        self._height += 1
        self._n_tx += 1
        outs = []
        for k, o in enumerate(outputs):
            a, v = o[0], o[1]
            sk = o[2] if len(o) > 2 else ScriptKind.OTHER
            outs.append(TxOutput(a, v, k, sk))
        t = Transaction(
            txid=self._hash("tx", self._n_tx),
            inputs=tuple(TxInput(a, v) for a, v in inputs),
            outputs=tuple(outs),
            timestamp=GENESIS + BLOCK_SECONDS * self._height,
            height=self._height,
            is_coinjoin=coinjoin,
            is_punishment=punishment,
        )
        self.txs.append(t)
        return t

    def mint(self, address: str, value: int) -> None:
        self.tx([], [(address, value)])

    def new_asn(self) -> tuple[int, int, int]:
        k = len(self.asn_prefixes)
        o1, o2 = 11 + k // 256, k % 256
        if o1 >= 100:
            raise ConfigInvalid("too many hosting prefixes for the synthetic address plan")
        asn = 64512 + k
        self.asn_prefixes.append((f"{o1}.{o2}.0.0/16", asn))
        return asn, o1, o2

    def ip_in(self, prefix: tuple[int, int, int]) -> str:
        _, o1, o2 = prefix
        return f"{o1}.{o2}.{self.rng.randint(0, 255)}.{self.rng.randint(1, 254)}"

    def onion(self) -> str:
        chars = string.ascii_lowercase + "234567"
        return "".join(self.rng.choice(chars) for _ in range(56)) + ".onion"

    def random_alias(self) -> str:
        return "".join(self.rng.choice(string.ascii_lowercase) for _ in range(self.rng.randint(12, 20)))

    def node(self, user: str, aliases=None, hosts=None, prefix=None, allow_onion: bool = True) -> str:
        self._n_node += 1
        nid = "02" + self._hash("node", self._n_node)
        if aliases is None:
            aliases = (self.random_alias(),)
        if hosts is None:
            if allow_onion and self.rng.random() < self.cfg.onion_rate:
                hosts = [f"{self.onion()}:9735"]
            else:
                prefix = prefix or self.new_asn()
                hosts = [f"{self.ip_in(prefix)}:9735"]
        self.nodes[nid] = NodeRecord(nid, tuple(aliases), tuple(NetAddress.parse(h) for h in hosts))
        self.truth.node_user[nid] = user
        return nid

    def policy(self) -> FeePolicy:
        c = self.cfg
        return FeePolicy(self.rng.randint(*c.base_fee_range), self.rng.randint(*c.fee_rate_range))

    def capacity(self) -> int:
        return self.rng.randint(*self.cfg.capacity_range)

    def open(self, funder: str, user: str, local: str, remote: str, capacity: int | None = None,
             change_to: str | None = None, change: int = 0) -> _Chan:
        cap = capacity or self.capacity()
        ms = self.addr(user)
        outs = [(ms, cap, ScriptKind.MULTI_SIG)]
        if change_to is not None:
            change = change or self.rng.randint(10_000, 1_000_000)
            outs.append((change_to, change))
        t = self.tx([(funder, cap + change + FEE)], outs)
        cp = ChannelPoint(t.txid, 0)
        n1, n2 = sorted((local, remote))
        self.specs.append(ChannelSpec(cp, n1, n2, cap, self.policy(), self.policy()))
        return _Chan(cp, ms, cap, local, remote, user)

    def hub_user(self, nid: str) -> str:
        return self.truth.node_user[nid]

    def close(self, ch: _Chan, local_out: str, remote_out: str | None = None) -> Transaction:
        """Cooperative close paying ``local_out`` and a fresh address of the remote side."""
        remote_out = remote_out or self.addr(self.truth.node_user[ch.remote])
        mine = self.rng.randint(ch.capacity // 4, ch.capacity // 2)
        return self.tx([(ch.multisig, ch.capacity)], [(local_out, mine), (remote_out, ch.capacity - mine - FEE)])

    def close_plain(self, ch: _Chan) -> str | None:
        """Close with the configured mix of cooperative, multi-output and punishment closes."""
        r = self.addr(ch.user)
        u = self.rng.random()
        if u < self.cfg.punishment_rate:
            self.tx([(ch.multisig, ch.capacity)], [(r, ch.capacity - FEE)], punishment=True)
            return None
        if u < self.cfg.punishment_rate + self.cfg.multi_output_rate:
            extra = self.addr(ch.user)
            third = ch.capacity // 5
            h = self.addr(self.hub_user(ch.remote))
            self.tx([(ch.multisig, ch.capacity)], [(r, third), (h, third), (extra, ch.capacity - 2 * third - FEE)])
            return r
        self.close(ch, r)
        return r

    def pick_hubs(self, k: int) -> list[str]:
        nids = [h for h, _ in self.hubs]
        if k <= len(nids):
            return self.rng.sample(nids, k)
        return [self.rng.choice(nids) for _ in range(k)]

    def exchange(self) -> str:
        if self._exchange is None:
            self._exchange = self.addr("service-exchange")
            self.services[self._exchange] = ServiceCategory.EXCHANGE
            self.mint(self._exchange, 10**12)
        return self._exchange

    def mixer(self) -> str:
        if self._mixer is None:
            self._mixer = self.addr("service-mixer")
            self.services[self._mixer] = ServiceCategory.MIXER
        return self._mixer

    def fund_fresh(self, user: str, value: int) -> str:
        """Fresh address holding ``value``, replenished by mint, exchange payout or CoinJoin."""
        f = self.addr(user)
        u = self.rng.random()
        if u < self.cfg.service_rate:
            x = self.exchange()
            self.tx([(x, 10**9)], [(f, value), (x, 10**9 - value - FEE)])
        elif u < self.cfg.service_rate + self.cfg.coinjoin_rate:
            pre = self.addr(user)
            self.mint(pre, value + FEE)
            ins, outs = [(pre, value + FEE)], [(f, value)]
            for _ in range(3):
                self._n_user += 1
                other = f"cj{self._n_user:05d}"
                a, b = self.addr(other), self.addr(other)
                self.mint(a, value + FEE)
                ins.append((a, value + FEE))
                outs.append((b, value))
            self.tx(ins, outs, coinjoin=True)
        else:
            self.mint(f, value)
        return f

    # -- behaviours ------------------------------------------------------------------------------

    def make_hubs(self) -> None:
        for _ in range(self.cfg.n_hubs):
            u = self.user("hub")
            self.hubs.append((self.node(u, allow_onion=False), u))
        n = len(self.hubs)
        pairs = [(i, (i + 1) % n) for i in range(n)] if n > 2 else ([(0, 1)] if n == 2 else [])
        for i, j in pairs:
            nid, u = self.hubs[i]
            w = self.addr(u)
            cap = self.cfg.capacity_range[1] * 10
            self.mint(w, cap + FEE)
            self.open(w, u, nid, self.hubs[j][0], cap)

    def plain(self, user: str | None = None, nid: str | None = None, k: int | None = None) -> str:
        user = user or self.user()
        nid = nid or self.node(user)
        k = k or self.rng.randint(*self.cfg.channels_per_user)
        for hub in self.pick_hubs(k):
            cap = self.capacity()
            f = self.fund_fresh(user, cap + FEE + 50_000)
            ch = self.open(f, user, nid, hub, cap, self.addr(user) if self.rng.random() < 0.5 else None, 50_000)
            if self.rng.random() < self.cfg.close_rate:
                r = self.close_plain(ch)
                if r is not None and self.rng.random() < self.cfg.service_rate:
                    self.tx([(r, 1000)], [(self.mixer(), 1000 - FEE)])
        return nid

    def coin_reuse(self) -> None:
        user = self.user()
        nid = self.node(user)
        w = self.addr(user)
        self.mint(w, 10**8)
        steps = 2 + (self.rng.random() < 0.5)
        hubs = self.pick_hubs(min(steps, len(self.hubs)))
        while len(hubs) < steps:
            hubs.append(hubs[-2])
        prev = None
        for hub in hubs:
            if prev is not None:
                self.close(prev, w)
            prev = self.open(w, user, nid, hub)
        if self.rng.random() < self.cfg.close_rate:
            self.close(prev, self.addr(user))
        self.truth.injected.append(("coin-reuse", w, nid))
        self.truth.injected.append(("entity-reuse", w, nid))

    def entity_reuse(self, user: str | None = None, nid: str | None = None) -> None:
        user = user or self.user()
        nid = nid or self.node(user)
        w = self.addr(user)
        self.mint(w, 10**8)
        chans = [self.open(w, user, nid, hub, change_to=w) for hub in self.pick_hubs(self.rng.randint(2, min(4, len(self.hubs))))]
        for ch in chans:
            if self.rng.random() < self.cfg.close_rate:
                self.close(ch, self.addr(user))
        self.truth.injected.append(("entity-reuse", w, nid))

    def star(self, service: bool = False) -> None:
        user = self.user()
        nid = self.node(user)
        s = self.exchange() if service else self.addr(user)
        if not service:
            self.mint(s, 10**8)
        hubs = self.pick_hubs(self.rng.randint(2, min(4, len(self.hubs))))
        funders = [self.addr(user) for _ in hubs]
        caps = [self.capacity() for _ in hubs]
        total = sum(caps) + FEE * len(caps)
        self.tx([(s, total + 10**6 + FEE)], [(f, c + FEE) for f, c in zip(funders, caps)] + [(s, 10**6)])
        for f, c, hub in zip(funders, caps, hubs):
            self.open(f, user, nid, hub, c)
        if not service:
            self.truth.patterns.append((PatternKind.STAR, frozenset([s, *funders])))

    def snake(self) -> None:
        user = self.user()
        nid = self.node(user)
        s = self.addr(user)
        self.mint(s, 10**9)
        hubs = self.pick_hubs(self.rng.randint(2, min(4, len(self.hubs))))
        chain = [self.addr(user) for _ in hubs]
        self.tx([(s, 10**8)], [(chain[0], 10**8 - 10**6 - FEE), (s, 10**6)])
        for i, hub in enumerate(hubs):
            nxt = chain[i + 1] if i + 1 < len(chain) else None
            self.open(chain[i], user, nid, hub, change_to=nxt, change=10**7 if nxt else 0)
        self.truth.patterns.append((PatternKind.SNAKE, frozenset([s, *chain])))

    def _closed_channels(self, user: str, nid: str, m: int) -> list[str]:
        outs = []
        chans = []
        for hub in self.pick_hubs(m):
            cap = self.capacity()
            chans.append(self.open(self.fund_fresh_mint(user, cap + FEE), user, nid, hub, cap))
        for ch in chans:
            r = self.addr(user)
            self.close(ch, r)
            outs.append(r)
        return outs

    def fund_fresh_mint(self, user: str, value: int) -> str:
        f = self.addr(user)
        self.mint(f, value)
        return f

    def collector(self) -> None:
        user = self.user()
        nid = self.node(user)
        rs = self._closed_channels(user, nid, self.rng.randint(2, min(4, len(self.hubs))))
        d = self.addr(user)
        for r in rs:
            self.tx([(r, 1000)], [(d, 1000 - FEE)])
        self.truth.patterns.append((PatternKind.COLLECTOR, frozenset([*rs, d])))

    def proxy(self) -> None:
        user = self.user()
        nid = self.node(user)
        rs = self._closed_channels(user, nid, self.rng.randint(2, min(4, len(self.hubs))))
        p, d = rs[-1], self.addr(user)
        for r in rs[:-1]:
            self.tx([(r, 1000)], [(p, 1000 - FEE)])
        self.tx([(p, 5000)], [(d, 5000 - FEE)])
        self.truth.patterns.append((PatternKind.PROXY, frozenset([*rs, d])))

    def themed_family(self, theme: str, size: int) -> None:
        user = self.user("fam")
        prefix = self.new_asn()
        for i in range(size):
            if size >= 3 and i == size - 1:
                aliases = (f"{theme} Billing",)
            elif i in (1, 2) and size >= 4:
                aliases = (f"{theme} [lnd-{i + 1:02d}/old-lnd-{i + 17:02d}]", f"{theme} [lnd-{i + 1:02d}]")
            else:
                aliases = (f"{theme} [lnd-{i + 1:02d}]",)
            nid = self.node(user, aliases, prefix=prefix, allow_onion=False)
            if i == 0:
                self.entity_reuse(user, nid)
            else:
                self.plain(user, nid, k=1)

    def decoy(self, word: str) -> None:
        user = self.user()
        self.plain(user, self.node(user, (f"{word}Lightning",), allow_onion=False))

    def shared_ip_group(self) -> None:
        user = self.user()
        if self.rng.random() < 0.5:
            host = self.ip_in(self.new_asn())
        else:
            host = self.onion()
        for k in range(self.rng.randint(2, 3)):
            self.plain(user, self.node(user, hosts=[f"{host}:{9735 + k}"]), k=1)

    def adversarial(self) -> None:
        """One wallet serves an old node, then (after the old node is gone) a new one.

        Both nodes open a channel to the same hub, so without the activity
        guard the hub is taken for the wallet's node. The new node later
        reuses the coins once more towards a second hub, a genuine coin-reuse
        link that then contradicts the false one.
        """
        user = self.user()
        old, new = self.node(user), self.node(user)
        hub1, hub2 = self.pick_hubs(2)
        w = self.addr(user)
        self.mint(w, 10**8)
        c1 = self.open(w, user, old, hub1)
        self.close(c1, w)
        c2 = self.open(w, user, new, hub1)
        self.close(c2, w)
        self.open(w, user, new, hub2)
        self.truth.injected.append(("coin-reuse", w, new))

    def noise(self) -> None:
        target = self.cfg.target_transactions
        if len(self.txs) >= target:
            return
        pool = max(10, (target - len(self.txs)) // 20)
        while len(self._bystanders) < pool:
            self._n_user += 1
            a = self.addr(f"by{self._n_user:05d}")
            self.mint(a, 10**9)
            self._bystanders.append(a)
        while len(self.txs) < target:
            a, b = self.rng.sample(self._bystanders, 2)
            v = self.rng.randint(1_000, 1_000_000)
            self.tx([(a, v + 10**5 + FEE)], [(b, v), (a, 10**5)])

    def run(self) -> Scenario:
        c = self.cfg
        self.make_hubs()
        jobs = (
            [self.plain] * c.n_plain
            + [self.coin_reuse] * c.n_coin_reuse
            + [self.entity_reuse] * c.n_entity_reuse
            + [self.star] * c.n_star
            + [lambda: self.star(service=True)] * c.n_service_star
            + [self.snake] * c.n_snake
            + [self.collector] * c.n_collector
            + [self.proxy] * c.n_proxy
            + [self.adversarial] * c.n_adversarial
            + [self.shared_ip_group] * c.n_shared_ip_groups
        )
        self.rng.shuffle(jobs)
        for job in jobs:
            job()
        for theme, size in c.themed_families:
            self.themed_family(theme, size)
        for word in DECOY_WORDS[: c.n_decoy_aliases]:
            self.decoy(word)
        self.noise()
        end = GENESIS + BLOCK_SECONDS * (self._height + 1)
        snap = build_snapshot(self.txs, self.nodes.values(), self.specs, end, self.services)
        return Scenario(snap, self.truth, sorted(self.asn_prefixes), c)


def generate(config: ScenarioConfig) -> Scenario:
    config.validate()
    return _Generator(config).run()


# -- ground-truth files ---------------------------------------------------------------------------

def emit_ground_truth(truth: GroundTruth, directory: str | Path, snapshot: Snapshot | None = None) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_csv(d / "gt_addresses.csv", ["address", "user"], sorted(truth.address_user.items()))
    write_csv(d / "gt_nodes.csv", ["nid", "user"], sorted(truth.node_user.items()))
    rows = []
    for i, (kind, addrs) in enumerate(truth.patterns):
        rows += [(i, kind.value, a) for a in sorted(addrs)]
    write_csv(d / "gt_patterns.csv", ["instance", "kind", "address"], rows)
    write_csv(d / "gt_links.csv", ["heuristic", "address", "nid"], sorted(truth.injected))
    if snapshot is not None:
        write_csv(d / "gt_entities.csv", ["entity_id", "user"], sorted(truth.entity_user(snapshot).items()))


def load_ground_truth(directory: str | Path) -> GroundTruth:
    d = Path(directory)
    gt = GroundTruth()
    gt.address_user = {r["address"]: r["user"] for r in read_csv(d / "gt_addresses.csv")}
    gt.node_user = {r["nid"]: r["user"] for r in read_csv(d / "gt_nodes.csv")}
    inst: dict[str, tuple[str, set[str]]] = {}
    for r in read_csv(d / "gt_patterns.csv"):
        inst.setdefault(r["instance"], (r["kind"], set()))[1].add(r["address"])
    gt.patterns = [(PatternKind(k), frozenset(a)) for _, (k, a) in sorted(inst.items(), key=lambda kv: int(kv[0]))]
    gt.injected = [(r["heuristic"], r["address"], r["nid"]) for r in read_csv(d / "gt_links.csv")]
    return gt


def write_scenario(scenario: Scenario, directory: str | Path) -> None:
    write_snapshot(scenario.snapshot, directory, scenario.asn_prefixes)
    emit_ground_truth(scenario.truth, directory, scenario.snapshot)
