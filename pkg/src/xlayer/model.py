"""Shared domain types for both layers and the snapshot container.

Monetary values are integer satoshis; routing fees are integer millisatoshis
(base) and parts-per-million (rate).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping

from .errors import IntegrityError, NoChannels, NodeUnknown


class ScriptKind(str, Enum):
    SINGLE_SIG = "single-sig"
    MULTI_SIG = "multi-sig"
    OTHER = "other"


class ServiceCategory(str, Enum):
    EXCHANGE = "exchange"
    MIXER = "mixer"
    HOSTED_WALLET = "hosted-wallet"
    OTHER_SERVICE = "other-service"


class NetKind(str, Enum):
    IPV4 = "ipv4"
    IPV6 = "ipv6"
    ONION = "onion"


class SettlementKind(str, Enum):
    COOPERATIVE_2_OUTPUT = "cooperative-2-output"
    MULTI_OUTPUT = "multi-output"
    PUNISHMENT = "punishment"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Address:
    id: str
    script_kind: ScriptKind = ScriptKind.OTHER


@dataclass(frozen=True)
class TxInput:
    address: str
    value: int


@dataclass(frozen=True)
class TxOutput:
    address: str
    value: int
    index: int
    script_kind: ScriptKind = ScriptKind.OTHER


@dataclass(frozen=True)
class Transaction:
    txid: str
    inputs: tuple[TxInput, ...]
    outputs: tuple[TxOutput, ...]
    timestamp: int
    height: int
    is_coinjoin: bool = False
    # punishment detection is out of scope; the flag is input data
    is_punishment: bool = False

    def __post_init__(self):
        if not self.txid:
            raise IntegrityError("empty txid")
        for i, out in enumerate(self.outputs):
            if out.index != i:
                raise IntegrityError(f"{self.txid}: output indices must be 0..n-1", txid=self.txid)
        if any(x.value < 0 for x in (*self.inputs, *self.outputs)):
            raise IntegrityError(f"{self.txid}: negative value", txid=self.txid)

    @property
    def input_addresses(self) -> list[str]:
        return [i.address for i in self.inputs]

    @property
    def output_addresses(self) -> list[str]:
        return [o.address for o in self.outputs]


@dataclass(frozen=True)
class Entity:
    entity_id: int
    addresses: frozenset[str]
    service_category: ServiceCategory | None = None


@dataclass(frozen=True)
class NetAddress:
    addr: str
    kind: NetKind

    @property
    def host(self) -> str:
        """Address without the port."""
        a = self.addr
        if a.startswith("["):
            return a[1:a.index("]")]
        if self.kind is NetKind.IPV6:
            return a
        return a.rsplit(":", 1)[0] if ":" in a else a

    @classmethod
    def parse(cls, addr: str) -> "NetAddress":
        host = addr
        if addr.startswith("["):
            host = addr[1:addr.index("]")]
        elif addr.count(":") == 1:
            host = addr.split(":")[0]
        if host.endswith(".onion"):
            kind = NetKind.ONION
        elif ":" in host:
            kind = NetKind.IPV6
        else:
            kind = NetKind.IPV4
        return cls(addr, kind)


@dataclass(frozen=True)
class NodeRecord:
    nid: str
    aliases: tuple[str, ...] = ()
    net_addresses: tuple[NetAddress, ...] = ()
    asn_per_ip: Mapping[str, int] = field(default_factory=dict, compare=False, hash=False)

    @property
    def alias(self) -> str | None:
        return self.aliases[-1] if self.aliases else None


@dataclass(frozen=True)
class FeePolicy:
    base_fee: int  # millisatoshis
    rate: int  # parts per million of the amount

    def __post_init__(self):
        if self.base_fee < 0 or self.rate < 0:
            raise IntegrityError("fee policy values must be >= 0")


@dataclass(frozen=True, order=True)
class ChannelPoint:
    txid: str
    index: int

    def __str__(self) -> str:
        return f"{self.txid}:{self.index}"

    @classmethod
    def parse(cls, s: str) -> "ChannelPoint":
        txid, _, idx = s.rpartition(":")
        if not txid:
            raise ValueError(f"bad channel point {s!r}")
        return cls(txid, int(idx))


@dataclass(frozen=True)
class Channel:
    chpoint: ChannelPoint
    node1: str
    node2: str
    capacity: int
    policy1: FeePolicy | None = None  # node1 -> node2 direction
    policy2: FeePolicy | None = None  # node2 -> node1 direction
    open_time: int | None = None
    close_time: int | None = None
    settlement_txid: str | None = None
    settlement_kind: SettlementKind = SettlementKind.UNKNOWN

    def __post_init__(self):
        if self.node1 == self.node2:
            raise IntegrityError(f"channel {self.chpoint}: node1 == node2", chpoint=str(self.chpoint))
        if self.capacity <= 0:
            raise IntegrityError(f"channel {self.chpoint}: capacity must be > 0", chpoint=str(self.chpoint))
        if (self.close_time is None) != (self.settlement_txid is None):
            raise IntegrityError(
                f"channel {self.chpoint}: close_time present iff settlement_txid present",
                chpoint=str(self.chpoint),
            )

    @property
    def nodes(self) -> tuple[str, str]:
        return (self.node1, self.node2)

    @property
    def is_open(self) -> bool:
        return self.settlement_txid is None

    def policy_from(self, nid: str) -> FeePolicy | None:
        return self.policy1 if nid == self.node1 else self.policy2

    def other(self, nid: str) -> str:
        return self.node2 if nid == self.node1 else self.node1


@dataclass(frozen=True)
class ActivityPeriod:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"activity period start {self.start} > end {self.end}")


@dataclass(frozen=True)
class Snapshot:
    """Ledger plus channel graph. Treat as read-only once built.

    ``entity_of`` maps every address to its co-spend entity id.
    """

    transactions: Mapping[str, Transaction]
    entities: tuple[Entity, ...]
    entity_of: Mapping[str, int]
    nodes: Mapping[str, NodeRecord]
    channels: tuple[Channel, ...]
    snapshot_end_time: int
    addresses: Mapping[str, Address] = field(default_factory=dict)

    @cached_property
    def channels_by_node(self) -> dict[str, list[Channel]]:
        idx: dict[str, list[Channel]] = defaultdict(list)
        for c in self.channels:
            idx[c.node1].append(c)
            idx[c.node2].append(c)
        return dict(idx)

    @cached_property
    def channel_addresses(self) -> frozenset[str]:
        """Multi-sig addresses locked by channel funding outputs."""
        out = set()
        for c in self.channels:
            tx = self.transactions.get(c.chpoint.txid)
            if tx is not None and c.chpoint.index < len(tx.outputs):
                out.add(tx.outputs[c.chpoint.index].address)
        return frozenset(out)

    @cached_property
    def service_entities(self) -> frozenset[int]:
        return frozenset(e.entity_id for e in self.entities if e.service_category is not None)

    def entity(self, entity_id: int) -> Entity:
        return self.entities[entity_id]

    def check_integrity(self) -> None:
        """Raise IntegrityError listing every dangling reference. O(|channels|)."""
        problems = []
        for c in self.channels:
            tx = self.transactions.get(c.chpoint.txid)
            if tx is None:
                problems.append(f"{c.chpoint}: funding tx missing")
                continue
            if c.chpoint.index >= len(tx.outputs):
                problems.append(f"{c.chpoint}: output index out of range")
                continue
            out = tx.outputs[c.chpoint.index]
            if out.script_kind is ScriptKind.SINGLE_SIG:
                problems.append(f"{c.chpoint}: funding output is not multi-sig")
            if c.settlement_txid is not None:
                stx = self.transactions.get(c.settlement_txid)
                if stx is None:
                    problems.append(f"{c.chpoint}: settlement tx {c.settlement_txid} missing")
                elif out.address not in stx.input_addresses:
                    problems.append(f"{c.chpoint}: settlement tx {c.settlement_txid} does not spend it")
        if problems:
            raise IntegrityError("; ".join(problems), problems=problems)


def activity_period(nid: str, snapshot: Snapshot) -> ActivityPeriod:
    """From the first channel funding to the last settlement, or snapshot end if a channel is open."""
    if nid not in snapshot.nodes and nid not in snapshot.channels_by_node:
        raise NodeUnknown(f"unknown node {nid}", nid=nid)
    chans = snapshot.channels_by_node.get(nid, [])
    if not chans:
        raise NoChannels(f"node {nid} has no channels", nid=nid)
    return _period_of(chans, snapshot)


def _period_of(chans: Iterable[Channel], snapshot: Snapshot) -> ActivityPeriod:
    starts, ends, still_open = [], [], False
    for c in chans:
        starts.append(c.open_time if c.open_time is not None else snapshot.transactions[c.chpoint.txid].timestamp)
        if c.is_open:
            still_open = True
        else:
            ends.append(c.close_time)
    start = min(starts)
    end = snapshot.snapshot_end_time if still_open or not ends else max(ends)
    return ActivityPeriod(start, max(start, end))


def periods_overlap(p1: ActivityPeriod, p2: ActivityPeriod) -> bool:
    # closed intervals: a shared instant counts
    return max(p1.start, p2.start) <= min(p1.end, p2.end)
