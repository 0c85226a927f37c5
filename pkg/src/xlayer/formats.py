"""On-disk formats and snapshot assembly.

graph.json (shaped like an lnd ``describegraph`` dump, closed channels included)::

    {"snapshot_end_time": 1700000000,
     "nodes": [{"pub_key": "02ab..", "alias": "name", "alias_history": ["old", "name"],
                "addresses": [{"network": "tcp", "addr": "1.2.3.4:9735"}]}],
     "edges": [{"chan_point": "<txid>:<index>", "node1_pub": "..", "node2_pub": "..",
                "capacity": "500000",
                "node1_policy": {"fee_base_msat": "1000", "fee_rate_milli_msat": "1"},
                "node2_policy": null}]}

``node1_policy`` is the policy node1 charges when forwarding towards node2.
``alias_history`` is optional and ordered oldest first; ``alias`` is the current one.

transactions.jsonl, one object per line::

    {"txid": "..", "height": 1, "timestamp": 1600000600, "is_coinjoin": false,
     "is_punishment": false,
     "inputs": [{"address": "..", "value_sat": 1000}],
     "outputs": [{"address": "..", "value_sat": 900, "script_kind": "multi-sig"}]}

``is_punishment`` and ``script_kind`` are optional. asn.csv has a header
``cidr_prefix,asn``; services.csv (optional) has ``address,category``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .entities import build_entities, cluster_cospend
from .errors import IntegrityError, ParseError
from .model import (
    Address,
    Channel,
    ChannelPoint,
    FeePolicy,
    NetAddress,
    NodeRecord,
    ScriptKind,
    ServiceCategory,
    SettlementKind,
    Snapshot,
    Transaction,
    TxInput,
    TxOutput,
)
from .offchain import AsnMap


@dataclass(frozen=True)
class ChannelSpec:
    """A channel as announced in the graph dump, before ledger lookups."""

    chpoint: ChannelPoint
    node1: str
    node2: str
    capacity: int
    policy1: FeePolicy | None = None
    policy2: FeePolicy | None = None


def settlement_kind_of(tx: Transaction) -> SettlementKind:
    if tx.is_punishment:
        return SettlementKind.PUNISHMENT
    n = len(tx.outputs)
    if n == 2:
        return SettlementKind.COOPERATIVE_2_OUTPUT
    if n > 2:
        return SettlementKind.MULTI_OUTPUT
    return SettlementKind.UNKNOWN


def tx_order_key(tx: Transaction):
    return (tx.height, tx.timestamp, tx.txid)


def build_snapshot(
    transactions: Iterable[Transaction],
    nodes: Iterable[NodeRecord],
    channels: Iterable[ChannelSpec],
    snapshot_end_time: int | None = None,
    service_tags: Mapping[str, ServiceCategory] | None = None,
) -> Snapshot:
    """Resolve channels against the ledger and cluster addresses.

    The settlement of a channel is the first later transaction spending the
    funding output's address.
    """
    txs = sorted(transactions, key=tx_order_key)
    by_id: dict[str, Transaction] = {}
    for tx in txs:
        if tx.txid in by_id:
            raise IntegrityError(f"duplicate txid {tx.txid}", txid=tx.txid)
        by_id[tx.txid] = tx
    spenders: dict[str, list[tuple[int, str]]] = {}
    for pos, tx in enumerate(txs):
        for a in tx.input_addresses:
            spenders.setdefault(a, []).append((pos, tx.txid))
    position = {tx.txid: i for i, tx in enumerate(txs)}

    problems = []
    resolved = []
    for spec in sorted(channels, key=lambda c: c.chpoint):
        ftx = by_id.get(spec.chpoint.txid)
        if ftx is None:
            problems.append(f"{spec.chpoint}: funding tx missing")
            continue
        if spec.chpoint.index >= len(ftx.outputs):
            problems.append(f"{spec.chpoint}: output index out of range")
            continue
        ms = ftx.outputs[spec.chpoint.index].address
        fpos = position[ftx.txid]
        later = [txid for pos, txid in spenders.get(ms, ()) if pos > fpos]
        stx = by_id[later[0]] if later else None
        resolved.append(
            Channel(
                chpoint=spec.chpoint,
                node1=spec.node1,
                node2=spec.node2,
                capacity=spec.capacity,
                policy1=spec.policy1,
                policy2=spec.policy2,
                open_time=ftx.timestamp,
                close_time=stx.timestamp if stx else None,
                settlement_txid=stx.txid if stx else None,
                settlement_kind=settlement_kind_of(stx) if stx else SettlementKind.UNKNOWN,
            )
        )
    if problems:
        raise IntegrityError("; ".join(problems), problems=problems)

    assignment = cluster_cospend(txs)
    entities = build_entities(assignment, service_tags)
    node_map = {n.nid: n for n in sorted(nodes, key=lambda n: n.nid)}
    for c in resolved:
        for nid in c.nodes:
            node_map.setdefault(nid, NodeRecord(nid))
    if snapshot_end_time is None:
        snapshot_end_time = max((tx.timestamp for tx in txs), default=0)
    kinds: dict[str, ScriptKind] = {}
    for tx in txs:
        for o in tx.outputs:
            if o.script_kind is not ScriptKind.OTHER:
                kinds[o.address] = o.script_kind
    snap = Snapshot(
        transactions=by_id,
        entities=entities,
        entity_of=assignment,
        nodes=node_map,
        channels=tuple(resolved),
        snapshot_end_time=snapshot_end_time,
        addresses={a: Address(a, kinds.get(a, ScriptKind.OTHER)) for a in sorted(assignment)},
    )
    snap.check_integrity()
    return snap


# -- readers --------------------------------------------------------------------------------------

def _int(value, where: str, field: str) -> int:
    try:
        if isinstance(value, bool):
            raise ValueError
        return int(value)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: field {field!r} is not an integer: {value!r}", where=where, field=field) from None


def _policy(raw, where: str) -> FeePolicy | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: policy must be an object", where=where)
    return FeePolicy(
        _int(raw.get("fee_base_msat", 0), where, "fee_base_msat"),
        _int(raw.get("fee_rate_milli_msat", 0), where, "fee_rate_milli_msat"),
    )


def parse_graph(doc: dict, source: str = "graph.json") -> tuple[list[NodeRecord], list[ChannelSpec], int | None]:
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be an object")
    nodes = []
    for i, raw in enumerate(doc.get("nodes", [])):
        where = f"{source}: nodes[{i}]"
        if "pub_key" not in raw:
            raise ParseError(f"{where}: missing field 'pub_key'", where=where, field="pub_key")
        history = list(raw.get("alias_history") or [])
        alias = raw.get("alias")
        if alias and (not history or history[-1] != alias):
            history.append(alias)
        addrs = tuple(NetAddress.parse(a["addr"]) for a in raw.get("addresses", []) if a.get("addr"))
        nodes.append(NodeRecord(raw["pub_key"], tuple(a for a in history if a), addrs))
    edges = []
    for i, raw in enumerate(doc.get("edges", [])):
        where = f"{source}: edges[{i}]"
        for key in ("chan_point", "node1_pub", "node2_pub", "capacity"):
            if key not in raw:
                raise ParseError(f"{where}: missing field {key!r}", where=where, field=key)
        try:
            cp = ChannelPoint.parse(raw["chan_point"])
        except ValueError:
            raise ParseError(f"{where}: bad chan_point {raw['chan_point']!r}", where=where, field="chan_point") from None
        edges.append(
            ChannelSpec(
                cp,
                raw["node1_pub"],
                raw["node2_pub"],
                _int(raw["capacity"], where, "capacity"),
                _policy(raw.get("node1_policy"), where),
                _policy(raw.get("node2_policy"), where),
            )
        )
    end = doc.get("snapshot_end_time")
    return nodes, edges, None if end is None else _int(end, source, "snapshot_end_time")


def parse_transaction(raw: dict, where: str) -> Transaction:
    for key in ("txid", "height", "timestamp", "inputs", "outputs"):
        if key not in raw:
            raise ParseError(f"{where}: missing field {key!r}", where=where, field=key)
    try:
        inputs = tuple(TxInput(i["address"], _int(i["value_sat"], where, "value_sat")) for i in raw["inputs"])
        outputs = tuple(
            TxOutput(o["address"], _int(o["value_sat"], where, "value_sat"), k, ScriptKind(o.get("script_kind", "other")))
            for k, o in enumerate(raw["outputs"])
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{where}: malformed input/output ({exc})", where=where) from None
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}", where=where) from None
    return Transaction(
        txid=str(raw["txid"]),
        inputs=inputs,
        outputs=outputs,
        timestamp=_int(raw["timestamp"], where, "timestamp"),
        height=_int(raw["height"], where, "height"),
        is_coinjoin=bool(raw.get("is_coinjoin", False)),
        is_punishment=bool(raw.get("is_punishment", False)),
    )


def read_transactions(path: str | Path) -> list[Transaction]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{Path(path).name}:{lineno}"
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: invalid JSON ({exc.msg})", where=where) from None
            out.append(parse_transaction(raw, where))
    return out


def read_graph(path: str | Path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{Path(path).name}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    return parse_graph(doc, Path(path).name)


def read_asn(path: str | Path) -> AsnMap:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"cidr_prefix", "asn"} <= set(reader.fieldnames):
            raise ParseError(f"{Path(path).name}:1: header must contain cidr_prefix,asn")
        for lineno, row in enumerate(reader, 2):
            where = f"{Path(path).name}:{lineno}"
            rows.append((row["cidr_prefix"], _int(row["asn"], where, "asn")))
    try:
        return AsnMap(rows)
    except ValueError as exc:
        raise ParseError(f"{Path(path).name}: bad prefix ({exc})") from None


def read_services(path: str | Path) -> dict[str, ServiceCategory]:
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), 2):
            try:
                out[row["address"]] = ServiceCategory(row["category"])
            except (KeyError, ValueError):
                raise ParseError(f"{Path(path).name}:{lineno}: bad service row", where=f"{Path(path).name}:{lineno}") from None
    return out


@dataclass(frozen=True)
class Inputs:
    graph: Path
    transactions: Path
    asn: Path | None = None
    services: Path | None = None

    @classmethod
    def in_dir(cls, d: str | Path) -> "Inputs":
        d = Path(d)
        svc = d / "services.csv"
        asn = d / "asn.csv"
        return cls(d / "graph.json", d / "transactions.jsonl", asn if asn.exists() else None,
                   svc if svc.exists() else None)

    def paths(self) -> list[Path]:
        return [p for p in (self.graph, self.transactions, self.asn, self.services) if p is not None]


def ingest(inputs: Inputs) -> tuple[Snapshot, AsnMap]:
    nodes, edges, end = read_graph(inputs.graph)
    txs = read_transactions(inputs.transactions)
    asn = read_asn(inputs.asn) if inputs.asn else AsnMap()
    services = read_services(inputs.services) if inputs.services else {}
    return build_snapshot(txs, nodes, edges, end, services), asn


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# -- writers --------------------------------------------------------------------------------------

def _policy_doc(p: FeePolicy | None):
    if p is None:
        return None
    return {"fee_base_msat": str(p.base_fee), "fee_rate_milli_msat": str(p.rate)}


def graph_doc(nodes: Iterable[NodeRecord], channels: Iterable[ChannelSpec | Channel], end_time: int) -> dict:
    node_docs = []
    for n in sorted(nodes, key=lambda n: n.nid):
        d = {
            "pub_key": n.nid,
            "alias": n.alias or "",
            "addresses": [{"network": "tcp", "addr": a.addr} for a in n.net_addresses],
        }
        if len(n.aliases) > 1:
            d["alias_history"] = list(n.aliases)
        node_docs.append(d)
    edge_docs = [
        {
            "chan_point": str(c.chpoint),
            "node1_pub": c.node1,
            "node2_pub": c.node2,
            "capacity": str(c.capacity),
            "node1_policy": _policy_doc(c.policy1),
            "node2_policy": _policy_doc(c.policy2),
        }
        for c in sorted(channels, key=lambda c: c.chpoint)
    ]
    return {"snapshot_end_time": end_time, "nodes": node_docs, "edges": edge_docs}


def tx_doc(tx: Transaction) -> dict:
    d = {
        "txid": tx.txid,
        "height": tx.height,
        "timestamp": tx.timestamp,
        "is_coinjoin": tx.is_coinjoin,
        "inputs": [{"address": i.address, "value_sat": i.value} for i in tx.inputs],
        "outputs": [],
    }
    if tx.is_punishment:
        d["is_punishment"] = True
    for o in tx.outputs:
        od = {"address": o.address, "value_sat": o.value}
        if o.script_kind is not ScriptKind.OTHER:
            od["script_kind"] = o.script_kind.value
        d["outputs"].append(od)
    return d


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def write_snapshot(snapshot: Snapshot, directory: str | Path, asn_prefixes: Sequence[tuple[str, int]] = ()) -> Inputs:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_json(d / "graph.json", graph_doc(snapshot.nodes.values(), snapshot.channels, snapshot.snapshot_end_time))
    with open(d / "transactions.jsonl", "w", encoding="utf-8") as fh:
        for tx in sorted(snapshot.transactions.values(), key=tx_order_key):
            fh.write(json.dumps(tx_doc(tx), sort_keys=True) + "\n")
    write_csv(d / "asn.csv", ["cidr_prefix", "asn"], sorted(asn_prefixes))
    tags = sorted(
        (a, e.service_category.value) for e in snapshot.entities if e.service_category for a in e.addresses
    )
    services = None
    if tags:
        services = d / "services.csv"
        write_csv(services, ["address", "category"], tags)
    return Inputs(d / "graph.json", d / "transactions.jsonl", d / "asn.csv", services)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], comment: str | None = None) -> None:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
