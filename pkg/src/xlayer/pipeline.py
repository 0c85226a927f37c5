"""Stage orchestration and report bundle writing.

Every artifact carries the hash of the run manifest: CSV files as a leading
``# manifest: <hash>`` comment, JSON files under the ``manifest`` key and
SVG files as an XML comment.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from . import __version__
from .aliases import AliasMetric
from .entities import EgoComponent, RoleTables, Side, derive_roles, ego_components
from .errors import MissingMetric, ParseError, XLayerError
from .formats import file_sha256, read_csv, write_csv
from .impact import (
    build_actors,
    capacity_distribution,
    dos_advantage,
    griefing_reach,
    linked_openers,
    path_privacy,
    sample_pairs,
    success_ratio,
    advantage,
)
from .linking import DEFAULT_ITERATION_CAP, LinkRecord, LinkResult, combine_with_clusters, cross_validate, link_coin_reuse, link_entity_reuse
from .model import Snapshot
from .offchain import ActorCluster, AliasDendrogram, AsnMap, asn_purity_filter, cluster_by_ip, merge_actor_clusters, sweep_threshold
from .patterns import PatternKind, PatternResult, apply_patterns, merge_clusters
from .routing import ChannelGraph, route_table
from .svg import line_chart

log = logging.getLogger(__name__)

CONFIGURATIONS = (
    ("base", None, False),
    ("+stars", (PatternKind.STAR,), False),
    ("+snakes", (PatternKind.SNAKE,), False),
    ("+collectors", (PatternKind.COLLECTOR,), False),
    ("+proxies", (PatternKind.PROXY,), False),
    ("+all on-chain", tuple(PatternKind), False),
    ("+all on/off-chain", tuple(PatternKind), True),
)


@dataclass(frozen=True)
class PipelineParams:
    seed: int | None = None
    threshold: float = 0.46
    metric: str = AliasMetric.RELATIVE_LCS.value
    amounts: tuple[int, ...] = (10_000, 100_000, 1_000_000)
    samples: int = 1000
    iteration_cap: int = DEFAULT_ITERATION_CAP
    overlap_guard: bool = True
    strict_patterns: bool = True
    top_actors: int = 5
    max_hops: int = 4
    griefing_budget: int | None = None  # default: the actor's own attributed capacity
    anchor: str | None = None  # "PREFIX:MIN_SIZE" enables the threshold sweep
    threads: int = 1

    def validate(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ParseError("threshold must lie in [0, 1]")
        AliasMetric(self.metric)
        if any(a <= 0 for a in self.amounts):
            raise ParseError("amounts must be > 0")
        if self.samples < 1 or self.iteration_cap < 1 or self.top_actors < 1 or self.max_hops < 2:
            raise ParseError("samples, iteration cap and top actors must be >= 1; max hops >= 2")

    def manifest_dict(self) -> dict:
        d = asdict(self)
        d.pop("threads")  # does not affect results
        d["amounts"] = list(self.amounts)
        return d


@dataclass(frozen=True)
class RunManifest:
    inputs: tuple[tuple[str, str], ...]  # (file name, sha256)
    seed: int | None
    params: Mapping
    version: str = __version__

    @classmethod
    def for_inputs(cls, paths: Iterable[Path], params: PipelineParams) -> "RunManifest":
        return cls(
            tuple(sorted((Path(p).name, file_sha256(p)) for p in paths)),
            params.seed,
            params.manifest_dict(),
        )

    def as_dict(self) -> dict:
        return {
            "inputs": [{"file": n, "sha256": h} for n, h in self.inputs],
            "seed": self.seed,
            "parameters": dict(self.params),
            "tool_version": self.version,
        }

    @property
    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.as_dict(), sort_keys=True).encode()).hexdigest()


class Bundle:
    """Output directory bound to one manifest."""

    def __init__(self, directory: str | Path, manifest: RunManifest):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest
        self.hash = manifest.digest

    def write_manifest(self) -> None:
        self.json("manifest.json", {**self.manifest.as_dict(), "hash": self.hash}, key=None)

    def csv(self, name: str, header, rows) -> Path:
        path = self.dir / name
        write_csv(path, header, rows, comment=f"manifest: {self.hash}")
        return path

    def json(self, name: str, obj, key: str | None = "manifest") -> Path:
        if key is not None:
            obj = {key: self.hash, **obj}
        path = self.dir / name
        path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def svg(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        return path


def _r(x: float) -> str:
    # fixed rendering keeps bundles byte-stable
    return f"{x:.10f}"


# -- on-chain ------------------------------------------------------------------------------------

@dataclass
class OnchainResult:
    roles: RoleTables
    components: list[EgoComponent]
    patterns: PatternResult


def run_onchain(snapshot: Snapshot, params: PipelineParams, bundle: Bundle | None = None) -> OnchainResult:
    roles = derive_roles(snapshot)
    svc = snapshot.service_entities
    comps = ego_components(roles, Side.FUNDING, svc) + ego_components(roles, Side.SETTLEMENT, svc)
    res = apply_patterns(comps, params.strict_patterns)
    if bundle is not None:
        rows = []
        for c in res.clusters:
            for e in sorted(c.entities):
                rows.append((c.component_id, c.kind.value, e, res.super_of[e], len(snapshot.entity(e).addresses)))
        bundle.csv("onchain_clusters.csv", ["component_id", "kind", "entity_id", "super_entity", "n_addresses"], rows)
        counts = res.counts()
        bundle.json(
            "onchain_summary.json",
            {
                "funding_entities": len(roles.funding_entities),
                "settlement_entities": len(roles.settlement_entities),
                "source_entities": len(roles.source_entities),
                "destination_entities": len(roles.destination_entities),
                "funding_components": sum(1 for c in comps if c.side is Side.FUNDING),
                "settlement_components": sum(1 for c in comps if c.side is Side.SETTLEMENT),
                "service_entities": len(svc),
                "clusters": {k.value: v for k, v in counts.items()},
            },
        )
    return OnchainResult(roles, comps, res)


# -- off-chain -----------------------------------------------------------------------------------

@dataclass
class OffchainResult:
    actors: list[ActorCluster]
    threshold: float
    sweep: object | None = None


def run_offchain(snapshot: Snapshot, asn_map: AsnMap, params: PipelineParams, bundle: Bundle | None = None) -> OffchainResult:
    nodes = snapshot.nodes
    metric = AliasMetric(params.metric)
    sweep = None
    threshold = params.threshold
    if params.anchor:
        prefix, _, size = params.anchor.rpartition(":")
        sweep = sweep_threshold(nodes, (prefix, int(size)), asn_map, metric, workers=params.threads)
        threshold = sweep.threshold
    dendro = AliasDendrogram.build(nodes.values(), metric, params.threads)
    alias = asn_purity_filter(dendro.cut(threshold), nodes, asn_map)
    actors = merge_actor_clusters(alias, cluster_by_ip(nodes.values()))
    if bundle is not None:
        rows = [(a.actor_id, n, "+".join(sorted(a.evidence))) for a in actors for n in sorted(a.nodes)]
        bundle.csv("offchain_clusters.csv", ["actor_id", "nid", "evidence"], rows)
        bundle.json("alias_cut.json", dendro.summary(threshold))
        if sweep is not None:
            bundle.csv(
                "alias_sweep.csv",
                ["threshold", "clustered_nodes", "anchor_ok"],
                [(f"{t:.2f}", c, int(ok)) for t, c, ok in zip(sweep.grid, sweep.clustered_nodes, sweep.anchor_ok)],
            )
    return OffchainResult(actors, threshold, sweep)


# -- linking -------------------------------------------------------------------------------------

@dataclass
class LinkingResult:
    base: dict[int, LinkResult]
    configs: dict[tuple[int, str], LinkResult] = field(default_factory=dict)

    def final(self, alg: int) -> LinkResult:
        return self.configs.get((alg, CONFIGURATIONS[-1][0]), self.base[alg])


def link_rows(links: Iterable[LinkRecord]):
    return [(r.entity_id, r.nid, r.heuristic.value, r.iteration, " ".join(r.supporting_txids)) for r in links]


LINK_HEADER = ["entity_id", "nid", "heuristic", "iteration", "evidence_txids"]


def summary_rows(snapshot: Snapshot, roles: RoleTables, configs: Mapping[tuple[int, str], LinkResult]) -> list[dict]:
    """Share of addresses/entities/nodes linked per algorithm and configuration.

    Entities and addresses are counted among funding and settlement entities;
    nodes among all nodes of the graph.
    """
    universe = roles.funding_entities | roles.settlement_entities
    n_addr = sum(len(snapshot.entity(e).addresses) for e in universe)
    n_nodes = len(snapshot.nodes)
    out = []
    for (alg, name), res in configs.items():
        ents = {r.entity_id for r in res.links} & universe
        nodes = {r.nid for r in res.links}
        addrs = sum(len(snapshot.entity(e).addresses) for e in ents)
        out.append({
            "algorithm": alg,
            "configuration": name,
            "linked_addresses": addrs,
            "linked_entities": len(ents),
            "linked_nodes": len(nodes),
            "addresses_pct": 100.0 * addrs / n_addr if n_addr else 0.0,
            "entities_pct": 100.0 * len(ents) / len(universe) if universe else 0.0,
            "nodes_pct": 100.0 * len(nodes) / n_nodes if n_nodes else 0.0,
        })
    return out


def run_linking(
    snapshot: Snapshot,
    onchain: OnchainResult,
    offchain: OffchainResult | None,
    params: PipelineParams,
    algorithms: Iterable[int] = (1, 2),
    bundle: Bundle | None = None,
) -> LinkingResult:
    runners = {1: link_coin_reuse, 2: link_entity_reuse}
    kw = dict(overlap_guard=params.overlap_guard, cap=params.iteration_cap)
    algorithms = list(algorithms)
    base = {a: runners[a](snapshot, **kw) for a in algorithms}
    actor_sets = [a.nodes for a in offchain.actors] if offchain else []
    result = LinkingResult(base)
    for alg in algorithms:
        for name, kinds, offc in CONFIGURATIONS:
            if kinds is None:
                result.configs[(alg, name)] = base[alg]
                continue
            super_of = merge_clusters(onchain.patterns.clusters, kinds)
            result.configs[(alg, name)] = combine_with_clusters(
                snapshot, alg, super_of, actor_sets if offc else (), base=base[alg], **kw
            )
    if bundle is not None:
        for alg in algorithms:
            bundle.csv(f"links_alg{alg}.csv", LINK_HEADER, link_rows(base[alg].links))
            bundle.csv(f"links_alg{alg}_combined.csv", LINK_HEADER, link_rows(result.final(alg).links))
        rows = summary_rows(snapshot, onchain.roles, result.configs)
        header = list(rows[0]) if rows else ["algorithm", "configuration"]
        bundle.csv(
            "summary.csv",
            header,
            [[_r(v) if isinstance(v, float) else v for v in r.values()] for r in rows],
        )
        bundle.json("summary.json", {"rows": [{k: (round(v, 10) if isinstance(v, float) else v) for k, v in r.items()} for r in rows]})
        diag = {f"alg{a}": base[a].diagnostics.as_dict() for a in algorithms}
        doc = {"diagnostics": diag}
        if set(algorithms) >= {1, 2}:
            doc["base"] = cross_validate(base[1].links, base[2].links).as_dict()
            actor_of = {n: f"A{k}" for k, nodes in enumerate(actor_sets) for n in nodes}
            doc["combined"] = cross_validate(result.final(1).links, result.final(2).links, actor_of).as_dict()
        bundle.json("cross_validation.json", doc)
    return result


# -- impact --------------------------------------------------------------------------------------

def run_analysis(
    snapshot: Snapshot,
    linking: LinkingResult | None,
    offchain: OffchainResult | None,
    params: PipelineParams,
    bundle: Bundle | None = None,
) -> dict:
    if params.seed is None:
        raise ParseError("analysis samples node pairs; an explicit --seed is required")
    graph = ChannelGraph.from_snapshot(snapshot)
    links = set()
    if linking is not None:
        for alg in linking.base:
            links |= linking.final(alg).pairs
    links = sorted(links)
    actor_clusters = [a.nodes for a in offchain.actors] if offchain else []
    actors = build_actors(graph.nodes, actor_clusters, links)
    openers = linked_openers(snapshot, links)
    cap_rows = capacity_distribution(graph, actors, openers)
    top = cap_rows[: params.top_actors]
    out: dict = {"capacity": cap_rows}

    pairs = sample_pairs(graph.nodes, params.samples, params.seed)
    dos_rows, grief_rows, priv_rows = [], [], []
    removed: list[str] = []
    for k, row in enumerate(top, 1):
        removed += sorted(actors[row.actor])
        rep = dos_advantage(graph, removed, params.amounts[0], params.samples, params.seed, "+".join(r.actor for r in top[:k]))
        after = graph.without(removed)
        for amount in params.amounts:
            ds = rep.delta_s if amount == params.amounts[0] else advantage(
                success_ratio(graph, pairs, amount), success_ratio(after, pairs, amount)
            )
            dos_rows.append((k, rep.removed_actor, amount, _r(rep.delta_r), _r(rep.delta_f), _r(ds), rep.sample_count))
        budget = params.griefing_budget if params.griefing_budget is not None else int(row.capacity)
        g = griefing_reach(graph, actors[row.actor], budget, params.max_hops)
        grief_rows.append((k, row.actor, budget, _r(g.blocked_channel_fraction), _r(g.blocked_capacity_fraction), g.locked))
    for amount in params.amounts:
        routes = route_table(graph, amount, pairs)
        cum: set[str] = set()
        for k, row in enumerate(top, 1):
            cum |= actors[row.actor]
            rep = path_privacy(graph, cum, amount, pairs, routes)
            single = path_privacy(graph, actors[row.actor], amount, pairs, routes)
            priv_rows.append((
                amount, k, row.actor,
                _r(rep.fraction_value_privacy_broken), _r(rep.fraction_relationship_anonymity_broken),
                _r(rep.fraction_wormhole_prone), _r(single.fraction_wormhole_prone), rep.routed_pairs,
            ))
    out.update(dos=dos_rows, griefing=grief_rows, privacy=priv_rows)
    if bundle is not None:
        total = graph.total_capacity
        bundle.csv(
            "capacity.csv",
            ["rank", "actor", "node_count", "capacity_sat", "share", "cumulative_share"],
            _capacity_rows(cap_rows, total),
        )
        bundle.csv("dos.csv", ["k", "removed_actors", "amount", "delta_r", "delta_f", "delta_s", "sample_count"], dos_rows)
        bundle.csv("griefing.csv", ["rank", "actor", "lock_budget", "blocked_channel_fraction",
                                    "blocked_capacity_fraction", "locked"], grief_rows)
        bundle.csv("path_privacy.csv", ["amount", "k", "actor", "value_privacy", "relationship_anonymity",
                                        "wormhole", "wormhole_single", "routed_pairs"], priv_rows)
        bundle.csv("actors.csv", ["actor", "nid"], [(a, n) for a, ns in sorted(actors.items()) if len(ns) > 1 for n in sorted(ns)])
        bundle.json("analysis_meta.json", {"flow_model": "undirected", "sampled_pairs": len(pairs),
                                           "amounts": list(params.amounts), "open_channels": len(graph.channels),
                                           "nodes": len(graph.nodes)})
    return out


def _capacity_rows(rows, total):
    cum = 0.0
    out = []
    for i, r in enumerate(rows, 1):
        cum += r.share
        out.append((i, r.actor, r.node_count, _r(float(r.capacity)), _r(r.share), _r(cum)))
    return out


# -- full run ------------------------------------------------------------------------------------

def run_pipeline(snapshot: Snapshot, asn_map: AsnMap, params: PipelineParams, bundle: Bundle) -> dict:
    params.validate()
    stage = "cluster-onchain"
    try:
        bundle.write_manifest()
        onchain = run_onchain(snapshot, params, bundle)
        stage = "cluster-offchain"
        offchain = run_offchain(snapshot, asn_map, params, bundle)
        stage = "link"
        linking = run_linking(snapshot, onchain, offchain, params, bundle=bundle)
        stage = "analyze"
        analysis = run_analysis(snapshot, linking, offchain, params, bundle)
        stage = "plot"
        for kind in PLOT_KINDS:
            if kind == "threshold-sweep" and not (bundle.dir / "alias_sweep.csv").exists():
                continue
            render_plot(bundle.dir, kind, bundle.dir / f"{kind}.svg")
    except XLayerError as exc:
        exc.details.setdefault("stage", stage)
        raise
    return {"onchain": onchain, "offchain": offchain, "linking": linking, "analysis": analysis}


# -- plotting ------------------------------------------------------------------------------------

def _load(bundle_dir: Path, name: str, columns: Iterable[str]) -> tuple[list[dict], str]:
    path = bundle_dir / name
    if not path.exists():
        raise MissingMetric(f"{name} not found in {bundle_dir}", file=name)
    first = path.read_text(encoding="utf-8").split("\n", 1)[0]
    digest = first.split("manifest:", 1)[1].strip() if first.startswith("#") and "manifest:" in first else ""
    rows = read_csv(path)
    missing = [c for c in columns if rows and c not in rows[0]]
    if missing:
        raise MissingMetric(f"{name} lacks columns {missing}", file=name)
    return rows, digest


def _series_by(rows, key, x, y, label) -> list[tuple[str, list[tuple[float, float]]]]:
    groups: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        groups.setdefault(r[key], []).append((float(r[x]), float(r[y])))
    return [(label(k), sorted(v)) for k, v in sorted(groups.items(), key=lambda kv: float(kv[0]))]


def plot_series(bundle_dir: str | Path, kind: str):
    d = Path(bundle_dir)
    if kind == "path-privacy":
        rows, h = _load(d, "path_privacy.csv", ["amount", "k", "value_privacy", "relationship_anonymity"])
        series = _series_by(rows, "k", "amount", "value_privacy", lambda k: f"value, top {k}")
        series += _series_by(rows, "k", "amount", "relationship_anonymity", lambda k: f"relationship, top {k}")
        return ("Cheapest paths without value privacy / relationship anonymity", "amount (sat)",
                "fraction of paths", series, h, True, (0.0, 1.0))
    if kind == "wormhole":
        rows, h = _load(d, "path_privacy.csv", ["amount", "k", "wormhole_single"])
        series = _series_by(rows, "k", "amount", "wormhole_single", lambda k: f"actor #{k}")
        return ("Cheapest paths prone to wormhole attacks", "amount (sat)", "fraction of paths", series, h, True, None)
    if kind == "dos":
        rows, h = _load(d, "dos.csv", ["k", "amount", "delta_r", "delta_f", "delta_s"])
        first = rows[0]["amount"] if rows else None
        rows = [r for r in rows if r["amount"] == first]
        series = [(m, [(float(r["k"]), float(r[f"delta_{m[-1]}"])) for r in rows]) for m in ("delta_r", "delta_f", "delta_s")]
        return ("Adversary advantage after removing top actors", "actors removed", "advantage", series, h, False, None)
    if kind == "griefing":
        rows, h = _load(d, "griefing.csv", ["rank", "blocked_channel_fraction", "blocked_capacity_fraction"])
        series = [
            ("channels", [(float(r["rank"]), float(r["blocked_channel_fraction"])) for r in rows]),
            ("capacity", [(float(r["rank"]), float(r["blocked_capacity_fraction"])) for r in rows]),
        ]
        return ("Griefing reach per actor", "actor rank", "blocked fraction", series, h, False, (0.0, 1.0))
    if kind == "capacity":
        rows, h = _load(d, "capacity.csv", ["rank", "cumulative_share"])
        series = [("cumulative share", [(float(r["rank"]), float(r["cumulative_share"])) for r in rows])]
        return ("Capacity controlled by top actors", "actor rank", "share of capacity", series, h, False, (0.0, 1.0))
    if kind == "threshold-sweep":
        rows, h = _load(d, "alias_sweep.csv", ["threshold", "clustered_nodes"])
        series = [("clustered nodes", [(float(r["threshold"]), float(r["clustered_nodes"])) for r in rows])]
        return ("ASN-pure clustered nodes per alias threshold", "threshold", "nodes", series, h, False, None)
    raise MissingMetric(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")


PLOT_KINDS = ("path-privacy", "wormhole", "dos", "griefing", "capacity", "threshold-sweep")


def render_plot(bundle_dir: str | Path, kind: str, out: str | Path) -> bool:
    """Write the chart; returns False when every series is empty (the chart is still written)."""
    title, xl, yl, series, digest, log_x, yr = plot_series(bundle_dir, kind)
    log_x = log_x and all(x > 0 for _, s in series for x, _ in s)
    text = line_chart(title, xl, yl, series, comment=f"manifest: {digest}", log_x=log_x, y_range=yr)
    Path(out).write_text(text, encoding="utf-8")
    return any(s for _, s in series)
