"""Command-line front end.

Every subcommand reads the input files (``--input DIR`` holding graph.json,
transactions.jsonl, asn.csv and optionally services.csv, or the files given
one by one), recomputes the stages it depends on and writes its artifacts to
``--out``. A TOML file passed with ``--config`` supplies defaults for any
flag (top-level keys, optionally overridden by a table named after the
subcommand); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import ParseError, XLayerError
from .formats import Inputs, ingest
from .pipeline import (
    PLOT_KINDS,
    Bundle,
    PipelineParams,
    RunManifest,
    render_plot,
    run_analysis,
    run_linking,
    run_offchain,
    run_onchain,
    run_pipeline,
)
from .synth import ScenarioConfig, generate, write_scenario

log = logging.getLogger("xlayer")

DEFAULTS = PipelineParams()


def _input_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("inputs")
    g.add_argument("--input", type=Path, help="directory with graph.json, transactions.jsonl, asn.csv[, services.csv]")
    g.add_argument("--graph", type=Path)
    g.add_argument("--transactions", type=Path)
    g.add_argument("--asn", type=Path)
    g.add_argument("--services", type=Path)


def _param_args(p: argparse.ArgumentParser, *groups: str) -> None:
    if "offchain" in groups:
        p.add_argument("--threshold", type=float, help=f"alias distance cut (default {DEFAULTS.threshold})")
        p.add_argument("--metric", help=f"alias distance (default {DEFAULTS.metric})")
        p.add_argument("--anchor", help="PREFIX:MIN_SIZE; pick the threshold by sweep so this alias family stays whole")
    if "link" in groups:
        p.add_argument("--iteration-cap", type=int)
        p.add_argument("--no-guard", action="store_true", default=None, help="disable the activity-period overlap guard")
        p.add_argument("--lenient-patterns", action="store_true", default=None, help="accept stars/collectors of fan 1")
    if "analyze" in groups:
        p.add_argument("--amount", type=int, action="append", help="payment amount in sat (repeatable)")
        p.add_argument("--samples", type=int)
        p.add_argument("--top-actors", type=int)
        p.add_argument("--max-hops", type=int)
        p.add_argument("--budget", type=int, help="griefing lock budget in sat (default: actor's own capacity)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xlayer", description="Cross-layer linking of ledger entities and channel-graph nodes.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate inputs and write a snapshot summary")
    _input_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    _param_args(p)

    p = sub.add_parser("cluster-onchain", help="star/snake/collector/proxy clusters")
    _input_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    _param_args(p, "link")

    p = sub.add_parser("cluster-offchain", help="alias/ASN/IP actor clusters")
    _input_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    _param_args(p, "offchain")

    p = sub.add_parser("link", help="both linking algorithms and their combinations")
    _input_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    p.add_argument("--algorithm", choices=["1", "2", "both"], default=None)
    _param_args(p, "offchain", "link")

    p = sub.add_parser("analyze", help="capacity, DoS, griefing and path-privacy metrics")
    _input_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    _param_args(p, "offchain", "link", "analyze")

    p = sub.add_parser("pipeline", help="all stages plus charts")
    _input_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    _param_args(p, "offchain", "link", "analyze")

    p = sub.add_parser("synth", help="generate a labelled synthetic scenario")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path, help="TOML with ScenarioConfig fields (top level or [synth])")
    p.add_argument("--seed", type=int)
    for name in ("hubs", "plain", "coin-reuse", "entity-reuse", "star", "snake", "collector", "proxy",
                 "service-star", "adversarial", "decoy-aliases", "shared-ip-groups"):
        p.add_argument(f"--{name}", type=int, dest=f"n_{name.replace('-', '_')}")
    p.add_argument("--target-transactions", type=int)
    p.add_argument("--family", action="append", metavar="THEME:SIZE", help="themed alias family, e.g. 'LNBIG.com:26'")

    p = sub.add_parser("plot", help="render a chart from a report bundle")
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--kind", required=True, help=", ".join(PLOT_KINDS))
    p.add_argument("--out", type=Path, required=True)
    return ap


def load_config(path: Path | None, command: str) -> dict:
    if path is None:
        return {}
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    section = raw.get(command, {})
    merged = {k.replace("-", "_"): v for k, v in raw.items() if not isinstance(v, dict)}
    merged.update({k.replace("-", "_"): v for k, v in section.items()})
    return merged


def _pick(args, cfg: dict, name: str, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.get(name, default)


def params_from(args, cfg: dict) -> PipelineParams:
    amounts = _pick(args, cfg, "amount") or cfg.get("amounts") or list(DEFAULTS.amounts)
    if isinstance(amounts, int):
        amounts = [amounts]
    guard_off = _pick(args, cfg, "no_guard", False)
    params = PipelineParams(
        seed=_pick(args, cfg, "seed"),
        threshold=float(_pick(args, cfg, "threshold", DEFAULTS.threshold)),
        metric=str(_pick(args, cfg, "metric", DEFAULTS.metric)),
        amounts=tuple(int(a) for a in amounts),
        samples=int(_pick(args, cfg, "samples", DEFAULTS.samples)),
        iteration_cap=int(_pick(args, cfg, "iteration_cap", DEFAULTS.iteration_cap)),
        overlap_guard=not guard_off,
        strict_patterns=not _pick(args, cfg, "lenient_patterns", False),
        top_actors=int(_pick(args, cfg, "top_actors", DEFAULTS.top_actors)),
        max_hops=int(_pick(args, cfg, "max_hops", DEFAULTS.max_hops)),
        griefing_budget=_pick(args, cfg, "budget"),
        anchor=_pick(args, cfg, "anchor"),
        threads=int(_pick(args, cfg, "threads", DEFAULTS.threads)),
    )
    try:
        params.validate()
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    return params


def resolve_inputs(args, cfg: dict) -> Inputs:
    base = _pick(args, cfg, "input")
    if base is not None:
        inputs = Inputs.in_dir(base)
    else:
        inputs = Inputs(Path(_pick(args, cfg, "graph") or ""), Path(_pick(args, cfg, "transactions") or ""))
    overrides = {k: Path(v) for k in ("graph", "transactions", "asn", "services") if (v := _pick(args, cfg, k))}
    if overrides:
        inputs = Inputs(**{**inputs.__dict__, **overrides})
    for p in inputs.paths():
        if not p.is_file():
            raise ParseError(f"input file not found: {p}")
    return inputs


def cmd_synth(args, cfg: dict) -> int:
    raw = dict(cfg)
    for k, v in vars(args).items():
        if k.startswith("n_") and v is not None:
            raw[k] = v
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.target_transactions is not None:
        raw["target_transactions"] = args.target_transactions
    if args.family:
        fams = []
        for f in args.family:
            theme, _, size = f.rpartition(":")
            if not theme or not size.isdigit():
                raise ParseError(f"--family expects THEME:SIZE, got {f!r}")
            fams.append((theme, int(size)))
        raw["themed_families"] = fams
    raw.pop("out", None)
    raw.pop("config", None)
    scenario = generate(ScenarioConfig.from_mapping(raw))
    write_scenario(scenario, args.out)
    s = scenario.snapshot
    print(f"wrote {len(s.transactions)} transactions, {len(s.channels)} channels, {len(s.nodes)} nodes to {args.out}")
    return 0


def cmd_plot(args) -> int:
    ok = render_plot(args.bundle, args.kind, args.out)
    if not ok:
        print(f"warning: {args.kind}: every series is empty; wrote empty axes to {args.out}", file=sys.stderr)
        return 2
    return 0


def run_command(args, cfg: dict) -> int:
    params = params_from(args, cfg)
    inputs = resolve_inputs(args, cfg)
    needs_seed = args.command in ("analyze", "pipeline")
    if needs_seed and params.seed is None:
        raise ParseError(f"{args.command} samples node pairs; pass --seed")
    bundle = Bundle(args.out, RunManifest.for_inputs(inputs.paths(), params))
    stage = "ingest"
    try:
        snapshot, asn_map = ingest(inputs)
        if args.command == "pipeline":
            run_pipeline(snapshot, asn_map, params, bundle)
            print(f"bundle written to {args.out} (manifest {bundle.hash[:12]})")
            return 0
        bundle.write_manifest()
        if args.command == "ingest":
            bundle.json("snapshot.json", {
                "transactions": len(snapshot.transactions),
                "addresses": len(snapshot.entity_of),
                "entities": len(snapshot.entities),
                "nodes": len(snapshot.nodes),
                "channels": len(snapshot.channels),
                "open_channels": sum(1 for c in snapshot.channels if c.is_open),
                "snapshot_end_time": snapshot.snapshot_end_time,
            })
            return 0
        stage = "cluster-onchain"
        onchain = run_onchain(snapshot, params, bundle if args.command == "cluster-onchain" else None)
        if args.command == "cluster-onchain":
            return 0
        stage = "cluster-offchain"
        offchain = run_offchain(snapshot, asn_map, params, bundle if args.command == "cluster-offchain" else None)
        if args.command == "cluster-offchain":
            return 0
        stage = "link"
        algs = (1, 2)
        if getattr(args, "algorithm", None) in ("1", "2"):
            algs = (int(args.algorithm),)
        linking = run_linking(snapshot, onchain, offchain, params, algs, bundle if args.command == "link" else None)
        if args.command == "link":
            return 0
        stage = "analyze"
        run_analysis(snapshot, linking, offchain, params, bundle)
        return 0
    except XLayerError as exc:
        exc.details.setdefault("stage", stage)
        raise


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(getattr(args, "config", None), args.command)
        if args.command == "synth":
            return cmd_synth(args, cfg)
        if args.command == "plot":
            return cmd_plot(args)
        return run_command(args, cfg)
    except XLayerError as exc:
        stage = exc.details.get("stage", args.command)
        print(f"error in stage {stage}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
