"""Scoring link sets against labelled entity/node ownership."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from .linking import Heuristic, LinkRecord


@dataclass(frozen=True)
class HeuristicScore:
    links: int
    correct: int
    precision: float | None  # None when there are no links ("n/a")
    recall: float | None  # None when nothing of this kind was injected
    validated_nodes: int

    def as_dict(self) -> dict:
        fmt = lambda x: "n/a" if x is None else x  # noqa: E731
        return {
            "links": self.links,
            "correct": self.correct,
            "precision": fmt(self.precision),
            "recall": fmt(self.recall),
            "validated_nodes": self.validated_nodes,
        }


def validate_against_ground_truth(
    links: Iterable[LinkRecord],
    entity_user: Mapping[int, str],
    node_user: Mapping[str, str],
    injected: Mapping[str, Iterable[tuple[int, str]]] | None = None,
) -> dict[str, HeuristicScore]:
    """Per-heuristic precision/recall, plus an "all" row.

    A link is correct when entity and node belong to the same user. Recall
    for a heuristic is the share of its injected pairs that appear among that
    heuristic's links ("all": among any links).
    """
    injected = {Heuristic(k).value if k != "all" else k: set(v) for k, v in (injected or {}).items()}
    links = list(links)
    groups: dict[str, list[LinkRecord]] = defaultdict(list)
    for r in links:
        groups[r.heuristic.value].append(r)
    groups["all"] = links
    if "all" not in injected and injected:
        injected["all"] = set().union(*injected.values())
    out = {}
    for name in [h.value for h in Heuristic] + ["all"]:
        recs = groups.get(name, [])
        good = [r for r in recs if entity_user.get(r.entity_id) is not None
                and entity_user.get(r.entity_id) == node_user.get(r.nid)]
        truth = injected.get(name)
        recall = len(truth & {r.pair for r in recs}) / len(truth) if truth else None
        out[name] = HeuristicScore(
            links=len(recs),
            correct=len(good),
            precision=len(good) / len(recs) if recs else None,
            recall=recall,
            validated_nodes=len({r.nid for r in good}),
        )
    return out
