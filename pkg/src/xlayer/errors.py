"""Exception types. Every error carries a module-qualified ``code``."""

from __future__ import annotations


class XLayerError(Exception):
    code = "xlayer/error"

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

    def __str__(self) -> str:
        return f"[{self.code}] {super().__str__()}"


class NodeUnknown(XLayerError):
    code = "core-model/node-unknown"


class NoChannels(XLayerError):
    code = "core-model/no-channels"


class IntegrityError(XLayerError):
    code = "core-model/integrity-error"


class DanglingReference(XLayerError):
    code = "entity-graph/dangling-reference"


class EmptyAlias(XLayerError):
    code = "offchain-clustering/empty-alias"


class MissingASN(XLayerError):
    code = "offchain-clustering/missing-asn"


class AnchorUnsatisfiable(XLayerError):
    code = "offchain-clustering/anchor-unsatisfiable"


class NoPath(XLayerError):
    code = "impact-analysis/no-path"


class ActorUnknown(XLayerError):
    code = "impact-analysis/actor-unknown"


class ConfigInvalid(XLayerError):
    code = "synthlab/config-invalid"


class ParseError(XLayerError):
    code = "cli/parse-error"


class MissingMetric(XLayerError):
    code = "cli/missing-metric"
