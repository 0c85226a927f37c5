"""Normalized string distances between node aliases.

All metrics return values in [0, 1] with d(a, a) = 0. Edit distances are
divided by the length of the longer alias. Comparison is case-sensitive.
"""

from __future__ import annotations

from enum import Enum
from typing import Sequence

import numpy as np
from numba import njit
from rapidfuzz import process
from rapidfuzz.distance import DamerauLevenshtein, Hamming, Jaro, JaroWinkler, Levenshtein

from .errors import EmptyAlias


class AliasMetric(str, Enum):
    RELATIVE_LCS = "relative-lcs"
    LEVENSHTEIN = "levenshtein"
    DAMERAU_LEVENSHTEIN = "damerau-levenshtein"
    HAMMING = "hamming"
    JARO = "jaro"
    JARO_WINKLER = "jaro-winkler"


_RAPIDFUZZ = {
    AliasMetric.LEVENSHTEIN: Levenshtein.normalized_distance,
    AliasMetric.DAMERAU_LEVENSHTEIN: DamerauLevenshtein.normalized_distance,
    AliasMetric.JARO: Jaro.normalized_distance,
    AliasMetric.JARO_WINKLER: JaroWinkler.normalized_distance,
}


@njit(cache=True)
def _lcs_len(a, b):
    # longest common substring (contiguous), rolling DP rows
    m = b.shape[0]
    prev = np.zeros(m + 1, np.int32)
    cur = np.zeros(m + 1, np.int32)
    best = 0
    for i in range(a.shape[0]):
        ai = a[i]
        for j in range(m):
            if ai == b[j]:
                v = prev[j] + 1
                cur[j + 1] = v
                if v > best:
                    best = v
            else:
                cur[j + 1] = 0
        prev, cur = cur, prev
    return best


@njit(cache=True)
def _lcs_condensed(codes, offsets):
    n = offsets.shape[0] - 1
    out = np.empty(n * (n - 1) // 2, np.float64)
    k = 0
    for i in range(n):
        a = codes[offsets[i]:offsets[i + 1]]
        for j in range(i + 1, n):
            b = codes[offsets[j]:offsets[j + 1]]
            longer = max(a.shape[0], b.shape[0])
            out[k] = 1.0 - _lcs_len(a, b) / longer
            k += 1
    return out


def _codes(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32)


def longest_common_substring(a: str, b: str) -> int:
    return int(_lcs_len(_codes(a), _codes(b)))


def alias_distance(a: str, b: str, metric: AliasMetric | str = AliasMetric.RELATIVE_LCS) -> float:
    metric = AliasMetric(metric)
    if not a or not b:
        raise EmptyAlias("aliases must be non-empty", a=a, b=b)
    if metric is AliasMetric.RELATIVE_LCS:
        return 1.0 - longest_common_substring(a, b) / max(len(a), len(b))
    if metric is AliasMetric.HAMMING:
        # undefined on unequal lengths; treated as maximally distant
        return Hamming.normalized_distance(a, b) if len(a) == len(b) else 1.0
    return float(_RAPIDFUZZ[metric](a, b))


def condensed_distances(
    aliases: Sequence[str],
    metric: AliasMetric | str = AliasMetric.RELATIVE_LCS,
    workers: int = 1,
) -> np.ndarray:
    """Pairwise distances in scipy's condensed (upper-triangle, row-major) layout."""
    metric = AliasMetric(metric)
    if any(not a for a in aliases):
        raise EmptyAlias("aliases must be non-empty")
    n = len(aliases)
    if n < 2:
        return np.zeros(0)
    if metric is AliasMetric.RELATIVE_LCS:
        chunks = [_codes(a) for a in aliases]
        offsets = np.zeros(n + 1, np.int64)
        offsets[1:] = np.cumsum([len(c) for c in chunks])
        return _lcs_condensed(np.concatenate(chunks), offsets)
    iu = np.triu_indices(n, k=1)
    if metric is AliasMetric.HAMMING:
        full = process.cdist(aliases, aliases, scorer=Hamming.normalized_distance, workers=workers,
                             scorer_kwargs={"pad": True}, dtype=np.float64)
        lengths = np.array([len(a) for a in aliases])
        full[lengths[:, None] != lengths[None, :]] = 1.0
    else:
        full = process.cdist(aliases, aliases, scorer=_RAPIDFUZZ[metric], workers=workers, dtype=np.float64)
    return np.clip(full[iu], 0.0, 1.0)
