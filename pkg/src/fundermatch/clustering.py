"""Similarity graph over funder strings and its connected components."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .minhash import LshIndex
from .normalization import FunderString

logger = logging.getLogger(__name__)

DIAMETER_WARNING = 0.8
_DIAMETER_CHECK_LIMIT = 200


class UnionFind:
    """Disjoint sets over 0..n-1 with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


@dataclass(frozen=True)
class Cluster:
    cluster_id: int
    member_ids: tuple[int, ...]
    representative_id: int


def build_similarity_graph(
    strings: Sequence[FunderString],
    lsh: LshIndex,
    threshold: float,
) -> list[tuple[int, int]]:
    """Verified LSH candidate pairs as sorted (i, j) string_id edges, i < j.

    ``lsh`` must index the signatures of ``strings``; candidates from shared
    buckets are kept only when their estimated similarity reaches ``threshold``.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    if len(strings) < 2:
        return []
    pairs = lsh.candidate_pairs()
    if len(pairs) == 0:
        return []
    sigs = lsh.signatures
    agree = np.empty(len(pairs), dtype=np.float64)
    step = max(1, (1 << 22) // lsh.num_perms)
    for s in range(0, len(pairs), step):
        chunk = pairs[s : s + step]
        agree[s : s + step] = np.count_nonzero(sigs[chunk[:, 0]] == sigs[chunk[:, 1]], axis=1)
    keep = pairs[agree / lsh.num_perms >= threshold]
    ids = np.asarray(lsh.ids, dtype=np.int64)
    edges = {(min(a, b), max(a, b)) for a, b in zip(ids[keep[:, 0]].tolist(), ids[keep[:, 1]].tolist())}
    return sorted(e for e in edges if e[0] != e[1])


def connected_components(
    edges: Iterable[tuple[int, int]],
    n: int,
    counts: Sequence[int] | None = None,
) -> list[Cluster]:
    """Union-find components of the graph on nodes 0..n-1.

    Clusters are ordered by their smallest member. The representative is the
    member with the highest count (ties: smallest id); without counts it is the
    smallest member.
    """
    uf = UnionFind(n)
    for a, b in edges:
        if not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"edge ({a}, {b}) references a node outside [0, {n})")
        uf.union(a, b)

    groups: dict[int, list[int]] = {}
    for node in range(n):
        groups.setdefault(uf.find(node), []).append(node)

    clusters = []
    for cid, members in enumerate(sorted(groups.values(), key=lambda m: m[0])):
        if counts is None:
            rep = members[0]
        else:
            rep = min(members, key=lambda m: (-counts[m], m))
        clusters.append(Cluster(cid, tuple(members), rep))
    return clusters


def diameter_warnings(clusters: Sequence[Cluster], signatures: np.ndarray, floor: float = DIAMETER_WARNING) -> list[int]:
    """Ids of clusters holding a member pair whose estimated similarity is below ``floor``.

    ``signatures`` rows are indexed by string_id. Oversized clusters are
    checked on their first members only.
    """
    flagged = []
    num_perms = signatures.shape[1]
    for c in clusters:
        if len(c.member_ids) < 3:
            continue
        rows = signatures[list(c.member_ids[:_DIAMETER_CHECK_LIMIT])]
        sims = (rows[:, None, :] == rows[None, :, :]).sum(axis=2) / num_perms
        if sims.min() < floor:
            flagged.append(c.cluster_id)
            logger.warning(
                "cluster %d (%d members) chains strings with estimated similarity %.2f",
                c.cluster_id, len(c.member_ids), sims.min(),
            )
    return flagged
