"""Rule cascade linking funder strings to reference organizations.

Rules run in a fixed order per string: exact display name, exact alternate
name, prefix/suffix containment, interior substring containment, acronym.
Containment rules only fire when the shorter string covers at least
``coverage_ratio`` of the longer one's characters.
"""

from __future__ import annotations

import bisect
import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .clustering import Cluster
from .normalization import FunderString, normalize_string
from .reference_index import OrgRecord, ReferenceIndex

logger = logging.getLogger(__name__)

DEFAULT_COVERAGE = 0.5
_BARE_ACRONYM = re.compile(r"^[a-z]{2,6}$")


class MatchType(str, Enum):
    NAME_EXACT = "name_exact"
    ALT_NAME_EXACT = "alt_name_exact"
    PREFIX_SUFFIX = "prefix_suffix"
    SUBSTRING = "substring"
    ACRONYM = "acronym"
    DOCUMENT_CLUSTERING = "document_clustering"
    MANUAL_ANNOTATION = "manual_annotation"
    JACCARD_FALLBACK = "jaccard_fallback"
    UNMATCHED = "unmatched"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, label: str | None) -> "MatchType":
        if label is None or label == "" or (isinstance(label, float) and math.isnan(label)):
            return cls.UNMATCHED
        try:
            return _BY_LABEL[label]
        except KeyError:
            raise ValueError(f"unknown match type label {label!r}") from None


_LABELS = {
    MatchType.NAME_EXACT: "Name (Exact)",
    MatchType.ALT_NAME_EXACT: "Alternative names (Exact)",
    MatchType.PREFIX_SUFFIX: "Prefix or suffix Match",
    MatchType.SUBSTRING: "Substring Match",
    MatchType.ACRONYM: "Acronym Match",
    MatchType.DOCUMENT_CLUSTERING: "Document Clustering",
    MatchType.MANUAL_ANNOTATION: "Manual Annotation",
    MatchType.JACCARD_FALLBACK: "Jaccard Fallback",
    MatchType.UNMATCHED: "",
}
_BY_LABEL = {v: k for k, v in _LABELS.items()}

CASCADE = (
    MatchType.NAME_EXACT,
    MatchType.ALT_NAME_EXACT,
    MatchType.PREFIX_SUFFIX,
    MatchType.SUBSTRING,
    MatchType.ACRONYM,
)


@dataclass(frozen=True, order=True)
class Candidate:
    canonical_id: str
    ror_id: str | None
    display_name: str
    source: str

    @classmethod
    def from_org(cls, org: OrgRecord) -> "Candidate":
        return cls(org.canonical_id, org.ror_id, org.display_name, org.source)


@dataclass(frozen=True)
class MatchResult:
    string_id: int
    candidates: tuple[Candidate, ...]
    match_type: MatchType
    # per-candidate character coverage for containment rules; audit only
    coverage: tuple[float, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if bool(self.candidates) == (self.match_type is MatchType.UNMATCHED):
            raise ValueError("candidates must be non-empty exactly when matched")

    @property
    def matched(self) -> bool:
        return self.match_type is not MatchType.UNMATCHED

    @property
    def candidate_ids(self) -> tuple[str, ...]:
        return tuple(c.canonical_id for c in self.candidates)


def unmatched(string_id: int) -> MatchResult:
    return MatchResult(string_id, (), MatchType.UNMATCHED)


@dataclass(frozen=True)
class RuleHit:
    """Candidates produced by one cascade rule for one string."""

    match_type: MatchType
    orgs: tuple[OrgRecord, ...]
    coverage: tuple[float, ...] | None = None

    @property
    def candidates(self) -> tuple[Candidate, ...]:
        return tuple(Candidate.from_org(o) for o in self.orgs)

    def ids(self) -> tuple[str, ...]:
        return tuple(o.canonical_id for o in self.orgs)


def _collect(hits: Mapping[str, tuple[OrgRecord, float]]) -> tuple[tuple[OrgRecord, ...], tuple[float, ...]]:
    ordered = sorted(hits.values(), key=lambda h: h[0].canonical_id)
    return tuple(h[0] for h in ordered), tuple(h[1] for h in ordered)


class ReferenceMatcher:
    """Cascade rules over a ReferenceIndex with containment lookup tables."""

    def __init__(
        self,
        index: ReferenceIndex,
        coverage_ratio: float = DEFAULT_COVERAGE,
        bare_acronyms: bool = True,
    ):
        if not 0.0 < coverage_ratio <= 1.0:
            raise ValueError("coverage ratio must lie in (0, 1]")
        self.index = index
        self.coverage_ratio = coverage_ratio
        self.bare_acronyms = bare_acronyms

        owners: dict[str, list[OrgRecord]] = defaultdict(list)
        for name, org in index.all_names:
            owners[name].append(org)
        self._owners = {k: tuple(v) for k, v in owners.items()}

        by_len: dict[int, list[str]] = defaultdict(list)
        by_len_rev: dict[int, list[str]] = defaultdict(list)
        grams: dict[str, list[str]] = defaultdict(list)
        for name in sorted(self._owners):
            by_len[len(name)].append(name)
            by_len_rev[len(name)].append(name[::-1])
            for g in {name[i : i + 3] for i in range(len(name) - 2)}:
                grams[g].append(name)
        self._by_len = {k: v for k, v in by_len.items()}
        self._by_len_rev = {k: sorted(v) for k, v in by_len_rev.items()}
        self._grams = dict(grams)

    # -- individual rules ---------------------------------------------------

    def exact_name(self, name: str) -> tuple[OrgRecord, ...]:
        return self.index.lookup_name(name)

    def alt_name(self, name: str) -> tuple[OrgRecord, ...]:
        return self.index.lookup_alt(name)

    def _min_len(self, n: int) -> int:
        return max(1, math.ceil(self.coverage_ratio * n - 1e-9))

    def _max_len(self, n: int) -> int:
        return math.floor(n / self.coverage_ratio + 1e-9)

    def _add(self, hits: dict, name: str, coverage: float) -> None:
        for org in self._owners.get(name, ()):
            prev = hits.get(org.canonical_id)
            if prev is None or coverage > prev[1]:
                hits[org.canonical_id] = (org, coverage)

    @staticmethod
    def _with_prefix(table: Mapping[int, list[str]], length: int, prefix: str) -> Iterable[str]:
        names = table.get(length)
        if not names:
            return ()
        i = bisect.bisect_left(names, prefix)
        out = []
        while i < len(names) and names[i].startswith(prefix):
            out.append(names[i])
            i += 1
        return out

    def prefix_suffix(self, name: str) -> RuleHit | None:
        n = len(name)
        hits: dict[str, tuple[OrgRecord, float]] = {}
        # reference name at the start or end of the funder string
        for length in range(self._min_len(n), n + 1):
            if length not in self._by_len:
                continue
            cov = length / n
            for piece in {name[:length], name[n - length :]}:
                if piece in self._owners:
                    self._add(hits, piece, cov)
        # funder string at the start or end of a reference name
        rev = name[::-1]
        for length in range(n, self._max_len(n) + 1):
            cov = n / length
            for ref in self._with_prefix(self._by_len, length, name):
                self._add(hits, ref, cov)
            for ref in self._with_prefix(self._by_len_rev, length, rev):
                self._add(hits, ref[::-1], cov)
        if not hits:
            return None
        orgs, cov = _collect(hits)
        return RuleHit(MatchType.PREFIX_SUFFIX, orgs, cov)

    def substring(self, name: str) -> RuleHit | None:
        n = len(name)
        hits: dict[str, tuple[OrgRecord, float]] = {}
        # reference name strictly inside the funder string
        for length in range(self._min_len(n), n - 1):
            if length not in self._by_len:
                continue
            cov = length / n
            for start in range(1, n - length):
                piece = name[start : start + length]
                if piece in self._owners:
                    self._add(hits, piece, cov)
        # funder string strictly inside a reference name
        lo, hi = n + 2, self._max_len(n)
        if hi >= lo:
            if n < 3:
                pool: Iterable[str] = [r for length in range(lo, hi + 1) for r in self._by_len.get(length, ())]
            else:
                grams = {name[i : i + 3] for i in range(n - 2)}
                postings = [self._grams.get(g, ()) for g in grams]
                pool = min(postings, key=len)
            for ref in pool:
                if lo <= len(ref) <= hi and ref.find(name, 1, len(ref) - 1) != -1:
                    self._add(hits, ref, n / len(ref))
        if not hits:
            return None
        orgs, cov = _collect(hits)
        return RuleHit(MatchType.SUBSTRING, orgs, cov)

    def acronym(self, name: str, extracted: str | None) -> tuple[OrgRecord, ...]:
        keys = []
        if extracted and len(extracted) >= 2:
            keys.append(extracted.lower())
        if self.bare_acronyms and _BARE_ACRONYM.match(name):
            keys.append(name)
        found: dict[str, OrgRecord] = {}
        for key in keys:
            for org in self.index.lookup_acronym(key):
                found[org.canonical_id] = org
        return tuple(found[k] for k in sorted(found))

    # -- cascade ------------------------------------------------------------

    def cascade(self, name: str, extracted_acronym: str | None = None) -> RuleHit | None:
        """First rule in the fixed order that produces candidates, or None."""
        orgs = self.exact_name(name)
        if orgs:
            return RuleHit(MatchType.NAME_EXACT, orgs)
        orgs = self.alt_name(name)
        if orgs:
            return RuleHit(MatchType.ALT_NAME_EXACT, orgs)
        hit = self.prefix_suffix(name)
        if hit:
            return hit
        hit = self.substring(name)
        if hit:
            return hit
        orgs = self.acronym(name, extracted_acronym)
        if orgs:
            return RuleHit(MatchType.ACRONYM, orgs)
        return None

    def match_string(self, fs: FunderString) -> RuleHit | None:
        return self.cascade(fs.normalized, fs.extracted_acronym)


# module-level wrappers over a one-off matcher, for direct rule use


def match_exact_name(name: str, index: ReferenceIndex) -> list[Candidate]:
    return [Candidate.from_org(o) for o in index.lookup_name(name)]


def match_alt_name(name: str, index: ReferenceIndex) -> list[Candidate]:
    return [Candidate.from_org(o) for o in index.lookup_alt(name)]


def match_prefix_suffix(name: str, index: ReferenceIndex, coverage_ratio: float = DEFAULT_COVERAGE) -> list[Candidate]:
    hit = ReferenceMatcher(index, coverage_ratio).prefix_suffix(name)
    return list(hit.candidates) if hit else []


def match_substring(name: str, index: ReferenceIndex, coverage_ratio: float = DEFAULT_COVERAGE) -> list[Candidate]:
    hit = ReferenceMatcher(index, coverage_ratio).substring(name)
    return list(hit.candidates) if hit else []


def match_acronym(funder: FunderString, index: ReferenceIndex, bare_acronyms: bool = True) -> list[Candidate]:
    orgs = ReferenceMatcher(index, bare_acronyms=bare_acronyms).acronym(funder.normalized, funder.extracted_acronym)
    return [Candidate.from_org(o) for o in orgs]


# ---------------------------------------------------------------- clusters


@dataclass(frozen=True)
class ClusterMatch:
    cluster_id: int
    hit: RuleHit | None
    matched_member: int | None
    conflicts: tuple[int, ...] = ()


def trial_order(cluster: Cluster, strings: Sequence[FunderString]) -> list[int]:
    return sorted(cluster.member_ids, key=lambda sid: (-strings[sid].count, sid))


def match_cluster(
    cluster: Cluster,
    strings: Sequence[FunderString],
    matcher: ReferenceMatcher,
    check_conflicts: bool = True,
) -> ClusterMatch:
    """Run the cascade over members by descending count; the first hit wins.

    With ``check_conflicts`` the remaining members are matched too and any that
    resolve to a different organization set are reported.
    """
    winner: RuleHit | None = None
    member: int | None = None
    conflicts = []
    for sid in trial_order(cluster, strings):
        if winner is not None and not (check_conflicts and len(cluster.member_ids) > 1):
            break
        hit = matcher.match_string(strings[sid])
        if hit is None:
            continue
        if winner is None:
            winner, member = hit, sid
        elif set(hit.ids()) != set(winner.ids()):
            conflicts.append(sid)
    if conflicts:
        logger.warning(
            "cluster %d: members %s match other organizations than member %s; keeping the latter",
            cluster.cluster_id, conflicts, member,
        )
    return ClusterMatch(cluster.cluster_id, winner, member, tuple(conflicts))


def propagate(cluster: Cluster, match: ClusterMatch) -> list[MatchResult]:
    """Assign the winning member's candidates to every member of the cluster."""
    if match.hit is None:
        return [unmatched(sid) for sid in cluster.member_ids]
    cands = match.hit.candidates
    out = []
    for sid in cluster.member_ids:
        if sid == match.matched_member:
            out.append(MatchResult(sid, cands, match.hit.match_type, match.hit.coverage))
        else:
            out.append(MatchResult(sid, cands, MatchType.DOCUMENT_CLUSTERING))
    return out


def propagate_bindings(cluster: Cluster, bound: Mapping[int, MatchResult], strings: Sequence[FunderString]) -> list[MatchResult]:
    """Propagate string-level bindings inside a cluster.

    Bound members keep their own result; the others inherit the candidates of
    the bound member that comes first in trial order, as document clustering.
    """
    if not bound:
        return [unmatched(sid) for sid in cluster.member_ids]
    lead = next(sid for sid in trial_order(cluster, strings) if sid in bound)
    cands = bound[lead].candidates
    return [
        bound[sid] if sid in bound else MatchResult(sid, cands, MatchType.DOCUMENT_CLUSTERING)
        for sid in cluster.member_ids
    ]


# ---------------------------------------------------------------- manual annotations


@dataclass(frozen=True)
class ManualAnnotation:
    raw_string: str
    canonical_id: str


def annotation_bindings(
    annotations: Iterable[ManualAnnotation],
    strings: Sequence[FunderString],
    index: ReferenceIndex,
) -> dict[int, MatchResult]:
    """Map annotated corpus strings to manual-annotation results.

    A row binds the corpus string with the identical raw text. Failing that it
    binds the most frequent string sharing its normalized form, so one row
    never fans out over a whole cluster of spelling variants. Rows naming an
    unknown organization are rejected; rows whose string is not in the corpus
    are no-ops. Both are logged.
    """
    by_raw = {fs.raw: fs.string_id for fs in strings}
    by_norm: dict[str, int] = {}
    for fs in sorted(strings, key=lambda s: (-s.count, s.string_id)):
        by_norm.setdefault(fs.normalized, fs.string_id)

    targets: dict[int, set[str]] = defaultdict(set)
    for ann in annotations:
        org = index.get(ann.canonical_id)
        if org is None:
            logger.warning("annotation %r -> %s rejected: unknown organization", ann.raw_string, ann.canonical_id)
            continue
        sid = by_raw.get(ann.raw_string)
        if sid is None:
            try:
                sid = by_norm.get(normalize_string(ann.raw_string))
            except ValueError:
                logger.warning("annotation with empty string ignored")
                continue
        if sid is None:
            logger.info("annotation %r matches no corpus string", ann.raw_string)
            continue
        targets[sid].add(org.canonical_id)

    out = {}
    for sid, ids in targets.items():
        cands = tuple(sorted(Candidate.from_org(index.by_canonical_id[i]) for i in ids))
        out[sid] = MatchResult(sid, cands, MatchType.MANUAL_ANNOTATION)
    return out


def apply_manual_annotations(
    annotations: Iterable[ManualAnnotation],
    state: "MatchState",
) -> "MatchState":
    """Bind annotated strings and re-propagate within their clusters.

    Clusters without an annotated member are left untouched.
    """
    bindings = annotation_bindings(annotations, state.strings, state.matcher.index)
    if not bindings:
        return state
    results = list(state.results)
    for cluster in state.clusters:
        bound = {sid: bindings[sid] for sid in cluster.member_ids if sid in bindings}
        if not bound:
            continue
        for res in propagate_bindings(cluster, bound, state.strings):
            results[res.string_id] = res
    return state.replace(results)


# ---------------------------------------------------------------- state


@dataclass(frozen=True)
class MatchState:
    strings: tuple[FunderString, ...]
    clusters: tuple[Cluster, ...]
    results: tuple[MatchResult, ...]
    matcher: ReferenceMatcher = field(compare=False, repr=False)

    def replace(self, results: Sequence[MatchResult]) -> "MatchState":
        return MatchState(self.strings, self.clusters, tuple(results), self.matcher)

    def cluster_of(self) -> dict[int, Cluster]:
        return {sid: c for c in self.clusters for sid in c.member_ids}

    def unmatched_ids(self) -> list[int]:
        return [r.string_id for r in self.results if not r.matched]


def match_clusters(
    clusters: Sequence[Cluster],
    strings: Sequence[FunderString],
    matcher: ReferenceMatcher,
) -> list[ClusterMatch]:
    return [match_cluster(c, strings, matcher) for c in clusters]


def assemble(
    strings: Sequence[FunderString],
    clusters: Sequence[Cluster],
    matches: Sequence[ClusterMatch],
    matcher: ReferenceMatcher,
) -> MatchState:
    results: list[MatchResult | None] = [None] * len(strings)
    for cluster, m in zip(clusters, matches):
        for res in propagate(cluster, m):
            results[res.string_id] = res
    if any(r is None for r in results):
        raise ValueError("clusters do not cover every string")
    return MatchState(tuple(strings), tuple(clusters), tuple(results), matcher)
