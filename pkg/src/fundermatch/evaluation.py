"""Validation statistics: frequency buckets, match-type counts, cross-database
hit rates, manual-annotation metrics and rank-frequency concentration."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .matcher import MatchResult, MatchType
from .normalization import FunderString

# half-open [lo, hi) count ranges, most frequent first
DEFAULT_BUCKETS: tuple[tuple[int, float], ...] = ((1000, math.inf), (100, 1000), (10, 100), (1, 10))


@dataclass(frozen=True)
class BucketStat:
    lower: int
    upper: float
    total: int
    matched: int

    @property
    def label(self) -> str:
        if math.isinf(self.upper):
            return f">={self.lower}"
        return f"{self.lower}-{int(self.upper)}"

    @property
    def unmatched_rate(self) -> float | None:
        if self.total == 0:
            return None
        return 1 - self.matched / self.total

    @property
    def display_rate(self) -> str:
        rate = self.unmatched_rate
        return "" if rate is None else f"{rate:.3f}"


def frequency_bucket_stats(
    items: Iterable[tuple[int, bool]],
    buckets: Sequence[tuple[int, float]] = DEFAULT_BUCKETS,
) -> list[BucketStat]:
    """Totals and matches per occurrence-count range.

    ``items`` yields one (count, matched) pair per distinct funder string.
    Counts outside every bucket are ignored.
    """
    totals = [0] * len(buckets)
    matched = [0] * len(buckets)
    for count, ok in items:
        for i, (lo, hi) in enumerate(buckets):
            if lo <= count < hi:
                totals[i] += 1
                matched[i] += bool(ok)
                break
    return [BucketStat(lo, hi, t, m) for (lo, hi), t, m in zip(buckets, totals, matched)]


def string_match_status(strings: Sequence[FunderString], results: Sequence[MatchResult]) -> list[tuple[int, bool]]:
    return [(strings[r.string_id].count, r.matched) for r in results]


NOT_MATCHED_LABEL = "Not Matched"


def match_type_counts(results: Iterable[MatchResult]) -> dict[str, int]:
    """Distinct strings per match type, keyed by display label, largest first."""
    tally = Counter(r.match_type for r in results)
    rows = {
        (NOT_MATCHED_LABEL if mt is MatchType.UNMATCHED else mt.label): n
        for mt, n in tally.items()
        if n
    }
    return dict(sorted(rows.items(), key=lambda kv: (-kv[1], kv[0])))


# ---------------------------------------------------------------- cross-database hits


@dataclass(frozen=True)
class PairedPaper:
    doi: str
    funders_a: frozenset[str]
    funders_b: frozenset[str]


@dataclass(frozen=True)
class DirectionalRates:
    papers: int
    hit_rate: float
    complete_a_in_b: float
    complete_b_in_a: float

    def table(self, name_a: str, name_b: str) -> list[dict]:
        return [
            {"direction": f"{name_a} in {name_b}", "complete_hit_rate": self.complete_a_in_b, "hit_rate": self.hit_rate},
            {"direction": f"{name_b} in {name_a}", "complete_hit_rate": self.complete_b_in_a, "hit_rate": self.hit_rate},
        ]


def apply_crosswalk(ids: Iterable[str], mapping: Mapping[str, str]) -> frozenset[str]:
    """Translate ids through ``mapping`` (e.g. GRID -> ROR); unknown ids pass through."""
    return frozenset(mapping.get(i, i) for i in ids)


def directional_hit_rates(pairs: Sequence[PairedPaper]) -> DirectionalRates:
    """Hit = the two funder sets intersect; complete hit for A in B = A is contained in B.

    Papers with an empty side are skipped.
    """
    usable = [p for p in pairs if p.funders_a and p.funders_b]
    if not usable:
        return DirectionalRates(0, math.nan, math.nan, math.nan)
    hits = sum(1 for p in usable if p.funders_a & p.funders_b)
    a_in_b = sum(1 for p in usable if p.funders_a <= p.funders_b)
    b_in_a = sum(1 for p in usable if p.funders_b <= p.funders_a)
    n = len(usable)
    return DirectionalRates(n, hits / n, a_in_b / n, b_in_a / n)


# ---------------------------------------------------------------- manual annotation metrics


@dataclass(frozen=True)
class AnnotationRow:
    paper_id: str
    total_funders: int
    correct: int
    incorrect: int

    def __post_init__(self) -> None:
        if min(self.total_funders, self.correct, self.incorrect) < 0:
            raise ValueError(f"{self.paper_id}: negative count")
        if self.correct > self.total_funders:
            raise ValueError(f"{self.paper_id}: correct exceeds total funders")


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else math.nan


def _ratio(num: int, den: int) -> float:
    return num / den if den else math.nan


def annotation_metrics(rows: Sequence[AnnotationRow]) -> dict[str, float]:
    """Averaged (per-paper mean) and overall (pooled) recall, precision and error rate,
    plus hit rate and all-hits rate. Papers without funders are left out."""
    rows = [r for r in rows if r.total_funders > 0]
    recalls = [r.correct / r.total_funders for r in rows]
    precisions = [r.correct / (r.correct + r.incorrect) for r in rows if r.correct + r.incorrect]
    errors = [r.incorrect / r.total_funders for r in rows]
    total = sum(r.total_funders for r in rows)
    correct = sum(r.correct for r in rows)
    incorrect = sum(r.incorrect for r in rows)
    return {
        "papers": len(rows),
        "avg_recall": _mean(recalls),
        "avg_precision": _mean(precisions),
        "avg_error_rate": _mean(errors),
        "recall": _ratio(correct, total),
        "precision": _ratio(correct, correct + incorrect),
        "error_rate": _ratio(incorrect, total),
        "hit_rate": _ratio(sum(1 for r in rows if r.correct >= 1), len(rows)),
        "all_hits": _ratio(sum(1 for r in rows if r.correct == r.total_funders), len(rows)),
    }


def read_annotation_rows(path: str | Path) -> list[AnnotationRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = []
        for r in csv.DictReader(fh):
            pid = r.get("doi") or r.get("paper_id") or ""
            rows.append(AnnotationRow(pid, int(r["total_funders"]), int(r["correct"]), int(r["incorrect"])))
        return rows


def read_paired_papers(path: str | Path, crosswalk: Mapping[str, str] | None = None) -> list[PairedPaper]:
    """JSON lines with ``doi``, ``funders_a`` and ``funders_b``.

    ``crosswalk`` is applied to the B side (e.g. GRID ids to ROR).
    """
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            b = d.get("funders_b") or []
            out.append(
                PairedPaper(
                    str(d["doi"]),
                    frozenset(d.get("funders_a") or []),
                    apply_crosswalk(b, crosswalk) if crosswalk else frozenset(b),
                )
            )
    return out


# ---------------------------------------------------------------- concentration


@dataclass(frozen=True)
class RankFrequency:
    funders: tuple[str, ...]
    counts: tuple[int, ...]
    cumulative_share: tuple[float, ...]
    k80: int

    def share_of_top(self, fraction: float) -> float:
        """Publication share held by the top ``fraction`` of funders."""
        k = max(1, math.ceil(fraction * len(self.counts)))
        return self.cumulative_share[k - 1]


def rank_frequency(publications: Mapping[str, int], target: float = 0.8) -> RankFrequency:
    """Rank funders by publication count and find how many cover ``target`` of all publications."""
    if not publications:
        raise ValueError("rank-frequency needs at least one funder")
    ranked = sorted(publications.items(), key=lambda kv: (-kv[1], kv[0]))
    counts = [c for _, c in ranked]
    total = sum(counts)
    if total <= 0:
        raise ValueError("publication counts sum to zero")
    goal = Fraction(str(target)) * total
    running, cumulative, k = 0, [], None
    for i, c in enumerate(counts, 1):
        running += c
        cumulative.append(running / total)
        if k is None and running >= goal:
            k = i
    cumulative[-1] = 1.0
    return RankFrequency(tuple(f for f, _ in ranked), tuple(counts), tuple(cumulative), k or len(counts))


def publications_per_funder(
    strings: Sequence[FunderString],
    results: Sequence[MatchResult],
) -> tuple[dict[str, int], int]:
    """Sum string counts per organization over unambiguous matches.

    Returns the totals and the number of ambiguous strings left out.
    """
    totals: dict[str, int] = defaultdict(int)
    skipped = 0
    for r in results:
        if not r.matched:
            continue
        if len(r.candidates) != 1:
            skipped += 1
            continue
        totals[r.candidates[0].canonical_id] += strings[r.string_id].count
    return dict(totals), skipped


def publications_from_assignments(assignments: Iterable) -> dict[str, int]:
    totals: dict[str, int] = defaultdict(int)
    for a in assignments:
        if a.canonical_id:
            totals[a.canonical_id] += 1
    return dict(totals)


def per_group_curves(publications: Mapping[str, int], groups: Mapping[str, str]) -> dict[str, RankFrequency]:
    """Rank-frequency curves per group label (e.g. sector); unlabeled funders are skipped."""
    split: dict[str, dict[str, int]] = defaultdict(dict)
    for fid, n in publications.items():
        label = groups.get(fid)
        if label:
            split[label][fid] = n
    return {label: rank_frequency(p) for label, p in sorted(split.items()) if sum(p.values()) > 0}


def per_country(publications: Mapping[str, int], country_of: Mapping[str, str | None]) -> dict[str, int]:
    out: dict[str, int] = defaultdict(int)
    for fid, n in publications.items():
        out[country_of.get(fid) or "unknown"] += n
    return dict(sorted(out.items(), key=lambda kv: (-kv[1], kv[0])))
