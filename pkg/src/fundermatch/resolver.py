"""Pick one organization per (paper, funder string) pair when a string has several candidates.

Authors are consulted in the order first, last, second, third. At each
position the candidates registered in that author's country are examined
(EU-level funders count as registered in every EU-eligible country). A single
hit wins; several hits, or no hit anywhere, fall back to prevalence.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .normalization import normalize_string
from .reference_index import ReferenceIndex

POSITION_NAMES = ("first", "last", "second", "third")


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    author_countries: tuple[str | None, ...] = ()
    funder_strings: tuple[str, ...] = ()

    @classmethod
    def from_json(cls, d: Mapping) -> "PaperRecord":
        return cls(
            str(d["paper_id"]),
            tuple((c or None) for c in d.get("author_countries") or ()),
            tuple(d.get("funder_strings") or ()),
        )


@dataclass(frozen=True)
class EuFunderList:
    canonical_ids: frozenset[str] = frozenset()
    eligible_countries: frozenset[str] = frozenset()

    def covers(self, canonical_id: str, country: str) -> bool:
        return canonical_id in self.canonical_ids and country in self.eligible_countries


@dataclass(frozen=True)
class ResolvedCandidate:
    canonical_id: str
    country_code: str | None
    prevalence: int


@dataclass(frozen=True)
class Resolution:
    canonical_id: str
    rule: str


@dataclass(frozen=True)
class Assignment:
    paper_id: str
    grant_agency: str
    canonical_id: str | None
    resolution_rule: str


def default_eligible_countries() -> frozenset[str]:
    text = resources.files("fundermatch").joinpath("data/eu_eligible_countries.csv").read_text("utf-8")
    return frozenset(row["country_code"] for row in csv.DictReader(io.StringIO(text)))


def load_eu_list(path: str | Path | None) -> EuFunderList:
    """Read an EU list: rows of ``kind,value`` with kind ``funder`` or ``country``.

    Without any ``country`` rows the bundled eligible-country set is used.
    """
    ids: set[str] = set()
    countries: set[str] = set()
    if path is not None:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if len(row) < 2 or row[0].strip().lower() in ("kind", ""):
                    continue
                kind, value = row[0].strip().lower(), row[1].strip()
                if kind == "funder":
                    ids.add(value)
                elif kind == "country":
                    countries.add(value.upper())
                else:
                    raise ValueError(f"{path}: unknown EU list row kind {kind!r}")
    return EuFunderList(frozenset(ids), frozenset(countries) or default_eligible_countries())


def author_positions(countries: Sequence[str | None]) -> list[tuple[str, str]]:
    """(position name, country) for first, last, second, third author.

    Absent countries and positions beyond the byline are skipped; a country
    already seen earlier in the sequence is not repeated.
    """
    n = len(countries)
    out: list[tuple[str, str]] = []
    seen: set[str] = set()
    seen_pos: set[int] = set()
    for name, pos in zip(POSITION_NAMES, (0, n - 1, 1, 2)):
        if pos < 0 or pos >= n or pos in seen_pos:
            continue
        seen_pos.add(pos)
        country = countries[pos]
        if country and country not in seen:
            seen.add(country)
            out.append((name, country))
    return out


def author_country_sequence(countries: Sequence[str | None]) -> list[str]:
    return [c for _, c in author_positions(countries)]


def _by_prevalence(cands: Iterable[ResolvedCandidate]) -> ResolvedCandidate:
    return min(cands, key=lambda c: (-c.prevalence, c.canonical_id))


def resolve_pair(
    author_countries: Sequence[str | None],
    candidates: Sequence[ResolvedCandidate],
    eu: EuFunderList,
) -> Resolution:
    if not candidates:
        raise ValueError("cannot resolve a pair without candidates")
    if len(candidates) == 1:
        return Resolution(candidates[0].canonical_id, "single_candidate")

    for position, country in author_positions(author_countries):
        local = [c for c in candidates if c.country_code == country]
        eu_hits = [c for c in candidates if c not in local and eu.covers(c.canonical_id, country)]
        hits = local + eu_hits
        if len(hits) == 1:
            kind = "eu" if eu_hits else "country"
            return Resolution(hits[0].canonical_id, f"{kind}:{position}")
        if len(hits) > 1:
            return Resolution(_by_prevalence(hits).canonical_id, f"prevalence:{position}")
    return Resolution(_by_prevalence(candidates).canonical_id, "prevalence")


def candidates_from_index(ids: Iterable[str], index: ReferenceIndex) -> list[ResolvedCandidate]:
    out = []
    for cid in dict.fromkeys(ids):
        org = index.get(cid)
        if org is None:
            out.append(ResolvedCandidate(cid, None, 0))
        else:
            out.append(ResolvedCandidate(cid, org.country_code, org.prevalence))
    return out


def prevalence_map(index: ReferenceIndex) -> dict[str, int]:
    return {o.canonical_id: o.prevalence for o in index.orgs}


def resolve_corpus(
    papers: Iterable[PaperRecord],
    bindings: Mapping[str, Sequence[str]],
    index: ReferenceIndex,
    eu: EuFunderList,
) -> list[Assignment]:
    """One assignment per distinct funder string on each paper.

    ``bindings`` maps a funder string (raw or normalized) to its candidate ids.
    Strings with no candidates get an empty assignment tagged ``unmatched``.
    """
    norm_bindings: dict[str, Sequence[str]] = {}
    for raw, ids in bindings.items():
        try:
            norm_bindings.setdefault(normalize_string(raw), ids)
        except ValueError:
            continue

    out: list[Assignment] = []
    for paper in papers:
        for raw in dict.fromkeys(paper.funder_strings):
            ids = bindings.get(raw)
            if ids is None:
                try:
                    ids = norm_bindings.get(normalize_string(raw), ())
                except ValueError:
                    ids = ()
            if not ids:
                out.append(Assignment(paper.paper_id, raw, None, "unmatched"))
                continue
            res = resolve_pair(paper.author_countries, candidates_from_index(ids, index), eu)
            out.append(Assignment(paper.paper_id, raw, res.canonical_id, res.rule))
    return out


def read_papers(path: str | Path) -> list[PaperRecord]:
    papers = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    papers.append(PaperRecord.from_json(json.loads(line)))
                except (json.JSONDecodeError, KeyError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad paper record ({exc})") from exc
    return papers


def write_assignments(assignments: Sequence[Assignment], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["paper_id", "grant_agency", "canonical_id", "resolution_rule"])
        for a in assignments:
            writer.writerow([a.paper_id, a.grant_agency, a.canonical_id or "", a.resolution_rule])


def read_assignments(path: str | Path) -> list[Assignment]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            Assignment(r["paper_id"], r["grant_agency"], r["canonical_id"] or None, r["resolution_rule"])
            for r in csv.DictReader(fh)
        ]
