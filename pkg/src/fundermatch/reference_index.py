"""Unified organization index built from OpenAlex funders/institutions and ROR.

Records from the three sources are linked stepwise on exact ROR id, exact
Wikidata id, then (registered domain, country). Linked groups, and groups that
share a normalized name and country, collapse to one OrgRecord each.
"""

from __future__ import annotations

import json
import logging
import re
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence
from urllib.parse import urlsplit

from publicsuffixlist import PublicSuffixList

from .clustering import UnionFind

logger = logging.getLogger(__name__)

_WS = re.compile(r"\s+")
_ACRONYM_LIKE = re.compile(r"^[A-Z]{2,10}$")
_HOST = re.compile(r"^[a-z0-9-]+(\.[a-z0-9-]+)+$")

_ID_PREFIXES = {
    "ror": re.compile(r"^(https?://)?(www\.)?ror\.org/", re.I),
    "wikidata": re.compile(r"^(https?://)?(www\.)?wikidata\.org/(wiki|entity)/", re.I),
    "openalex": re.compile(r"^(https?://)?(www\.)?openalex\.org/", re.I),
}

_psl: PublicSuffixList | None = None


class SourceDataset(str, Enum):
    FUNDER = "funder"
    INSTITUTION = "institution"
    REGISTRY = "registry"


_DATASET_RANK = {SourceDataset.FUNDER: 0, SourceDataset.INSTITUTION: 1, SourceDataset.REGISTRY: 2}
_SOURCE_LABEL = {SourceDataset.FUNDER: "funder_id", SourceDataset.INSTITUTION: "institution_id"}


def canonicalize_id(raw: str, scheme: str) -> str:
    """Strip whitespace and any URL prefix from a ROR/Wikidata/OpenAlex id."""
    if scheme not in _ID_PREFIXES:
        raise ValueError(f"unknown id scheme {scheme!r}")
    value = _ID_PREFIXES[scheme].sub("", (raw or "").strip()).strip().strip("/")
    if not value:
        raise ValueError(f"empty {scheme} identifier: {raw!r}")
    if scheme == "wikidata":
        value = value.upper()
    return value


def extract_registered_domain(url: str | None) -> str | None:
    """Public-suffix-aware registrable domain of a homepage URL, or None."""
    global _psl
    if not url or not isinstance(url, str):
        return None
    url = url.strip()
    if "://" not in url:
        url = "http://" + url
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    if not host or not _HOST.match(host):
        return None
    if _psl is None:
        _psl = PublicSuffixList()
    return _psl.privatesuffix(host.lower())


def normalize_name(name: str) -> str:
    return _WS.sub(" ", name.lower()).strip()


def is_ascii(text: str) -> bool:
    return text.isascii()


@dataclass(frozen=True)
class SourceRecord:
    source_dataset: SourceDataset
    raw_id: str
    display_name: str
    ror_id: str | None = None
    wikidata_id: str | None = None
    alternate_titles: tuple[str, ...] = ()
    acronyms: tuple[str, ...] = ()
    country_code: str | None = None
    homepage_url: str | None = None
    grants_count: int | None = None
    works_count: int | None = None
    grid_ids: tuple[str, ...] = ()

    @property
    def key(self) -> tuple[str, str]:
        return (self.source_dataset.value, self.raw_id)

    @property
    def domain(self) -> str | None:
        return extract_registered_domain(self.homepage_url)


@dataclass(frozen=True)
class OrgRecord:
    canonical_id: str
    source: str
    display_name: str
    normalized_name: str
    ror_id: str | None = None
    alternate_titles: tuple[str, ...] = ()
    acronyms: tuple[str, ...] = ()
    country_code: str | None = None
    domain: str | None = None
    grants_count: int | None = None
    works_count: int | None = None

    @property
    def prevalence(self) -> int:
        if self.works_count is not None:
            return self.works_count
        return self.grants_count or 0

    def names(self) -> tuple[str, ...]:
        return (self.display_name, *self.alternate_titles)

    def to_json(self) -> dict:
        d = asdict(self)
        d["alternate_titles"] = list(self.alternate_titles)
        d["acronyms"] = list(self.acronyms)
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "OrgRecord":
        d = dict(d)
        d["alternate_titles"] = tuple(d.get("alternate_titles") or ())
        d["acronyms"] = tuple(d.get("acronyms") or ())
        return cls(**d)


@dataclass
class LinkageAudit:
    groups: int = 0
    group_sizes: dict[int, int] = field(default_factory=dict)
    collapsed: list[dict] = field(default_factory=list)
    excluded: list[dict] = field(default_factory=list)
    country_conflicts: list[dict] = field(default_factory=list)
    registry_only: int = 0

    def to_json(self) -> dict:
        return {
            "groups": self.groups,
            "group_sizes": {str(k): v for k, v in sorted(self.group_sizes.items())},
            "collapsed": self.collapsed,
            "excluded": self.excluded,
            "country_conflicts": self.country_conflicts,
            "registry_only_groups": self.registry_only,
        }


# ---------------------------------------------------------------- linkage


def _link_keys(rec: SourceRecord) -> list[tuple[str, ...]]:
    keys = []
    if rec.ror_id:
        keys.append(("ror", rec.ror_id))
    if rec.wikidata_id:
        keys.append(("wikidata", rec.wikidata_id))
    domain = rec.domain
    if domain and rec.country_code:
        keys.append(("domain", domain, rec.country_code))
    return keys


def link_records(records: Sequence[SourceRecord]) -> list[list[SourceRecord]]:
    """Group records sharing a ROR id, a Wikidata id or a (domain, country) pair.

    Linkage is transitive, so the result is the set of connected components of
    the graph whose edges are those three equalities. Groups and their members
    come back in a canonical order independent of the input order.
    """
    seen: set[tuple[str, str]] = set()
    for rec in records:
        if rec.key in seen:
            raise ValueError(f"duplicate raw_id {rec.raw_id!r} in {rec.source_dataset.value}")
        seen.add(rec.key)

    ordered = sorted(records, key=lambda r: r.key)
    uf = UnionFind(len(ordered))
    # passes in priority order; unions are transitive across passes
    for kind in ("ror", "wikidata", "domain"):
        first: dict[tuple, int] = {}
        for i, rec in enumerate(ordered):
            for key in _link_keys(rec):
                if key[0] != kind:
                    continue
                if key in first:
                    uf.union(first[key], i)
                else:
                    first[key] = i

    groups: dict[int, list[SourceRecord]] = defaultdict(list)
    for i, rec in enumerate(ordered):
        groups[uf.find(i)].append(rec)
    return sorted(groups.values(), key=lambda g: g[0].key)


# ---------------------------------------------------------------- collapse


def _preference(rec: SourceRecord) -> tuple:
    present = sum(v is not None for v in (rec.grants_count, rec.works_count))
    return (
        _DATASET_RANK[rec.source_dataset],
        rec.ror_id is None,
        rec.wikidata_id is None,
        -present,
        -(rec.works_count if rec.works_count is not None else -1),
        rec.raw_id,
    )


def _max_present(values: Iterable[int | None]) -> int | None:
    present = [v for v in values if v is not None]
    return max(present) if present else None


def _dedupe(items: Iterable[str]) -> list[str]:
    out, seen = [], set()
    for item in items:
        item = _WS.sub(" ", item).strip()
        if item and item not in seen:
            seen.add(item)
            out.append(item)
    return out


def merge_records(records: Sequence[SourceRecord], audit: LinkageAudit | None = None) -> OrgRecord | None:
    """Merge one duplicate group into a single OrgRecord.

    Returns None when the group has no OpenAlex record or no ASCII name.
    """
    members = sorted(records, key=_preference)
    canonical = members[0]
    if canonical.source_dataset is SourceDataset.REGISTRY:
        if audit is not None:
            audit.registry_only += 1
        return None

    names = _dedupe(n for r in members for n in (r.display_name, *r.alternate_titles, *r.acronyms))
    dropped = [n for n in names if not is_ascii(n)]
    names = [n for n in names if is_ascii(n)]
    if not names:
        logger.info("excluding %s: no ASCII name survives", canonical.raw_id)
        if audit is not None:
            audit.excluded.append({"id": canonical.raw_id, "reason": "no ascii name", "names": dropped})
        return None

    display = canonical.display_name.strip()
    if not is_ascii(display) or not display:
        display = names[0]
    acronyms = _dedupe(
        a.upper() for r in members for a in r.acronyms if is_ascii(a) and len(a.strip()) >= 2
    )
    acronyms += [n for n in names if _ACRONYM_LIKE.match(n) and n not in acronyms]
    alternates = [n for n in names if n != display]
    alternates += [a for a in acronyms if a not in alternates and a != display]

    country = canonical.country_code
    countries = sorted({r.country_code for r in members if r.country_code})
    if country is None and countries:
        country = next(r.country_code for r in members if r.country_code)
    if len(countries) > 1:
        logger.debug("country conflict in group of %s: %s", canonical.raw_id, countries)
        if audit is not None:
            audit.country_conflicts.append({"id": canonical.raw_id, "kept": country, "seen": countries})

    ror = canonical.ror_id or next((r.ror_id for r in members if r.ror_id), None)
    domain = canonical.domain or next((r.domain for r in members if r.domain), None)

    org = OrgRecord(
        canonical_id=canonical.raw_id,
        source=_SOURCE_LABEL[canonical.source_dataset],
        display_name=display,
        normalized_name=normalize_name(display),
        ror_id=ror,
        alternate_titles=tuple(alternates),
        acronyms=tuple(acronyms),
        country_code=country,
        domain=domain,
        grants_count=_max_present(r.grants_count for r in members),
        works_count=_max_present(r.works_count for r in members),
    )
    if audit is not None and len(members) > 1:
        audit.collapsed.append(
            {"canonical": canonical.raw_id, "merged": [f"{r.source_dataset.value}:{r.raw_id}" for r in members[1:]]}
        )
    return org


def collapse_duplicates(
    groups: Sequence[Sequence[SourceRecord]],
    audit: LinkageAudit | None = None,
) -> list[OrgRecord]:
    """Merge linked groups, further joining groups that share (normalized name, country)."""
    uf = UnionFind(len(groups))
    owner: dict[tuple[str, str | None], int] = {}
    for gi, group in enumerate(groups):
        for rec in group:
            if rec.source_dataset is SourceDataset.REGISTRY:
                continue
            key = (normalize_name(rec.display_name), rec.country_code)
            if key in owner:
                uf.union(owner[key], gi)
            else:
                owner[key] = gi

    merged: dict[int, list[SourceRecord]] = defaultdict(list)
    for gi, group in enumerate(groups):
        merged[uf.find(gi)].extend(group)

    orgs = []
    for members in merged.values():
        org = merge_records(members, audit)
        if org is not None:
            orgs.append(org)
    if audit is not None:
        audit.groups = len(groups)
        sizes: dict[int, int] = defaultdict(int)
        for g in groups:
            sizes[len(g)] += 1
        audit.group_sizes = dict(sizes)
    return sorted(orgs, key=lambda o: o.canonical_id)


# ---------------------------------------------------------------- index


def _freeze(multi: Mapping[str, list[OrgRecord]]) -> Mapping[str, tuple[OrgRecord, ...]]:
    return MappingProxyType(
        {k: tuple(sorted(set(v), key=lambda o: o.canonical_id)) for k, v in sorted(multi.items())}
    )


@dataclass(frozen=True)
class ReferenceIndex:
    """Read-only lookups over OrgRecords. Multimap values are ordered by canonical_id."""

    orgs: tuple[OrgRecord, ...]
    by_canonical_id: Mapping[str, OrgRecord]
    by_ror: Mapping[str, OrgRecord]
    by_normalized_name: Mapping[str, tuple[OrgRecord, ...]]
    by_alt_name: Mapping[str, tuple[OrgRecord, ...]]
    by_acronym: Mapping[str, tuple[OrgRecord, ...]]
    by_domain: Mapping[str, tuple[OrgRecord, ...]]
    all_names: tuple[tuple[str, OrgRecord], ...]

    def __len__(self) -> int:
        return len(self.orgs)

    def get(self, canonical_id: str) -> OrgRecord | None:
        return self.by_canonical_id.get(canonical_id)

    def lookup_name(self, name: str) -> tuple[OrgRecord, ...]:
        return self.by_normalized_name.get(name, ())

    def lookup_alt(self, name: str) -> tuple[OrgRecord, ...]:
        return self.by_alt_name.get(name, ())

    def lookup_acronym(self, acronym: str) -> tuple[OrgRecord, ...]:
        return self.by_acronym.get(acronym.lower(), ())


def build_index(orgs: Iterable[OrgRecord]) -> ReferenceIndex:
    ordered = sorted(orgs, key=lambda o: o.canonical_id)
    by_id: dict[str, OrgRecord] = {}
    by_ror: dict[str, OrgRecord] = {}
    names: dict[str, list[OrgRecord]] = defaultdict(list)
    alts: dict[str, list[OrgRecord]] = defaultdict(list)
    acronyms: dict[str, list[OrgRecord]] = defaultdict(list)
    domains: dict[str, list[OrgRecord]] = defaultdict(list)
    all_names: list[tuple[str, OrgRecord]] = []

    for org in ordered:
        if org.canonical_id in by_id:
            raise ValueError(f"duplicate canonical_id {org.canonical_id!r}")
        by_id[org.canonical_id] = org
        if org.ror_id:
            by_ror.setdefault(org.ror_id, org)
        names[normalize_name(org.display_name)].append(org)
        seen = {normalize_name(org.display_name)}
        all_names.append((normalize_name(org.display_name), org))
        for alt in org.alternate_titles:
            key = normalize_name(alt)
            alts[key].append(org)
            if key not in seen:
                seen.add(key)
                all_names.append((key, org))
        for acr in org.acronyms:
            acronyms[acr.lower()].append(org)
        if org.domain:
            domains[org.domain].append(org)

    return ReferenceIndex(
        orgs=tuple(ordered),
        by_canonical_id=MappingProxyType(by_id),
        by_ror=MappingProxyType(by_ror),
        by_normalized_name=_freeze(names),
        by_alt_name=_freeze(alts),
        by_acronym=_freeze(acronyms),
        by_domain=_freeze(domains),
        all_names=tuple(all_names),
    )


# ---------------------------------------------------------------- ingestion


def _opt_id(value: str | None, scheme: str) -> str | None:
    if not value:
        return None
    try:
        return canonicalize_id(value, scheme)
    except ValueError:
        return None


def _opt_int(value) -> int | None:
    if value is None or value == "":
        return None
    return int(value)


def _str_list(value) -> tuple[str, ...]:
    if not value:
        return ()
    if isinstance(value, str):
        return (value,)
    return tuple(str(v) for v in value if v)


def record_from_openalex(row: Mapping, dataset: SourceDataset) -> SourceRecord:
    """Build a SourceRecord from one OpenAlex funder or institution JSON object."""
    ids = row.get("ids") or {}
    ror = ids.get("ror") or row.get("ror")
    wikidata = ids.get("wikidata") or row.get("wikidata")
    acronyms = _str_list(row.get("acronyms")) + _str_list(row.get("display_name_acronyms"))
    return SourceRecord(
        source_dataset=dataset,
        raw_id=canonicalize_id(str(row["id"]), "openalex"),
        display_name=str(row.get("display_name") or ""),
        ror_id=_opt_id(ror, "ror"),
        wikidata_id=_opt_id(wikidata, "wikidata"),
        alternate_titles=_str_list(row.get("alternate_titles")) + _str_list(row.get("display_name_alternatives")),
        acronyms=acronyms,
        country_code=(row.get("country_code") or None),
        homepage_url=row.get("homepage_url") or None,
        grants_count=_opt_int(row.get("grants_count")),
        works_count=_opt_int(row.get("works_count")),
    )


def record_from_ror(row: Mapping) -> SourceRecord:
    """Build a SourceRecord from one ROR v2-schema organization object."""
    display, alternates, acronyms = None, [], []
    for name in row.get("names") or []:
        types = name.get("types") or []
        value = name.get("value")
        if not value:
            continue
        if "ror_display" in types and display is None:
            display = value
        elif "acronym" in types:
            acronyms.append(value)
        else:
            alternates.append(value)
    if display is None:
        display = alternates.pop(0) if alternates else ""

    country = None
    for loc in row.get("locations") or []:
        country = (loc.get("geonames_details") or {}).get("country_code")
        if country:
            break

    wikidata, grids = None, []
    for ext in row.get("external_ids") or []:
        kind = (ext.get("type") or "").lower()
        values = [ext.get("preferred")] + list(ext.get("all") or [])
        values = [v for v in values if v]
        if kind == "wikidata" and values:
            wikidata = values[0]
        elif kind == "grid":
            grids.extend(v for v in values if v not in grids)

    homepage = None
    for link in row.get("links") or []:
        if link.get("type") == "website":
            homepage = link.get("value")
            break

    return SourceRecord(
        source_dataset=SourceDataset.REGISTRY,
        raw_id=canonicalize_id(str(row["id"]), "ror"),
        display_name=display,
        ror_id=canonicalize_id(str(row["id"]), "ror"),
        wikidata_id=_opt_id(wikidata, "wikidata"),
        alternate_titles=tuple(alternates),
        acronyms=tuple(acronyms),
        country_code=country,
        homepage_url=homepage,
        grid_ids=tuple(grids),
    )


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc


def load_ror_dump(path: str | Path) -> list[dict]:
    """ROR dumps ship as one JSON array; line-delimited files are accepted too."""
    text = Path(path).read_text(encoding="utf-8").lstrip()
    if not text:
        return []
    if text[0] == "[":
        return json.loads(text)
    return list(iter_jsonl(path))


def load_source_records(
    funders_path: str | Path | None = None,
    institutions_path: str | Path | None = None,
    ror_path: str | Path | None = None,
) -> list[SourceRecord]:
    records: list[SourceRecord] = []
    if funders_path:
        records += [record_from_openalex(r, SourceDataset.FUNDER) for r in iter_jsonl(funders_path)]
    if institutions_path:
        records += [record_from_openalex(r, SourceDataset.INSTITUTION) for r in iter_jsonl(institutions_path)]
    if ror_path:
        records += [record_from_ror(r) for r in load_ror_dump(ror_path)]
    return records


def grid_to_ror(records: Iterable[SourceRecord]) -> dict[str, str]:
    """GRID -> ROR crosswalk taken from ROR external ids."""
    mapping: dict[str, str] = {}
    for rec in records:
        if rec.ror_id:
            for grid in rec.grid_ids:
                mapping.setdefault(grid, rec.ror_id)
    return mapping


def build_reference(records: Sequence[SourceRecord]) -> tuple[ReferenceIndex, LinkageAudit]:
    audit = LinkageAudit()
    groups = link_records(records)
    orgs = collapse_duplicates(groups, audit)
    return build_index(orgs), audit


def write_orgs(orgs: Iterable[OrgRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for org in sorted(orgs, key=lambda o: o.canonical_id):
            fh.write(json.dumps(org.to_json(), sort_keys=True, ensure_ascii=True) + "\n")


def read_index(path: str | Path) -> ReferenceIndex:
    return build_index(OrgRecord.from_json(r) for r in iter_jsonl(path))
