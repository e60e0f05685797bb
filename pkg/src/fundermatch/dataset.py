"""Readers and writers for the corpus, annotation and final dataset files."""

from __future__ import annotations

import csv
import io
import json
from collections import OrderedDict
from pathlib import Path
from typing import Sequence

import pyarrow as pa
import pyarrow.parquet as pq

from .matcher import Candidate, ManualAnnotation, MatchResult, MatchType
from .normalization import FunderString, extract_acronym, normalize_string

COLUMNS = ("grant_agency", "id", "counts", "ids:ror", "source", "display_name", "match_type")

SCHEMA = pa.schema(
    [
        ("grant_agency", pa.string()),
        ("id", pa.string()),
        ("counts", pa.int64()),
        ("ids:ror", pa.string()),
        ("source", pa.string()),
        ("display_name", pa.string()),
        ("match_type", pa.string()),
    ]
)


def _delimiter(path: Path, sample: str) -> str:
    if path.suffix.lower() in (".tsv", ".tab"):
        return "\t"
    if path.suffix.lower() == ".csv":
        return ","
    try:
        return csv.Sniffer().sniff(sample, delimiters=",\t;|").delimiter
    except csv.Error:
        return ","


def read_table(path: str | Path) -> list[dict]:
    """Rows of a parquet file or a headed delimited text file."""
    path = Path(path)
    if path.suffix.lower() in (".parquet", ".pq"):
        return pq.read_table(path).to_pylist()
    text = path.read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text), delimiter=_delimiter(path, text[:4096]))
    return list(reader)


def read_corpus(path: str | Path) -> dict[str, int]:
    """grant_agency -> summed counts. Missing counts default to 1."""
    counts: dict[str, int] = {}
    for i, row in enumerate(read_table(path), 2):
        if "grant_agency" not in row:
            raise ValueError(f"{path}: missing 'grant_agency' column")
        raw = row["grant_agency"]
        if raw is None:
            continue
        value = row.get("counts")
        try:
            n = 1 if value in (None, "") else int(value)
        except (TypeError, ValueError):
            raise ValueError(f"{path}: row {i}: counts {value!r} is not an integer") from None
        if n < 1:
            raise ValueError(f"{path}: row {i}: counts must be positive")
        counts[raw] = counts.get(raw, 0) + n
    return counts


def read_annotations(path: str | Path) -> list[ManualAnnotation]:
    """Two columns: the raw string and the canonical id it should map to."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text), delimiter=_delimiter(path, text[:4096])))
    if rows and [c.strip().lower() for c in rows[0][:2]] in (["raw_string", "canonical_id"], ["grant_agency", "id"]):
        rows = rows[1:]
    out = []
    for row in rows:
        if len(row) < 2 or not row[0].strip():
            continue
        out.append(ManualAnnotation(row[0], row[1].strip()))
    return out


def dataset_rows(strings: Sequence[FunderString], results: Sequence[MatchResult]) -> list[dict]:
    """One row per (string, candidate); unmatched strings get one empty-id row."""
    rows = []
    for res in sorted(results, key=lambda r: r.string_id):
        fs = strings[res.string_id]
        if not res.matched:
            rows.append(
                {"grant_agency": fs.raw, "id": None, "counts": fs.count, "ids:ror": None,
                 "source": None, "display_name": None, "match_type": None}
            )
            continue
        for cand in res.candidates:
            rows.append(
                {
                    "grant_agency": fs.raw,
                    "id": cand.canonical_id,
                    "counts": fs.count,
                    "ids:ror": cand.ror_id,
                    "source": cand.source,
                    "display_name": cand.display_name,
                    "match_type": res.match_type.label,
                }
            )
    return rows


def write_dataset(rows: Sequence[dict], path: str | Path, fmt: str | None = None) -> Path:
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "parquet")
    table = pa.Table.from_pylist(list(rows), schema=SCHEMA)
    if fmt == "parquet":
        pq.write_table(table, path, compression="zstd")
    elif fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=COLUMNS)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: ("" if row[k] is None else row[k]) for k in COLUMNS})
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    return path


def _none(value):
    return None if value in (None, "") else value


def read_dataset(path: str | Path) -> tuple[list[FunderString], list[MatchResult]]:
    """Rebuild strings and match results from a dataset file.

    String ids follow row order, which matches the ids assigned when the file
    was written.
    """
    grouped: OrderedDict[str, list[dict]] = OrderedDict()
    for row in read_table(path):
        missing = set(COLUMNS) - set(row)
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        grouped.setdefault(row["grant_agency"], []).append(row)

    strings, results = [], []
    for sid, (raw, rows) in enumerate(grouped.items()):
        fs = FunderString(sid, raw, normalize_string(raw), int(rows[0]["counts"]), extract_acronym(raw))
        strings.append(fs)
        mtype = MatchType.from_label(_none(rows[0]["match_type"]))
        cands = tuple(
            Candidate(r["id"], _none(r["ids:ror"]), r["display_name"] or "", r["source"] or "")
            for r in rows
            if _none(r["id"]) is not None
        )
        results.append(MatchResult(sid, cands, mtype))
    return strings, results


def write_unmatched(strings: Sequence[FunderString], results: Sequence[MatchResult], path: str | Path,
                    high_cutoff: int, medium_band: tuple[int, int]) -> int:
    """Unmatched strings, most frequent first, tagged with their frequency band."""
    lo, hi = medium_band
    rows = sorted(
        (strings[r.string_id] for r in results if not r.matched),
        key=lambda fs: (-fs.count, fs.raw),
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["grant_agency", "counts", "band"])
        for fs in rows:
            band = "high" if fs.count > high_cutoff else "medium" if lo <= fs.count <= hi else "low"
            writer.writerow([fs.raw, fs.count, band])
    return len(rows)


def write_json(obj, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
