"""Funder string canonicalization, acronym extraction and character shingling."""

from __future__ import annotations

import re
from dataclasses import dataclass

DEFAULT_SHINGLE_WIDTH = 3

_WS = re.compile(r"\s+")
_PAREN = re.compile(r"\(([^()]*)\)")
_PIECE = re.compile(r"[,;]")


@dataclass(frozen=True)
class FunderString:
    """One distinct acknowledgment string and how often it occurs."""

    string_id: int
    raw: str
    normalized: str
    count: int
    extracted_acronym: str | None = None


def normalize_string(raw: str) -> str:
    """Lowercase, drop non-ASCII characters and collapse whitespace.

    Raises ValueError when nothing is left.
    """
    ascii_only = raw.encode("ascii", "ignore").decode("ascii")
    out = _WS.sub(" ", ascii_only.lower()).strip()
    if not out:
        raise ValueError(f"string is empty after normalization: {raw!r}")
    return out


def extract_acronym(raw: str) -> str | None:
    # first comma/semicolon separated piece of a parenthesized group with >= 2
    # uppercase letters wins: "(DFG, Bonn)" -> "DFG"
    for m in _PAREN.finditer(raw):
        for piece in _PIECE.split(m.group(1)):
            letters = "".join(ch for ch in piece if "A" <= ch <= "Z")
            if len(letters) >= 2:
                return letters
    return None


def shingle(normalized: str, k: int = DEFAULT_SHINGLE_WIDTH) -> frozenset[str]:
    """Set of contiguous length-``k`` substrings.

    Strings shorter than ``k`` produce the whole string as their only shingle.
    """
    if k < 1:
        raise ValueError("shingle width must be >= 1")
    if len(normalized) <= k:
        return frozenset([normalized])
    return frozenset(normalized[i : i + k] for i in range(len(normalized) - k + 1))


def build_funder_strings(counts: dict[str, int]) -> tuple[list[FunderString], list[tuple[str, int]]]:
    """Turn a raw-string -> count mapping into FunderStrings with stable ids.

    Ids follow the sorted order of the raw strings so they do not depend on
    input ordering. Strings that normalize to nothing are returned separately.
    """
    strings: list[FunderString] = []
    rejected: list[tuple[str, int]] = []
    for raw in sorted(counts):
        count = counts[raw]
        try:
            norm = normalize_string(raw)
        except ValueError:
            rejected.append((raw, count))
            continue
        strings.append(FunderString(len(strings), raw, norm, count, extract_acronym(raw)))
    return strings, rejected
