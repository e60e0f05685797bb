"""Seeded synthetic reference indexes and funder-string corpora."""

from __future__ import annotations

import random

from fundermatch.reference_index import OrgRecord, build_index, normalize_name

_HEADS = ["national", "federal", "royal", "state", "regional", "european", "international", "central"]
_KINDS = ["foundation", "council", "institute", "agency", "ministry", "academy", "fund", "society", "trust", "office"]
_TOPICS = [
    "science", "health", "research", "education", "energy", "agriculture", "medicine", "technology",
    "environment", "culture", "defence", "innovation", "space", "marine", "cancer", "heart", "water",
    "forestry", "mining", "transport", "physics", "chemistry", "biology", "mathematics", "economics",
]
_COUNTRIES = ["US", "GB", "DE", "FR", "CN", "JP", "BR", "IN", "CA", "AU", "ES", "IT", "NL", "SE", "KR"]
_NOISE = "abcdefghijklmnopqrstuvwxyz"


def _word(rng: random.Random) -> str:
    return "".join(rng.choice(_NOISE) for _ in range(rng.randint(4, 9)))


def synthetic_orgs(n: int, seed: int = 7) -> list[OrgRecord]:
    rng = random.Random(seed)
    orgs, seen = [], set()
    while len(orgs) < n:
        words = [rng.choice(_HEADS), rng.choice(_TOPICS), rng.choice(["and", "for", "of"]),
                 rng.choice(_TOPICS), rng.choice(_KINDS), _word(rng)]
        name = " ".join(words).title()
        key = normalize_name(name)
        if key in seen:
            continue
        seen.add(key)
        acr = "".join(w[0] for w in words if w not in ("and", "for", "of")).upper()
        i = len(orgs)
        orgs.append(
            OrgRecord(
                canonical_id=f"F{4320000000 + i}",
                source="funder_id" if i % 3 else "institution_id",
                display_name=name,
                normalized_name=key,
                ror_id=f"0{i:07d}x",
                alternate_titles=(f"{words[4]} of {words[5]}".title(), acr),
                acronyms=(acr,),
                country_code=rng.choice(_COUNTRIES),
                works_count=rng.randint(1, 100000),
            )
        )
    return orgs


def _typo(rng: random.Random, s: str) -> str:
    i = rng.randrange(len(s))
    op = rng.randrange(3)
    if op == 0:
        return s[:i] + s[i + 1 :]
    if op == 1:
        return s[:i] + rng.choice(_NOISE) + s[i:]
    return s[:i] + rng.choice(_NOISE) + s[i + 1 :]


def synthetic_corpus(orgs: list[OrgRecord], n: int, seed: int = 11) -> dict[str, int]:
    """Raw string -> count, mixing clean names, variants, typos and noise."""
    rng = random.Random(seed)
    corpus: dict[str, int] = {}
    while len(corpus) < n:
        org = rng.choice(orgs)
        kind = rng.random()
        if kind < 0.15:
            s = org.display_name
        elif kind < 0.3:
            s = f"{org.display_name} ({org.acronyms[0]})"
        elif kind < 0.45:
            s = f"The {org.display_name} of {rng.choice(_TOPICS).title()}"
        elif kind < 0.6:
            s = _typo(rng, org.display_name)
        elif kind < 0.7:
            s = f"{org.display_name}, grant {rng.randint(1, 99999)}"
        else:
            s = " ".join(_word(rng) for _ in range(rng.randint(2, 6)))
        corpus[s] = corpus.get(s, 0) + max(1, int(rng.paretovariate(1.2)))
    return corpus


def synthetic_index(n: int, seed: int = 7):
    return build_index(synthetic_orgs(n, seed))
