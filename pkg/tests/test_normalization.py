import string

import pytest
from hypothesis import given, strategies as st

from fundermatch.normalization import build_funder_strings, extract_acronym, normalize_string, shingle


def test_normalize_lowercases_and_collapses():
    assert normalize_string("National  Science Foundation ") == "national science foundation"


def test_normalize_is_idempotent_on_clean_input():
    assert normalize_string("nsf") == "nsf"


@pytest.mark.parametrize("raw", ["   ", "", "\t\n", "日本学術振興会"])
def test_normalize_rejects_empty(raw):
    with pytest.raises(ValueError):
        normalize_string(raw)


def test_normalize_drops_non_ascii():
    assert normalize_string("Fondation Médicale") == "fondation mdicale"


@given(st.text(alphabet=string.printable + "éü ", min_size=1))
def test_normalize_output_is_clean(raw):
    try:
        out = normalize_string(raw)
    except ValueError:
        return
    assert out == out.strip() and "  " not in out
    assert out.isascii() and out == out.lower()
    assert normalize_string(out) == out


def _acronym_oracle(raw):
    # walk innermost '(...)' groups left to right; the first piece with two or
    # more uppercase letters yields those letters
    start = None
    for i, ch in enumerate(raw):
        if ch == "(":
            start = i
        elif ch == ")" and start is not None:
            inner = raw[start + 1 : i]
            for part in inner.replace(";", ",").split(","):
                upper = [c for c in part if c in string.ascii_uppercase]
                if len(upper) >= 2:
                    return "".join(upper)
            start = None
    return None


ACRONYM_FIXTURES = [
    ("European Commission", None),
    ("Deutsche Forschungsgemeinschaft (DFG, Bonn)", "DFG"),
    ("National Science Foundation (NSF)", "NSF"),
    ("Fondation (Paris; FRM)", "FRM"),
    ("Agency (funded)", None),
    ("Ministry (MoH)", "MH"),
    ("Foo ()", None),
    ("Japan Society for the Promotion of Science (JSPS) (KAKENHI)", "JSPS"),
]


@pytest.mark.parametrize("raw,expected", ACRONYM_FIXTURES)
def test_extract_acronym_fixtures(raw, expected):
    assert extract_acronym(raw) == expected
    assert _acronym_oracle(raw) == expected


@given(st.text(alphabet="ABCdef (),;", max_size=30))
def test_extract_acronym_matches_oracle(raw):
    assert extract_acronym(raw) == _acronym_oracle(raw)


def test_shingle_definition():
    assert shingle("abcd", 3) == {"abc", "bcd"}
    assert shingle("ab", 3) == {"ab"}


def test_shingle_repeated_token():
    # "nsf nsf" windows: nsf, "sf ", "f n", " ns", nsf -> four distinct
    oracle = {"nsf nsf"[i : i + 3] for i in range(5)}
    assert len(oracle) == 4
    assert shingle("nsf nsf", 3) == oracle


@given(st.text(alphabet="abc xyz", min_size=1, max_size=40), st.integers(1, 5))
def test_shingle_covers_every_window(s, k):
    sh = shingle(s, k)
    if len(s) <= k:
        assert sh == {s}
    else:
        assert all(len(g) == k for g in sh)
        assert sh == {s[i : i + k] for i in range(len(s) - k + 1)}


def test_build_funder_strings_ids_and_rejections():
    strings, rejected = build_funder_strings({"NSF": 3, "  ": 2, "DFG (DFG)": 1})
    assert [s.raw for s in strings] == ["DFG (DFG)", "NSF"]
    assert [s.string_id for s in strings] == [0, 1]
    assert strings[0].extracted_acronym == "DFG"
    assert rejected == [("  ", 2)]
