import math
import random

import pytest
from hypothesis import given, strategies as st

from fundermatch.evaluation import (
    AnnotationRow,
    PairedPaper,
    annotation_metrics,
    apply_crosswalk,
    directional_hit_rates,
    frequency_bucket_stats,
    match_type_counts,
    per_country,
    per_group_curves,
    publications_per_funder,
    rank_frequency,
    read_annotation_rows,
    read_paired_papers,
)
from fundermatch.matcher import Candidate, MatchResult, MatchType, unmatched
from fundermatch.normalization import FunderString
from oracles import set_rates


def items(total, matched, count):
    return [(count, i < matched) for i in range(total)]


def test_bucket_rates_table_two():
    stats = frequency_bucket_stats(items(2901, 2898, 5000) + items(24001, 19069, 150))
    by_label = {s.label: s for s in stats}
    assert by_label[">=1000"].display_rate == "0.001"
    assert by_label["100-1000"].display_rate == "0.205"
    assert by_label["10-100"].unmatched_rate is None and by_label["10-100"].display_rate == ""


def test_bucket_edges_are_half_open():
    stats = frequency_bucket_stats([(1000, True), (999, False), (100, True), (10, True), (9, False), (1, False)])
    assert [(s.label, s.total) for s in stats] == [(">=1000", 1), ("100-1000", 2), ("10-100", 1), ("1-10", 2)]


C = Candidate("F1", None, "X", "funder_id")


def test_match_type_counts():
    results = [MatchResult(i, (C,), MatchType.NAME_EXACT) for i in range(2)]
    results += [MatchResult(i, (C,), MatchType.DOCUMENT_CLUSTERING) for i in range(2, 5)]
    assert match_type_counts(results) == {"Document Clustering": 3, "Name (Exact)": 2}
    assert match_type_counts([unmatched(0), unmatched(1)]) == {"Not Matched": 2}


def test_directional_small_cases():
    r = directional_hit_rates([PairedPaper("d", frozenset("x"), frozenset("xy"))])
    assert (r.hit_rate, r.complete_a_in_b, r.complete_b_in_a) == (1.0, 1.0, 0.0)
    r = directional_hit_rates([PairedPaper("d", frozenset("x"), frozenset("y"))])
    assert (r.hit_rate, r.complete_a_in_b, r.complete_b_in_a) == (0.0, 0.0, 0.0)


def ten_papers():
    # eight papers with A inside B, two without
    rows = [({"a"}, {"a"}), ({"a"}, {"a", "b"}), ({"a", "b"}, {"a", "b", "c"}), ({"c"}, {"c", "d"}),
            ({"e"}, {"e"}), ({"f"}, {"f", "g"}), ({"h", "i"}, {"h", "i"}), ({"j"}, {"j", "k", "l"}),
            ({"m", "n"}, {"m"}), ({"o"}, {"p"})]
    return [PairedPaper(f"d{i}", frozenset(a), frozenset(b)) for i, (a, b) in enumerate(rows)]


def test_engineered_complete_rate():
    r = directional_hit_rates(ten_papers())
    assert r.complete_a_in_b == pytest.approx(0.8)
    pairs = [(p.funders_a, p.funders_b) for p in ten_papers()]
    assert (r.papers, r.hit_rate, r.complete_a_in_b, r.complete_b_in_a) == set_rates(pairs)


def test_incomplete_records_skipped():
    r = directional_hit_rates([PairedPaper("d", frozenset(), frozenset("x")), PairedPaper("e", frozenset("x"), frozenset("x"))])
    assert r.papers == 1
    assert math.isnan(directional_hit_rates([]).hit_rate)


@given(st.lists(st.tuples(st.frozensets(st.sampled_from("abcd"), min_size=1),
                          st.frozensets(st.sampled_from("abcd"), min_size=1)), min_size=1, max_size=15))
def test_directional_matches_brute_force(pairs):
    papers = [PairedPaper(str(i), a, b) for i, (a, b) in enumerate(pairs)]
    r = directional_hit_rates(papers)
    assert (r.papers, r.hit_rate, r.complete_a_in_b, r.complete_b_in_a) == set_rates(pairs)
    both = sum(1 for a, b in pairs if a <= b and b <= a)
    assert both == sum(1 for a, b in pairs if a == b)


def test_crosswalk():
    assert apply_crosswalk(["grid.1", "x"], {"grid.1": "ror1"}) == {"ror1", "x"}


def test_table_five_fixture():
    m = annotation_metrics([AnnotationRow("a", 2, 2, 0), AnnotationRow("b", 2, 1, 1)])
    assert m["avg_recall"] == 0.75 and m["recall"] == 0.75
    assert m["avg_precision"] == 0.75
    assert m["hit_rate"] == 1.0 and m["all_hits"] == 0.5


def test_metrics_single_rows():
    m = annotation_metrics([AnnotationRow("a", 3, 3, 0)])
    assert (m["recall"], m["precision"], m["hit_rate"], m["all_hits"], m["error_rate"]) == (1.0, 1.0, 1.0, 1.0, 0.0)
    m = annotation_metrics([AnnotationRow("a", 2, 0, 1)])
    assert (m["recall"], m["precision"], m["error_rate"], m["hit_rate"]) == (0.0, 0.0, 0.5, 0.0)


def test_malformed_row_rejected():
    with pytest.raises(ValueError):
        AnnotationRow("a", 2, 3, 0)


@given(st.lists(st.tuples(st.integers(1, 6), st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=20))
def test_overall_recall_is_pooled(rows):
    rows = [AnnotationRow(str(i), t, min(c, t), x) for i, (t, c, x) in enumerate(rows)]
    m = annotation_metrics(rows)
    assert m["recall"] == sum(r.correct for r in rows) / sum(r.total_funders for r in rows)


def test_rank_frequency_direct():
    assert rank_frequency({"a": 80, "b": 10, "c": 10}).k80 == 1
    assert rank_frequency({f"f{i}": 7 for i in range(10)}).k80 == 8
    with pytest.raises(ValueError):
        rank_frequency({})


def _k80_oracle(counts):
    counts = sorted(counts, reverse=True)
    total = sum(counts)
    running = 0
    for k, c in enumerate(counts, 1):
        running += c
        if 10 * running >= 8 * total:
            return k


def test_rank_frequency_zipf():
    rng = random.Random(3)
    pubs = {f"f{i}": max(1, int(100000 / (i + 1) ** 1.1) + rng.randint(0, 3)) for i in range(2000)}
    rf = rank_frequency(pubs)
    assert rf.k80 == _k80_oracle(pubs.values())
    assert rf.cumulative_share[-1] == 1.0
    assert 0 < rf.share_of_top(0.01) < 1


@given(st.lists(st.integers(1, 50), min_size=1, max_size=40))
def test_k80_matches_oracle(counts):
    assert rank_frequency({f"f{i}": c for i, c in enumerate(counts)}).k80 == _k80_oracle(counts)


def test_publications_skip_ambiguous():
    strings = [FunderString(0, "a", "a", 5), FunderString(1, "b", "b", 3), FunderString(2, "c", "c", 2)]
    d = Candidate("F2", None, "Y", "funder_id")
    results = [MatchResult(0, (C,), MatchType.NAME_EXACT), MatchResult(1, (C, d), MatchType.NAME_EXACT), unmatched(2)]
    assert publications_per_funder(strings, results) == ({"F1": 5}, 1)


def test_group_and_country_aggregates():
    pubs = {"A": 5, "B": 3, "C": 2}
    curves = per_group_curves(pubs, {"A": "gov", "B": "gov", "C": "private"})
    assert sorted(curves) == ["gov", "private"] and curves["gov"].funders == ("A", "B")
    assert per_country(pubs, {"A": "US", "B": "US"}) == {"US": 8, "unknown": 2}


def test_readers(tmp_path):
    p = tmp_path / "ann.csv"
    p.write_text("doi,total_funders,correct,incorrect\n10/x,2,2,0\n10/y,2,1,1\n")
    assert [r.correct for r in read_annotation_rows(p)] == [2, 1]
    q = tmp_path / "pairs.jsonl"
    q.write_text('{"doi": "1", "funders_a": ["r1"], "funders_b": ["grid.1"]}\n\n')
    assert read_paired_papers(q, {"grid.1": "r1"})[0].funders_b == {"r1"}
