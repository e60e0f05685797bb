import csv
import hashlib
import json

import pytest

from fundermatch.cli import main
from fundermatch.dataset import read_dataset
from fundermatch.matcher import MatchType
from cli_fixtures import write_corpus, write_golden_inputs, write_papers
from golden import TRUTH
from test_reference_index import OPENALEX_FUNDER, OPENALEX_INST, ROR_ROW


@pytest.fixture
def inputs(tmp_path):
    return write_golden_inputs(tmp_path / "in")


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_match_cli(inputs, out, *extra):
    return main(["match", "--index", str(inputs / "index.jsonl"), "--corpus", str(inputs / "corpus.csv"),
                 "--annotations", str(inputs / "annotations.csv"), "--out", str(out), *extra])


def test_match_reproduces_truth(inputs, tmp_path):
    out = tmp_path / "out"
    assert run_match_cli(inputs, out) == 0
    strings, results = read_dataset(out / "funders.parquet")
    got = {strings[r.string_id].raw: (r.match_type, r.candidate_ids) for r in results}
    assert got == {raw: (mt, ids) for raw, (_, mt, ids) in TRUTH.items()}
    log = json.loads((out / "match_log.json").read_text())
    assert log["match_types"]["Manual Annotation"] == 1
    unmatched = list(csv.DictReader(open(out / "unmatched.csv")))
    assert unmatched[0] == {"grant_agency": "Grant-in-Aid", "counts": "1200", "band": "high"}
    echo = json.loads((out / "match.config.json").read_text())
    assert echo["config"]["cluster_threshold"] == 0.95


def test_csv_format(inputs, tmp_path):
    out = tmp_path / "out"
    assert run_match_cli(inputs, out, "--format", "csv") == 0
    header = (out / "funders.csv").read_text().splitlines()[0]
    assert header == "grant_agency,id,counts,ids:ror,source,display_name,match_type"


def test_workers_do_not_change_output(inputs, tmp_path):
    out = tmp_path / "out"
    assert run_match_cli(inputs, out, "--workers", "1") == 0
    first = {p.name: digest(p) for p in sorted(out.iterdir())}
    assert run_match_cli(inputs, out, "--workers", "8") == 0
    assert {p.name: digest(p) for p in sorted(out.iterdir())} == first


def test_empty_corpus(inputs, tmp_path):
    write_corpus(inputs / "empty.csv", {})
    out = tmp_path / "out"
    assert main(["match", "--index", str(inputs / "index.jsonl"), "--corpus", str(inputs / "empty.csv"),
                 "--out", str(out)]) == 0
    assert read_dataset(out / "funders.parquet") == ([], [])


def test_missing_inputs_exit_two(inputs, tmp_path, capsys):
    assert main(["match", "--index", str(inputs / "index.jsonl"), "--corpus", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path)]) == 2
    assert "nope.csv" in capsys.readouterr().err
    assert main(["build-index", "--funders", str(inputs / "index.jsonl"), "--ror", str(tmp_path / "ror.json"),
                 "--out", str(tmp_path)]) == 2
    assert "ror.json" in capsys.readouterr().err


def test_bad_corpus_exit_two(inputs, tmp_path):
    (inputs / "bad.csv").write_text("grant_agency,counts\nNSF,many\n")
    assert main(["match", "--index", str(inputs / "index.jsonl"), "--corpus", str(inputs / "bad.csv"),
                 "--out", str(tmp_path)]) == 2


def test_build_index_is_byte_stable(tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    (src / "f.jsonl").write_text(json.dumps(OPENALEX_FUNDER) + "\n")
    (src / "i.jsonl").write_text(json.dumps(OPENALEX_INST) + "\n")
    (src / "ror.json").write_text(json.dumps([ROR_ROW]))
    args = ["build-index", "--funders", str(src / "f.jsonl"), "--institutions", str(src / "i.jsonl"),
            "--ror", str(src / "ror.json")]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("reference_index.jsonl", "linkage_audit.json", "grid_ror.csv"):
        assert digest(tmp_path / "a" / name) == digest(tmp_path / "b" / name)
    audit = json.loads((tmp_path / "a" / "linkage_audit.json").read_text())
    assert audit["organizations"] == 1 and audit["groups"] == 1


def test_resolve_and_evaluate(inputs, tmp_path):
    out = tmp_path / "out"
    assert run_match_cli(inputs, out) == 0
    write_papers(inputs / "papers.jsonl", [
        {"paper_id": "p1", "author_countries": ["GH", "US"], "funder_strings": ["Ministry of Health", "NSF"]},
        {"paper_id": "p2", "author_countries": ["BR"], "funder_strings": ["Ministry of Health"]},
        {"paper_id": "p3", "author_countries": [], "funder_strings": ["Ministry of Health", "Grant-in-Aid"]},
    ])
    assert main(["resolve", "--index", str(inputs / "index.jsonl"), "--papers", str(inputs / "papers.jsonl"),
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "assignments.csv")))
    assert [(r["paper_id"], r["canonical_id"], r["resolution_rule"]) for r in rows] == [
        ("p1", "F7", "country:first"), ("p1", "F1", "single_candidate"),
        ("p2", "F6", "country:first"),
        ("p3", "F6", "prevalence"), ("p3", "", "unmatched"),
    ]

    (inputs / "ann.csv").write_text("doi,total_funders,correct,incorrect\na,2,2,0\nb,2,1,1\n")
    (inputs / "pairs.jsonl").write_text('{"doi": "x", "funders_a": ["F1"], "funders_b": ["F1", "F2"]}\n')
    assert main(["evaluate", "--index", str(inputs / "index.jsonl"), "--annotations", str(inputs / "ann.csv"),
                 "--paired", str(inputs / "pairs.jsonl"), "--assignments", str(out / "assignments.csv"),
                 "--out", str(out)]) == 0
    report = json.loads((out / "evaluation.json").read_text())
    assert report["annotation_metrics"]["avg_recall"] == 0.75
    assert report["directional_hits"][0]["complete_hit_rate"] == 1.0
    assert report["match_types"]["Not Matched"] == sum(1 for _, mt, _ in TRUTH.values() if mt is MatchType.UNMATCHED)
    assert report["rank_frequency"]["funders"] == 3
    assert (out / "country_publications.csv").is_file()


def test_config_file(inputs, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"output_format": "csv", "paths": {"corpus": str(inputs / "corpus.csv")}}))
    out = tmp_path / "out"
    assert main(["match", "--config", str(cfg), "--index", str(inputs / "index.jsonl"), "--out", str(out)]) == 0
    assert (out / "funders.csv").is_file()
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["match", "--config", str(cfg), "--out", str(out)]) == 2
