"""Command line entry point: build-index, match, resolve, evaluate.

Each subcommand reads its inputs from files, writes its outputs into --out and
drops a ``<command>.config.json`` next to them with the configuration used.
Exit codes: 0 success, 1 internal error, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import dataset, evaluation
from .config import PipelineConfig
from .pipeline import run_match
from .reference_index import build_reference, load_source_records, read_index, write_orgs, grid_to_ror
from .resolver import load_eu_list, read_assignments, read_papers, resolve_corpus, write_assignments

logger = logging.getLogger("fundermatch")

EXIT_OK, EXIT_INTERNAL, EXIT_BAD_INPUT = 0, 1, 2


class BadInput(Exception):
    pass


def _require(path: str | None, what: str) -> Path:
    if not path:
        raise BadInput(f"no {what} given")
    p = Path(path)
    if not p.is_file():
        raise BadInput(f"{what} not found: {p}")
    return p


def _optional(path: str | None, what: str) -> Path | None:
    return _require(path, what) if path else None


def _out_dir(config: PipelineConfig) -> Path:
    out = Path(config.paths.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo(config: PipelineConfig, out: Path, command: str) -> None:
    dataset.write_json({"command": command, "config": config.to_dict()}, out / f"{command}.config.json")


def dataset_path(config: PipelineConfig) -> Path:
    ext = "csv" if config.output_format == "csv" else "parquet"
    return Path(config.paths.out) / f"funders.{ext}"


def cmd_build_index(config: PipelineConfig) -> int:
    p = config.paths
    if not (p.funders or p.institutions):
        raise BadInput("build-index needs --funders and/or --institutions")
    funders = _optional(p.funders, "funder snapshot")
    institutions = _optional(p.institutions, "institution snapshot")
    ror = _optional(p.ror, "ROR dump")
    records = load_source_records(funders, institutions, ror)
    index, audit = build_reference(records)

    out = _out_dir(config)
    write_orgs(index.orgs, out / "reference_index.jsonl")
    report = audit.to_json()
    report["source_records"] = len(records)
    report["organizations"] = len(index)
    dataset.write_json(report, out / "linkage_audit.json")
    crosswalk = grid_to_ror(records)
    if crosswalk:
        with open(out / "grid_ror.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["grid_id", "ror_id"])
            w.writerows(sorted(crosswalk.items()))
    _echo(config, out, "build-index")
    logger.info(
        "built index: %d records, %d linked groups, %d organizations, %d excluded",
        len(records), audit.groups, len(index), len(audit.excluded),
    )
    return EXIT_OK


def _index_path(config: PipelineConfig) -> Path:
    return _require(config.paths.index or str(Path(config.paths.out) / "reference_index.jsonl"), "reference index")


def cmd_match(config: PipelineConfig, workers: int = 1) -> int:
    index = read_index(_index_path(config))
    counts = dataset.read_corpus(_require(config.paths.corpus, "funder-string corpus"))
    annotations = []
    if config.paths.annotations:
        annotations = dataset.read_annotations(_require(config.paths.annotations, "annotation file"))

    run = run_match(counts, index, config, annotations=annotations, workers=workers)
    out = _out_dir(config)
    rows = dataset.dataset_rows(run.strings, run.results)
    dataset.write_dataset(rows, dataset_path(config), config.output_format)
    n_unmatched = dataset.write_unmatched(
        run.strings, run.results, out / "unmatched.csv", config.high_freq_cutoff, config.medium_freq_band
    )
    log = dict(run.log)
    log["match_types"] = evaluation.match_type_counts(run.results)
    log["rows"] = len(rows)
    dataset.write_json(log, out / "match_log.json")
    _echo(config, out, "match")
    logger.info("matched %d of %d strings", len(run.strings) - n_unmatched, len(run.strings))
    return EXIT_OK


def _bindings(path: Path) -> dict[str, list[str]]:
    strings, results = dataset.read_dataset(path)
    return {strings[r.string_id].raw: list(r.candidate_ids) for r in results}


def cmd_resolve(config: PipelineConfig) -> int:
    matches = _require(config.paths.matches or str(dataset_path(config)), "match output")
    papers = read_papers(_require(config.paths.papers, "paper records"))
    eu = load_eu_list(_optional(config.paths.eu_list, "EU list"))
    index = read_index(_index_path(config))
    assignments = resolve_corpus(papers, _bindings(matches), index, eu)
    out = _out_dir(config)
    write_assignments(assignments, out / "assignments.csv")
    _echo(config, out, "resolve")
    logger.info("resolved %d paper-funder-string pairs", len(assignments))
    return EXIT_OK


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if value != value else f"{value:.3f}"
    return str(value)


def cmd_evaluate(config: PipelineConfig) -> int:
    p = config.paths
    matches = _require(p.matches or str(dataset_path(config)), "match output")
    strings, results = dataset.read_dataset(matches)
    out = _out_dir(config)
    report: dict = {"config": config.to_dict()}
    text: list[str] = []

    buckets = evaluation.frequency_bucket_stats(evaluation.string_match_status(strings, results))
    report["frequency_buckets"] = [
        {"range": b.label, "total": b.total, "matched": b.matched,
         "unmatched_rate": None if b.unmatched_rate is None else round(b.unmatched_rate, 3)}
        for b in buckets
    ]
    text.append("Frequency range   Total   Matched   Unmatched rate")
    text += [f"{b.label:<16}{b.total:>7}{b.matched:>10}   {b.display_rate}" for b in buckets]
    text.append("note: ranges are half-open [lower, upper)")

    types = evaluation.match_type_counts(results)
    report["match_types"] = types
    text.append("")
    text.append("Match type                   Count")
    text += [f"{label:<28}{n:>6}" for label, n in types.items()]

    if p.evaluation_annotations:
        rows = evaluation.read_annotation_rows(_require(p.evaluation_annotations, "evaluation annotations"))
        metrics = evaluation.annotation_metrics(rows)
        report["annotation_metrics"] = metrics
        text.append("")
        text += [f"{k:<16}{_fmt(v)}" for k, v in metrics.items()]

    if p.paired_papers:
        crosswalk = None
        grid_path = Path(p.out) / "grid_ror.csv"
        if grid_path.is_file():
            with open(grid_path, newline="", encoding="utf-8") as fh:
                crosswalk = {r["grid_id"]: r["ror_id"] for r in csv.DictReader(fh)}
        pairs = evaluation.read_paired_papers(_require(p.paired_papers, "paired papers"), crosswalk)
        rates = evaluation.directional_hit_rates(pairs)
        report["directional_hits"] = rates.table("A", "B") + [{"papers": rates.papers}]
        text.append("")
        text += [f"{r['direction']:<10} complete={_fmt(r['complete_hit_rate'])} hit={_fmt(r['hit_rate'])}"
                 for r in rates.table("A", "B")]

    if p.assignments:
        pubs = evaluation.publications_from_assignments(read_assignments(_require(p.assignments, "assignments")))
        skipped = 0
    else:
        pubs, skipped = evaluation.publications_per_funder(strings, results)
    if pubs and sum(pubs.values()) > 0:
        curve = evaluation.rank_frequency(pubs)
        report["rank_frequency"] = {
            "funders": len(curve.counts), "k80": curve.k80,
            "top20pct_share": round(curve.share_of_top(0.2), 6), "ambiguous_strings_skipped": skipped,
        }
        with open(out / "rank_frequency.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "canonical_id", "publications", "cumulative_share"])
            for rank, (fid, n, share) in enumerate(zip(curve.funders, curve.counts, curve.cumulative_share), 1):
                w.writerow([rank, fid, n, f"{share:.6f}"])
        text.append("")
        text.append(f"funders covering 80% of publications: {curve.k80} of {len(curve.counts)}")
        if p.sectors:
            with open(_require(p.sectors, "sector file"), newline="", encoding="utf-8") as fh:
                sectors = {r["canonical_id"]: r["sector"] for r in csv.DictReader(fh)}
            report["sector_k80"] = {k: c.k80 for k, c in evaluation.per_group_curves(pubs, sectors).items()}
        index_file = Path(p.index or Path(p.out) / "reference_index.jsonl")
        if index_file.is_file():
            index = read_index(index_file)
            countries = evaluation.per_country(pubs, {o.canonical_id: o.country_code for o in index.orgs})
            with open(out / "country_publications.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["country_code", "publications"])
                w.writerows(countries.items())

    dataset.write_json(report, out / "evaluation.json")
    (out / "evaluation.txt").write_text("\n".join(text) + "\n", encoding="utf-8")
    _echo(config, out, "evaluate")
    print("\n".join(text))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--index", help="reference index (JSON lines)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for the match stage")
    common.add_argument("--format", choices=("parquet", "csv"), help="dataset file format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fundermatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-index", parents=[common], help="link and collapse registry snapshots")
    b.add_argument("--funders", help="OpenAlex funders snapshot (JSON lines)")
    b.add_argument("--institutions", help="OpenAlex institutions snapshot (JSON lines)")
    b.add_argument("--ror", help="ROR v2 data dump (JSON)")

    m = sub.add_parser("match", parents=[common], help="disambiguate a funder-string corpus")
    m.add_argument("--corpus", help="grant_agency,counts table (csv/tsv/parquet)")
    m.add_argument("--annotations", help="manual annotations: raw_string,canonical_id")

    r = sub.add_parser("resolve", parents=[common], help="pick one organization per paper-funder-string pair")
    r.add_argument("--matches", help="dataset written by match")
    r.add_argument("--papers", help="paper records (JSON lines)")
    r.add_argument("--eu-list", dest="eu_list", help="EU funder / eligible-country list")

    e = sub.add_parser("evaluate", parents=[common], help="validation statistics")
    e.add_argument("--matches", help="dataset written by match")
    e.add_argument("--annotations", dest="evaluation_annotations",
                   help="per-paper annotation table: doi,total_funders,correct,incorrect")
    e.add_argument("--paired", dest="paired_papers", help="paired paper funder sets (JSON lines)")
    e.add_argument("--assignments", help="assignments written by resolve")
    e.add_argument("--sectors", help="canonical_id,sector table")
    return parser


_PATH_ARGS = (
    "funders", "institutions", "ror", "index", "corpus", "annotations", "papers", "eu_list",
    "matches", "assignments", "evaluation_annotations", "paired_papers", "sectors", "out",
)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = PipelineConfig.load(_require(args.config, "config file")) if args.config else PipelineConfig()
        config = config.with_paths(**{k: getattr(args, k, None) for k in _PATH_ARGS})
        if args.format:
            d = config.to_dict()
            d["output_format"] = args.format
            config = PipelineConfig.from_dict(d)
        if args.workers < 1:
            raise BadInput("--workers must be >= 1")

        if args.command == "build-index":
            return cmd_build_index(config)
        if args.command == "match":
            return cmd_match(config, args.workers)
        if args.command == "resolve":
            return cmd_resolve(config)
        return cmd_evaluate(config)
    except (BadInput, ValueError, KeyError, OSError) as exc:
        print(f"fundermatch: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
