"""End-to-end match stage: normalize, cluster, cascade, annotations, NER, fallback."""

from __future__ import annotations

import logging
import multiprocessing
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import Cluster, build_similarity_graph, connected_components, diameter_warnings
from .config import PipelineConfig
from .matcher import (
    CASCADE,
    Candidate,
    ClusterMatch,
    ManualAnnotation,
    MatchResult,
    MatchState,
    MatchType,
    ReferenceMatcher,
    RuleHit,
    apply_manual_annotations,
    assemble,
    match_cluster,
    propagate_bindings,
)
from .minhash import build_lsh, minhash_matrix, query, MinHashSignature
from .ner import HeuristicNerProvider, NerProvider
from .normalization import FunderString, build_funder_strings, extract_acronym, normalize_string, shingle
from .reference_index import ReferenceIndex

logger = logging.getLogger(__name__)

_CHUNK = 2000

# per-process matcher for pool workers
_worker: dict = {}


def _init_worker(matcher: ReferenceMatcher, strings: Sequence[FunderString]) -> None:
    _worker["matcher"] = matcher
    _worker["strings"] = strings


def _match_chunk(clusters: Sequence[Cluster]) -> list[ClusterMatch]:
    return [match_cluster(c, _worker["strings"], _worker["matcher"]) for c in clusters]


def match_all_clusters(
    clusters: Sequence[Cluster],
    strings: Sequence[FunderString],
    matcher: ReferenceMatcher,
    workers: int = 1,
) -> list[ClusterMatch]:
    """Cascade every cluster; chunks run in worker processes when ``workers > 1``.

    Results come back in cluster order whatever the schedule.
    """
    if workers <= 1 or len(clusters) < 2 * _CHUNK:
        return [match_cluster(c, strings, matcher) for c in clusters]
    chunks = [clusters[i : i + _CHUNK] for i in range(0, len(clusters), _CHUNK)]
    ctx = multiprocessing.get_context("fork") if "fork" in multiprocessing.get_all_start_methods() else None
    with ProcessPoolExecutor(workers, mp_context=ctx, initializer=_init_worker, initargs=(matcher, strings)) as pool:
        out: list[ClusterMatch] = []
        for part in pool.map(_match_chunk, chunks):
            out.extend(part)
    return out


def ner_assist(
    string_ids: Iterable[int],
    state: MatchState,
    provider: NerProvider,
) -> dict[int, MatchResult]:
    """Re-run the cascade on organization spans pulled out of each string.

    The earliest rule reached by any span decides the match type; all spans
    matching at that rule contribute candidates.
    """
    matcher = state.matcher
    out: dict[int, MatchResult] = {}
    for sid in string_ids:
        fs = state.strings[sid]
        try:
            spans = provider.extract(fs.raw)
        except Exception:
            logger.exception("NER provider failed on %r; leaving it unmatched", fs.raw)
            continue
        hits: list[RuleHit] = []
        for span in spans:
            try:
                norm = normalize_string(span)
            except ValueError:
                continue
            hit = matcher.cascade(norm, extract_acronym(span))
            if hit is not None:
                hits.append(hit)
        if not hits:
            continue
        best = min(CASCADE.index(h.match_type) for h in hits)
        cands: dict[str, Candidate] = {}
        for h in hits:
            if CASCADE.index(h.match_type) == best:
                for c in h.candidates:
                    cands[c.canonical_id] = c
        out[sid] = MatchResult(sid, tuple(cands[k] for k in sorted(cands)), CASCADE[best])
    return out


def jaccard_fallback(
    string_ids: Sequence[int],
    signatures: np.ndarray,
    index: ReferenceIndex,
    threshold: float,
    shingle_width: int,
    num_perms: int,
    seed: int,
) -> dict[int, MatchResult]:
    """Probe an LSH index of still-unmatched strings with every reference name.

    ``signatures`` rows are indexed by string_id. Hits whose estimated
    similarity reaches ``threshold`` bind the string to the probing org; a
    string hit by several orgs keeps them all.
    """
    if not string_ids or not index.all_names:
        return {}
    ids = list(string_ids)
    lsh = build_lsh(signatures[ids], threshold, ids=ids, num_perms=num_perms, seed=seed)
    logger.info("fallback LSH %s", lsh.build_log())
    row_of = {sid: row for row, sid in enumerate(ids)}

    names = [name for name, _ in index.all_names]
    probes = minhash_matrix([shingle(n, shingle_width) for n in names], num_perms, seed)
    found: dict[int, dict[str, Candidate]] = defaultdict(dict)
    for (name, org), values in zip(index.all_names, probes):
        hits = query(lsh, MinHashSignature(values, num_perms, seed))
        if not hits:
            continue
        hit_ids = sorted(hits)
        rows = lsh.signatures[[row_of[h] for h in hit_ids]]
        sims = np.count_nonzero(rows == values[None, :], axis=1) / num_perms
        for sid, sim in zip(hit_ids, sims):
            if sim >= threshold:
                found[sid][org.canonical_id] = Candidate.from_org(org)
    return {
        sid: MatchResult(sid, tuple(c[k] for k in sorted(c)), MatchType.JACCARD_FALLBACK)
        for sid, c in sorted(found.items())
    }


def _bind(state: MatchState, bindings: Mapping[int, MatchResult]) -> MatchState:
    """Apply string-level bindings and propagate them to unmatched cluster mates."""
    if not bindings:
        return state
    results = list(state.results)
    touched = {}
    cluster_of = state.cluster_of()
    for sid in bindings:
        c = cluster_of[sid]
        touched[c.cluster_id] = c
    for c in touched.values():
        bound = {sid: bindings[sid] for sid in c.member_ids if sid in bindings}
        for res in propagate_bindings(c, bound, state.strings):
            if not results[res.string_id].matched or res.string_id in bound:
                results[res.string_id] = res
    return state.replace(results)


@dataclass
class MatchRun:
    state: MatchState
    signatures: np.ndarray = field(repr=False)
    rejected: list[tuple[str, int]]
    log: dict

    @property
    def strings(self) -> tuple[FunderString, ...]:
        return self.state.strings

    @property
    def results(self) -> tuple[MatchResult, ...]:
        return self.state.results

    def unmatched(self) -> list[FunderString]:
        return [self.state.strings[r.string_id] for r in self.state.results if not r.matched]


def run_match(
    counts: Mapping[str, int],
    index: ReferenceIndex,
    config: PipelineConfig | None = None,
    annotations: Sequence[ManualAnnotation] = (),
    ner_provider: NerProvider | None = None,
    workers: int = 1,
) -> MatchRun:
    """Match a raw-string -> count corpus against the reference index."""
    config = config or PipelineConfig()
    ner_provider = ner_provider if ner_provider is not None else HeuristicNerProvider()
    log: dict = {}

    # normalize and pull acronyms
    strings, rejected = build_funder_strings(counts)
    if rejected:
        logger.warning("%d strings are empty after normalization and were dropped", len(rejected))
    log["strings"] = len(strings)
    log["rejected"] = len(rejected)

    # minhash / LSH similarity graph, then connected components
    shingles = [shingle(fs.normalized, config.shingle_width) for fs in strings]
    signatures = minhash_matrix(shingles, config.num_perms, config.seed)
    if strings:
        lsh = build_lsh(signatures, config.cluster_threshold, num_perms=config.num_perms, seed=config.seed)
        log["cluster_lsh"] = lsh.build_log()
        edges = build_similarity_graph(strings, lsh, config.cluster_threshold)
    else:
        edges = []
    clusters = connected_components(edges, len(strings), [fs.count for fs in strings])
    log["edges"] = len(edges)
    log["clusters"] = len(clusters)
    log["wide_clusters"] = diameter_warnings(clusters, signatures)

    # rule cascade per cluster and propagation
    matcher = ReferenceMatcher(index, config.coverage_ratio, config.bare_acronyms)
    matches = match_all_clusters(clusters, strings, matcher, workers)
    log["cluster_conflicts"] = sum(1 for m in matches if m.conflicts)
    state = assemble(strings, clusters, matches, matcher)

    # manual annotations, re-propagated inside the touched clusters
    if annotations:
        state = apply_manual_annotations(annotations, state)

    # NER on unmatched medium-frequency strings
    lo, hi = config.medium_freq_band
    medium = [sid for sid in state.unmatched_ids() if lo <= state.strings[sid].count <= hi]
    ner_hits = ner_assist(medium, state, ner_provider)
    log["ner_candidates"] = len(medium)
    log["ner_matched"] = len(ner_hits)
    state = _bind(state, ner_hits)

    # Jaccard fallback against every reference name
    fallback = jaccard_fallback(
        state.unmatched_ids(), signatures, index, config.fallback_threshold,
        config.shingle_width, config.num_perms, config.seed,
    )
    log["fallback_matched"] = len(fallback)
    state = _bind(state, fallback)

    log["high_freq_unmatched"] = sum(
        1 for sid in state.unmatched_ids() if state.strings[sid].count > config.high_freq_cutoff
    )
    return MatchRun(state, signatures, rejected, log)
