"""Correlating metric scores with (filtered) human gold labels.

The gold value of a pair is the arithmetic mean of its surviving labels.
Pearson is the headline statistic; Spearman rides along in a secondary
column.  A constant input makes a correlation undefined and that is an
error here, never a silent zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import LabeledCorpus, SentencePair
from .heuristics import (CorpusLike, FilteredCorpus, HeuristicConfig,
                         HeuristicId, Scorers, apply_filters,
                         compute_flag_reports, heuristic_subsets,
                         normalize_subset, subset_label)
from . import embmetrics, textmetrics


class UndefinedCorrelationError(ValueError):
    """Raised when a correlation has no defined value (constant input)."""


@dataclass(frozen=True)
class PairGold:
    pair_id: str
    mean_label: float
    n_annotations: int


def _plain_corpus(corpus: CorpusLike) -> LabeledCorpus:
    return corpus.corpus if isinstance(corpus, FilteredCorpus) else corpus


def pair_gold(corpus: CorpusLike,
              annotator_ids: Optional[set] = None) -> dict[str, PairGold]:
    """Mean label per pair; pairs without annotations are simply absent.

    ``annotator_ids`` restricts the averaging to labels from those
    annotators (used by the style-split reports).
    """
    plain = _plain_corpus(corpus)
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for ann in plain.annotations:
        if annotator_ids is not None and ann.annotator_id not in annotator_ids:
            continue
        sums[ann.pair_id] = sums.get(ann.pair_id, 0.0) + ann.label
        counts[ann.pair_id] = counts.get(ann.pair_id, 0) + 1
    return {
        pid: PairGold(pid, sums[pid] / counts[pid], counts[pid])
        for pid in sums
    }


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation; raises on constant input."""
    if len(xs) != len(ys):
        raise ValueError("correlation inputs must have equal length")
    if len(xs) < 3:
        raise ValueError("correlation needs at least 3 observations")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError(
            "correlation undefined: an input is constant")
    r = float((dx * dy).sum() / (sx * sy))
    return max(-1.0, min(1.0, r))


def _ranks(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=np.float64)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        # ties share the average of the ranks they span
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation (average ranks on ties)."""
    if len(xs) != len(ys):
        raise ValueError("correlation inputs must have equal length")
    return pearson(_ranks(xs), _ranks(ys))


def percent_change(value: float, baseline: float) -> float:
    """Relative change in percent against a non-zero baseline."""
    if baseline == 0.0:
        raise ZeroDivisionError("percent change undefined for zero baseline")
    return (value - baseline) / abs(baseline) * 100.0


# ---------------------------------------------------------------------------
# metric scoring over a corpus


LEXICAL_METRICS = tuple(textmetrics.lexical_metric_names())
EMBEDDING_METRICS = ("cosine", "l2", "wmd", "pos_dist")


def metric_universe(corpus: Optional[LabeledCorpus] = None) -> list[str]:
    names = list(LEXICAL_METRICS) + list(EMBEDDING_METRICS)
    if corpus is not None:
        names.extend(sorted(corpus.precomputed_scores))
    return names


def compute_metric_scores(corpus: LabeledCorpus,
                          metrics: Sequence[str],
                          table: Optional[embmetrics.EmbeddingTable] = None,
                          noun_tagger: Optional[Callable] = None,
                          gold_tags: Optional[Mapping] = None,
                          sent_embeddings: Optional[Mapping] = None,
                          distance_channels: Iterable[str] = (),
                          overlap_mode: str = "jaccard",
                          pos_aggregate: str = "matched",
                          wmd_method: str = "exact",
                          epsilon: float = 0.01,
                          max_iter: int = 10000,
                          jobs: int = 1,
                          oriented: bool = True,
                          ) -> tuple[dict[str, dict[str, float]], dict[str, int]]:
    """Score every pair with the requested metrics.

    Returns ``(scores, dropped)`` where ``scores[name][pair_id]`` is the
    oriented value (distances already negated so higher always means more
    similar) and ``dropped[name]`` counts pairs where the metric was
    undefined.  Precomputed channels are pulled from the corpus; names
    listed in ``distance_channels`` are negated like native distances.
    ``oriented=False`` keeps every value raw (distances stay positive),
    which is what the metric-matrix dump wants.
    """
    metrics = list(metrics)
    known = set(metric_universe(corpus))
    for name in metrics:
        if name not in known:
            raise ValueError(f"unknown metric {name!r}")
    needs_table = [m for m in metrics if m in ("cosine", "wmd", "pos_dist")]
    if needs_table and table is None:
        raise ValueError(f"metrics {needs_table} need an embedding table")
    if "l2" in metrics and table is None and sent_embeddings is None:
        raise ValueError(
            "metric 'l2' needs an embedding table or sentence embeddings")
    if "pos_dist" in metrics and gold_tags is None and noun_tagger is None:
        noun_tagger = embmetrics.lexicon_noun_tagger()

    lexical_wanted = [m for m in metrics if m in LEXICAL_METRICS]
    distance_channels = set(distance_channels)

    def finish(score) -> float:
        return embmetrics.orient(score) if oriented else score.value

    def score_one(pair: SentencePair) -> dict[str, float]:
        out: dict[str, float] = {}
        if lexical_wanted:
            lex = textmetrics.score_pair_lexical(pair.text_a, pair.text_b,
                                                 overlap_mode=overlap_mode)
            for name in lexical_wanted:
                out[name] = finish(lex[name])
        tokens_a = tokens_b = None
        if any(m in metrics for m in ("cosine", "l2", "wmd", "pos_dist")):
            tokens_a = textmetrics.tokenize(pair.text_a)
            tokens_b = textmetrics.tokenize(pair.text_b)
        if "cosine" in metrics:
            try:
                va = embmetrics.sentence_vector(tokens_a, table)
                vb = embmetrics.sentence_vector(tokens_b, table)
                out["cosine"] = embmetrics.cosine_similarity(va, vb)
            except ValueError:
                pass
        if "l2" in metrics:
            try:
                if sent_embeddings is not None:
                    sides = sent_embeddings.get(pair.pair_id, {})
                    if "a" not in sides or "b" not in sides:
                        raise ValueError("missing sentence embedding")
                    va, vb = sides["a"], sides["b"]
                else:
                    va = embmetrics.sentence_vector(tokens_a, table)
                    vb = embmetrics.sentence_vector(tokens_b, table)
                dist = embmetrics.l2_distance(va, vb)
                out["l2"] = -dist if oriented else dist
            except ValueError:
                pass
        if "wmd" in metrics:
            try:
                score = embmetrics.wmd(tokens_a, tokens_b, table,
                                       method=wmd_method, epsilon=epsilon,
                                       max_iter=max_iter)
                out["wmd"] = finish(score)
            except ValueError:
                pass
        if "pos_dist" in metrics:
            if gold_tags is not None:
                tagger_a = lambda toks: embmetrics.nouns_from_tags(
                    toks, gold_tags.get((pair.pair_id, "a"), {}))
                tagger_b = lambda toks: embmetrics.nouns_from_tags(
                    toks, gold_tags.get((pair.pair_id, "b"), {}))
            else:
                tagger_a = tagger_b = noun_tagger
            nouns_a = [t for t in tagger_a(tokens_a) if t in table.vectors]
            nouns_b = [t for t in tagger_b(tokens_b) if t in table.vectors]
            if nouns_a and nouns_b:
                score = embmetrics.pos_distance(
                    nouns_a, nouns_b, lambda toks: list(toks), table,
                    aggregate=pos_aggregate)
                if score is not None:
                    out["pos_dist"] = finish(score)
        return out

    pairs = list(corpus.pairs)
    if jobs and jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_pair = list(pool.map(score_one, pairs))
    else:
        per_pair = [score_one(p) for p in pairs]

    scores: dict[str, dict[str, float]] = {name: {} for name in metrics}
    for pair, got in zip(pairs, per_pair):
        for name, value in got.items():
            scores[name][pair.pair_id] = value

    for name in metrics:
        if name in corpus.precomputed_scores:
            sign = -1.0 if oriented and name in distance_channels else 1.0
            scores[name] = {pid: sign * val for pid, val
                            in corpus.precomputed_scores[name].items()}

    dropped = {name: len(pairs) - len(scores[name]) for name in metrics}
    return scores, dropped


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class MetricCorrelation:
    pearson: float
    spearman: float
    n_pairs: int


@dataclass(frozen=True)
class SubsetResult:
    subset: tuple[HeuristicId, ...]
    removed_annotators: tuple[str, ...]
    cells: dict[str, MetricCorrelation]
    pct_change: dict[str, tuple[float, float]]


@dataclass(frozen=True)
class CorrelationReport:
    label: str
    status: str
    metrics: tuple[str, ...]
    baseline: dict[str, MetricCorrelation]
    subsets: tuple[SubsetResult, ...]
    dropped: dict[str, int]
    unavailable: dict[str, str]
    n_pairs: int = 0


def _gold_observations(corpus: CorpusLike,
                       annotator_ids: Optional[set],
                       per_annotation: bool) -> dict[str, list[float]]:
    """Gold values per pair: one mean, or every label separately."""
    plain = _plain_corpus(corpus)
    labels: dict[str, list[float]] = {}
    for ann in plain.annotations:
        if annotator_ids is not None and ann.annotator_id not in annotator_ids:
            continue
        labels.setdefault(ann.pair_id, []).append(float(ann.label))
    if per_annotation:
        return labels
    return {pid: [sum(vals) / len(vals)] for pid, vals in labels.items()}


def _correlate_cells(metrics: Sequence[str],
                     scores: Mapping[str, Mapping[str, float]],
                     gold: Mapping[str, Sequence[float]],
                     ) -> dict[str, MetricCorrelation]:
    cells = {}
    for name in metrics:
        defined = scores[name]
        joined = sorted(pid for pid in defined if pid in gold)
        xs: list[float] = []
        ys: list[float] = []
        for pid in joined:
            for obs in gold[pid]:
                xs.append(defined[pid])
                ys.append(obs)
        cells[name] = MetricCorrelation(
            pearson=pearson(xs, ys),
            spearman=spearman(xs, ys),
            n_pairs=len(joined),
        )
    return cells


def correlation_report(corpus: LabeledCorpus,
                       metric_scores: Mapping[str, Mapping[str, float]],
                       subsets: Optional[Sequence[Sequence[HeuristicId]]] = None,
                       cfg: Optional[HeuristicConfig] = None,
                       scorers: Optional[Scorers] = None,
                       reports: Optional[dict] = None,
                       dropped: Optional[dict[str, int]] = None,
                       annotator_ids: Optional[set] = None,
                       label: str = "all annotators",
                       unavailable_fraction: float = 0.5,
                       per_annotation: bool = False,
                       ) -> CorrelationReport:
    """Baseline and per-filter-subset correlations for every metric.

    ``metric_scores`` holds oriented per-pair values as produced by
    :func:`compute_metric_scores`.  A metric undefined on more than
    ``unavailable_fraction`` of the pairs is excluded and listed under
    ``unavailable``.  ``annotator_ids`` restricts the gold computation to
    a sub-population (the style reports use this).
    """
    subsets = [normalize_subset(s) for s in subsets] if subsets is not None \
        else heuristic_subsets()
    dropped = dict(dropped or {})

    n_pairs = len(corpus.pairs)
    usable: list[str] = []
    unavailable: dict[str, str] = {}
    for name in metric_scores:
        missing = dropped.get(name, n_pairs - len(metric_scores[name]))
        dropped[name] = missing
        if missing > unavailable_fraction * n_pairs:
            unavailable[name] = (
                f"undefined on {missing} of {n_pairs} pairs")
        else:
            usable.append(name)

    if annotator_ids is not None and not annotator_ids:
        return CorrelationReport(
            label=label, status="empty: no annotators in this panel",
            metrics=(), baseline={}, subsets=(), dropped=dropped,
            unavailable=unavailable, n_pairs=n_pairs)

    base_gold = _gold_observations(corpus, annotator_ids, per_annotation)
    baseline = _correlate_cells(usable, metric_scores, base_gold)

    if reports is None:
        universe = sorted({h for s in subsets for h in s})
        reports = compute_flag_reports(corpus, universe, cfg, scorers)

    subset_rows = []
    for subset in subsets:
        filtered = apply_filters(corpus, subset, cfg, scorers, reports=reports)
        keep = annotator_ids
        if keep is not None:
            keep = keep - set(filtered.removed_annotators)
        gold = _gold_observations(filtered, keep, per_annotation)
        cells = _correlate_cells(usable, metric_scores, gold)
        pct = {
            name: (percent_change(cells[name].pearson, baseline[name].pearson),
                   percent_change(cells[name].spearman, baseline[name].spearman))
            for name in usable
        }
        subset_rows.append(SubsetResult(
            subset=subset,
            removed_annotators=tuple(sorted(filtered.removed_annotators)),
            cells=cells,
            pct_change=pct,
        ))

    return CorrelationReport(
        label=label, status="ok", metrics=tuple(usable), baseline=baseline,
        subsets=tuple(subset_rows), dropped=dropped,
        unavailable=unavailable, n_pairs=n_pairs)


def style_split_report(corpus: LabeledCorpus,
                       metric_scores: Mapping[str, Mapping[str, float]],
                       subsets: Optional[Sequence[Sequence[HeuristicId]]] = None,
                       cfg: Optional[HeuristicConfig] = None,
                       scorers: Optional[Scorers] = None,
                       dropped: Optional[dict[str, int]] = None,
                       exclude_midpoint_from_variance: bool = False,
                       ) -> tuple[CorrelationReport, CorrelationReport]:
    """Correlation reports using gold means from Radical-only and
    Centrist-only annotators, in that order."""
    from .stats import Style, annotator_profiles

    profiles = annotator_profiles(
        corpus, exclude_midpoint_from_variance=exclude_midpoint_from_variance)
    radical = {aid for aid, p in profiles.items() if p.style is Style.RADICAL}
    centrist = {aid for aid, p in profiles.items() if p.style is Style.CENTRIST}

    out = []
    for style_name, ids in (("Radical", radical), ("Centrist", centrist)):
        out.append(correlation_report(
            corpus, metric_scores, subsets=subsets, cfg=cfg, scorers=scorers,
            dropped=dict(dropped or {}), annotator_ids=ids,
            label=f"{style_name}-only gold"))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# renderers


def _fmt(value: Optional[float], spec: str = ".6f") -> str:
    return "" if value is None else format(value, spec)


def render_report_csv(report: CorrelationReport) -> str:
    panel = report.label.replace(",", ";")
    lines = ["panel,filter,metric,pearson,spearman,pearson_pct,spearman_pct,"
             "n_pairs,dropped_pairs,removed_annotators"]
    for name in report.metrics:
        cell = report.baseline[name]
        lines.append(
            f"{panel},baseline,{name},{_fmt(cell.pearson)},"
            f"{_fmt(cell.spearman)},,,{cell.n_pairs},"
            f"{report.dropped.get(name, 0)},")
    for row in report.subsets:
        tag = "+".join(str(int(h)) for h in row.subset)
        for name in report.metrics:
            cell = row.cells[name]
            p_pct, s_pct = row.pct_change[name]
            lines.append(
                f"{panel},{tag},{name},{_fmt(cell.pearson)},"
                f"{_fmt(cell.spearman)},{_fmt(p_pct, '.2f')},"
                f"{_fmt(s_pct, '.2f')},{cell.n_pairs},,"
                f"{len(row.removed_annotators)}")
    return "\n".join(lines) + "\n"


def render_report_json(report: CorrelationReport) -> str:
    def cell_dict(cell: MetricCorrelation) -> dict:
        return {"pearson": cell.pearson, "spearman": cell.spearman,
                "n_pairs": cell.n_pairs}

    doc = {
        "label": report.label,
        "status": report.status,
        "n_pairs": report.n_pairs,
        "metrics": list(report.metrics),
        "dropped_pairs": {k: report.dropped[k] for k in sorted(report.dropped)},
        "unavailable": {k: report.unavailable[k]
                        for k in sorted(report.unavailable)},
        "baseline": {name: cell_dict(report.baseline[name])
                     for name in report.metrics},
        "subsets": [
            {
                "subset": [int(h) for h in row.subset],
                "removed_annotators": list(row.removed_annotators),
                "cells": {
                    name: dict(cell_dict(row.cells[name]),
                               pearson_pct=row.pct_change[name][0],
                               spearman_pct=row.pct_change[name][1])
                    for name in report.metrics
                },
            }
            for row in report.subsets
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def render_report_text(report: CorrelationReport) -> str:
    lines = [f"Correlation report ({report.label}); gold = mean surviving label"]
    if report.status != "ok":
        lines.append(f"status: {report.status}")
        return "\n".join(lines) + "\n"
    width = max([len("filter")] + [len(subset_label(r.subset))
                                   for r in report.subsets])
    header = "filter".ljust(width) + "".join(
        f"  {name:>20}" for name in report.metrics)
    lines.append(header)
    base_cells = "".join(
        f"  {report.baseline[name].pearson:>20.4f}" for name in report.metrics)
    lines.append("baseline".ljust(width) + base_cells)
    for row in report.subsets:
        cells = ""
        for name in report.metrics:
            val = row.cells[name].pearson
            pct = row.pct_change[name][0]
            cells += f"  {f'{val:.4f} ({pct:+.1f}%)':>20}"
        lines.append(subset_label(row.subset).ljust(width) + cells)
    if report.unavailable:
        lines.append("")
        for name in sorted(report.unavailable):
            lines.append(f"unavailable: {name} ({report.unavailable[name]})")
    return "\n".join(lines) + "\n"
