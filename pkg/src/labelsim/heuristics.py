"""Unreliable-annotator flags and the filter-combination engine.

Five heuristics, numbered as they appear in reports:

1. slow            -- mean labeling time above a threshold
2. low_variance    -- label variance below a threshold
3. high_random     -- labels random pairs above non-random pairs
4. disagreeable    -- overrules unanimous co-annotators too often
5. sentiment_disaligned -- erratic labels on lexically-close but
                           sentiment-divergent pairs

Filtering removes the union of annotators flagged by the chosen subset.
Flags are always evaluated against the original corpus a filtered view
descends from, so applying the same subset twice removes nothing new and
a larger subset always removes a superset of annotators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Iterable, Mapping, Optional, Union

from .corpus import Annotation, LabeledCorpus
from .stats import population_variance, reduce_label


class HeuristicId(IntEnum):
    SLOW = 1
    LOW_VARIANCE = 2
    HIGH_RANDOM = 3
    DISAGREEABLE = 4
    SENTIMENT_DISALIGNED = 5


ALL_HEURISTICS = tuple(HeuristicId)


@dataclass(frozen=True)
class HeuristicConfig:
    """Thresholds for the five flags; defaults match the report legend."""

    slow_threshold: float = 300.0
    low_variance_threshold: float = 1.0
    disagreement_threshold: float = 0.5
    overlap_threshold: float = 0.8
    sentiment_gap_threshold: float = 1.9
    sentiment_variance_threshold: float = 1.0
    overlap_bleu_order: int = 1
    min_sentiment_pairs: int = 2

    def validate(self) -> None:
        if self.slow_threshold <= 0:
            raise ValueError("slow_threshold must be positive")
        if self.low_variance_threshold < 0:
            raise ValueError("low_variance_threshold must be non-negative")
        if not 0 <= self.disagreement_threshold <= 1:
            raise ValueError("disagreement_threshold must lie in [0, 1]")
        if not 0 <= self.overlap_threshold <= 1:
            raise ValueError("overlap_threshold must lie in [0, 1]")
        if self.sentiment_gap_threshold < 0:
            raise ValueError("sentiment_gap_threshold must be non-negative")
        if self.sentiment_variance_threshold < 0:
            raise ValueError("sentiment_variance_threshold must be non-negative")
        if self.overlap_bleu_order < 1:
            raise ValueError("overlap_bleu_order must be >= 1")
        if self.min_sentiment_pairs < 1:
            raise ValueError("min_sentiment_pairs must be >= 1")


@dataclass(frozen=True)
class FlagEvidence:
    """The statistic that tripped a flag, with the threshold it crossed."""

    statistic: str
    value: float
    threshold: float


@dataclass(frozen=True)
class FlagReport:
    annotator_id: str
    flags: frozenset[HeuristicId]
    evidence: dict[HeuristicId, FlagEvidence]


@dataclass
class Scorers:
    """Pluggable text scorers used by the sentiment-disalignment flag.

    ``overlap(text_a, text_b)`` returns a lexical-closeness score in
    [0, 1]; ``sentiment(text)`` returns a polarity score.  Per-pair
    sentiment overrides (from an ingested file) win over the callable.
    """

    overlap: Callable[[str, str], float]
    sentiment: Callable[[str], float]
    pair_sentiment: Optional[Mapping[str, tuple[float, float]]] = None


def default_scorers(cfg: Optional[HeuristicConfig] = None) -> Scorers:
    """Bundled scorers: sentence-BLEU overlap and the built-in sentiment lexicon."""
    from .textmetrics import bleu, tokenize
    from .sentiment import default_sentiment_scorer

    cfg = cfg or HeuristicConfig()
    order = cfg.overlap_bleu_order

    def overlap(text_a: str, text_b: str) -> float:
        return bleu(tokenize(text_b), tokenize(text_a),
                    max_n=order, smoothing="none").value

    return Scorers(overlap=overlap, sentiment=default_sentiment_scorer())


def flag_slow(corpus: LabeledCorpus, annotator_id: str,
              cfg: HeuristicConfig) -> Optional[FlagEvidence]:
    """Heuristic 1: mean labeling duration strictly above the threshold."""
    anns = _annotations_of(corpus, annotator_id)
    mean_duration = sum(a.duration for a in anns) / len(anns)
    if mean_duration > cfg.slow_threshold:
        return FlagEvidence("mean_duration", mean_duration, cfg.slow_threshold)
    return None


def flag_low_variance(corpus: LabeledCorpus, annotator_id: str,
                      cfg: HeuristicConfig) -> Optional[FlagEvidence]:
    """Heuristic 2: population label variance strictly below the threshold."""
    anns = _annotations_of(corpus, annotator_id)
    variance = population_variance([a.label for a in anns])
    if variance < cfg.low_variance_threshold:
        return FlagEvidence("label_variance", variance,
                            cfg.low_variance_threshold)
    return None


def flag_high_random(corpus: LabeledCorpus,
                     annotator_id: str) -> Optional[FlagEvidence]:
    """Heuristic 3: mean label on random pairs strictly above non-random pairs.

    Both means must be defined; an annotator who never saw one of the two
    pair kinds is never flagged.
    """
    anns = _annotations_of(corpus, annotator_id)
    random_labels = []
    nonrandom_labels = []
    for a in anns:
        if corpus.pairs_by_id[a.pair_id].is_random:
            random_labels.append(a.label)
        else:
            nonrandom_labels.append(a.label)
    if not random_labels or not nonrandom_labels:
        return None
    mean_random = sum(random_labels) / len(random_labels)
    mean_nonrandom = sum(nonrandom_labels) / len(nonrandom_labels)
    if mean_random > mean_nonrandom:
        return FlagEvidence("mean_random_label", mean_random, mean_nonrandom)
    return None


def disagreement_rate(corpus: LabeledCorpus,
                      annotator_id: str) -> Optional[float]:
    """Fraction of pairs where the annotator's reduced label contradicts a
    unanimous reduced verdict of exactly two co-annotators.

    Pairs with any other number of co-annotators, or where the two
    co-annotators disagree with each other, do not count.  Returns None
    when no pair qualifies.
    """
    anns = _annotations_of(corpus, annotator_id)
    considered = 0
    disagreed = 0
    for a in anns:
        others = [x for x in corpus.annotations_by_pair[a.pair_id]
                  if x.annotator_id != annotator_id]
        if len(others) != 2:
            continue
        reduced = [reduce_label(x.label) for x in others]
        if reduced[0] != reduced[1]:
            continue
        considered += 1
        if reduce_label(a.label) != reduced[0]:
            disagreed += 1
    if considered == 0:
        return None
    return disagreed / considered


def flag_disagreeable(corpus: LabeledCorpus, annotator_id: str,
                      cfg: HeuristicConfig) -> Optional[FlagEvidence]:
    """Heuristic 4: disagreement rate strictly above the threshold."""
    rate = disagreement_rate(corpus, annotator_id)
    if rate is not None and rate > cfg.disagreement_threshold:
        return FlagEvidence("disagreement_rate", rate,
                            cfg.disagreement_threshold)
    return None


def sentiment_qualifying_pairs(corpus: LabeledCorpus, scorers: Scorers,
                               cfg: HeuristicConfig) -> set[str]:
    """Pairs that are lexically close yet far apart in sentiment.

    Qualification: overlap score strictly above ``overlap_threshold`` and
    absolute sentiment gap at least ``sentiment_gap_threshold``.
    """
    qualifying: set[str] = set()
    overrides = scorers.pair_sentiment or {}
    for pair in corpus.pairs:
        if scorers.overlap(pair.text_a, pair.text_b) <= cfg.overlap_threshold:
            continue
        if pair.pair_id in overrides:
            score_a, score_b = overrides[pair.pair_id]
        else:
            score_a = scorers.sentiment(pair.text_a)
            score_b = scorers.sentiment(pair.text_b)
        if abs(score_a - score_b) >= cfg.sentiment_gap_threshold:
            qualifying.add(pair.pair_id)
    return qualifying


def flag_sentiment_disaligned(corpus: LabeledCorpus, annotator_id: str,
                              cfg: HeuristicConfig, scorers: Scorers,
                              qualifying: Optional[set[str]] = None
                              ) -> Optional[FlagEvidence]:
    """Heuristic 5: erratic labels on the sentiment-divergent qualifying pairs.

    Requires at least ``min_sentiment_pairs`` qualifying pairs labeled by
    the annotator; flags when the population variance of those labels is
    strictly above ``sentiment_variance_threshold``.
    """
    if qualifying is None:
        qualifying = sentiment_qualifying_pairs(corpus, scorers, cfg)
    anns = _annotations_of(corpus, annotator_id)
    labels = [a.label for a in anns if a.pair_id in qualifying]
    if len(labels) < cfg.min_sentiment_pairs:
        return None
    variance = population_variance(labels)
    if variance > cfg.sentiment_variance_threshold:
        return FlagEvidence("sentiment_pair_label_variance", variance,
                            cfg.sentiment_variance_threshold)
    return None


def compute_flag_reports(corpus: LabeledCorpus,
                         subset: Iterable[HeuristicId],
                         cfg: Optional[HeuristicConfig] = None,
                         scorers: Optional[Scorers] = None
                         ) -> dict[str, FlagReport]:
    """Evaluate the given heuristics for every annotator in one pass."""
    cfg = cfg or HeuristicConfig()
    cfg.validate()
    subset = normalize_subset(subset)

    qualifying: Optional[set[str]] = None
    if HeuristicId.SENTIMENT_DISALIGNED in subset:
        if scorers is None:
            scorers = default_scorers(cfg)
        qualifying = sentiment_qualifying_pairs(corpus, scorers, cfg)

    reports: dict[str, FlagReport] = {}
    for annotator_id in corpus.annotator_ids():
        evidence: dict[HeuristicId, FlagEvidence] = {}
        for h in subset:
            if h is HeuristicId.SLOW:
                ev = flag_slow(corpus, annotator_id, cfg)
            elif h is HeuristicId.LOW_VARIANCE:
                ev = flag_low_variance(corpus, annotator_id, cfg)
            elif h is HeuristicId.HIGH_RANDOM:
                ev = flag_high_random(corpus, annotator_id)
            elif h is HeuristicId.DISAGREEABLE:
                ev = flag_disagreeable(corpus, annotator_id, cfg)
            else:
                ev = flag_sentiment_disaligned(corpus, annotator_id, cfg,
                                               scorers, qualifying)
            if ev is not None:
                evidence[h] = ev
        reports[annotator_id] = FlagReport(
            annotator_id=annotator_id,
            flags=frozenset(evidence),
            evidence=evidence,
        )
    return reports


@dataclass(frozen=True)
class FilteredCorpus:
    """A corpus view with flagged annotators removed.

    ``corpus`` holds the surviving annotations; ``source`` is the corpus
    the flags were computed on, kept so that repeated filtering keeps
    judging annotators on their full record.
    """

    corpus: LabeledCorpus
    source: LabeledCorpus
    subset: tuple[HeuristicId, ...]
    removed_annotators: frozenset[str]
    reports: dict[str, FlagReport] = field(repr=False)


CorpusLike = Union[LabeledCorpus, FilteredCorpus]


def _source_of(corpus: CorpusLike) -> tuple[LabeledCorpus, frozenset[str]]:
    if isinstance(corpus, FilteredCorpus):
        return corpus.source, corpus.removed_annotators
    return corpus, frozenset()


def _annotations_of(corpus: LabeledCorpus, annotator_id: str) -> tuple[Annotation, ...]:
    anns = corpus.annotations_by_annotator.get(annotator_id)
    if not anns:
        raise ValueError(f"annotator {annotator_id!r} has no annotations")
    return anns


def normalize_subset(subset: Iterable[HeuristicId]) -> tuple[HeuristicId, ...]:
    """Deduplicate, validate and sort a heuristic subset."""
    ids = sorted({HeuristicId(h) for h in subset})
    if not ids:
        raise ValueError("heuristic subset must not be empty")
    return tuple(ids)


def apply_filters(corpus: CorpusLike,
                  subset: Iterable[HeuristicId],
                  cfg: Optional[HeuristicConfig] = None,
                  scorers: Optional[Scorers] = None,
                  reports: Optional[dict[str, FlagReport]] = None
                  ) -> FilteredCorpus:
    """Remove every annotator flagged by any heuristic in ``subset``.

    Accepts a plain corpus or an already-filtered one; in the latter case
    flags are re-evaluated on the original corpus and the removals
    accumulate.  Precomputed reports (covering at least ``subset``) can
    be passed in to avoid recomputation across many subsets.
    """
    subset = normalize_subset(subset)
    source, already_removed = _source_of(corpus)
    if reports is None:
        reports = compute_flag_reports(source, subset, cfg, scorers)

    removed = set(already_removed)
    for annotator_id, report in reports.items():
        if report.flags & set(subset):
            removed.add(annotator_id)

    surviving = tuple(a for a in source.annotations
                      if a.annotator_id not in removed)
    filtered = LabeledCorpus(
        pairs=source.pairs,
        annotations=surviving,
        precomputed_scores=source.precomputed_scores,
    )
    return FilteredCorpus(
        corpus=filtered,
        source=source,
        subset=subset,
        removed_annotators=frozenset(removed),
        reports=reports,
    )


def heuristic_subsets(universe: Optional[Iterable[HeuristicId]] = None
                      ) -> list[tuple[HeuristicId, ...]]:
    """Every non-empty subset of the heuristics, ordered by size then
    lexicographically -- the row order used in the combination reports."""
    ids = sorted({HeuristicId(h) for h in universe}) if universe is not None \
        else list(ALL_HEURISTICS)
    out: list[tuple[HeuristicId, ...]] = []
    for size in range(1, len(ids) + 1):
        out.extend(itertools.combinations(ids, size))
    return out


def subset_label(subset: Iterable[HeuristicId]) -> str:
    """Render a subset the way report rows are labeled, e.g. ``[2, 3]``."""
    return "[" + ", ".join(str(int(h)) for h in normalize_subset(subset)) + "]"
