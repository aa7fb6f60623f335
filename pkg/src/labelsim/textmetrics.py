"""Natively implemented lexical similarity metrics for sentence pairs.

Everything runs off one deterministic tokenizer: lowercase, split on
whitespace and punctuation, punctuation dropped (inner apostrophes are
kept so contractions stay whole).  chrF is the exception -- it works on
the raw character stream with whitespace runs collapsed.

All scores live in [0, 1] and are exactly 1.0 on identical inputs and
0.0 on inputs that share no vocabulary.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

TokenSeq = Sequence[str]

_TOKEN_RE = re.compile(r"[\w']+", re.UNICODE)


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase and split into word tokens; punctuation is discarded."""
    tokens = []
    for raw in _TOKEN_RE.findall(text.lower()):
        tok = raw.strip("'")
        if tok:
            tokens.append(tok)
    return tuple(tokens)


@dataclass(frozen=True)
class MetricScore:
    """A named score plus its orientation (similarity vs. distance)."""

    metric: str
    value: float
    orientation: str = "similarity"
    extras: dict = field(default_factory=dict)


def _require_tokens(tokens: TokenSeq, side: str) -> None:
    if len(tokens) == 0:
        raise ValueError(f"cannot score an empty token sequence ({side})")


def ngrams(tokens: TokenSeq, n: int) -> Counter:
    """Multiset of order-n token n-grams."""
    if n < 1:
        raise ValueError("n-gram order must be >= 1")
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def word_overlap(a: TokenSeq, b: TokenSeq, mode: str = "jaccard") -> MetricScore:
    """Unigram type overlap: Jaccard by default, |A&B|/|A| in precision mode."""
    _require_tokens(a, "a")
    _require_tokens(b, "b")
    types_a, types_b = set(a), set(b)
    common = len(types_a & types_b)
    if mode == "jaccard":
        value = common / len(types_a | types_b)
    elif mode == "precision":
        value = common / len(types_a)
    else:
        raise ValueError(f"unknown word_overlap mode {mode!r}")
    return MetricScore("word_overlap", value)


def bleu(candidate: TokenSeq, reference: TokenSeq, max_n: int = 4,
         smoothing: str = "add_one") -> MetricScore:
    """Sentence BLEU: clipped n-gram precision, geometric mean, brevity penalty.

    The effective order is capped by the shorter sentence.  With
    ``add_one`` smoothing, orders above 1 use (matches+1)/(total+1); the
    unigram precision is never smoothed, so disjoint sentences score 0.
    The brevity penalty exp(1 - |ref|/|cand|) applies only when the
    candidate is shorter than the reference.
    """
    _require_tokens(candidate, "candidate")
    _require_tokens(reference, "reference")
    if max_n < 1:
        raise ValueError("BLEU max_n must be >= 1")
    if smoothing not in ("none", "add_one"):
        raise ValueError(f"unknown BLEU smoothing {smoothing!r}")
    effective_n = min(max_n, len(candidate), len(reference))
    log_sum = 0.0
    for n in range(1, effective_n + 1):
        cand_counts = ngrams(candidate, n)
        ref_counts = ngrams(reference, n)
        matches = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        total = sum(cand_counts.values())
        if smoothing == "add_one" and n >= 2:
            precision = (matches + 1) / (total + 1)
        else:
            if matches == 0:
                return MetricScore("bleu", 0.0)
            precision = matches / total
        log_sum += math.log(precision)
    geo_mean = math.exp(log_sum / effective_n)
    if len(candidate) < len(reference):
        bp = math.exp(1.0 - len(reference) / len(candidate))
    else:
        bp = 1.0
    return MetricScore("bleu", bp * geo_mean)


def _char_stream(text: str) -> str:
    # whitespace is not a character worth crediting: two texts with no
    # shared letters must score 0, so the stream drops all of it
    return re.sub(r"\s+", "", text.lower())


def _char_ngrams(stream: str, n: int) -> Counter:
    return Counter(stream[i:i + n] for i in range(len(stream) - n + 1))


def _f_beta(p: float, r: float, beta: float) -> float:
    denom = beta * beta * p + r
    if denom == 0.0:
        return 0.0
    return (1 + beta * beta) * p * r / denom


def chrf(text_a: str, text_b: str, max_n: int = 6, beta: float = 2.0) -> MetricScore:
    """Character n-gram F-score over orders 1..max_n.

    Precision and recall are averaged across the orders where either
    side has n-grams, then combined with F_beta (beta favors recall).
    Neither text plays a privileged reference role: the score is the
    mean of the two directional F_beta values, so chrf(a, b) == chrf(b, a).
    """
    stream_a = _char_stream(text_a)
    stream_b = _char_stream(text_b)
    if not stream_a or not stream_b:
        raise ValueError("cannot score empty text with chrf")
    precisions = []
    recalls = []
    for n in range(1, max_n + 1):
        grams_a = _char_ngrams(stream_a, n)
        grams_b = _char_ngrams(stream_b, n)
        total_a = sum(grams_a.values())
        total_b = sum(grams_b.values())
        if total_a == 0 and total_b == 0:
            continue
        matches = sum(min(c, grams_a[g]) for g, c in grams_b.items())
        precisions.append(matches / total_b if total_b else 0.0)
        recalls.append(matches / total_a if total_a else 0.0)
    chr_p = sum(precisions) / len(precisions)
    chr_r = sum(recalls) / len(recalls)
    value = (_f_beta(chr_p, chr_r, beta) + _f_beta(chr_r, chr_p, beta)) / 2.0
    return MetricScore("chrf", value,
                       extras={"precision": chr_p, "recall": chr_r})


def rouge_n(a: TokenSeq, b: TokenSeq, n: int) -> MetricScore:
    """N-gram overlap F1 with clipped counts; recall is taken against ``a``."""
    _require_tokens(a, "a")
    _require_tokens(b, "b")
    grams_a = ngrams(a, n)
    grams_b = ngrams(b, n)
    total_a = sum(grams_a.values())
    total_b = sum(grams_b.values())
    name = f"rouge{n}"
    if total_a == 0 or total_b == 0:
        return MetricScore(name, 0.0, extras={"precision": 0.0, "recall": 0.0})
    matches = sum(min(c, grams_a[g]) for g, c in grams_b.items())
    precision = matches / total_b
    recall = matches / total_a
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricScore(name, f1,
                       extras={"precision": precision, "recall": recall})


def _lcs_length(a: TokenSeq, b: TokenSeq) -> int:
    prev = [0] * (len(b) + 1)
    for tok_a in a:
        cur = [0]
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(a: TokenSeq, b: TokenSeq) -> MetricScore:
    """Longest-common-subsequence F1."""
    _require_tokens(a, "a")
    _require_tokens(b, "b")
    lcs = _lcs_length(a, b)
    recall = lcs / len(a)
    precision = lcs / len(b)
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricScore("rougeL", f1,
                       extras={"precision": precision, "recall": recall})


_STEM_RULES = (
    ("sses", "ss"),
    ("ies", "i"),
    ("ss", "ss"),
    ("s", ""),
)


def light_stem(word: str) -> str:
    """Tiny rule-based suffix stripper (plural endings, -ing, -ed)."""
    for suffix, repl in _STEM_RULES:
        if word.endswith(suffix):
            word = word[: len(word) - len(suffix)] + repl
            break
    for suffix in ("ing", "ed"):
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            word = word[: len(word) - len(suffix)]
            break
    return word


def _align(a: TokenSeq, b: TokenSeq) -> list[tuple[int, int]]:
    """One-to-one unigram alignment: exact matches first, then stem matches.

    Each stage scans ``b`` left to right and takes the earliest unmatched
    position in ``a`` that matches, which keeps the procedure
    deterministic and cheap.
    """
    matched_a: set[int] = set()
    alignment: dict[int, int] = {}

    def run_stage(key) -> None:
        keys_a = [key(tok) for tok in a]
        for j, tok_b in enumerate(b):
            if j in alignment:
                continue
            want = key(tok_b)
            for i, have in enumerate(keys_a):
                if i in matched_a:
                    continue
                if have == want:
                    alignment[j] = i
                    matched_a.add(i)
                    break

    run_stage(lambda t: t)
    run_stage(light_stem)
    return sorted(alignment.items())


def meteor_lite(a: TokenSeq, b: TokenSeq, alpha: float = 0.9,
                gamma: float = 0.5, chunk_exp: float = 3.0) -> MetricScore:
    """Unigram-alignment score with a fragmentation penalty.

    Matches are exact or rule-stemmed.  F = P*R / (alpha*P + (1-alpha)*R),
    multiplied by (1 - gamma*(chunks/matches)**chunk_exp); a single
    contiguous chunk carries no penalty at all.
    """
    _require_tokens(a, "a")
    _require_tokens(b, "b")
    pairs = _align(a, b)
    matches = len(pairs)
    if matches == 0:
        return MetricScore("meteor", 0.0)
    precision = matches / len(b)
    recall = matches / len(a)
    f_mean = precision * recall / (alpha * precision + (1 - alpha) * recall)
    chunks = 1
    for (j_prev, i_prev), (j_cur, i_cur) in zip(pairs, pairs[1:]):
        if j_cur != j_prev + 1 or i_cur != i_prev + 1:
            chunks += 1
    if chunks > 1:
        penalty = gamma * (chunks / matches) ** chunk_exp
    else:
        penalty = 0.0
    return MetricScore("meteor", f_mean * (1.0 - penalty),
                       extras={"matches": matches, "chunks": chunks})


def lexical_metric_names() -> list[str]:
    return ["word_overlap", "bleu1", "bleu", "chrf",
            "rouge1", "rouge2", "rougeL", "meteor"]


def score_pair_lexical(text_a: str, text_b: str,
                       overlap_mode: str = "jaccard") -> dict[str, MetricScore]:
    """All lexical metrics for one sentence pair, keyed by metric name."""
    tokens_a = tokenize(text_a)
    tokens_b = tokenize(text_b)
    scores = {
        "word_overlap": word_overlap(tokens_a, tokens_b, mode=overlap_mode),
        "bleu1": MetricScore("bleu1", bleu(tokens_b, tokens_a, max_n=1,
                                           smoothing="none").value),
        "bleu": bleu(tokens_b, tokens_a, max_n=4, smoothing="add_one"),
        "chrf": chrf(text_a, text_b),
        "rouge1": rouge_n(tokens_a, tokens_b, 1),
        "rouge2": rouge_n(tokens_a, tokens_b, 2),
        "rougeL": rouge_l(tokens_a, tokens_b),
        "meteor": meteor_lite(tokens_a, tokens_b),
    }
    return scores
