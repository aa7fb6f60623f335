"""Tests for metric scoring, gold aggregation, and correlation reports."""

import json
import math
import random

import numpy as np
import pytest

from labelsim.corpus import attach_precomputed
from labelsim.correlate import (
    EMBEDDING_METRICS,
    LEXICAL_METRICS,
    CorrelationReport,
    UndefinedCorrelationError,
    compute_metric_scores,
    correlation_report,
    metric_universe,
    pair_gold,
    pearson,
    percent_change,
    render_report_csv,
    render_report_json,
    render_report_text,
    spearman,
    style_split_report,
)
from labelsim.embmetrics import EmbeddingTable
from labelsim.heuristics import HeuristicId
from labelsim.textmetrics import lexical_metric_names, score_pair_lexical

from conftest import make_corpus
from oracles import pearson_oracle, spearman_oracle


# ------------------------------------------------------------ correlation


def test_pearson_frozen_value():
    # ranks swap the last two items: classic r = 0.5
    assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)


def test_pearson_perfect_and_affine():
    xs = [0.3, 1.4, 2.2, 5.0]
    up = [2.0 * x + 7.0 for x in xs]
    down = [-0.5 * x + 1.0 for x in xs]
    assert pearson(xs, up) == pytest.approx(1.0)
    assert pearson(xs, down) == pytest.approx(-1.0)


def test_pearson_matches_oracle():
    rng = random.Random(20240819)
    for _ in range(100):
        n = rng.randint(3, 30)
        xs = [rng.uniform(-5, 5) for _ in range(n)]
        ys = [rng.uniform(-5, 5) for _ in range(n)]
        got = pearson(xs, ys)
        assert got == pytest.approx(pearson_oracle(xs, ys), abs=1e-12)
        assert -1.0 <= got <= 1.0


def test_pearson_errors():
    with pytest.raises(ValueError, match="equal length"):
        pearson([1, 2, 3], [1, 2])
    with pytest.raises(ValueError, match="at least 3"):
        pearson([1, 2], [3, 4])
    with pytest.raises(UndefinedCorrelationError, match="constant"):
        pearson([2, 2, 2], [1, 2, 3])
    with pytest.raises(UndefinedCorrelationError, match="constant"):
        pearson([1, 2, 3], [5, 5, 5])


def test_spearman_monotone_transform_is_one():
    xs = [0.1, 2.0, 3.5, 9.0, 11.0]
    ys = [math.exp(x) for x in xs]
    assert spearman(xs, ys) == pytest.approx(1.0)
    assert spearman(xs, [-y for y in ys]) == pytest.approx(-1.0)


def test_spearman_tie_handling_frozen():
    # xs ranks [1, 2.5, 2.5, 4] against ys ranks [1, 2, 3, 4]:
    # r = 4.5 / sqrt(4.5 * 5) = 3 / sqrt(10)
    assert spearman([1, 2, 2, 3], [1, 2, 3, 4]) == \
        pytest.approx(3.0 / math.sqrt(10.0))


def test_spearman_matches_oracle_with_ties():
    rng = random.Random(4242)
    for _ in range(100):
        n = rng.randint(3, 25)
        xs = [rng.choice([0.0, 1.0, 2.5, 7.0]) for _ in range(n)]
        ys = [rng.choice([0.0, 1.0, 2.5, 7.0]) for _ in range(n)]
        try:
            expected = spearman_oracle(xs, ys)
        except ZeroDivisionError:
            continue
        if math.isnan(expected):
            continue
        try:
            got = spearman(xs, ys)
        except UndefinedCorrelationError:
            assert len(set(xs)) == 1 or len(set(ys)) == 1
            continue
        assert got == pytest.approx(expected, abs=1e-12)


def test_percent_change():
    assert percent_change(1.2, 1.0) == pytest.approx(20.0)
    assert percent_change(-0.5, -1.0) == pytest.approx(50.0)
    assert percent_change(-1.5, -1.0) == pytest.approx(-50.0)
    with pytest.raises(ZeroDivisionError):
        percent_change(1.0, 0.0)


# ------------------------------------------------------------- pair gold


def gold_fixture():
    return make_corpus(
        [("p1", "alpha beta", "gamma delta"),
         ("p2", "epsilon zeta", "eta theta"),
         ("p3", "iota kappa", "lam mu")],
        [("p1", "good", 1), ("p1", "junk", 3),
         ("p2", "good", 4), ("p2", "junk", 3),
         ("p3", "good", 5)],
    )


def test_pair_gold_means():
    gold = pair_gold(gold_fixture())
    assert gold["p1"].mean_label == 2.0
    assert gold["p1"].n_annotations == 2
    assert gold["p2"].mean_label == 3.5
    assert gold["p3"].mean_label == 5.0


def test_pair_gold_annotator_restriction():
    gold = pair_gold(gold_fixture(), annotator_ids={"junk"})
    assert set(gold) == {"p1", "p2"}  # junk never saw p3
    assert gold["p1"].mean_label == 3.0


def test_pair_gold_skips_unannotated_pairs():
    corpus = make_corpus(
        [("p1", "a b", "c d"), ("p2", "e f", "g h")],
        [("p1", "good", 2)],
    )
    assert set(pair_gold(corpus)) == {"p1"}


# ------------------------------------------------------- metric scoring


def scoring_corpus():
    return make_corpus(
        [("p1", "the cat sat", "the cat sat"),
         ("p2", "dog house tree", "fish moon car"),
         ("p3", "bird tree", "tree bird")],
        [("p1", "good", 5), ("p2", "good", 1), ("p3", "good", 4)],
    )


def scoring_table():
    rng = np.random.default_rng(17)
    words = ["the", "cat", "sat", "dog", "house", "tree", "fish",
             "moon", "car", "bird"]
    return EmbeddingTable(
        dimension=4, vectors={w: rng.normal(size=4) for w in words})


def test_metric_universe():
    names = metric_universe()
    assert list(LEXICAL_METRICS) == lexical_metric_names()
    assert names == list(LEXICAL_METRICS) + list(EMBEDDING_METRICS)
    corpus = attach_precomputed(scoring_corpus(), "ext", {"p1": 0.5})
    assert metric_universe(corpus) == names + ["ext"]


def test_compute_metric_scores_unknown_metric():
    with pytest.raises(ValueError, match="unknown metric 'nope'"):
        compute_metric_scores(scoring_corpus(), ["nope"])


def test_compute_metric_scores_missing_table_errors():
    corpus = scoring_corpus()
    with pytest.raises(ValueError, match="need an embedding table"):
        compute_metric_scores(corpus, ["cosine"])
    with pytest.raises(ValueError, match="embedding table or sentence"):
        compute_metric_scores(corpus, ["l2"])


def test_compute_metric_scores_lexical_values():
    corpus = scoring_corpus()
    scores, dropped = compute_metric_scores(corpus, list(LEXICAL_METRICS))
    assert set(scores) == set(LEXICAL_METRICS)
    assert all(dropped[name] == 0 for name in LEXICAL_METRICS)
    for pair in corpus.pairs:
        direct = score_pair_lexical(pair.text_a, pair.text_b)
        for name in LEXICAL_METRICS:
            assert scores[name][pair.pair_id] == direct[name].value
    # identical sentences max out; token-disjoint ones bottom out except
    # chrf, whose character n-grams still share letters like o/s/h/r
    for name in LEXICAL_METRICS:
        assert scores[name]["p1"] == pytest.approx(1.0)
        if name == "chrf":
            assert 0.0 <= scores[name]["p2"] < 0.15
        else:
            assert scores[name]["p2"] == pytest.approx(0.0, abs=1e-12)


def test_compute_metric_scores_orientation():
    corpus = scoring_corpus()
    table = scoring_table()
    kwargs = dict(table=table, metrics=["cosine", "l2", "wmd", "pos_dist"],
                  noun_tagger=lambda toks: list(toks))
    oriented, _ = compute_metric_scores(corpus, **kwargs)
    raw, _ = compute_metric_scores(corpus, oriented=False, **kwargs)
    for pid in ("p1", "p2", "p3"):
        # similarities keep their sign, distances flip
        assert oriented["cosine"][pid] == raw["cosine"][pid]
        assert oriented["l2"][pid] == -raw["l2"][pid]
        assert oriented["wmd"][pid] == -raw["wmd"][pid]
        assert oriented["pos_dist"][pid] == -raw["pos_dist"][pid]
        assert raw["l2"][pid] >= 0.0
        assert raw["wmd"][pid] >= 0.0
    # identical sentences: zero distance, cosine 1
    assert raw["wmd"]["p1"] == pytest.approx(0.0, abs=1e-12)
    assert raw["l2"]["p1"] == pytest.approx(0.0, abs=1e-12)
    assert raw["cosine"]["p1"] == pytest.approx(1.0)


def test_compute_metric_scores_drops_oov_pairs():
    corpus = make_corpus(
        [("p1", "cat dog", "dog cat"), ("p2", "qq zz", "xx yy")],
        [("p1", "good", 5), ("p2", "good", 1)],
    )
    table = scoring_table()
    scores, dropped = compute_metric_scores(
        corpus, ["cosine", "wmd", "word_overlap"], table=table)
    assert dropped == {"cosine": 1, "wmd": 1, "word_overlap": 0}
    assert "p2" not in scores["cosine"]
    assert "p2" not in scores["wmd"]
    assert scores["word_overlap"]["p2"] == 0.0


def test_compute_metric_scores_precomputed_channels():
    corpus = attach_precomputed(
        scoring_corpus(), "ext_dist", {"p1": 0.5, "p2": 2.0})
    scores, dropped = compute_metric_scores(
        corpus, ["ext_dist"], distance_channels={"ext_dist"})
    assert scores["ext_dist"] == {"p1": -0.5, "p2": -2.0}
    assert dropped["ext_dist"] == 1  # p3 has no value
    raw, _ = compute_metric_scores(
        corpus, ["ext_dist"], distance_channels={"ext_dist"}, oriented=False)
    assert raw["ext_dist"] == {"p1": 0.5, "p2": 2.0}
    # channels not named as distances pass through untouched
    plain, _ = compute_metric_scores(corpus, ["ext_dist"])
    assert plain["ext_dist"] == {"p1": 0.5, "p2": 2.0}


def test_compute_metric_scores_sentence_embedding_l2():
    corpus = scoring_corpus()
    sent = {
        "p1": {"a": np.array([0.0, 0.0]), "b": np.array([3.0, 4.0])},
        "p2": {"a": np.array([1.0, 1.0]), "b": np.array([1.0, 1.0])},
        # p3 missing entirely -> dropped
    }
    scores, dropped = compute_metric_scores(
        corpus, ["l2"], sent_embeddings=sent)
    assert scores["l2"]["p1"] == pytest.approx(-5.0)
    assert scores["l2"]["p2"] == pytest.approx(0.0)
    assert dropped["l2"] == 1


def test_compute_metric_scores_gold_tag_route():
    corpus = make_corpus(
        [("p1", "the cat", "the dog")],
        [("p1", "good", 3)],
    )
    table = scoring_table()
    tags = {("p1", "a"): {1: "NN"}, ("p1", "b"): {1: "NN"}}
    scores, _ = compute_metric_scores(
        corpus, ["pos_dist"], table=table, gold_tags=tags)
    expected = float(np.linalg.norm(
        table.vectors["cat"] - table.vectors["dog"]))
    assert scores["pos_dist"]["p1"] == pytest.approx(-expected)


def test_compute_metric_scores_parallel_matches_serial():
    corpus = scoring_corpus()
    table = scoring_table()
    kwargs = dict(
        metrics=["word_overlap", "chrf", "cosine", "wmd"], table=table)
    serial, d1 = compute_metric_scores(corpus, jobs=1, **kwargs)
    parallel, d2 = compute_metric_scores(corpus, jobs=3, **kwargs)
    assert serial == parallel
    assert d1 == d2


# ------------------------------------------------------------- reports


def report_fixture():
    """Six pairs; 'good' tracks the metric, 'junk' is a constant-3 firehose."""
    pairs = [(f"p{i}", f"w{i} x{i}", f"y{i} z{i}") for i in range(1, 7)]
    good_labels = {"p1": 1, "p2": 2, "p3": 2, "p4": 4, "p5": 4, "p6": 5}
    annotations = [(pid, "good", lab) for pid, lab in good_labels.items()]
    annotations += [(pid, "junk", 3) for pid in good_labels]
    corpus = make_corpus(pairs, annotations)
    metric = {f"p{i}": i / 10.0 for i in range(1, 7)}
    return corpus, {"m": metric}


def test_correlation_report_baseline_and_filtering():
    corpus, metric_scores = report_fixture()
    report = correlation_report(
        corpus, metric_scores,
        subsets=[[HeuristicId.SLOW], [HeuristicId.LOW_VARIANCE]])
    assert report.status == "ok"
    assert report.metrics == ("m",)
    assert report.n_pairs == 6

    xs = [metric_scores["m"][f"p{i}"] for i in range(1, 7)]
    base_gold = [2.0, 2.5, 2.5, 3.5, 3.5, 4.0]
    assert report.baseline["m"].pearson == pearson(xs, base_gold)
    assert report.baseline["m"].n_pairs == 6

    slow_row, lowvar_row = report.subsets
    # nobody is slow: identical to baseline, bit for bit
    assert slow_row.removed_annotators == ()
    assert slow_row.cells["m"].pearson == report.baseline["m"].pearson
    assert slow_row.pct_change["m"][0] == 0.0

    # the constant annotator goes; gold becomes the informative labels
    assert lowvar_row.removed_annotators == ("junk",)
    filtered_gold = [1.0, 2.0, 2.0, 4.0, 4.0, 5.0]
    assert lowvar_row.cells["m"].pearson == pearson(xs, filtered_gold)
    assert lowvar_row.pct_change["m"][0] == pytest.approx(
        percent_change(lowvar_row.cells["m"].pearson,
                       report.baseline["m"].pearson))
    assert lowvar_row.pct_change["m"][1] == pytest.approx(
        percent_change(lowvar_row.cells["m"].spearman,
                       report.baseline["m"].spearman))


def test_correlation_report_default_subsets_are_all_31():
    corpus, metric_scores = report_fixture()
    report = correlation_report(corpus, metric_scores)
    assert len(report.subsets) == 31
    assert report.subsets[0].subset == (HeuristicId.SLOW,)
    assert len(report.subsets[-1].subset) == 5
    # singleton rows come first, ordered by heuristic number
    assert [row.subset for row in report.subsets[:5]] == [
        (HeuristicId.SLOW,),
        (HeuristicId.LOW_VARIANCE,),
        (HeuristicId.HIGH_RANDOM,),
        (HeuristicId.DISAGREEABLE,),
        (HeuristicId.SENTIMENT_DISALIGNED,),
    ]


def test_correlation_report_unavailable_metric():
    corpus, metric_scores = report_fixture()
    metric_scores = dict(metric_scores)
    metric_scores["part"] = {"p1": 0.5, "p2": 0.7}  # 4 of 6 missing
    report = correlation_report(corpus, metric_scores,
                                subsets=[[HeuristicId.SLOW]])
    assert report.metrics == ("m",)
    assert "part" in report.unavailable
    assert "undefined on 4 of 6 pairs" in report.unavailable["part"]
    assert report.dropped["part"] == 4
    assert "part" not in report.baseline


def test_correlation_report_skips_metric_only_pairs():
    corpus, metric_scores = report_fixture()
    pairs = [(p.pair_id, p.text_a, p.text_b) for p in corpus.pairs]
    pairs.append(("p7", "spare a", "spare b"))
    annotations = [(a.pair_id, a.annotator_id, a.label)
                   for a in corpus.annotations]
    corpus7 = make_corpus(pairs, annotations)
    metric_scores = {"m": dict(metric_scores["m"], p7=0.9)}
    report = correlation_report(corpus7, metric_scores,
                                subsets=[[HeuristicId.SLOW]])
    # p7 has a metric value but no annotations, so it never joins the gold
    assert report.baseline["m"].n_pairs == 6
    assert report.n_pairs == 7


def test_correlation_report_empty_panel():
    corpus, metric_scores = report_fixture()
    report = correlation_report(corpus, metric_scores,
                                subsets=[[HeuristicId.SLOW]],
                                annotator_ids=set(), label="nobody")
    assert report.status == "empty: no annotators in this panel"
    assert report.metrics == ()
    assert report.subsets == ()


def test_correlation_report_per_annotation_gold():
    corpus, metric_scores = report_fixture()
    report = correlation_report(corpus, metric_scores,
                                subsets=[[HeuristicId.SLOW]],
                                per_annotation=True)
    # each pair contributes one observation per surviving label
    good_labels = {"p1": 1, "p2": 2, "p3": 2, "p4": 4, "p5": 4, "p6": 5}
    xs, ys = [], []
    for i in range(1, 7):
        pid = f"p{i}"
        for label in (float(good_labels[pid]), 3.0):
            xs.append(metric_scores["m"][pid])
            ys.append(label)
    assert report.baseline["m"].pearson == pearson(xs, ys)
    assert report.baseline["m"].n_pairs == 6


def test_correlation_report_panel_restriction_interacts_with_filters():
    corpus, metric_scores = report_fixture()
    # panel of junk alone: baseline gold is constant 3 -> error surfaces
    with pytest.raises(UndefinedCorrelationError):
        correlation_report(corpus, metric_scores,
                           subsets=[[HeuristicId.SLOW]],
                           annotator_ids={"junk"})


def test_style_split_report():
    pairs = [(f"p{i}", f"w{i} x{i}", f"y{i} z{i}") for i in range(1, 7)]
    rad_labels = {"p1": 1, "p2": 5, "p3": 1, "p4": 5, "p5": 1, "p6": 5}
    cen_labels = {"p1": 1, "p2": 2, "p3": 4, "p4": 2, "p5": 4, "p6": 4}
    annotations = [(pid, "rad", lab) for pid, lab in rad_labels.items()]
    annotations += [(pid, "cen", lab) for pid, lab in cen_labels.items()]
    corpus = make_corpus(pairs, annotations)
    metric = {f"p{i}": i / 10.0 for i in range(1, 7)}

    rad_report, cen_report = style_split_report(
        corpus, {"m": metric}, subsets=[[HeuristicId.SLOW]])
    assert rad_report.label == "Radical-only gold"
    assert cen_report.label == "Centrist-only gold"

    xs = [metric[f"p{i}"] for i in range(1, 7)]
    assert rad_report.baseline["m"].pearson == \
        pearson(xs, [float(rad_labels[f"p{i}"]) for i in range(1, 7)])
    assert cen_report.baseline["m"].pearson == \
        pearson(xs, [float(cen_labels[f"p{i}"]) for i in range(1, 7)])


# ------------------------------------------------------------ renderers


def rendered_report():
    corpus, metric_scores = report_fixture()
    return correlation_report(
        corpus, metric_scores,
        subsets=[[HeuristicId.SLOW], [HeuristicId.LOW_VARIANCE]],
        label="all, annotators")


def test_render_report_csv():
    report = rendered_report()
    text = render_report_csv(report)
    lines = text.strip().split("\n")
    assert lines[0] == ("panel,filter,metric,pearson,spearman,pearson_pct,"
                        "spearman_pct,n_pairs,dropped_pairs,removed_annotators")
    # 1 metric x (1 baseline + 2 subsets)
    assert len(lines) == 1 + 3
    assert lines[1].startswith("all; annotators,baseline,m,")
    assert ",1,m," in lines[2] or lines[2].startswith("all; annotators,1,m,")
    assert lines[3].startswith("all; annotators,2,m,")
    # baseline rows leave the pct columns empty
    assert lines[1].split(",")[5] == ""
    assert lines[1].split(",")[6] == ""


def test_render_report_json_round_trip():
    report = rendered_report()
    doc = json.loads(render_report_json(report))
    assert doc["label"] == "all, annotators"
    assert doc["status"] == "ok"
    assert doc["metrics"] == ["m"]
    assert doc["n_pairs"] == 6
    assert [row["subset"] for row in doc["subsets"]] == [[1], [2]]
    assert doc["subsets"][1]["removed_annotators"] == ["junk"]
    cell = doc["subsets"][1]["cells"]["m"]
    assert set(cell) == {"pearson", "spearman", "n_pairs",
                         "pearson_pct", "spearman_pct"}
    assert doc["baseline"]["m"]["pearson"] == report.baseline["m"].pearson


def test_render_report_text():
    report = rendered_report()
    text = render_report_text(report)
    assert "baseline" in text
    assert "[1]" in text and "[2]" in text
    assert "%" in text
    empty = CorrelationReport(
        label="nobody", status="empty: no annotators in this panel",
        metrics=(), baseline={}, subsets=(), dropped={}, unavailable={})
    assert "status: empty" in render_report_text(empty)


def test_render_report_text_lists_unavailable_metrics():
    corpus, metric_scores = report_fixture()
    metric_scores = dict(metric_scores, part={"p1": 0.5})
    report = correlation_report(corpus, metric_scores,
                                subsets=[[HeuristicId.SLOW]])
    text = render_report_text(report)
    assert "unavailable: part" in text
