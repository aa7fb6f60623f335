"""Command-line interface.

Subcommands: validate, stats, flag, metrics, report, style-report,
simulate.  Exit code 0 on success, 1 on data errors, 2 on usage errors
(argparse's own convention).  Defaults can come from a ``key = value``
config file via --config; explicit flags always win.  Environment
variables with the ``LABELSIM_`` prefix override path options
(LABELSIM_EMBEDDINGS, LABELSIM_SENTIMENT_FILE, LABELSIM_POS_TAGS,
LABELSIM_SENT_EMBEDDINGS, LABELSIM_NOUN_LEXICON).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import correlate, embmetrics, simulate, stats
from .corpus import (CorpusError, attach_precomputed, load_corpus,
                     load_precomputed, save_corpus)
from .heuristics import (HeuristicConfig, HeuristicId, apply_filters,
                         compute_flag_reports, default_scorers,
                         heuristic_subsets, subset_label)
from .sentiment import ingest_sentiment

ENV_PREFIX = "LABELSIM_"

_CONFIG_FIELDS = {
    "slow_threshold": float,
    "low_variance_threshold": float,
    "disagreement_threshold": float,
    "overlap_threshold": float,
    "sentiment_gap_threshold": float,
    "sentiment_variance_threshold": float,
    "overlap_bleu_order": int,
    "min_sentiment_pairs": int,
}

_SIM_CONFIG_FIELDS = {
    "n_pairs": int,
    "fraction_random": float,
    "profiles": str,
    "seed": int,
    "annotators_per_pair": int,
    "min_tokens": int,
    "max_tokens": int,
}


def read_config(path) -> dict[str, str]:
    """Parse a ``key = value`` config file; '#' starts a comment line."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path} line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _env_path(name: str):
    return os.environ.get(ENV_PREFIX + name) or None


def _build_heuristic_config(args, file_cfg: dict[str, str]) -> HeuristicConfig:
    kwargs = {}
    for field, cast in _CONFIG_FIELDS.items():
        value = getattr(args, field, None)
        if value is None and field in file_cfg:
            value = cast(file_cfg[field])
        if value is not None:
            kwargs[field] = value
    cfg = HeuristicConfig(**kwargs)
    cfg.validate()
    return cfg


def _add_corpus_args(p, annotations_required=True):
    p.add_argument("--pairs", required=True, help="pairs file (CSV or JSONL)")
    p.add_argument("--annotations", required=annotations_required,
                   help="annotations file (CSV or JSONL)")
    p.add_argument("--format", dest="fmt", choices=["csv", "jsonl"],
                   help="force the corpus file format")


def _add_common_args(p):
    p.add_argument("--config", help="key = value config file with defaults")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int, default=0,
                   help="random seed for anything stochastic")


def _add_threshold_args(p):
    g = p.add_argument_group("heuristic thresholds")
    g.add_argument("--slow-threshold", type=float, dest="slow_threshold")
    g.add_argument("--low-variance-threshold", type=float,
                   dest="low_variance_threshold")
    g.add_argument("--disagreement-threshold", type=float,
                   dest="disagreement_threshold")
    g.add_argument("--overlap-threshold", type=float, dest="overlap_threshold")
    g.add_argument("--sentiment-gap-threshold", type=float,
                   dest="sentiment_gap_threshold")
    g.add_argument("--sentiment-variance-threshold", type=float,
                   dest="sentiment_variance_threshold")
    g.add_argument("--overlap-bleu-order", type=int, dest="overlap_bleu_order")
    g.add_argument("--min-sentiment-pairs", type=int,
                   dest="min_sentiment_pairs")


def _add_metric_args(p):
    p.add_argument("--metrics", default="all",
                   help="'lexical', 'embedding', 'all', or comma-separated names")
    p.add_argument("--embeddings", default=None,
                   help="word-embedding text file (word v1 ... vd)")
    p.add_argument("--sent-embeddings", default=None,
                   help="per-pair sentence-embedding CSV (pair_id,side,vector)")
    p.add_argument("--pos-tags", default=None,
                   help="gold POS tag CSV (pair_id,side,token_index,tag)")
    p.add_argument("--noun-lexicon", default=None,
                   help="noun word list for the dictionary tagger")
    p.add_argument("--precomputed", action="append", default=[],
                   metavar="NAME=PATH",
                   help="attach a per-pair score channel (repeatable)")
    p.add_argument("--precomputed-distance", action="append", default=[],
                   metavar="NAME",
                   help="treat this precomputed channel as a distance")
    p.add_argument("--overlap-mode", choices=["jaccard", "precision"],
                   default="jaccard")
    p.add_argument("--pos-aggregate", choices=["matched", "all_pairs"],
                   default="matched")
    p.add_argument("--wmd-method", choices=["exact", "sinkhorn"],
                   default="exact")
    p.add_argument("--epsilon", type=float, default=0.01,
                   help="sinkhorn regularization strength")
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel scoring workers (default: cpu count)")


def _parse_heuristics(raw: str) -> list[HeuristicId]:
    if raw.strip().lower() == "all":
        return list(HeuristicId)
    try:
        ids = [HeuristicId(int(tok)) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"bad heuristic list {raw!r}; use e.g. '2,3' or 'all'")
    if not ids:
        raise ValueError("empty heuristic list")
    return sorted(set(ids))


def _parse_metric_names(raw: str, corpus) -> list[str]:
    raw = raw.strip()
    channels = sorted(corpus.precomputed_scores)
    if raw == "lexical":
        return list(correlate.LEXICAL_METRICS) + channels
    if raw == "embedding":
        return list(correlate.EMBEDDING_METRICS)
    if raw == "all":
        return correlate.metric_universe(corpus)
    names = [tok.strip() for tok in raw.split(",") if tok.strip()]
    universe = set(correlate.metric_universe(corpus))
    for name in names:
        if name not in universe:
            raise ValueError(f"unknown metric {name!r}")
    return names


def _attach_channels(corpus, args):
    for spec in args.precomputed:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise ValueError(f"--precomputed expects NAME=PATH, got {spec!r}")
        corpus = attach_precomputed(corpus, name.strip(),
                                    load_precomputed(path.strip()))
    return corpus


def _corpus_vocabulary(corpus) -> set:
    from .textmetrics import tokenize
    vocab = set()
    for pair in corpus.pairs:
        vocab.update(tokenize(pair.text_a))
        vocab.update(tokenize(pair.text_b))
    return vocab


def _prepare_scoring(corpus, args):
    """Resolve metric names and load whatever artifacts they need."""
    metrics = _parse_metric_names(args.metrics, corpus)

    embeddings_path = args.embeddings or _env_path("EMBEDDINGS")
    sent_emb_path = args.sent_embeddings or _env_path("SENT_EMBEDDINGS")
    pos_tags_path = args.pos_tags or _env_path("POS_TAGS")
    noun_lex_path = args.noun_lexicon or _env_path("NOUN_LEXICON")

    table = None
    if embeddings_path:
        table = embmetrics.load_embeddings(
            embeddings_path, vocab_filter=_corpus_vocabulary(corpus))

    sent_embeddings = None
    if sent_emb_path:
        sent_embeddings = embmetrics.load_sentence_embeddings(sent_emb_path)

    if table is None:
        skipped = [m for m in metrics
                   if m in ("cosine", "wmd", "pos_dist")
                   or (m == "l2" and sent_embeddings is None)]
        if skipped:
            print(f"warning: skipping {', '.join(skipped)}: "
                  "no --embeddings file given", file=sys.stderr)
            metrics = [m for m in metrics if m not in skipped]

    gold_tags = None
    if pos_tags_path:
        gold_tags = embmetrics.load_gold_tags(pos_tags_path)
    noun_tagger = None
    if "pos_dist" in metrics and gold_tags is None:
        nouns = embmetrics.load_noun_lexicon(noun_lex_path) \
            if noun_lex_path else None
        noun_tagger = embmetrics.lexicon_noun_tagger(nouns)

    jobs = args.jobs if args.jobs and args.jobs > 0 else (os.cpu_count() or 1)
    return metrics, dict(
        table=table,
        noun_tagger=noun_tagger,
        gold_tags=gold_tags,
        sent_embeddings=sent_embeddings,
        distance_channels=set(args.precomputed_distance),
        overlap_mode=args.overlap_mode,
        pos_aggregate=args.pos_aggregate,
        wmd_method=args.wmd_method,
        epsilon=args.epsilon,
        max_iter=args.max_iter,
        jobs=min(jobs, 64),
    )


def _build_scorers(corpus, cfg, args):
    scorers = default_scorers(cfg)
    sentiment_path = getattr(args, "sentiment_file", None) \
        or _env_path("SENTIMENT_FILE")
    if sentiment_path:
        scorers.pair_sentiment = ingest_sentiment(sentiment_path, corpus)
    return scorers


def _write_output(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fmt_opt(value, spec=".6f") -> str:
    return "" if value is None else format(value, spec)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    corpus = load_corpus(args.pairs, args.annotations, args.fmt)
    n_random = sum(1 for p in corpus.pairs if p.is_random)
    print(f"pairs: {len(corpus.pairs)} ({n_random} random)")
    print(f"annotations: {len(corpus.annotations)}")
    print(f"annotators: {len(corpus.annotator_ids())}")
    print("ok")
    return 0


def cmd_stats(args) -> int:
    corpus = load_corpus(args.pairs, args.annotations, args.fmt)
    profiles = stats.annotator_profiles(
        corpus, exclude_midpoint_from_variance=args.style_variance_excludes_midpoint)
    lines = ["annotator_id,n_labels,mean_duration,label_variance,mean_random,"
             "mean_nonrandom,extreme_share,central_share,disagreement_rate,style"]
    for aid in sorted(profiles):
        p = profiles[aid]
        lines.append(",".join([
            aid, str(p.n_labels), _fmt_opt(p.mean_duration),
            _fmt_opt(p.label_variance), _fmt_opt(p.mean_random),
            _fmt_opt(p.mean_nonrandom), _fmt_opt(p.extreme_share),
            _fmt_opt(p.central_share), _fmt_opt(p.disagreement_rate),
            p.style.value,
        ]))
    _write_output("\n".join(lines) + "\n", args.out)
    return 0


def cmd_flag(args) -> int:
    corpus = load_corpus(args.pairs, args.annotations, args.fmt)
    file_cfg = read_config(args.config) if args.config else {}
    cfg = _build_heuristic_config(args, file_cfg)
    subset = _parse_heuristics(args.heuristics)
    scorers = None
    if HeuristicId.SENTIMENT_DISALIGNED in subset:
        scorers = _build_scorers(corpus, cfg, args)
    reports = compute_flag_reports(corpus, subset, cfg, scorers)

    if args.all_subsets:
        lines = ["subset,n_removed,removed_annotators"]
        for sub in heuristic_subsets(subset):
            filtered = apply_filters(corpus, sub, cfg, scorers, reports=reports)
            removed = sorted(filtered.removed_annotators)
            lines.append('"%s",%d,%s' % (subset_label(sub), len(removed),
                                         ";".join(removed)))
    else:
        lines = ["annotator_id,flags,evidence"]
        for aid in sorted(reports):
            rep = reports[aid]
            flags = ";".join(str(int(h)) for h in sorted(rep.flags))
            evidence = ";".join(
                f"{int(h)}:{ev.statistic}={ev.value:.6f} vs {ev.threshold:g}"
                for h, ev in sorted(rep.evidence.items()))
            lines.append(f"{aid},{flags},{evidence}")
    _write_output("\n".join(lines) + "\n", args.out)
    return 0


def cmd_metrics(args) -> int:
    corpus = load_corpus(args.pairs, args.annotations, args.fmt)
    corpus = _attach_channels(corpus, args)
    metrics, kwargs = _prepare_scoring(corpus, args)
    scores, _ = correlate.compute_metric_scores(
        corpus, metrics, oriented=False, **kwargs)
    lines = ["pair_id," + ",".join(metrics)]
    for pair in corpus.pairs:
        cells = [_fmt_opt(scores[m].get(pair.pair_id)) for m in metrics]
        lines.append(pair.pair_id + "," + ",".join(cells))
    _write_output("\n".join(lines) + "\n", args.out)
    return 0


def _render_report(report, fmt: str) -> str:
    if fmt == "csv":
        return correlate.render_report_csv(report)
    if fmt == "json":
        return correlate.render_report_json(report)
    return correlate.render_report_text(report)


def _report_common(args):
    corpus = load_corpus(args.pairs, args.annotations, args.fmt)
    corpus = _attach_channels(corpus, args)
    file_cfg = read_config(args.config) if args.config else {}
    cfg = _build_heuristic_config(args, file_cfg)
    scorers = _build_scorers(corpus, cfg, args)
    metrics, kwargs = _prepare_scoring(corpus, args)
    scores, dropped = correlate.compute_metric_scores(corpus, metrics, **kwargs)
    subsets = heuristic_subsets(_parse_heuristics(args.heuristics))
    return corpus, cfg, scorers, scores, dropped, subsets


def cmd_report(args) -> int:
    corpus, cfg, scorers, scores, dropped, subsets = _report_common(args)

    def one(c, sc, dr, label):
        return correlate.correlation_report(
            c, sc, subsets=subsets, cfg=cfg, scorers=scorers, dropped=dr,
            label=label, per_annotation=args.per_annotation_gold)

    if args.per_dataset:
        chunks = []
        sources = sorted({p.source for p in corpus.pairs})
        for source in sources:
            from .corpus import LabeledCorpus
            pair_ids = {p.pair_id for p in corpus.pairs if p.source == source}
            sub = LabeledCorpus(
                pairs=tuple(p for p in corpus.pairs if p.source == source),
                annotations=tuple(a for a in corpus.annotations
                                  if a.pair_id in pair_ids),
                precomputed_scores=corpus.precomputed_scores,
            )
            sub_scores = {m: {pid: v for pid, v in vals.items()
                              if pid in pair_ids}
                          for m, vals in scores.items()}
            chunks.append(_render_report(
                one(sub, sub_scores, None, f"dataset {source or '(unnamed)'}"),
                args.out_format))
        _write_output("".join(chunks), args.out)
    else:
        report = one(corpus, scores, dropped, "all annotators")
        _write_output(_render_report(report, args.out_format), args.out)
    return 0


def cmd_style_report(args) -> int:
    corpus, cfg, scorers, scores, dropped, subsets = _report_common(args)
    radical, centrist = correlate.style_split_report(
        corpus, scores, subsets=subsets, cfg=cfg, scorers=scorers,
        dropped=dropped,
        exclude_midpoint_from_variance=args.style_variance_excludes_midpoint)
    if args.out_format == "json":
        import json as _json
        doc = {"radical": _json.loads(correlate.render_report_json(radical)),
               "centrist": _json.loads(correlate.render_report_json(centrist))}
        _write_output(_json.dumps(doc, indent=2) + "\n", args.out)
    else:
        text = _render_report(radical, args.out_format) \
            + _render_report(centrist, args.out_format)
        _write_output(text, args.out)
    return 0


def _parse_profiles(raw: str) -> tuple:
    aliases = {
        "reliable": simulate.ProfileKind.RELIABLE,
        "constant": simulate.ProfileKind.CONSTANT,
        "uniform": simulate.ProfileKind.UNIFORM_RANDOM,
        "uniform_random": simulate.ProfileKind.UNIFORM_RANDOM,
        "slow": simulate.ProfileKind.SLOW,
        "radical": simulate.ProfileKind.RADICAL,
        "centrist": simulate.ProfileKind.CENTRIST,
    }
    specs = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) not in (2, 3) or parts[0].strip().lower() not in aliases:
            raise ValueError(
                f"bad profile {chunk!r}; expected kind:count[:param]")
        kind = aliases[parts[0].strip().lower()]
        count = int(parts[1])
        param = float(parts[2]) if len(parts) == 3 else None
        specs.append(simulate.ProfileSpec(kind=kind, count=count, param=param))
    if not specs:
        raise ValueError("no annotator profiles given")
    return tuple(specs)


def cmd_simulate(args) -> int:
    file_cfg = read_config(args.config) if args.config else {}

    def sim_value(name, cast, default):
        value = getattr(args, name, None)
        if value is None and name in file_cfg:
            value = cast(file_cfg[name])
        return default if value is None else value

    profiles_raw = sim_value("profiles", str,
                             "reliable:8:0.3,constant:1:3,uniform:1")
    spec = simulate.PopulationSpec(
        n_pairs=sim_value("n_pairs", int, 100),
        fraction_random=sim_value("fraction_random", float, 0.2),
        profiles=_parse_profiles(profiles_raw),
        seed=args.seed,
        annotators_per_pair=sim_value("annotators_per_pair", int, 3),
        min_tokens=sim_value("min_tokens", int, 4),
        max_tokens=sim_value("max_tokens", int, 9),
    )
    corpus, truth = simulate.generate_corpus(spec)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out_dir / "pairs.csv", out_dir / "annotations.csv")
    simulate.save_ground_truth(truth, out_dir / "truth_annotators.csv",
                               out_dir / "truth_pairs.csv")
    print(f"wrote {len(corpus.pairs)} pairs, {len(corpus.annotations)} "
          f"annotations for {len(truth.annotator_kinds)} annotators "
          f"to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labelsim",
        description="Reliability filtering for similarity labels and "
                    "correlation with automated metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check corpus files and summarize")
    _add_corpus_args(p, annotations_required=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="per-annotator statistics as CSV")
    _add_corpus_args(p)
    _add_common_args(p)
    p.add_argument("--style-variance-excludes-midpoint", action="store_true",
                   help="drop label-3 judgments from the style variance")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("flag", help="evaluate reliability heuristics")
    _add_corpus_args(p)
    _add_common_args(p)
    _add_threshold_args(p)
    p.add_argument("--heuristics", default="all",
                   help="comma-separated heuristic ids (1-5) or 'all'")
    p.add_argument("--all-subsets", action="store_true",
                   help="summarize removals for every non-empty subset")
    p.add_argument("--sentiment-file", default=None,
                   help="per-pair sentiment CSV (pair_id,score_a,score_b)")
    p.set_defaults(func=cmd_flag)

    p = sub.add_parser("metrics", help="score every pair with the metrics")
    _add_corpus_args(p, annotations_required=False)
    _add_common_args(p)
    _add_metric_args(p)
    p.set_defaults(func=cmd_metrics)

    for name, handler in (("report", cmd_report),
                          ("style-report", cmd_style_report)):
        p = sub.add_parser(name, help="correlation report "
                           + ("per labeling style" if "style" in name else
                              "against gold mean labels"))
        _add_corpus_args(p)
        _add_common_args(p)
        _add_threshold_args(p)
        _add_metric_args(p)
        p.add_argument("--heuristics", default="all",
                       help="heuristic universe for the subset rows")
        p.add_argument("--out-format", choices=["text", "csv", "json"],
                       default="text")
        p.add_argument("--sentiment-file", default=None)
        if name == "report":
            p.add_argument("--per-dataset", action="store_true",
                           help="one report per pair source")
            p.add_argument("--per-annotation-gold", action="store_true",
                           help="correlate against individual labels "
                                "instead of per-pair means")
        else:
            p.add_argument("--style-variance-excludes-midpoint",
                           action="store_true")
        p.set_defaults(func=handler)

    p = sub.add_parser("simulate", help="generate a synthetic labeled corpus")
    _add_common_args(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-pairs", type=int, dest="n_pairs")
    p.add_argument("--fraction-random", type=float, dest="fraction_random")
    p.add_argument("--profiles", dest="profiles",
                   help="e.g. 'reliable:36:0.5,constant:12:3,uniform:12'")
    p.add_argument("--annotators-per-pair", type=int,
                   dest="annotators_per_pair")
    p.add_argument("--min-tokens", type=int, dest="min_tokens")
    p.add_argument("--max-tokens", type=int, dest="max_tokens")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
