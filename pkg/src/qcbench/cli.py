"""Command-line entry point: ``qcbench <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or model error.  Reports go to
``--out`` (or standard output); diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

from . import bench, model_api
from . import eval as evaluation
from .corpus import (QuestionRecord, StopWordList, corpus_stats, default_taxonomy, generate_synthetic_corpus,
                     load_corpus, load_stopwords, save_corpus, save_stopwords, synthetic_stopwords)
from .dataset import Dataset, LabelEncoding
from .errors import FeatureError, HyperparameterError, QCError
from .features import FeatureConfig, Featurizer


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _sizes(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qcbench", description="Question-classification benchmark toolkit.")
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="worker cap for fold-level parallelism (1 = fully serial)")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress progress messages")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("generate", help="write a synthetic corpus")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--scale", type=float, default=1.0)
    g.add_argument("--stopwords-out")

    def features(sp, mode_default="keep"):
        sp.add_argument("--granularity", choices=evaluation.GRANULARITIES, default="coarse")
        sp.add_argument("--stopwords", choices=("keep", "remove"), default=mode_default,
                        help="keep or eliminate stop words before featurization")
        sp.add_argument("--stoplist", help="stop-word file (default: the synthetic generator's list)")
        sp.add_argument("--ngram-max", type=int, default=2)
        sp.add_argument("--min-df", type=int, default=1)

    t = sub.add_parser("train", help="fit one classifier on a whole corpus")
    t.add_argument("--corpus", required=True)
    t.add_argument("--classifier", required=True, choices=model_api.KINDS)
    features(t)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--model-out", required=True)
    t.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    pr = sub.add_parser("predict", help="classify questions with a saved model")
    pr.add_argument("--model", required=True)
    src = pr.add_mutually_exclusive_group(required=True)
    src.add_argument("--text")
    src.add_argument("--input", help="JSON Lines file with a 'text' key per line")
    pr.add_argument("--out")

    cv = sub.add_parser("crossval", help="stratified k-fold evaluation of one classifier")
    cv.add_argument("--corpus", required=True)
    cv.add_argument("--classifier", required=True, choices=model_api.KINDS)
    features(cv)
    cv.add_argument("--folds", type=int, default=10)
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    cv.add_argument("--out")
    cv.add_argument("--format", choices=("json", "markdown"), default="json")

    cm = sub.add_parser("compare", help="all classifiers with and without stop words")
    cm.add_argument("--corpus", required=True)
    cm.add_argument("--folds", type=int, default=10)
    cm.add_argument("--seed", type=int, default=0)
    cm.add_argument("--granularity", choices=evaluation.GRANULARITIES, default="coarse")
    cm.add_argument("--stoplist")
    cm.add_argument("--classifiers", default=",".join(model_api.KINDS), help="comma-separated subset")
    cm.add_argument("--set", action="append", default=[], metavar="KIND.KEY=VALUE")
    cm.add_argument("--out")
    cm.add_argument("--format", choices=("json", "markdown"), default="json")
    cm.add_argument("--figure", help="write the F1 bar chart here")
    cm.add_argument("--csv", help="write the grid as CSV here")

    b = sub.add_parser("bench", help="timing curve and log-log slope for one phase")
    b.add_argument("--classifier", required=True, choices=model_api.KINDS)
    b.add_argument("--phase", required=True, choices=bench.PHASES)
    b.add_argument("--axis", required=True, choices=bench.AXES)
    b.add_argument("--sizes", required=True, type=_sizes)
    b.add_argument("--repeats", type=_positive_int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--fixed-n", type=int, default=bench.DEFAULT_FIXED["n"])
    b.add_argument("--fixed-p", type=int, default=bench.DEFAULT_FIXED["p"])
    b.add_argument("--fixed-trees", type=int)
    b.add_argument("--density", type=float, default=0.05)
    b.add_argument("--tolerance", type=float, default=0.35)
    b.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    b.add_argument("--out")
    b.add_argument("--format", choices=("json", "markdown"), default="json")
    b.add_argument("--figure", help="write the log-log plot here")

    r = sub.add_parser("report", help="render saved reports as tables and figures")
    r.add_argument("--inputs", nargs="+", required=True)
    r.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    r.add_argument("--out")
    r.add_argument("--figure-dir", help="write one figure per report kind into this directory")
    return p


# --- helpers ------------------------------------------------------------------


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _stoplist(path: str | None, needed: bool, log) -> StopWordList | None:
    if path:
        return load_stopwords(path)
    if needed:
        log("no --stoplist given; using the synthetic generator's stop-word list")
        return synthetic_stopwords()
    return None


def _feature_config(args) -> FeatureConfig:
    return FeatureConfig(ngram_min=1, ngram_max=args.ngram_max, stopword_mode=args.stopwords, min_df=args.min_df)


def _compare_overrides(items: Sequence[str], kinds) -> dict:
    grouped: dict = {}
    for item in items:
        key = item.split("=", 1)[0]
        if "." not in key:
            raise UsageError(f"compare overrides look like kind.key=value, got {item!r}")
        kind, rest = item.split(".", 1)
        if kind not in kinds:
            raise UsageError(f"override {item!r} names a classifier not being compared")
        grouped.setdefault(kind, []).append(rest)
    return {kind: model_api.parse_overrides(vals, kind) for kind, vals in grouped.items()}


def _report_kind(doc) -> str:
    if isinstance(doc, dict):
        if "cells" in doc and "grid" in doc:
            return "compare"
        if "pooled" in doc:
            return "crossval"
        if "slope" in doc:
            return "bench"
    raise QCError("unrecognized report document")


def comparison_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["setup", "classifier", "accuracy", "macro_f1", "weighted_f1", "published_accuracy", "published_f1",
                "delta_accuracy", "delta_f1"])
    for mode in doc["setups"]:
        for kind in doc["classifiers"]:
            g, ref = doc["grid"][mode][kind], doc["paper_reference"][mode][kind]
            d = doc["delta_keep_minus_remove"].get(kind, {})
            w.writerow([mode, kind, g["accuracy"], g["f1"], g["weighted_f1"], ref["accuracy"], ref["f1"],
                        d.get("accuracy", ""), d.get("f1", "")])
    return buf.getvalue()


def crossval_csv(docs: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["classifier", "granularity", "stopword_mode", "folds", "accuracy", "macro_f1", "weighted_f1",
                "published_accuracy", "published_f1"])
    for d in docs:
        p = d["pooled"]
        w.writerow([d["classifier"], d["granularity"], d["setup"]["stopword_mode"], d["setup"]["folds"],
                    p["accuracy"], p["macro_f1"], p["weighted_f1"], d["paper_reference"]["accuracy"],
                    d["paper_reference"]["f1"]])
    return buf.getvalue()


def bench_csv(docs: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["classifier", "phase", "axis", "size", "median_time_s", "slope", "r2", "verdict"])
    for d in docs:
        for size, t in zip(d["sizes"], d["times_s"]):
            w.writerow([d["classifier"], d["phase"], d["axis"], size, t, d["slope"], d["r2"], d.get("verdict")])
    return buf.getvalue()


# --- subcommands --------------------------------------------------------------


def cmd_generate(args, log) -> int:
    tax = default_taxonomy()
    if not args.scale > 0:
        raise UsageError("--scale must be > 0")
    records = generate_synthetic_corpus(tax, seed=args.seed, scale=args.scale)
    save_corpus(records, args.out)
    if args.stopwords_out:
        save_stopwords(synthetic_stopwords(), args.stopwords_out, header="stop words of the synthetic generator")
    stats = corpus_stats(records, tax)
    log(f"wrote {stats.total} records to {args.out}")
    return 0


def _fit_pipeline(records: Sequence[QuestionRecord], cfg: FeatureConfig, stops, granularity):
    tax = default_taxonomy()
    enc = LabelEncoding(tax.classes(granularity))
    fz = Featurizer(cfg, stops).fit([r.text for r in records])
    ds = Dataset.from_rows(fz.transform([r.text for r in records]),
                           enc.encode([r.label(granularity) for r in records]), len(fz.vocab), len(enc))
    return enc, fz, ds


def cmd_train(args, log) -> int:
    hp = model_api.parse_overrides(args.set, args.classifier)
    cfg = _feature_config(args)
    stops = _stoplist(args.stoplist, cfg.stopword_mode == "remove", log)
    records = load_corpus(args.corpus, default_taxonomy())
    enc, fz, ds = _fit_pipeline(records, cfg, stops, args.granularity)
    model = model_api.fit(args.classifier, ds, hp, seed=args.seed)
    art = model_api.ModelArtifact(args.classifier, model, enc, cfg, fz.vocab, stops, hp, args.granularity)
    model_api.save_model(art, args.model_out)
    log(f"trained {args.classifier} on {len(ds)} records ({ds.n_features} features) -> {args.model_out}")
    return 0


def cmd_predict(args, log) -> int:
    art = model_api.load_model(args.model)
    if args.text is not None:
        _emit(art.predict_text([args.text])[0] + "\n", args.out)
        return 0
    rows = []
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                text = obj["text"]
                if not isinstance(text, str):
                    raise TypeError("text must be a string")
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise QCError(f"{args.input}:{lineno}: {exc}") from exc
            rows.append((obj.get("id"), text))
    labels = art.predict_text([t for _, t in rows]) if rows else []
    out = "".join(json.dumps({"id": i, "text": t, "predicted": lab}, ensure_ascii=False) + "\n"
                  for (i, t), lab in zip(rows, labels))
    _emit(out, args.out)
    return 0


def cmd_crossval(args, log) -> int:
    if args.folds < 2:
        raise UsageError("--folds must be >= 2")
    hp = model_api.parse_overrides(args.set, args.classifier)
    cfg = _feature_config(args)
    stops = _stoplist(args.stoplist, cfg.stopword_mode == "remove", log)
    records = load_corpus(args.corpus, default_taxonomy())
    res = evaluation.run_crossval(records, args.classifier, hp, cfg, stops, args.granularity, args.folds,
                                  args.seed, threads=args.threads, progress=log)
    doc = res.to_dict()
    _emit(_dump(doc) if args.format == "json" else evaluation.render_crossval_markdown([doc]), args.out)
    return 0


def cmd_compare(args, log) -> int:
    if args.folds < 2:
        raise UsageError("--folds must be >= 2")
    kinds = tuple(k.strip() for k in args.classifiers.split(",") if k.strip())
    bad = [k for k in kinds if k not in model_api.KINDS]
    if bad or not kinds:
        raise UsageError(f"unknown classifiers: {', '.join(bad) or '(none given)'}")
    overrides = _compare_overrides(args.set, kinds)
    stops = _stoplist(args.stoplist, True, log)
    records = load_corpus(args.corpus, default_taxonomy())
    rep = evaluation.compare_setups(records, stops, kinds, args.folds, args.seed, args.granularity, overrides,
                                    threads=args.threads, progress=log)
    doc = rep.to_dict()
    _emit(_dump(doc) if args.format == "json" else evaluation.render_comparison_markdown(doc), args.out)
    if args.csv:
        Path(args.csv).write_text(comparison_csv(doc), encoding="utf-8")
    if args.figure:
        from .plotting import plot_f1_bars

        plot_f1_bars(doc, args.figure)
    return 0


def cmd_bench(args, log) -> int:
    hp = model_api.parse_overrides(args.set, args.classifier)
    fixed = {"n": args.fixed_n, "p": args.fixed_p}
    if args.fixed_trees is not None:
        fixed["n_trees"] = args.fixed_trees
    res = bench.run_scaling(args.classifier, args.phase, args.axis, args.sizes, args.repeats, args.seed, fixed,
                            hp, density=args.density)
    doc = bench.bench_report(res, tolerance=args.tolerance)
    log(f"{args.classifier} {args.phase} vs {args.axis}: slope {res.slope:.3f}, r2 {res.r_squared:.3f}, "
        f"{doc['verdict']}")
    _emit(_dump(doc) if args.format == "json" else bench.render_bench_markdown([doc]), args.out)
    if args.figure:
        from .plotting import plot_scaling

        plot_scaling([doc], args.figure)
    return 0


def cmd_report(args, log) -> int:
    docs = []
    for path in args.inputs:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise QCError(f"cannot read report {path}: {exc}") from exc
        docs.append((_report_kind(doc), doc))
    groups = {kind: [d for k, d in docs if k == kind] for kind in ("compare", "crossval", "bench")}
    parts = []
    if args.format == "json":
        parts.append(_dump([d for _, d in docs]))
    else:
        for doc in groups["compare"]:
            parts.append(comparison_csv(doc) if args.format == "csv" else evaluation.render_comparison_markdown(doc))
        if groups["crossval"]:
            parts.append(crossval_csv(groups["crossval"]) if args.format == "csv"
                         else evaluation.render_crossval_markdown(groups["crossval"]))
        if groups["bench"]:
            parts.append(bench_csv(groups["bench"]) if args.format == "csv"
                         else bench.render_bench_markdown(groups["bench"]))
    _emit("\n".join(parts), args.out)
    if args.figure_dir:
        from .plotting import plot_f1_bars, plot_scaling

        out_dir = Path(args.figure_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, doc in enumerate(groups["compare"]):
            log(f"figure: {plot_f1_bars(doc, out_dir / f'f1_scores_{i}.png')}")
        if groups["bench"]:
            log(f"figure: {plot_scaling(groups['bench'], out_dir / 'scaling.png')}")
    return 0


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "predict": cmd_predict, "crossval": cmd_crossval,
            "compare": cmd_compare, "bench": cmd_bench, "report": cmd_report}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    def log(msg):
        if not args.quiet:
            print(msg, file=sys.stderr)

    try:
        return COMMANDS[args.command](args, log)
    except (UsageError, HyperparameterError, FeatureError) as exc:
        sys.stderr.write(f"qcbench {args.command}: usage error: {exc}\n")
        return 1
    except (QCError, OSError, UnicodeDecodeError) as exc:
        sys.stderr.write(f"qcbench {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
