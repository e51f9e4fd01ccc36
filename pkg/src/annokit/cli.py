"""Command line interface.

Subcommands: ingest, gen-synthetic, train, simulate-adjust, agree,
bias-report, replay, serve.  Every subcommand validates its inputs and
exits nonzero with a diagnostic on failure.  A JSON config file (path via
--config or the ANNOKIT_CONFIG environment variable) supplies categories,
the category priority order, and training/adjustment defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import adjustment as adj
from .config import ToolkitConfig, load_config
from .corpus import AnnotationSet, bio_encode, gold_items, load_corpus, save_corpus
from .errors import AnnokitError
from .metrics import (
    human_machine_agreement,
    jsd,
    label_distribution,
    pairwise_alpha_u,
)
from .reports import format_table, write_report
from .service import AdjustmentSettings, ServiceState, make_server
from .suggest import (
    AnnotatorPolicy,
    ModelRegistry,
    RegisteredModel,
    generate_suggestions,
    session_stats,
    simulate_annotator,
)
from .tagger import TrainConfig, load_model, predict_spans, save_model, train


def _train_config(cfg: ToolkitConfig, args: argparse.Namespace) -> TrainConfig:
    base = cfg.train
    overrides = {}
    for flag, field in (
        ("seed", "seed"),
        ("max_epochs", "max_epochs"),
        ("patience", "patience"),
        ("learning_rate", "learning_rate"),
        ("l2", "l2"),
        ("dev_fraction", "dev_fraction"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    return dataclasses.replace(base, **overrides) if overrides else base


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--dev-fraction", dest="dev_fraction", type=float, default=None)


def _cmd_ingest(args, cfg: ToolkitConfig) -> int:
    corpus = load_corpus(args.corpus, cfg.categories)
    print(
        f"ok: {corpus.n_documents} documents, {corpus.n_annotation_sets} annotation sets, "
        f"{len(corpus.gold)} gold annotations"
    )
    return 0


def _cmd_gen_synthetic(args, cfg: ToolkitConfig) -> int:
    config = adj.SyntheticConfig(
        n_docs=args.n_docs,
        min_doc_len=args.min_len,
        max_doc_len=args.max_len,
        categories=cfg.categories,
        vocab_size=args.vocab_size,
        signal=args.signal,
    )
    corpus = adj.generate_synthetic_corpus(args.seed, config)
    save_corpus(corpus, args.out)
    print(f"wrote {corpus.n_documents} documents to {args.out}")
    return 0


def _cmd_train(args, cfg: ToolkitConfig) -> int:
    corpus = load_corpus(args.corpus, cfg.categories)
    if args.annotator:
        sets = corpus.annotation_sets_for(args.annotator)
        if not sets:
            raise AnnokitError(f"annotator {args.annotator!r} has no annotation sets")
        items = [
            (corpus.documents[s.doc_id], bio_encode(len(corpus.documents[s.doc_id]), s.spans))
            for s in sets
        ]
    else:
        items = gold_items(corpus)
        if not items:
            raise AnnokitError("corpus has no gold annotations to train on")
    config = _train_config(cfg, args)
    model = train(items, config, categories=cfg.categories)
    save_model(model, args.out)
    best = max((h.dev_f1 for h in model.history if h.dev_f1 is not None), default=None)
    dev = f"{best:.4f}" if best is not None else "n/a"
    print(f"trained on {len(items)} documents, {len(model.history)} epochs, dev macro-F1 {dev}")
    print(f"model written to {args.out}")
    return 0


def _cmd_simulate_adjust(args, cfg: ToolkitConfig) -> int:
    corpus = load_corpus(args.corpus, cfg.categories)
    pool, test_items = adj.holdout_split(corpus, args.test_size, args.seed)
    strategies = [s.strip().lower() for s in args.strategies.split(",") if s.strip()]
    bundles = [int(b) for b in args.bundles.split(",")]
    config = _train_config(cfg, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for strategy in strategies:
        for bundle in bundles:
            mean_curve, _curves = adj.run_setup(
                pool,
                test_items,
                strategy,
                bundle,
                args.runs,
                args.seed,
                config,
                initial=args.initial,
                categories=cfg.categories,
            )
            path = out_dir / f"curve_{strategy}_b{bundle}.csv"
            adj.write_curve(path, mean_curve, include_time=not args.no_timing)
            final = mean_curve.points[-1]
            print(
                f"{strategy} bundle {bundle}: final macro-F1 "
                f"{final.f1_mean:.4f} (sd {final.f1_sd:.4f}) -> {path}"
            )
    return 0


def _split_csv(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _cmd_agree(args, cfg: ToolkitConfig) -> int:
    corpus = load_corpus(args.corpus, cfg.categories)
    annotators = (
        list(corpus.annotator_ids)
        if args.annotators == "all"
        else _split_csv(args.annotators)
    )
    sets = list(corpus.annotations.values())
    if args.docs != "all":
        wanted = set(_split_csv(args.docs))
        sets = [s for s in sets if s.doc_id in wanted]
    result = pairwise_alpha_u(corpus.documents, sets, annotators, cfg.categories)
    rows = [[a, b, v] for (a, b), v in sorted(result.values.items())]
    for pair, reason in result.excluded:
        rows.append([pair[0], pair[1], f"excluded: {reason}"])
    headers = ["annotator_a", "annotator_b", "alpha_u"]
    if result.values:
        rows.append(["(mean)", "", result.mean])
    table = format_table(headers, rows)
    print(table, end="")
    if args.out:
        write_report(args.out, headers, rows)
    return 0


def _cmd_bias_report(args, cfg: ToolkitConfig) -> int:
    corpus = load_corpus(args.corpus, cfg.categories)
    model = load_model(args.model)
    predictions = {
        doc_id: predict_spans(model, corpus.documents[doc_id])
        for (_a, doc_id) in corpus.annotations
    }
    groups = {}
    if args.groups:
        for chunk in args.groups.split(";"):
            name, _eq, members = chunk.partition("=")
            groups[name.strip()] = _split_csv(members)
    report = human_machine_agreement(
        corpus.documents,
        corpus.annotations.values(),
        predictions,
        groups or None,
        cfg.categories,
    )
    headers = ["annotator", "alpha_vs_model"]
    rows = [[a, v] for a, v in sorted(report.per_annotator.items())]
    for name, value in report.group_means.items():
        rows.append([f"(group {name})", value])
    if report.difference is not None:
        rows.append(["(difference)", report.difference])
    pred_sets = [
        AnnotationSet("model", doc_id, tuple(spans))
        for doc_id, spans in predictions.items()
    ]
    dist_pred = label_distribution(pred_sets, cfg.categories)
    for name, members in groups.items():
        group_sets = [s for s in corpus.annotations.values() if s.annotator_id in members]
        dist = label_distribution(group_sets, cfg.categories)
        rows.append([f"(jsd {name} vs predictions)", jsd(dist, dist_pred)])
    table = format_table(headers, rows)
    print(table, end="")
    if args.out:
        write_report(args.out, headers, rows)
    return 0


def _cmd_replay(args, cfg: ToolkitConfig) -> int:
    corpus = load_corpus(args.corpus, cfg.categories)
    model = load_model(args.model)
    registry = ModelRegistry(universal=RegisteredModel(model, "univ"))
    policy = (
        AnnotatorPolicy("overlap", args.theta)
        if args.policy == "overlap"
        else AnnotatorPolicy("exact")
    )
    decisions = []
    for doc_id in sorted(corpus.gold):
        doc = corpus.documents[doc_id]
        suggestions = generate_suggestions(registry, args.annotator, doc)
        decided, _final = simulate_annotator(
            corpus.gold[doc_id], suggestions, policy, cfg.priority
        )
        decisions.extend(decided)
    if not decisions:
        print("no suggestions were generated, nothing to replay")
        return 0
    stats = session_stats(decisions, corpus.gold)
    print(f"decided suggestions : {stats.acceptance.n_accepted + stats.acceptance.n_rejected}")
    print(f"acceptance rate     : {stats.acceptance.rate:.4f}")
    print(f"boundary-only misses: {stats.boundary_only_mismatches}")
    for cat, (acc, rej) in sorted(stats.by_category.items()):
        print(f"  {cat}: accepted {acc}, rejected {rej}")
    if args.out:
        rows = [
            [cat, acc, rej, acc / (acc + rej) if acc + rej else 0.0]
            for cat, (acc, rej) in sorted(stats.by_category.items())
        ]
        rows.append(
            ["(all)", stats.acceptance.n_accepted, stats.acceptance.n_rejected, stats.acceptance.rate]
        )
        write_report(
            args.out,
            ["category", "accepted", "rejected", "rate"],
            rows,
            meta={"policy": args.policy, "boundary_only": stats.boundary_only_mismatches},
        )
    return 0


def _cmd_serve(args, cfg: ToolkitConfig) -> int:
    documents = {}
    dev_items = None
    if args.corpus:
        corpus = load_corpus(args.corpus, cfg.categories)
        documents = dict(corpus.documents)
        if corpus.gold:
            dev_items = gold_items(corpus)
    registry = ModelRegistry()
    if args.model:
        registry = ModelRegistry(universal=RegisteredModel(load_model(args.model), "univ-v0"))
    settings = AdjustmentSettings(
        strategy=args.strategy, bundle_size=args.bundle, auto=args.auto
    )
    state = ServiceState(
        registry=registry,
        documents=documents,
        train_config=cfg.train,
        settings=settings,
        categories=cfg.categories,
        dev_items=dev_items,
    )
    server = make_server(state, args.host, args.port)
    print(f"serving on http://{args.host}:{server.server_address[1]}/ (ctrl-c to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annokit",
        description="Annotation suggestions, continuous model adjustment, and agreement metrics.",
    )
    parser.add_argument("--config", default=None, help="path to a JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus file")
    p.add_argument("corpus")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic gold corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-docs", dest="n_docs", type=int, default=280)
    p.add_argument("--min-len", dest="min_len", type=int, default=12)
    p.add_argument("--max-len", dest="max_len", type=int, default=24)
    p.add_argument("--vocab-size", dest="vocab_size", type=int, default=120)
    p.add_argument("--signal", type=float, default=0.75)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_synthetic)

    p = sub.add_parser("train", help="one-shot training, writes a model file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--annotator", default=None, help="train on this annotator's sets instead of gold")
    _add_train_flags(p)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("simulate-adjust", help="strategy grid over a simulated stream")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategies", default="cum,inc")
    p.add_argument("--bundles", default="10,30,50")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--initial", type=int, default=10)
    p.add_argument("--test-size", dest="test_size", type=int, default=10)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--no-timing", dest="no_timing", action="store_true",
                   help="write wall-clock columns as 0.0 for byte-reproducible output")
    _add_train_flags(p)
    p.set_defaults(fn=_cmd_simulate_adjust, seed=7)

    p = sub.add_parser("agree", help="pairwise unitized agreement table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotators", default="all")
    p.add_argument("--docs", default="all")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_agree)

    p = sub.add_parser("bias-report", help="human-machine agreement and label distribution divergence")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--groups", default="", help="e.g. su=a1,a2,a3;st=a4,a5")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_bias_report)

    p = sub.add_parser("replay", help="simulated annotator sessions over gold documents")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--policy", choices=("exact", "overlap"), default="exact")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--annotator", default="sim")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_replay)

    p = sub.add_parser("serve", help="start the recommender service")
    p.add_argument("--corpus", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--strategy", choices=("cum", "inc"), default="inc")
    p.add_argument("--bundle", type=int, default=30)
    p.add_argument("--auto", action="store_true")
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.fn(args, cfg)
    except AnnokitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
