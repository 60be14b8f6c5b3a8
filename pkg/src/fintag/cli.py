"""Command-line surface for every pipeline stage.

Report-producing subcommands (stats, eval, hits, ablate) write delimited
record files plus fixed-layout text reports, and render matplotlib figures
alongside them when an output directory is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import service as service_mod
from . import tagger as tagger_mod
from .labels import LabelSet
from .tokenization import (
    NumericPolicy,
    ShapeVocab,
    SubwordVocab,
    fixture_vocab,
    normalize_numeric,
    wordpiece_tokenize,
)


def _load_corpus(path, labelset: LabelSet, strict: bool = True):
    sentences, diagnostics = corpus_mod.load_dataset(path, labelset, strict=strict)
    for diag in diagnostics:
        print(f"warning: {path}:{diag.line_number}: {diag.reason}", file=sys.stderr)
    return sentences


def _load_artifacts(args):
    labelset = LabelSet.load(args.tags)
    vocab = SubwordVocab.load(args.vocab) if getattr(args, "vocab", None) else None
    shapes = ShapeVocab.load(args.shapes) if getattr(args, "shapes", None) else None
    return labelset, vocab, shapes


def _cmd_synth(args) -> int:
    labelset = corpus_mod.synthetic_labelset(args.n_tags)
    config = corpus_mod.SyntheticConfig(args.n, args.n_tags, args.seed)
    sentences = corpus_mod.generate_synthetic(config, labelset)
    corpus_mod.save_dataset(sentences, args.out)
    if args.tags_out:
        labelset.save(args.tags_out)
    print(f"wrote {len(sentences)} sentences to {args.out}")
    return 0


def _cmd_stats(args) -> int:
    labelset = LabelSet.load(args.tags)
    sentences = _load_corpus(args.corpus, labelset, strict=not args.lenient)
    stats = corpus_mod.compute_stats(sentences)
    text = stats.to_text()
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if args.figure:
        from .figures import tag_frequency_figure

        tag_frequency_figure(stats, args.figure)
        print(f"figure written to {args.figure}")
    return 0


def _cmd_filter(args) -> int:
    labelset = LabelSet.load(args.tags)
    sentences = _load_corpus(args.corpus, labelset)
    rules = corpus_mod.DEFAULT_FILTER_RULES
    if args.rules_file:
        rules = tuple(
            line.strip()
            for line in Path(args.rules_file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
    kept, report = corpus_mod.filter_sentences(
        sentences, rules, keep_tagged=args.mode == "training"
    )
    corpus_mod.save_dataset(kept, args.out)
    print(report.to_text(), end="")
    return 0


def _cmd_split(args) -> int:
    labelset = LabelSet.load(args.tags)
    sentences = _load_corpus(args.corpus, labelset)
    ratios = tuple(float(r) for r in args.ratios.split(","))
    if len(ratios) != 3:
        raise corpus_mod.CorpusError("ratios must be three comma-separated numbers")
    train, dev, test = corpus_mod.chronological_split(sentences, ratios)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("dev", dev), ("test", test)):
        corpus_mod.save_dataset(part, out_dir / f"{name}.jsonl")
    print(f"split {len(sentences)} -> {len(train)}/{len(dev)}/{len(test)} in {out_dir}")
    return 0


def _cmd_build_shapes(args) -> int:
    labelset = LabelSet.load(args.tags)
    sentences = _load_corpus(args.corpus, labelset)
    shapes = ShapeVocab.from_sentences(sentences)
    shapes.save(args.out)
    print(f"wrote {len(shapes)} shapes to {args.out}")
    return 0


def _cmd_tokenize(args) -> int:
    vocab = SubwordVocab.load(args.vocab) if args.vocab else fixture_vocab()
    shapes = ShapeVocab.load(args.shapes) if args.shapes else None
    policy = NumericPolicy(args.policy)
    units = normalize_numeric(args.token, policy, shapes)
    for raw, unit in zip(args.token, units):
        pieces = wordpiece_tokenize(unit, vocab)
        print(f"{raw}\t{unit}\t{' '.join(pieces)}")
    return 0


def _cmd_train(args) -> int:
    labelset, vocab, shapes = _load_artifacts(args)
    train_set = _load_corpus(args.train, labelset)
    dev_set = _load_corpus(args.dev, labelset) if args.dev else []
    feature_config = tagger_mod.FeatureConfig(args.hash_dim, args.window)
    train_config = tagger_mod.TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        l2_strength=args.l2,
        batch_size=args.batch_size,
        seed=args.seed,
        patience=args.patience,
    )
    model = tagger_mod.train(
        train_set,
        dev_set,
        labelset,
        feature_config,
        train_config,
        head=args.head,
        granularity=args.granularity,
        policy=args.policy,
        vocab=vocab,
        shape_vocab=shapes,
    )
    tagger_mod.save_model(model, args.out)
    # vocabularies derived during training are saved next to the model so
    # prediction and serving can fingerprint-match them later
    if model.vocab is not None and not args.vocab:
        vocab_path = args.vocab_out or f"{args.out}.vocab.txt"
        model.vocab.save(vocab_path)
        print(f"derived subword vocab written to {vocab_path}")
    if model.shape_vocab is not None and not args.shapes:
        shapes_path = args.shapes_out or f"{args.out}.shapes.txt"
        model.shape_vocab.save(shapes_path)
        print(f"derived shape vocab written to {shapes_path}")
    last = model.history[-1] if model.history else {}
    dev_note = f", dev micro-F1 {last['dev_micro_f1']:.4f}" if "dev_micro_f1" in last else ""
    print(f"model written to {args.out} ({len(model.history)} epochs{dev_note})")
    return 0


def _load_model_from_args(args):
    labelset = LabelSet.load(args.tags)
    vocab = SubwordVocab.load(args.vocab) if args.vocab else None
    shapes = ShapeVocab.load(args.shapes) if args.shapes else None
    model = tagger_mod.load_model(args.model, labelset, vocab, shapes)
    return model, labelset


def _cmd_predict(args) -> int:
    model, labelset = _load_model_from_args(args)
    sentences = _load_corpus(args.corpus, labelset)
    predicted = []
    for sentence in sentences:
        labels = tagger_mod.predict(model, sentence.tokens)
        predicted.append(
            {
                "tokens": list(sentence.tokens),
                "labels": labels,
                "doc_id": sentence.doc_id,
                "period_index": sentence.period_index,
            }
        )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for record in predicted:
            fh.write(json.dumps(record, ensure_ascii=False, separators=(", ", ": ")) + "\n")
    print(f"predicted {len(predicted)} sentences -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    labelset = LabelSet.load(args.tags)
    gold = _load_corpus(args.gold, labelset)
    pred_records = corpus_mod.load_predictions(args.pred)
    if len(gold) != len(pred_records):
        raise eval_mod.EvalError(
            f"{len(gold)} gold sentences vs {len(pred_records)} predictions"
        )
    predictions = [labels for _, labels in pred_records]
    score = eval_mod.entity_prf(gold, predictions, labelset,
                                macro_over_gold_only=args.macro_gold_only)
    report = eval_mod.invalid_sequence_report(predictions)
    text = score.to_text() + "\ninvalid sequences:\n" + report.to_text()
    print(text, end="")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "eval.txt").write_text(text, encoding="utf-8")
        record = {
            "micro_precision": score.micro_precision,
            "micro_recall": score.micro_recall,
            "micro_f1": score.micro_f1,
            "macro_f1": score.macro_f1,
            "invalid_rate": report.violation_rate,
        }
        with open(out_dir / "eval.jsonl", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return 0


def _cmd_hits(args) -> int:
    model, labelset = _load_model_from_args(args)
    sentences = _load_corpus(args.corpus, labelset)
    ranks = eval_mod.gold_tag_ranks(model, sentences)
    k_max = min(args.k_max, len(labelset.tags))
    if k_max < args.k_max:
        print(f"warning: k-max clamped to {k_max} (tag count)", file=sys.stderr)
    points = eval_mod.hits_curve(ranks, k_max)
    text = eval_mod.format_hits_curve(points, len(ranks))
    print(text, end="")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "hits.txt").write_text(text, encoding="utf-8")
        with open(out_dir / "hits.jsonl", "w", encoding="utf-8") as fh:
            for k, value in points:
                fh.write(json.dumps({"k": k, "hits": round(value, 6)}) + "\n")
        from .figures import hits_curve_figure

        hits_curve_figure(points, out_dir / "hits_curve.png")
        print(f"reports written to {out_dir}")
    return 0


def _cmd_ablate(args) -> int:
    labelset = LabelSet.load(args.tags)
    train_set = _load_corpus(args.train, labelset)
    dev_set = _load_corpus(args.dev, labelset)
    test_set = _load_corpus(args.test, labelset)
    feature_config = tagger_mod.FeatureConfig(args.hash_dim, args.window)
    train_config = tagger_mod.TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        l2_strength=args.l2,
        batch_size=args.batch_size,
        seed=0,
        patience=args.patience,
    )
    result = eval_mod.ablation_harness(
        train_set,
        dev_set,
        test_set,
        labelset,
        policies=args.policies.split(","),
        heads=args.heads.split(","),
        granularities=args.granularities.split(","),
        seeds=[int(s) for s in args.seeds.split(",")],
        feature_config=feature_config,
        train_config=train_config,
    )
    text = result.to_text()
    print(text, end="")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "ablation.jsonl").write_text(result.to_jsonl(), encoding="utf-8")
        (out_dir / "ablation.txt").write_text(text, encoding="utf-8")
        from .figures import ablation_figure

        ablation_figure(result, out_dir / "ablation.png")
        print(f"reports written to {out_dir}")
    return 0


def _cmd_serve(args) -> int:
    if args.config:
        config = service_mod.ServiceConfig.from_file(args.config)
    else:
        if not args.model or not args.tags:
            raise service_mod.ServiceConfigError("serve needs --config or --model and --tags")
        config = service_mod.ServiceConfig(
            model_path=args.model,
            tags_path=args.tags,
            vocab_path=args.vocab,
            shape_vocab_path=args.shapes,
            bind=args.bind,
            port=args.port,
            default_k=args.default_k,
            max_sentence_length=args.max_sentence_length,
        )
    service_mod.serve(config.with_env_overrides())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fintag",
        description="financial sequence tagging: corpora, tokenization policies, "
        "CRF tagging, evaluation, and a recommendation service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, required=True, help="number of sentences")
    p.add_argument("--n-tags", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--tags-out", help="also write the tag list")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("stats", help="corpus statistics report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--out", help="write the text report here")
    p.add_argument("--figure", help="write a tag-frequency figure here")
    p.add_argument("--lenient", action="store_true", help="skip bad records with warnings")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("filter", help="apply heuristic sentence filtering")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("training", "inference"), default="training")
    p.add_argument("--rules-file", help="file with one regex per line")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("split", help="chronological train/dev/test split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("build-shapes", help="derive the shape vocabulary from a split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_shapes)

    p = sub.add_parser("tokenize", help="debug tokenization under a policy")
    p.add_argument("--vocab", help="subword vocab file (fixture vocab if omitted)")
    p.add_argument("--shapes", help="shape vocab file")
    p.add_argument("--policy", choices=("none", "num", "shape"), default="none")
    p.add_argument("token", nargs="+")
    p.set_defaults(func=_cmd_tokenize)

    p = sub.add_parser("train", help="train a tagger")
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--tags", required=True)
    p.add_argument("--vocab")
    p.add_argument("--shapes")
    p.add_argument("--policy", choices=("none", "num", "shape"), default="none")
    p.add_argument("--granularity", choices=("word", "subword"), default="word")
    p.add_argument("--head", choices=("softmax", "crf"), default="softmax")
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--hash-dim", type=int, default=2**18)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--vocab-out")
    p.add_argument("--shapes-out")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="batch-tag a corpus file")
    p.add_argument("--model", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--vocab")
    p.add_argument("--shapes")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="entity scores and invalid-sequence report")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--macro-gold-only", action="store_true",
                   help="macro-average only over tags present in gold")
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("hits", help="Hits@k curve for tag recommendation")
    p.add_argument("--model", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--vocab")
    p.add_argument("--shapes")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_hits)

    p = sub.add_parser("ablate", help="tokenization-policy ablation harness")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--policies", default="none,num,shape")
    p.add_argument("--heads", default="softmax")
    p.add_argument("--granularities", default="subword")
    p.add_argument("--seeds", default="0")
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--patience", type=int, default=2)
    p.add_argument("--hash-dim", type=int, default=2**18)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("serve", help="run the tagging/recommendation HTTP service")
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--model")
    p.add_argument("--tags")
    p.add_argument("--vocab")
    p.add_argument("--shapes")
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--default-k", type=int, default=10)
    p.add_argument("--max-sentence-length", type=int, default=512)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
