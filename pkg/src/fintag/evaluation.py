"""Entity-level scoring, Hits@k, invalid-sequence reporting, and the
tokenization-policy ablation harness.

Scoring is exact-span: a predicted span earns credit only when an identical
(start, end, tag) gold span exists. Micro scores aggregate counts over all
spans; macro-F1 averages per-tag F1 over every tag in the label set by
default (tags absent from both sides contribute 0), with a flag to average
over gold tags only.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import AnnotatedSentence
from .labels import LabelSet, spans_from_labels, validate_iob2
from .tokenization import ShapeVocab, build_subword_vocab, fragmentation_stats


class EvalError(ValueError):
    """Raised for inconsistent evaluation inputs."""


@dataclass
class TagCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class EntityScore:
    per_tag: dict[str, TagCounts]
    micro: TagCounts
    macro_f1: float

    @property
    def micro_precision(self) -> float:
        return self.micro.precision

    @property
    def micro_recall(self) -> float:
        return self.micro.recall

    @property
    def micro_f1(self) -> float:
        return self.micro.f1

    def to_text(self) -> str:
        lines = [
            f"micro_precision = {self.micro_precision:.4f}",
            f"micro_recall = {self.micro_recall:.4f}",
            f"micro_f1 = {self.micro_f1:.4f}",
            f"macro_f1 = {self.macro_f1:.4f}",
            "per_tag (tp/fp/fn, P, R, F1):",
        ]
        for tag, c in sorted(self.per_tag.items()):
            lines.append(
                f"  {tag}: {c.tp}/{c.fp}/{c.fn}, {c.precision:.4f}, {c.recall:.4f}, {c.f1:.4f}"
            )
        return "\n".join(lines) + "\n"


def entity_prf(
    gold_sentences: Sequence,
    predicted_labels: Sequence[Sequence[str]],
    labelset: LabelSet,
    macro_over_gold_only: bool = False,
) -> EntityScore:
    """Exact-span entity precision/recall/F1.

    ``gold_sentences`` may be AnnotatedSentences or bare label sequences.
    Gold must be IOB2-valid; predictions are read leniently (an I- that
    cannot continue opens a new span) so nonsensical model output is scored,
    never crashed on.
    """
    if len(gold_sentences) != len(predicted_labels):
        raise EvalError(
            f"{len(gold_sentences)} gold sentences vs {len(predicted_labels)} predictions"
        )
    counts: dict[str, TagCounts] = {tag: TagCounts() for tag in labelset.tags}
    gold_tags_seen: set[str] = set()
    for gold, pred in zip(gold_sentences, predicted_labels):
        gold_labels = list(gold.labels) if isinstance(gold, AnnotatedSentence) else list(gold)
        if len(gold_labels) != len(pred):
            raise EvalError(
                f"sentence length mismatch: {len(gold_labels)} gold vs {len(pred)} predicted"
            )
        gold_spans = set(spans_from_labels(gold_labels))
        pred_spans = set(spans_from_labels(pred, lenient=True))
        for span in gold_spans:
            gold_tags_seen.add(span.tag)
            if span.tag not in counts:
                raise EvalError(f"gold tag {span.tag!r} not in label set")
        for span in pred_spans:
            if span.tag not in counts:
                raise EvalError(f"predicted tag {span.tag!r} not in label set")
            if span in gold_spans:
                counts[span.tag].tp += 1
            else:
                counts[span.tag].fp += 1
        for span in gold_spans - pred_spans:
            counts[span.tag].fn += 1

    micro = TagCounts(
        tp=sum(c.tp for c in counts.values()),
        fp=sum(c.fp for c in counts.values()),
        fn=sum(c.fn for c in counts.values()),
    )
    if macro_over_gold_only:
        macro_tags = [t for t in labelset.tags if t in gold_tags_seen]
    else:
        macro_tags = list(labelset.tags)
    macro_f1 = sum(counts[t].f1 for t in macro_tags) / len(macro_tags) if macro_tags else 0.0
    return EntityScore(per_tag=counts, micro=micro, macro_f1=macro_f1)


def hits_at_k(
    topk_lists: Sequence[Sequence[tuple[str, float]]],
    gold_tags: Sequence[str],
    k: int,
) -> float:
    """Fraction of annotated words whose gold tag appears in their top-k list."""
    if k < 1:
        raise EvalError(f"k must be >= 1, got {k}")
    if len(topk_lists) != len(gold_tags):
        raise EvalError("one top-k list per gold tag required")
    if not gold_tags:
        raise EvalError("no annotated words to evaluate")
    hits = 0
    for ranked, gold in zip(topk_lists, gold_tags):
        if k > len(ranked):
            warnings.warn(f"k={k} exceeds candidate count {len(ranked)}; clamping")
        if any(tag == gold for tag, _ in ranked[:k]):
            hits += 1
    return hits / len(gold_tags)


def gold_tag_ranks(model, sentences) -> list[int]:
    """1-based rank of the gold tag for every word inside a gold span.

    One full ranking pass supports the whole Hits@k curve: Hits@k is the
    fraction of ranks <= k.
    """
    from .tagger import topk_tags

    ranks: list[int] = []
    n_tags = len(model.labelset.tags)
    for sentence in sentences:
        for span in spans_from_labels(list(sentence.labels)):
            for word_index in range(span.start, span.end):
                ranked = topk_tags(model, sentence.tokens, word_index, n_tags)
                rank = next(i for i, (tag, _) in enumerate(ranked, start=1) if tag == span.tag)
                ranks.append(rank)
    return ranks


def hits_curve(ranks: Sequence[int], k_max: int) -> list[tuple[int, float]]:
    """(k, Hits@k) points for k = 1..k_max from precomputed gold-tag ranks."""
    if not ranks:
        raise EvalError("no annotated words to evaluate")
    n = len(ranks)
    return [(k, sum(1 for r in ranks if r <= k) / n) for k in range(1, k_max + 1)]


def format_hits_curve(points: Sequence[tuple[int, float]], n_words: int) -> str:
    """Fixed-layout text report for the Hits@k curve."""
    lines = [f"hits@k curve (n={n_words} words)", "k\thits"]
    lines.extend(f"{k}\t{value:.4f}" for k, value in points)
    return "\n".join(lines) + "\n"


@dataclass
class InvalidSequenceReport:
    total_sequences: int
    sequences_with_violations: int
    violation_rate: float
    violations_by_kind: dict[str, int]

    def to_text(self) -> str:
        lines = [
            f"sequences = {self.total_sequences}",
            f"sequences_with_violations = {self.sequences_with_violations}",
            f"violation_rate = {self.violation_rate:.4f}",
        ]
        lines.extend(f"  {kind} = {n}" for kind, n in sorted(self.violations_by_kind.items()))
        return "\n".join(lines) + "\n"


def invalid_sequence_report(label_sequences: Iterable[Sequence[str]]) -> InvalidSequenceReport:
    """Tally IOB2 violations over predicted piece- or word-label sequences."""
    total = 0
    bad = 0
    by_kind: dict[str, int] = {}
    for labels in label_sequences:
        total += 1
        violations = validate_iob2(labels)
        if violations:
            bad += 1
            for v in violations:
                by_kind[v.kind] = by_kind.get(v.kind, 0) + 1
    rate = bad / total if total else 0.0
    return InvalidSequenceReport(total, bad, rate, by_kind)


@dataclass
class RunAggregate:
    means: dict[str, float]
    stds: dict[str, float]
    run_count: int

    def summary(self, key: str) -> str:
        return f"{self.means[key]:.4f} ± {self.stds[key]:.4f}"


def aggregate_runs(records: Sequence[Mapping[str, float]]) -> RunAggregate:
    """Mean ± population std per metric key over runs with identical keys."""
    if not records:
        raise EvalError("need at least one run")
    keys = set(records[0])
    for rec in records[1:]:
        if set(rec) != keys:
            raise EvalError(f"metric keys differ across runs: {sorted(keys)} vs {sorted(rec)}")
    means: dict[str, float] = {}
    stds: dict[str, float] = {}
    n = len(records)
    for key in sorted(keys):
        values = [float(rec[key]) for rec in records]
        mean = sum(values) / n
        means[key] = mean
        stds[key] = (sum((v - mean) ** 2 for v in values) / n) ** 0.5
    return RunAggregate(means, stds, n)


# --------------------------------------------------------------------------
# Ablation harness
# --------------------------------------------------------------------------


@dataclass
class AblationCell:
    policy: str
    head: str
    granularity: str
    status: str  # "ok" | "failed"
    seeds: list[int]
    dev: RunAggregate | None = None
    test: RunAggregate | None = None
    invalid_rate_units: float | None = None
    invalid_rate_words: float | None = None
    error: str | None = None

    def to_record(self) -> dict:
        record: dict = {
            "policy": self.policy,
            "head": self.head,
            "granularity": self.granularity,
            "status": self.status,
            "seeds": self.seeds,
        }
        if self.status == "ok":
            for split, agg in (("dev", self.dev), ("test", self.test)):
                for key in sorted(agg.means):
                    record[f"{split}_{key}_mean"] = round(agg.means[key], 6)
                    record[f"{split}_{key}_std"] = round(agg.stds[key], 6)
            record["invalid_rate_units"] = round(self.invalid_rate_units, 6)
            record["invalid_rate_words"] = round(self.invalid_rate_words, 6)
        else:
            record["error"] = self.error
        return record


@dataclass
class AblationResult:
    cells: list[AblationCell]
    fragmentation: dict[str, dict[str, float]]

    def to_jsonl(self) -> str:
        lines = [json.dumps(cell.to_record(), sort_keys=True) for cell in self.cells]
        lines.append(
            json.dumps({"fragmentation": self.fragmentation}, sort_keys=True)
        )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = (
            f"{'policy':<8}{'head':<9}{'granularity':<13}"
            f"{'dev μ-F1':<16}{'test μ-F1':<16}{'test m-F1':<16}{'invalid':<9}"
        )
        lines = ["tokenization-policy ablation", header, "-" * len(header)]
        for cell in self.cells:
            if cell.status != "ok":
                lines.append(
                    f"{cell.policy:<8}{cell.head:<9}{cell.granularity:<13}failed: {cell.error}"
                )
                continue
            lines.append(
                f"{cell.policy:<8}{cell.head:<9}{cell.granularity:<13}"
                f"{cell.dev.summary('micro_f1'):<16}"
                f"{cell.test.summary('micro_f1'):<16}"
                f"{cell.test.summary('macro_f1'):<16}"
                f"{cell.invalid_rate_units:.4f}"
            )
        lines.append("")
        lines.append("fragmentation (avg pieces/span, avg words/span):")
        for policy, stats in self.fragmentation.items():
            lines.append(
                f"  {policy}: {stats['avg_pieces_per_gold_span']:.2f}, "
                f"{stats['avg_words_per_gold_span']:.2f}"
            )
        return "\n".join(lines) + "\n"

    def cell(self, policy: str, head: str = "softmax", granularity: str = "subword") -> AblationCell:
        for c in self.cells:
            if (c.policy, c.head, c.granularity) == (policy, head, granularity):
                return c
        raise KeyError((policy, head, granularity))


def _score_split(model, sentences) -> tuple[dict[str, float], list[list[str]], list[list[str]]]:
    from .tagger import predict_detailed

    word_predictions: list[list[str]] = []
    unit_predictions: list[list[str]] = []
    for sentence in sentences:
        detail = predict_detailed(model, sentence.tokens)
        word_predictions.append(detail.word_labels)
        unit_predictions.append(detail.unit_labels)
    score = entity_prf(sentences, word_predictions, model.labelset)
    metrics = {
        "micro_precision": score.micro_precision,
        "micro_recall": score.micro_recall,
        "micro_f1": score.micro_f1,
        "macro_f1": score.macro_f1,
    }
    return metrics, word_predictions, unit_predictions


def ablation_harness(
    train_set,
    dev_set,
    test_set,
    labelset: LabelSet,
    policies: Sequence[str] = ("none", "num", "shape"),
    heads: Sequence[str] = ("softmax",),
    granularities: Sequence[str] = ("subword",),
    seeds: Sequence[int] = (0,),
    feature_config=None,
    train_config=None,
) -> AblationResult:
    """Train one model per (policy, head, granularity, seed) cell and score it.

    Failures abort the cell, not the harness. Emissions are deterministic:
    the same inputs yield byte-identical reports.
    """
    from .tagger import FeatureConfig, TrainConfig, pack_dataset, train

    if not seeds:
        raise EvalError("need at least one seed")
    feature_config = feature_config or FeatureConfig(hash_dimension=2**18)
    base_train_config = train_config or TrainConfig(epochs=10, patience=2)

    shape_vocab = ShapeVocab.from_sentences(train_set)
    vocab = build_subword_vocab(train_set, shape_vocab)

    fragmentation = {}
    for policy in policies:
        fragmentation[policy] = fragmentation_stats(
            train_set, vocab, policy, shape_vocab if policy == "shape" else None
        )

    cells: list[AblationCell] = []
    for granularity in granularities:
        for policy in policies:
            sv = shape_vocab if policy == "shape" else None
            packed = {}
            for name, split in (("train", train_set), ("dev", dev_set), ("test", test_set)):
                packed[name] = pack_dataset(
                    split, labelset, feature_config, policy, granularity, vocab, sv
                )
            for head in heads:
                cell = AblationCell(policy, head, granularity, "ok", list(seeds))
                try:
                    dev_runs, test_runs = [], []
                    unit_invalid, word_invalid = [], []
                    for seed in seeds:
                        cfg = TrainConfig(
                            epochs=base_train_config.epochs,
                            learning_rate=base_train_config.learning_rate,
                            l2_strength=base_train_config.l2_strength,
                            batch_size=base_train_config.batch_size,
                            seed=seed,
                            patience=base_train_config.patience,
                        )
                        model = train(
                            train_set,
                            dev_set,
                            labelset,
                            feature_config,
                            cfg,
                            head=head,
                            granularity=granularity,
                            policy=policy,
                            vocab=vocab,
                            shape_vocab=sv,
                            packed_train=packed["train"],
                            packed_dev=packed["dev"],
                        )
                        dev_metrics, _, _ = _score_split(model, dev_set)
                        test_metrics, word_preds, unit_preds = _score_split(model, test_set)
                        dev_runs.append(dev_metrics)
                        test_runs.append(test_metrics)
                        unit_invalid.append(invalid_sequence_report(unit_preds).violation_rate)
                        word_invalid.append(invalid_sequence_report(word_preds).violation_rate)
                    cell.dev = aggregate_runs(dev_runs)
                    cell.test = aggregate_runs(test_runs)
                    cell.invalid_rate_units = sum(unit_invalid) / len(unit_invalid)
                    cell.invalid_rate_words = sum(word_invalid) / len(word_invalid)
                except Exception as exc:  # cell failure must not kill the harness
                    cell.status = "failed"
                    cell.error = f"{type(exc).__name__}: {exc}"
                cells.append(cell)
    return AblationResult(cells, fragmentation)
