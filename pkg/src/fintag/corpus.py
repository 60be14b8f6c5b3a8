"""Corpus ingestion, filtering, splitting, statistics, and synthetic data.

On-disk format: UTF-8, one JSON record per line with fields ``tokens``
(array of strings), ``labels`` (array of IOB2 strings), ``doc_id`` and
``period_index``. The period index is a monotone proxy for filing date and
drives the chronological split.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .labels import LabelSet, Span, labels_from_spans, validate_iob2
from .tokenization import detect_number


class CorpusError(ValueError):
    """Raised for malformed corpus files or invalid configuration."""


@dataclass(frozen=True)
class AnnotatedSentence:
    """Word tokens with gold IOB2 labels and provenance metadata."""

    tokens: tuple[str, ...]
    labels: tuple[str, ...]
    doc_id: str = ""
    period_index: int = 0

    def __post_init__(self) -> None:
        if len(self.tokens) < 1:
            raise CorpusError("sentence must have at least one token")
        if len(self.tokens) != len(self.labels):
            raise CorpusError(
                f"{len(self.tokens)} tokens vs {len(self.labels)} labels"
            )

    @classmethod
    def create(cls, tokens, labels, doc_id="", period_index=0) -> "AnnotatedSentence":
        return cls(tuple(tokens), tuple(labels), doc_id, int(period_index))


@dataclass(frozen=True)
class LoadDiagnostic:
    line_number: int
    reason: str


@dataclass
class FilterReport:
    kept: int = 0
    discarded: int = 0
    discarded_tagged: int = 0

    def to_text(self) -> str:
        return (
            f"kept = {self.kept}\n"
            f"discarded = {self.discarded}\n"
            f"discarded_tagged = {self.discarded_tagged}\n"
        )


@dataclass
class CorpusStats:
    sentence_count: int
    avg_tokens_per_sentence: float
    std_tokens_per_sentence: float
    avg_tags_per_sentence: float
    std_tags_per_sentence: float
    tag_frequency: dict[str, int]
    numeric_span_ratio: float

    def to_text(self) -> str:
        lines = [
            f"sentences = {self.sentence_count}",
            f"avg_tokens_per_sentence = {self.avg_tokens_per_sentence:.2f} ± {self.std_tokens_per_sentence:.2f}",
            f"avg_tags_per_sentence = {self.avg_tags_per_sentence:.2f} ± {self.std_tags_per_sentence:.2f}",
            f"numeric_span_ratio = {self.numeric_span_ratio:.4f}",
            "tag_frequency:",
        ]
        lines.extend(f"  {tag} = {count}" for tag, count in self.tag_frequency.items())
        return "\n".join(lines) + "\n"


def _validate_record(tokens, labels, labelset: LabelSet) -> str | None:
    """Return a rejection reason, or None when the record is acceptable."""
    if not isinstance(tokens, list) or not isinstance(labels, list):
        return "tokens and labels must be arrays"
    if not tokens:
        return "empty token array"
    if len(tokens) != len(labels):
        return f"length mismatch: {len(tokens)} tokens vs {len(labels)} labels"
    if not all(isinstance(t, str) and t for t in tokens):
        return "tokens must be non-empty strings"
    violations = validate_iob2(labels, labelset)
    if violations:
        v = violations[0]
        return f"label violation at token {v.position}: {v.kind} ({v.label!r})"
    return None


def load_dataset(
    path,
    labelset: LabelSet,
    strict: bool = False,
) -> tuple[list[AnnotatedSentence], list[LoadDiagnostic]]:
    """Read a corpus file, validating every record.

    Returns the accepted sentences in file order plus one diagnostic per
    rejected record. With ``strict=True`` the first bad record aborts the
    whole load with a CorpusError naming the line.
    """
    sentences: list[AnnotatedSentence] = []
    diagnostics: list[LoadDiagnostic] = []

    def reject(lineno: int, reason: str) -> None:
        if strict:
            raise CorpusError(f"line {lineno}: {reason}")
        diagnostics.append(LoadDiagnostic(lineno, reason))

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                reject(lineno, f"malformed record: {exc.msg}")
                continue
            if not isinstance(record, dict):
                reject(lineno, "record is not an object")
                continue
            tokens = record.get("tokens")
            labels = record.get("labels")
            reason = _validate_record(tokens, labels, labelset)
            if reason is not None:
                reject(lineno, reason)
                continue
            sentences.append(
                AnnotatedSentence.create(
                    tokens,
                    labels,
                    str(record.get("doc_id", "")),
                    int(record.get("period_index", 0)),
                )
            )
    return sentences, diagnostics


def load_predictions(path) -> list[tuple[list[str], list[str]]]:
    """Read (tokens, labels) pairs without IOB2 validation.

    Model predictions may be nonsensical label sequences; the scorer handles
    them leniently, so this loader checks only structure and lengths.
    """
    records: list[tuple[list[str], list[str]]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: malformed record: {exc.msg}") from exc
            tokens = record.get("tokens")
            labels = record.get("labels")
            if not isinstance(tokens, list) or not isinstance(labels, list):
                raise CorpusError(f"line {lineno}: tokens and labels must be arrays")
            if len(tokens) != len(labels):
                raise CorpusError(f"line {lineno}: token/label length mismatch")
            records.append(([str(t) for t in tokens], [str(l) for l in labels]))
    return records


def save_dataset(sentences: Iterable[AnnotatedSentence], path) -> None:
    """Write sentences in the line-record format accepted by load_dataset."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in sentences:
            record = {
                "tokens": list(s.tokens),
                "labels": list(s.labels),
                "doc_id": s.doc_id,
                "period_index": s.period_index,
            }
            fh.write(json.dumps(record, ensure_ascii=False, separators=(", ", ": ")))
            fh.write("\n")


# Stand-ins for the unpublished heuristics: amounts with optional thousands
# separators and one decimal part, currency symbols, percent signs.
DEFAULT_FILTER_RULES = (
    r"^[+-]?\d{1,3}(?:,\d{3})*(?:\.\d+)?$",
    r"^[$€£¥]$",
    r"^%$",
    r"^\d+(?:\.\d+)?%$",
)


def compile_filter_rules(rules: Sequence[str]) -> list[re.Pattern]:
    if not rules:
        raise CorpusError("filter needs at least one rule")
    compiled = []
    for rule in rules:
        try:
            compiled.append(re.compile(rule))
        except re.error as exc:
            raise CorpusError(f"invalid filter pattern {rule!r}: {exc}") from exc
    return compiled


def filter_sentences(
    sentences: Iterable[AnnotatedSentence],
    rules: Sequence[str] = DEFAULT_FILTER_RULES,
    keep_tagged: bool = True,
) -> tuple[list[AnnotatedSentence], FilterReport]:
    """Keep sentences where any token matches any rule.

    In training mode (``keep_tagged=True``) a sentence containing a non-O
    label is always kept, so no gold span is ever silently dropped; inference
    mode applies the rules alone.
    """
    patterns = compile_filter_rules(rules)
    kept: list[AnnotatedSentence] = []
    report = FilterReport()
    for sentence in sentences:
        matches = any(p.search(t) for t in sentence.tokens for p in patterns)
        tagged = any(lab != "O" for lab in sentence.labels)
        if matches or (keep_tagged and tagged):
            kept.append(sentence)
            report.kept += 1
        else:
            report.discarded += 1
            if tagged:
                report.discarded_tagged += 1
    return kept, report


def chronological_split(
    sentences: Sequence[AnnotatedSentence],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> tuple[list[AnnotatedSentence], list[AnnotatedSentence], list[AnnotatedSentence]]:
    """Sort by (period_index, doc_id, input order) and cut at the ratio boundaries."""
    if not sentences:
        raise CorpusError("cannot split an empty corpus")
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"ratios must be nonnegative and sum to 1, got {ratios}")
    order = sorted(range(len(sentences)), key=lambda i: (sentences[i].period_index, sentences[i].doc_id, i))
    n = len(sentences)
    cut1 = round(n * ratios[0])
    cut2 = round(n * (ratios[0] + ratios[1]))
    parts = (order[:cut1], order[cut1:cut2], order[cut2:])
    for name, part in zip(("train", "dev", "test"), parts):
        if not part:
            raise CorpusError(f"empty split: {name}")
    train, dev, test = ([sentences[i] for i in part] for part in parts)
    return train, dev, test


def compute_stats(sentences: Sequence[AnnotatedSentence]) -> CorpusStats:
    """Aggregate token/span counts to mean ± population std plus tag frequencies."""
    from .labels import spans_from_labels

    if not sentences:
        raise CorpusError("cannot compute statistics of an empty corpus")
    token_counts = []
    span_counts = []
    tag_frequency: dict[str, int] = {}
    numeric_spans = 0
    total_spans = 0
    for sentence in sentences:
        token_counts.append(len(sentence.tokens))
        spans = spans_from_labels(sentence.labels)
        span_counts.append(len(spans))
        for span in spans:
            tag_frequency[span.tag] = tag_frequency.get(span.tag, 0) + 1
            total_spans += 1
            if all(detect_number(t) for t in sentence.tokens[span.start : span.end]):
                numeric_spans += 1

    def mean_std(values: list[int]) -> tuple[float, float]:
        n = len(values)
        mean = sum(values) / n
        var = sum((v - mean) ** 2 for v in values) / n
        return mean, var**0.5

    avg_tok, std_tok = mean_std(token_counts)
    avg_tag, std_tag = mean_std(span_counts)
    ordered = dict(sorted(tag_frequency.items(), key=lambda kv: (-kv[1], kv[0])))
    return CorpusStats(
        sentence_count=len(sentences),
        avg_tokens_per_sentence=avg_tok,
        std_tokens_per_sentence=std_tok,
        avg_tags_per_sentence=avg_tag,
        std_tags_per_sentence=std_tag,
        tag_frequency=ordered,
        numeric_span_ratio=(numeric_spans / total_spans) if total_spans else 0.0,
    )


# --------------------------------------------------------------------------
# Synthetic corpus generation
# --------------------------------------------------------------------------
#
# Desk-scale surrogate for the production regime: most gold spans are numeric
# amounts whose tag is determined by a nearby cue noun, and the amount's
# shape correlates with the tag family. Four families rotate over tag
# indices:
#
#   index % 4 == 0  money    comma-grouped amounts, cue left or right
#   index % 4 == 1  percent  short decimal amounts
#   index % 4 == 2  count    small integers, occasionally spelled out
#   index % 4 == 3  scaled   "X.X million" two-word spans
#
# A slice of money sentences uses a cue noun shared between two money tags
# whose amounts differ only in the decimal tail, so the tags are separable
# by number shape but not by context alone.

_DEFAULT_TAG_NAMES = (
    "Revenues",
    "EffectiveIncomeTaxRateContinuingOperations",
    "NumberOfOperatingSegments",
    "BusinessCombinationConsiderationTransferred",
    "OperatingLeaseExpense",
    "DebtInstrumentInterestRateStatedPercentage",
    "NumberOfRealEstateProperties",
    "DebtInstrumentFaceAmount",
    "LeaseAndRentalExpense",
    "LesseeOperatingLeaseDiscountRate",
    "NumberOfReportableSegments",
    "GoodwillImpairmentLoss",
)

_CUE_NOUNS = (
    "revenue",
    "tax",
    "segments",
    "consideration",
    "rent",
    "interest",
    "properties",
    "debt",
    "royalties",
    "discount",
    "divisions",
    "goodwill",
)

_AMBIGUOUS_NOUN = "charges"
_ADJECTIVES = ("net", "total", "annual", "quarterly", "aggregate", "combined")
_VERBS = ("reported", "recognized", "recorded", "incurred", "paid", "received")
_PREFIXES = (("the", "company"), ("the", "group"), ("management",))
_SUFFIXES = (
    ("during", "the", "period"),
    ("in", "the", "quarter"),
    ("for", "the", "year"),
    ("under", "the", "agreement"),
)
_WORD_NUMBERS = ("three", "five", "seven", "ten", "twelve", "fifteen")
_PLAIN_WORDS = (
    "expects",
    "further",
    "growth",
    "steady",
    "demand",
    "across",
    "markets",
    "operations",
    "remained",
    "stable",
)


def synthetic_labelset(n_tags: int = 12) -> LabelSet:
    """Default tag names for the synthetic corpus (XBRL-flavored)."""
    if n_tags < 4:
        raise CorpusError("synthetic corpus needs at least 4 tags")
    names = list(_DEFAULT_TAG_NAMES[:n_tags])
    names.extend(f"SyntheticConcept{i:03d}" for i in range(len(names), n_tags))
    return LabelSet(names)


@dataclass(frozen=True)
class SyntheticConfig:
    n_sentences: int
    n_tags: int = 12
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_sentences < 1:
            raise CorpusError("n_sentences must be >= 1")
        if self.n_tags < 4:
            raise CorpusError("n_tags must be >= 4")


def _cue_noun(i: int) -> str:
    return _CUE_NOUNS[i] if i < len(_CUE_NOUNS) else f"item{i}"


def _money_amount(rng: random.Random, decimal_tail: bool) -> str:
    lead = rng.choice((rng.randint(1, 9), rng.randint(10, 99)))
    amount = f"{lead},{rng.randint(0, 999):03d}"
    if decimal_tail:
        amount += f".{rng.randint(0, 99):02d}"
    return amount


def _percent_amount(rng: random.Random) -> str:
    if rng.random() < 0.5:
        return f"{rng.randint(1, 9)}.{rng.randint(0, 9)}"
    return f"{rng.randint(1, 9)}.{rng.randint(0, 99):02d}"


def _count_amount(rng: random.Random) -> str:
    return str(rng.randint(2, 99))


def _scaled_amount(rng: random.Random) -> tuple[str, str]:
    value = f"{rng.randint(1, 9)}.{rng.randint(0, 9)}"
    return value, rng.choice(("million", "billion"))


def generate_synthetic(config: SyntheticConfig, labelset: LabelSet) -> list[AnnotatedSentence]:
    """Deterministic synthetic corpus; gold tags depend on context and shape.

    At least 90% of gold spans are purely numeric by construction, and
    period_index grows with sentence index so chronological splitting is
    meaningful.
    """
    if len(labelset.tags) < config.n_tags:
        raise CorpusError(
            f"label set has {len(labelset.tags)} tags, config asks for {config.n_tags}"
        )
    tags = labelset.tags[: config.n_tags]
    rng = random.Random(config.seed)
    money_tags = [i for i in range(config.n_tags) if i % 4 == 0]
    ambiguous_pair = tuple(money_tags[:2]) if len(money_tags) >= 2 else None

    family_weights = {0: 0.40, 1: 0.28, 2: 0.26, 3: 0.06}
    tag_pool: list[int] = []
    tag_weights: list[float] = []
    for i in range(config.n_tags):
        tag_pool.append(i)
        tag_weights.append(family_weights[i % 4])

    sentences: list[AnnotatedSentence] = []
    for idx in range(config.n_sentences):
        prefix = list(rng.choice(_PREFIXES))
        suffix = list(rng.choice(_SUFFIXES))
        verb = rng.choice(_VERBS)
        adj = rng.choice(_ADJECTIVES)
        draw = rng.random()

        if draw < 0.08:
            # untagged sentence that still mentions numbers
            body = ["opened", str(rng.randint(2, 9)), "locations", "in", str(rng.randint(2015, 2022))]
            tokens = prefix + body + suffix
            spans: list[Span] = []
        elif draw < 0.14:
            # untagged sentence with no numeric token at all
            body = [verb] + list(rng.sample(_PLAIN_WORDS, 4))
            tokens = prefix + body + suffix
            spans = []
        elif ambiguous_pair is not None and draw < 0.14 + 0.86 * 0.18:
            # shared cue noun; only the amount's shape separates the pair
            which = rng.randrange(2)
            tag_i = ambiguous_pair[which]
            amount = _money_amount(rng, decimal_tail=bool(which))
            body = [verb, adj, _AMBIGUOUS_NOUN, "of", amount]
            start = len(prefix) + len(body) - 1
            tokens = prefix + body + suffix
            spans = [Span(start, start + 1, tags[tag_i])]
        else:
            tag_i = rng.choices(tag_pool, weights=tag_weights, k=1)[0]
            family = tag_i % 4
            noun = _cue_noun(tag_i)
            right_cued = rng.random() < 0.45
            if family == 3:
                value, unit = _scaled_amount(rng)
                if right_cued:
                    body = [verb, value, unit, noun]
                    start = len(prefix) + 1
                else:
                    body = [verb, adj, noun, value, unit]
                    start = len(prefix) + 3
                span_len = 2
            else:
                if family == 0:
                    amount = _money_amount(rng, decimal_tail=rng.random() < 0.3)
                elif family == 1:
                    amount = _percent_amount(rng)
                else:
                    if rng.random() < 0.06:
                        amount = rng.choice(_WORD_NUMBERS)
                    else:
                        amount = _count_amount(rng)
                if right_cued:
                    body = [verb, amount, noun, "costs"]
                    start = len(prefix) + 1
                else:
                    body = [verb, adj, noun, "of", amount]
                    start = len(prefix) + 4
                span_len = 1
            tokens = prefix + body + suffix
            spans = [Span(start, start + span_len, tags[tag_i])]

        labels = labels_from_spans(spans, len(tokens))
        sentences.append(
            AnnotatedSentence.create(
                tokens,
                labels,
                doc_id=f"doc{idx // 10:06d}",
                period_index=idx // 50,
            )
        )
    return sentences
