"""IOB2 label algebra: validation, span conversion, and word/subword alignment.

Label strings are exactly "O", "B-<tag>" or "I-<tag>" with case-sensitive tag
names. "O" is always label index 0 so that deterministic tie-breaking lands on
the safe default.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence


class LabelError(ValueError):
    """Raised when label data violates the IOB2 contract."""


@dataclass(frozen=True)
class Span:
    """Half-open tagged span over word positions: [start, end)."""

    start: int
    end: int
    tag: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise LabelError(f"invalid span bounds ({self.start}, {self.end})")


@dataclass(frozen=True)
class Violation:
    """A single IOB2 violation: where it happened and what kind it is."""

    position: int
    kind: str
    label: str


class PoolingStrategy(str, enum.Enum):
    """How a word's label is derived from its subword pieces."""

    FIRST = "first"
    ALL = "all"


class LabelSet:
    """An ordered set of entity tags and the derived IOB2 token labels.

    The derived label list is "O" followed by a B-/I- pair per tag, in tag
    order, so ``len(labels) == 2 * len(tags) + 1`` and "O" has index 0.
    """

    def __init__(self, tags: Sequence[str]):
        tags = tuple(tags)
        if not tags:
            raise LabelError("label set needs at least one tag")
        if len(set(tags)) != len(tags):
            raise LabelError("duplicate tag names in label set")
        for tag in tags:
            if not tag or tag in ("O",) or tag.startswith(("B-", "I-")):
                raise LabelError(f"bad tag name: {tag!r}")
        self.tags: tuple[str, ...] = tags
        labels = ["O"]
        for tag in tags:
            labels.append(f"B-{tag}")
            labels.append(f"I-{tag}")
        self.labels: tuple[str, ...] = tuple(labels)
        self._label_index = {lab: i for i, lab in enumerate(self.labels)}
        self._tag_index = {tag: i for i, tag in enumerate(tags)}

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LabelSet) and self.tags == other.tags

    def __hash__(self) -> int:
        return hash(self.tags)

    def label_index(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise LabelError(f"unknown label: {label!r}") from None

    def tag_index(self, tag: str) -> int:
        try:
            return self._tag_index[tag]
        except KeyError:
            raise LabelError(f"unknown tag: {tag!r}") from None

    def has_label(self, label: str) -> bool:
        return label in self._label_index

    def b_index(self, tag: str) -> int:
        return 1 + 2 * self.tag_index(tag)

    def i_index(self, tag: str) -> int:
        return 2 + 2 * self.tag_index(tag)

    def fingerprint(self) -> str:
        digest = hashlib.sha256("\n".join(self.tags).encode("utf-8"))
        return digest.hexdigest()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{TAGS_FILE_HEADER}\n")
            for tag in self.tags:
                fh.write(tag + "\n")

    @classmethod
    def load(cls, path) -> "LabelSet":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != TAGS_FILE_HEADER:
                raise LabelError(f"unrecognized tags file header: {header!r}")
            tags = [line.rstrip("\n") for line in fh if line.strip()]
        return cls(tags)


TAGS_FILE_HEADER = "#fintag-tags:1"


def _split_label(label: str) -> tuple[str, str]:
    """Return (role, tag) where role is one of "O", "B", "I"."""
    if label == "O":
        return "O", ""
    if label.startswith("B-") and len(label) > 2:
        return "B", label[2:]
    if label.startswith("I-") and len(label) > 2:
        return "I", label[2:]
    return "?", ""


def validate_iob2(labels: Sequence[str], labelset: LabelSet | None = None) -> list[Violation]:
    """Check a label sequence against the IOB2 scheme.

    Returns the list of violations (empty when the sequence is valid).
    Violations are data, not exceptions: unknown label strings, I- at the
    start of the sequence, I- after O, and I- after a B-/I- of a different
    tag.
    """
    violations: list[Violation] = []
    prev_role, prev_tag = "O", ""
    for pos, label in enumerate(labels):
        role, tag = _split_label(label)
        if role == "?" or (labelset is not None and not labelset.has_label(label)):
            violations.append(Violation(pos, "unknown_label", label))
            prev_role, prev_tag = "O", ""
            continue
        if role == "I":
            if pos == 0:
                violations.append(Violation(pos, "i_at_start", label))
            elif prev_role == "O":
                violations.append(Violation(pos, "i_after_o", label))
            elif prev_tag != tag:
                violations.append(Violation(pos, "i_tag_mismatch", label))
        prev_role, prev_tag = role, tag
    return violations


def spans_from_labels(labels: Sequence[str], *, lenient: bool = False) -> list[Span]:
    """Extract maximal B-t (I-t)* runs as spans, ordered by start position.

    With ``lenient=False`` the sequence must be IOB2-valid; the first
    violation is reported otherwise. With ``lenient=True`` (used to score
    model predictions that may be nonsensical) an I-t that cannot legally
    continue the previous label opens a new span, conlleval-style.
    """
    if not lenient:
        violations = validate_iob2(labels)
        if violations:
            v = violations[0]
            raise LabelError(f"invalid IOB2 at position {v.position}: {v.kind} ({v.label!r})")
    spans: list[Span] = []
    open_start, open_tag = -1, ""
    for pos, label in enumerate(labels):
        role, tag = _split_label(label)
        if role == "B":
            if open_start >= 0:
                spans.append(Span(open_start, pos, open_tag))
            open_start, open_tag = pos, tag
        elif role == "I":
            if open_start >= 0 and tag == open_tag:
                continue
            # only reachable in lenient mode: treat as a new span
            if open_start >= 0:
                spans.append(Span(open_start, pos, open_tag))
            open_start, open_tag = pos, tag
        else:  # "O" or junk
            if open_start >= 0:
                spans.append(Span(open_start, pos, open_tag))
            open_start, open_tag = -1, ""
    if open_start >= 0:
        spans.append(Span(open_start, len(labels), open_tag))
    return spans


def labels_from_spans(spans: Iterable[Span], length: int) -> list[str]:
    """Render non-overlapping spans as an IOB2 label sequence of given length."""
    labels = ["O"] * length
    occupied = [False] * length
    for span in sorted(spans, key=lambda s: s.start):
        if span.end > length:
            raise LabelError(f"span {span} exceeds sequence length {length}")
        if any(occupied[span.start : span.end]):
            raise LabelError(f"span {span} overlaps a previous span")
        for i in range(span.start, span.end):
            occupied[i] = True
        labels[span.start] = f"B-{span.tag}"
        for i in range(span.start + 1, span.end):
            labels[i] = f"I-{span.tag}"
    return labels


def align_to_subwords(word_labels: Sequence[str], piece_counts: Sequence[int]) -> list[str]:
    """Project word labels onto subword pieces.

    B-t emits B-t on the word's first piece and I-t on the rest; I-t and O
    propagate to every piece. Output length is sum(piece_counts) and is
    IOB2-valid whenever the input is.
    """
    if len(word_labels) != len(piece_counts):
        raise LabelError(
            f"{len(word_labels)} word labels vs {len(piece_counts)} piece counts"
        )
    piece_labels: list[str] = []
    for label, count in zip(word_labels, piece_counts):
        if count < 1:
            raise LabelError(f"piece count must be >= 1, got {count}")
        role, tag = _split_label(label)
        if role == "B":
            piece_labels.append(label)
            piece_labels.extend([f"I-{tag}"] * (count - 1))
        else:
            piece_labels.extend([label] * count)
    return piece_labels


def collapse_to_words(
    piece_labels: Sequence[str],
    piece_counts: Sequence[int],
    pooling: PoolingStrategy = PoolingStrategy.FIRST,
) -> tuple[list[str], list[bool]]:
    """Collapse piece labels back to word labels.

    The word label is always the label of the word's first piece. Under
    ``PoolingStrategy.ALL`` the second return value flags words whose pieces
    carry different tags (feeding the invalid-sequence report); under FIRST
    the flags are all False.
    """
    pooling = PoolingStrategy(pooling)
    total = sum(piece_counts)
    if len(piece_labels) != total:
        raise LabelError(f"{len(piece_labels)} piece labels vs {total} expected from counts")
    word_labels: list[str] = []
    disagreements: list[bool] = []
    offset = 0
    for count in piece_counts:
        if count < 1:
            raise LabelError(f"piece count must be >= 1, got {count}")
        chunk = piece_labels[offset : offset + count]
        word_labels.append(chunk[0])
        if pooling is PoolingStrategy.ALL:
            tags = {_split_label(lab)[1] for lab in chunk}
            disagreements.append(len(tags) > 1)
        else:
            disagreements.append(False)
        offset += count
    return word_labels, disagreements
