"""Subword tokenization and numeric pseudo-token normalization.

Numbers are detected with a strict grammar (optional sign, legal 3-digit
comma groupings or a plain digit run, at most one fractional part). A
detected number can be replaced by the uniform ``[NUM]`` pseudo-token or by
its shape token, e.g. "53.2" -> "[XX.X]", so models generalize over numeric
expressions instead of fragmenting them into subword pieces.
"""

from __future__ import annotations

import hashlib
import re
import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

NUM_TOKEN = "[NUM]"

# optional sign; comma-grouped digits or a plain digit run; one optional
# fractional part; no dates, slashes or letters.
_NUMBER_RE = re.compile(r"^[+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?$")
_SHAPE_RE = re.compile(r"^\[[X.,]+\]$")

VOCAB_FILE_HEADER = "#fintag-subword-vocab:1"
VOCAB_PSEUDO_SECTION = "#pseudo-tokens"
SHAPES_FILE_HEADER = "#fintag-shape-vocab:1"


class VocabError(ValueError):
    """Raised for malformed vocabularies or vocabulary files."""


class NumericPolicy(str, enum.Enum):
    """What to do with detected numbers before tokenization."""

    NONE = "none"
    NUM = "num"
    SHAPE = "shape"


def detect_number(token: str) -> bool:
    """True iff the token is a plain numeric amount under the number grammar."""
    if not token:
        raise ValueError("empty token")
    return _NUMBER_RE.match(token) is not None


def shape_of(token: str) -> str:
    """Shape token for a numeric amount: digits to X, separators kept, sign dropped.

    Raises ValueError when called on a token that is not a detected number.
    """
    if not detect_number(token):
        raise ValueError(f"shape_of called on non-number: {token!r}")
    body = token.lstrip("+-")
    return "[" + "".join("X" if c.isdigit() else c for c in body) + "]"


class ShapeVocab:
    """The closed set of shape pseudo-tokens plus the [NUM] fallback."""

    def __init__(self, shapes: Iterable[str]):
        shapes = frozenset(shapes)
        for shape in shapes:
            if not _SHAPE_RE.match(shape):
                raise VocabError(f"not a valid shape token: {shape!r}")
        self.shapes: frozenset[str] = shapes
        self.fallback: str = NUM_TOKEN

    def __contains__(self, shape: str) -> bool:
        return shape in self.shapes

    def __len__(self) -> int:
        return len(self.shapes)

    def sorted_shapes(self) -> list[str]:
        return sorted(self.shapes)

    def fingerprint(self) -> str:
        digest = hashlib.sha256("\n".join(self.sorted_shapes()).encode("utf-8"))
        return digest.hexdigest()

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "ShapeVocab":
        """Collect the shapes of every detected number in a token stream."""
        return cls(shape_of(t) for t in tokens if detect_number(t))

    @classmethod
    def from_sentences(cls, sentences) -> "ShapeVocab":
        return cls.from_tokens(t for s in sentences for t in s.tokens)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{SHAPES_FILE_HEADER}\n")
            for shape in self.sorted_shapes():
                fh.write(shape + "\n")

    @classmethod
    def load(cls, path) -> "ShapeVocab":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != SHAPES_FILE_HEADER:
                raise VocabError(f"unrecognized shape vocab header: {header!r}")
            return cls(line.rstrip("\n") for line in fh if line.strip())


def normalize_numeric(
    tokens: Sequence[str],
    policy: NumericPolicy | str,
    shape_vocab: ShapeVocab | None = None,
) -> list[str]:
    """Replace detected numbers per policy; 1:1 positional, idempotent.

    Under SHAPE, a number whose shape is not in the vocabulary falls back to
    [NUM] so the "is a number" signal survives unseen shapes.
    """
    policy = NumericPolicy(policy)
    if policy is NumericPolicy.NONE:
        return list(tokens)
    if policy is NumericPolicy.SHAPE and shape_vocab is None:
        raise ValueError("policy=shape requires a shape vocabulary")
    out = []
    for token in tokens:
        if not detect_number(token):
            out.append(token)
        elif policy is NumericPolicy.NUM:
            out.append(NUM_TOKEN)
        else:
            shape = shape_of(token)
            out.append(shape if shape in shape_vocab else shape_vocab.fallback)
    return out


@dataclass
class SubwordVocab:
    """Greedy longest-match subword inventory.

    ``pieces`` maps each piece to its id (file line order); continuation
    pieces carry the "##" prefix. Pseudo-tokens are atomic: they tokenize to
    themselves and are never produced by greedy matching.
    """

    pieces: dict[str, int]
    unk_token: str = "[UNK]"
    added_pseudo_tokens: frozenset[str] = field(default_factory=frozenset)
    max_word_length: int = 100

    def __post_init__(self) -> None:
        if self.unk_token not in self.pieces:
            raise VocabError(f"unk token {self.unk_token!r} missing from pieces")
        for pseudo in self.added_pseudo_tokens:
            if pseudo not in self.pieces:
                raise VocabError(f"pseudo-token {pseudo!r} missing from pieces")

    def __contains__(self, piece: str) -> bool:
        return piece in self.pieces

    def __len__(self) -> int:
        return len(self.pieces)

    @classmethod
    def from_pieces(
        cls,
        pieces: Iterable[str],
        unk_token: str = "[UNK]",
        pseudo_tokens: Iterable[str] = (),
        max_word_length: int = 100,
    ) -> "SubwordVocab":
        ordered: dict[str, int] = {}
        for piece in pieces:
            if piece not in ordered:
                ordered[piece] = len(ordered)
        pseudo = frozenset(pseudo_tokens)
        for token in sorted(pseudo):
            if token not in ordered:
                ordered[token] = len(ordered)
        if unk_token not in ordered:
            ordered = {unk_token: 0, **{p: i + 1 for p, i in ordered.items()}}
        return cls(ordered, unk_token, pseudo, max_word_length)

    def fingerprint(self) -> str:
        payload = "\n".join(self.pieces) + "\0" + "\n".join(sorted(self.added_pseudo_tokens))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        reserved = {VOCAB_FILE_HEADER, VOCAB_PSEUDO_SECTION}
        for piece in self.pieces:
            if piece in reserved:
                raise VocabError(f"piece collides with file marker: {piece!r}")
        regular = [p for p in self.pieces if p not in self.added_pseudo_tokens]
        pseudo = [p for p in self.pieces if p in self.added_pseudo_tokens]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{VOCAB_FILE_HEADER}\n")
            for piece in regular:
                fh.write(piece + "\n")
            fh.write(f"{VOCAB_PSEUDO_SECTION}\n")
            for piece in pseudo:
                fh.write(piece + "\n")

    @classmethod
    def parse(cls, text: str, unk_token: str = "[UNK]", max_word_length: int = 100) -> "SubwordVocab":
        lines = text.split("\n")
        if not lines or lines[0] != VOCAB_FILE_HEADER:
            head = lines[0] if lines else ""
            raise VocabError(f"unrecognized vocab header: {head!r}")
        pieces: dict[str, int] = {}
        pseudo: set[str] = set()
        in_pseudo = False
        for piece in lines[1:]:
            if piece == VOCAB_PSEUDO_SECTION:
                in_pseudo = True
                continue
            if not piece:
                continue
            if piece in pieces:
                raise VocabError(f"duplicate piece in vocab file: {piece!r}")
            pieces[piece] = len(pieces)
            if in_pseudo:
                pseudo.add(piece)
        return cls(pieces, unk_token, frozenset(pseudo), max_word_length)

    @classmethod
    def load(cls, path, unk_token: str = "[UNK]", max_word_length: int = 100) -> "SubwordVocab":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read(), unk_token, max_word_length)


def wordpiece_tokenize(word: str, vocab: SubwordVocab) -> list[str]:
    """Greedy longest-match-first split of one word into subword pieces.

    Pseudo-tokens return themselves. When no prefix matches at any step (or
    the word exceeds the length cap), the whole word maps to the unk token.
    """
    if not word:
        raise ValueError("empty word")
    if word in vocab.added_pseudo_tokens:
        return [word]
    if len(word) > vocab.max_word_length:
        return [vocab.unk_token]
    pieces: list[str] = []
    start = 0
    n = len(word)
    while start < n:
        end = n
        found = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = "##" + candidate
            if candidate in vocab.pieces and candidate not in vocab.added_pseudo_tokens:
                found = candidate
                break
            end -= 1
        if found is None:
            return [vocab.unk_token]
        pieces.append(found)
        start = end
    return pieces


def tokenize_words(text: str) -> list[str]:
    """Whitespace word tokenizer that splits off leading/trailing punctuation.

    Auxiliary path for raw text; corpora are normally already word-tokenized.
    """
    words: list[str] = []
    for chunk in text.split():
        head: list[str] = []
        tail: list[str] = []
        while chunk and chunk[0] in _EDGE_PUNCT:
            head.append(chunk[0])
            chunk = chunk[1:]
        while chunk and chunk[-1] in _EDGE_PUNCT:
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        words.extend(head)
        if chunk:
            words.append(chunk)
        words.extend(reversed(tail))
    return words


_EDGE_PUNCT = set("()[]{}\"'.,;:!?$€£¥%")


def fixture_vocab() -> SubwordVocab:
    """The small subword vocabulary shipped with the package.

    It reproduces the canonical fragmentation examples ("9,323.0" into five
    pieces, "12.78" into three) and is handy for demos and tests.
    """
    from importlib import resources

    text = resources.files("fintag").joinpath("data/fixture_vocab.txt").read_text("utf-8")
    return SubwordVocab.parse(text)


def build_subword_vocab(
    sentences,
    shape_vocab: ShapeVocab | None = None,
    unk_token: str = "[UNK]",
) -> SubwordVocab:
    """Collect a subword inventory from word-tokenized sentences.

    Non-numeric words become whole pieces; every observed character is added
    both bare and with the "##" continuation prefix so numbers (which are
    deliberately excluded as whole pieces) fragment character by character.
    [NUM] and the given shape tokens are registered as atomic pseudo-tokens.
    """
    words: dict[str, None] = {}
    chars: dict[str, None] = {}
    for sentence in sentences:
        for token in sentence.tokens:
            for c in token:
                chars.setdefault(c, None)
            if not detect_number(token):
                words.setdefault(token, None)
    pieces = [unk_token]
    pieces.extend(words)
    pieces.extend(chars)
    pieces.extend("##" + c for c in chars)
    pseudo = {NUM_TOKEN}
    if shape_vocab is not None:
        pseudo.update(shape_vocab.shapes)
    return SubwordVocab.from_pieces(pieces, unk_token, pseudo)


def fragmentation_stats(
    sentences,
    vocab: SubwordVocab,
    policy: NumericPolicy | str = NumericPolicy.NONE,
    shape_vocab: ShapeVocab | None = None,
) -> dict[str, float]:
    """Average pieces and words per gold span after normalization under policy."""
    from .labels import spans_from_labels

    policy = NumericPolicy(policy)
    total_pieces = 0
    total_words = 0
    n_spans = 0
    for sentence in sentences:
        spans = spans_from_labels(sentence.labels)
        if not spans:
            continue
        units = normalize_numeric(sentence.tokens, policy, shape_vocab)
        for span in spans:
            for word in units[span.start : span.end]:
                total_pieces += len(wordpiece_tokenize(word, vocab))
            total_words += span.end - span.start
            n_spans += 1
    if n_spans == 0:
        raise ValueError("corpus has no gold spans")
    return {
        "avg_pieces_per_gold_span": total_pieces / n_spans,
        "avg_words_per_gold_span": total_words / n_spans,
    }
