"""Corpus I/O, BIESO conversion and segment F-score.

Two tasks share one representation. ``span`` corpora (CoNLL two-column,
NER-style) label every segment; non-entities are single-token ``NONE``
segments. ``wordseg`` corpora (SIGHAN style, one sentence of words per line)
use characters as tokens and label every word ``WORD``.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, NamedTuple, Sequence

from app.errors import ParseError, ValidationError
from app.model.embeddings import segment_key
from app.model.semicrf import Segment, Segmentation, validate_segmentation
from app.py_types import listOfStrings

logger = logging.getLogger(__name__)

NONE = "NONE"
WORD = "WORD"
DOCSTART = "-DOCSTART-"

_TAG = re.compile(r"^(?:O|[BIEMS](?:-\S+)?)$")

#* full-width digits and Latin letters to their single-byte forms
WIDTH_TABLE = str.maketrans(
    {chr(cp): chr(cp - 0xFEE0) for cp in [*range(0xFF10, 0xFF1A), *range(0xFF21, 0xFF3B), *range(0xFF41, 0xFF5B)]}
)


class TaskKind(str, Enum):
    SPAN = "span"
    WORDSEG = "wordseg"


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    segments: Segmentation

    def __len__(self):
        return len(self.tokens)


@dataclass
class LabeledCorpus:
    sentences: list[Sentence]
    task: TaskKind
    labels: tuple[str, ...] = ()
    repairs: int = 0
    skipped: int = 0

    def __post_init__(self):
        self.task = TaskKind(self.task)
        if not self.labels:
            self.labels = collect_labels(self.sentences, self.task)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]

    def subset(self, sentences: list[Sentence]) -> "LabeledCorpus":
        return LabeledCorpus(sentences, self.task, self.labels)

    def max_segment_length(self) -> int:
        return max((seg.length for s in self.sentences for seg in s.segments), default=1)

    def vocabulary(self) -> listOfStrings:
        return list(dict.fromkeys(t for s in self.sentences for t in s.tokens))

    def segmentations(self) -> list[Segmentation]:
        return [s.segments for s in self.sentences]


def collect_labels(sentences: Iterable[Sentence], task: TaskKind) -> tuple[str, ...]:
    seen = {seg.y for s in sentences for seg in s.segments}
    if task == TaskKind.WORDSEG:
        return (WORD,)
    rest = sorted(seen - {NONE})
    return ((NONE,) if NONE in seen else ()) + tuple(rest)


class Scores(NamedTuple):
    precision: float
    recall: float
    f: float


# --- BIESO ----------------------------------------------------------------

def bieso_encode(segments: Sequence[Segment], task: TaskKind | str = TaskKind.SPAN) -> list[str]:
    wordseg = TaskKind(task) == TaskKind.WORDSEG
    tags: list[str] = []
    for seg in segments:
        suffix = "" if wordseg else f"-{seg.y}"
        if seg.length == 1:
            tags.append("O" if not wordseg and seg.y == NONE else f"S{suffix}")
        else:
            tags.append(f"B{suffix}")
            tags.extend(f"I{suffix}" for _ in range(seg.length - 2))
            tags.append(f"E{suffix}")
    return tags


def _split_tag(tag: str) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    if not _TAG.match(tag):
        raise ValueError(tag)
    prefix, _, label = tag.partition("-")
    return ("I" if prefix == "M" else prefix), (label or None)


def bieso_decode(tags: Sequence[str], task: TaskKind | str = TaskKind.SPAN) -> tuple[Segmentation, int]:
    """Segments for ``tags`` and how many segments had to be repaired.

    Ill-formed input is repaired the conlleval way: an I or E that does not
    continue an open segment of the same label starts a new one, and a
    segment left open is closed where the next one starts.
    """
    wordseg = TaskKind(task) == TaskKind.WORDSEG
    segments: list[Segment] = []
    repairs = 0
    start: int | None = None
    label: str | None = None
    broken = False

    def close(end: int, clean: bool) -> None:
        nonlocal start, label, broken, repairs
        if start is None:
            return
        segments.append(Segment(start, end, label))
        if broken or not clean:
            repairs += 1
        start, label, broken = None, None, False

    for pos, tag in enumerate(tags, 1):
        try:
            prefix, name = _split_tag(tag)
        except ValueError:
            raise ValidationError(f"position {pos}: unknown tag {tag!r}") from None
        if wordseg:
            name = WORD
        elif prefix != "O" and name is None:
            raise ValidationError(f"position {pos}: tag {tag!r} lacks a label")

        if prefix in ("I", "E") and start is not None and label == name:
            if prefix == "E":
                close(pos, True)
            continue

        close(pos - 1, False)
        if prefix == "O":
            segments.append(Segment(pos, pos, NONE))
        elif prefix == "S":
            segments.append(Segment(pos, pos, name))
        else:
            start, label, broken = pos, name, prefix != "B"
            if prefix == "E":
                close(pos, False)
    close(len(tags), False)
    return tuple(segments), repairs


# --- readers ----------------------------------------------------------------

def _is_conll_tag(tag: str) -> bool:
    """O, or a prefix carrying its label."""
    return tag == "O" or (bool(_TAG.match(tag)) and "-" in tag)


def parse_conll(path: str) -> LabeledCorpus:
    sentences: list[Sentence] = []
    repairs = 0
    tokens: list[str] = []
    tags: list[str] = []
    first_line = 0

    def flush() -> None:
        nonlocal tokens, tags, repairs
        if tokens:
            try:
                segments, fixed = bieso_decode(tags, TaskKind.SPAN)
            except ValidationError as e:
                raise ParseError(path, first_line, str(e)) from None
            repairs += fixed
            sentences.append(Sentence(tuple(tokens), segments))
        tokens, tags = [], []

    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            fields = line.split()
            if not fields:
                flush()
                continue
            if fields[0] == DOCSTART:
                continue
            if len(fields) < 2:
                raise ParseError(path, line_no, f"expected TOKEN TAG, got {line.rstrip()!r}")
            tag = fields[-1]
            if not _is_conll_tag(tag):
                raise ParseError(path, line_no, f"unknown tag {tag!r}")
            if not tokens:
                first_line = line_no
            tokens.append(fields[0])
            tags.append(tag)
    flush()

    if repairs:
        logger.warning("%s: repaired %d ill-formed tag sequences", path, repairs)
    return LabeledCorpus(sentences, TaskKind.SPAN, repairs=repairs)


def normalize_width(text: str) -> str:
    return text.translate(WIDTH_TABLE)


def parse_wordseg(path: str, normalize: bool = False) -> LabeledCorpus:
    sentences: list[Sentence] = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if normalize:
                line = normalize_width(line)
            words = line.split()
            if not words:
                skipped += 1
                continue
            tokens: list[str] = []
            segments: list[Segment] = []
            for word in words:
                start = len(tokens) + 1
                tokens.extend(word)
                segments.append(Segment(start, len(tokens), WORD))
            sentences.append(Sentence(tuple(tokens), tuple(segments)))
    if skipped:
        logger.warning("%s: skipped %d empty lines", path, skipped)
    return LabeledCorpus(sentences, TaskKind.WORDSEG, skipped=skipped)


def parse_corpus(path: str, task: TaskKind | str, normalize: bool = False) -> LabeledCorpus:
    if TaskKind(task) == TaskKind.WORDSEG:
        return parse_wordseg(path, normalize)
    return parse_conll(path)


def read_tokens(path: str, task: TaskKind | str, normalize: bool = False) -> list[listOfStrings]:
    """Token sequences of a prediction input; gold tags, if present, are ignored."""
    sequences: list[listOfStrings] = []
    with open(path, "r", encoding="utf-8") as f:
        if TaskKind(task) == TaskKind.WORDSEG:
            for line in f:
                if normalize:
                    line = normalize_width(line)
                chars = [ch for ch in line if not ch.isspace()]
                if chars:
                    sequences.append(chars)
            return sequences
        current: listOfStrings = []
        for line in f:
            fields = line.split()
            if not fields:
                if current:
                    sequences.append(current)
                current = []
            elif fields[0] != DOCSTART:
                current.append(fields[0])
        if current:
            sequences.append(current)
    return sequences


def detect_task(path: str) -> TaskKind:
    """CoNLL when every non-blank line ends in a tag, word-seg otherwise."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [line.split() for line in f if line.strip()]
    lines = [fields for fields in lines if fields[0] != DOCSTART]
    if lines and all(len(fields) >= 2 and _is_conll_tag(fields[-1]) for fields in lines):
        return TaskKind.SPAN
    return TaskKind.WORDSEG


# --- writers ----------------------------------------------------------------

def write_conll(path: str, sequences: Sequence[Sequence[str]], predictions: Sequence[Segmentation]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for k, (tokens, segments) in enumerate(zip(sequences, predictions)):
            if k:
                f.write("\n")
            for token, tag in zip(tokens, bieso_encode(segments, TaskKind.SPAN)):
                f.write(f"{token}\t{tag}\n")


def write_wordseg(path: str, sequences: Sequence[Sequence[str]], predictions: Sequence[Segmentation]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for tokens, segments in zip(sequences, predictions):
            f.write(" ".join(segment_key(tokens[s.u - 1: s.v], "") for s in segments) + "\n")


def write_predictions(path: str, task: TaskKind | str, sequences, predictions) -> None:
    if TaskKind(task) == TaskKind.WORDSEG:
        write_wordseg(path, sequences, predictions)
    else:
        write_conll(path, sequences, predictions)


# --- scoring ----------------------------------------------------------------

def _counted(segments: Iterable[Segment], task: TaskKind) -> set[Segment]:
    if task == TaskKind.SPAN:
        return {s for s in segments if s.y != NONE}
    return set(segments)


def prf(correct: int, n_pred: int, n_gold: int) -> Scores:
    p = correct / n_pred if n_pred else 0.0
    r = correct / n_gold if n_gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return Scores(p, r, f)


def f_score(gold: LabeledCorpus, pred: Sequence[Segmentation]) -> Scores:
    if len(gold) != len(pred):
        raise ValidationError(f"{len(gold)} gold sequences but {len(pred)} predictions")
    correct = n_pred = n_gold = 0
    for k, (sentence, segments) in enumerate(zip(gold, pred)):
        try:
            validate_segmentation(segments, len(sentence))
        except ValidationError as e:
            raise ValidationError(f"sequence {k}: {e}") from None
        g = _counted(sentence.segments, gold.task)
        p = _counted(segments, gold.task)
        correct += len(g & p)
        n_pred += len(p)
        n_gold += len(g)
    return prf(correct, n_pred, n_gold)


def tag_chunks(tags: Sequence[str]) -> set[tuple[int, int, str]]:
    """conlleval-style chunk extraction straight from tags; O chunks are not chunks."""
    chunks: set[tuple[int, int, str]] = set()
    start, kind = None, None
    prev_prefix, prev_kind = "O", None
    for pos, tag in enumerate(list(tags) + ["O"], 1):
        prefix, _, name = tag.partition("-")
        prefix = "I" if prefix == "M" else prefix
        name = name or ""
        ends = start is not None and (
            prev_prefix in ("E", "S")
            or prefix in ("B", "S", "O")
            or name != prev_kind
        )
        if ends:
            chunks.add((start, pos - 1, kind))
            start, kind = None, None
        begins = prefix in ("B", "S") or (prefix in ("I", "E") and (start is None or name != kind))
        if begins:
            start, kind = pos, name
        prev_prefix, prev_kind = prefix, (name if prefix != "O" else None)
    return chunks


def tag_f_score(gold_tags: Sequence[Sequence[str]], pred_tags: Sequence[Sequence[str]]) -> Scores:
    if len(gold_tags) != len(pred_tags):
        raise ValidationError(f"{len(gold_tags)} gold sequences but {len(pred_tags)} predictions")
    correct = n_pred = n_gold = 0
    for g, p in zip(gold_tags, pred_tags):
        if len(g) != len(p):
            raise ValidationError(f"tag sequences of length {len(g)} and {len(p)}")
        gc, pc = tag_chunks(g), tag_chunks(p)
        correct += len(gc & pc)
        n_pred += len(pc)
        n_gold += len(gc)
    return prf(correct, n_pred, n_gold)


# --- splits and lexicon statistics ----------------------------------------

def split_dev(corpus: LabeledCorpus, fraction: float = 0.1) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Hold out the last ``fraction`` of the sentences (at least one) as dev data."""
    if len(corpus) < 2:
        raise ValidationError("need at least two sentences to split off a dev set")
    n_dev = max(1, int(round(len(corpus) * fraction)))
    return corpus.subset(corpus.sentences[:-n_dev]), corpus.subset(corpus.sentences[-n_dev:])


def _surface(sentence: Sentence, seg: Segment, separator: str) -> str:
    return separator.join(sentence.tokens[seg.u - 1: seg.v])


def segment_oov_rate(train: LabeledCorpus, dev: LabeledCorpus, separator: str | None = None) -> float:
    """Share of counted dev segments never seen in training (with the same label, for span tasks)."""
    if separator is None:
        separator = "_" if train.task == TaskKind.SPAN else ""
    known = {
        (_surface(s, seg, separator), seg.y)
        for s in train for seg in _counted(s.segments, train.task)
    }
    total = oov = 0
    for s in dev:
        for seg in _counted(s.segments, dev.task):
            total += 1
            if (_surface(s, seg, separator), seg.y) not in known:
                oov += 1
    return oov / total if total else 0.0


__all__ = [
    "NONE",
    "WORD",
    "TaskKind",
    "Sentence",
    "LabeledCorpus",
    "Scores",
    "bieso_encode",
    "bieso_decode",
    "parse_conll",
    "parse_wordseg",
    "parse_corpus",
    "normalize_width",
    "read_tokens",
    "detect_task",
    "write_conll",
    "write_wordseg",
    "write_predictions",
    "f_score",
    "prf",
    "tag_chunks",
    "tag_f_score",
    "split_dev",
    "segment_oov_rate",
]
