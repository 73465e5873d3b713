"""Embedding tables, the word-vector text format and segment keys.

A table maps surface strings to rows of one matrix parameter. Lookups never
fail: a fixed table answers unknown strings with the zero vector, a
trainable table with its own learned UNK row (the last row).
"""

import itertools
import logging
import os
from typing import Iterable, Iterator, Sequence

import numpy as np

from app.errors import ConfigError, DataError, ParseError, PreconditionError
from app.model.autodiff import DTYPE, Node, Parameter, constant, row
from app.model.params import ParameterStore
from app.py_types import SegmentKey, Segmenter

logger = logging.getLogger(__name__)


class EmbeddingTable:
    def __init__(self, param: Parameter, tokens: Sequence[str], trainable: bool):
        self.param = param
        self.index = {tok: i for i, tok in enumerate(tokens)}
        self.trainable = trainable
        expected = len(self.index) + (1 if trainable else 0)
        if param.shape[0] != expected:
            raise DataError(f"{param.name}: {param.shape[0]} rows for {expected} entries")

    @property
    def name(self) -> str:
        return self.param.name

    @property
    def dim(self) -> int:
        return self.param.shape[1]

    @property
    def tokens(self) -> list[str]:
        return list(self.index)

    @property
    def unk_index(self) -> int | None:
        return len(self.index) if self.trainable else None

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def unk_vector(self) -> np.ndarray:
        if self.trainable:
            return self.param.value[self.unk_index].copy()
        return np.zeros(self.dim, dtype=DTYPE)

    def lookup(self, token: str) -> Node:
        idx = self.index.get(token)
        if idx is None:
            if not self.trainable:
                return constant(np.zeros(self.dim, dtype=DTYPE))
            idx = self.unk_index
        return row(self.param.node, idx)


def build_table(store: ParameterStore, name: str, tokens: Sequence[str], vectors: np.ndarray | None,
                dim: int, trainable: bool) -> EmbeddingTable:
    """Register a table; missing ``vectors`` are drawn like any other matrix."""
    tokens = list(dict.fromkeys(tokens))
    rows = len(tokens) + (1 if trainable else 0)
    limit = np.sqrt(6.0 / (rows + dim)) if rows else 0.0
    values = store.rng.uniform(-limit, limit, (rows, dim))
    if vectors is not None:
        values[: len(tokens)] = vectors
    return EmbeddingTable(store.table(name, values, trainable), tokens, trainable)


def read_embeddings(path: str, expected_dim: int | None = None) -> tuple[list[str], np.ndarray]:
    """Parse the word-vector text format; an optional ``count dim`` header is detected."""
    if not os.path.isfile(path):
        raise ConfigError(f"embedding file not found: {path}")

    entries: dict[str, np.ndarray] = {}
    duplicates = 0
    dim: int | None = None
    declared_count: int | None = None

    with open(path, "r", encoding="utf-8") as f:
        lines = _nonblank(f)
        head = [line for line in (next(lines, None), next(lines, None)) if line is not None]
        if _is_header(head):
            fields = head.pop(0)[1]
            declared_count, dim = int(fields[0]), int(fields[1])
        for line_no, fields in itertools.chain(head, lines):
            if dim is None:
                dim = len(fields) - 1
                if dim < 1:
                    raise ParseError(path, line_no, "a vector line needs a token and at least one value")
            if len(fields) != dim + 1:
                raise ParseError(path, line_no, f"expected {dim + 1} fields, got {len(fields)}")
            try:
                vec = np.array([float(x) for x in fields[1:]], dtype=DTYPE)
            except ValueError as e:
                raise ParseError(path, line_no, f"non-numeric value ({e})") from e
            if not np.all(np.isfinite(vec)):
                raise ParseError(path, line_no, "non-finite value")
            token = fields[0]
            if token in entries:
                duplicates += 1
                del entries[token]  #* last one wins, at its own position
            entries[token] = vec

    if dim is None:
        raise ParseError(path, 1, "no vectors found")
    if expected_dim is not None and dim != expected_dim:
        raise ConfigError(f"{path}: vectors have dimension {dim}, configuration expects {expected_dim}")
    if duplicates:
        logger.warning("%s: %d duplicate tokens, kept the last occurrence", path, duplicates)
    if declared_count is not None and declared_count != len(entries) + duplicates:
        logger.warning("%s: header declares %d vectors, found %d", path, declared_count,
                       len(entries) + duplicates)

    tokens = list(entries)
    vectors = np.stack([entries[t] for t in tokens]) if tokens else np.zeros((0, dim), dtype=DTYPE)
    return tokens, vectors


def _nonblank(lines: Iterable[str]) -> Iterator[tuple[int, list[str]]]:
    for line_no, line in enumerate(lines, 1):
        fields = line.split()
        if fields:
            yield line_no, fields


def _is_header(head: list[tuple[int, list[str]]]) -> bool:
    """``count dim`` only counts as a header when the next line carries dim values.

    A lone ``0 dim`` line is the header of an empty table.
    """
    if not head:
        return False
    fields = head[0][1]
    if len(fields) != 2 or not all(x.isdigit() for x in fields):
        return False
    if len(head) == 1:
        return int(fields[0]) == 0
    return len(head[1][1]) == int(fields[1]) + 1


def load_embeddings(path: str, expected_dim: int | None = None, trainable: bool = False,
                    store: ParameterStore | None = None, name: str = "embeddings") -> EmbeddingTable:
    tokens, vectors = read_embeddings(path, expected_dim)
    store = store if store is not None else ParameterStore()
    logger.info("loaded %d vectors of dimension %d from %s", len(tokens), vectors.shape[1], path)
    return build_table(store, name, tokens, vectors, vectors.shape[1], trainable)


def save_embeddings(table: EmbeddingTable, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(table)} {table.dim}\n")
        for token, idx in table.index.items():
            values = " ".join(repr(float(v)) for v in table.param.value[idx])
            f.write(f"{token} {values}\n")


def lookup_unit(table: EmbeddingTable, token: str) -> Node:
    return table.lookup(token)


def lookup_segment(table: EmbeddingTable, key: SegmentKey) -> Node:
    return table.lookup(key)


def segment_key(units: Sequence[str], separator: str = "_") -> SegmentKey:
    if not units:
        raise PreconditionError("segment_key of an empty segment")
    if separator and any(separator in u for u in units):
        logger.warning("segment key is ambiguous: separator %r occurs inside %r", separator, list(units))
    return SegmentKey(separator.join(units))


def emit_segmented_corpus(model: Segmenter, raw_corpus_path: str, out_path: str, separator: str,
                          char_level: bool = False) -> int:
    """Write the model's segmentation of every raw line as space-separated segment keys.

    Returns the number of segments written.
    """
    written = 0
    with open(raw_corpus_path, "r", encoding="utf-8") as src, \
            open(out_path, "w", encoding="utf-8", newline="\n") as dst:
        for line in src:
            tokens = _raw_tokens(line, char_level)
            keys = []
            if tokens:
                for seg in model.predict(tokens):
                    keys.append(segment_key(tokens[seg.u - 1: seg.v], separator))
            written += len(keys)
            dst.write(" ".join(keys) + "\n")
    logger.info("emitted %d segments to %s", written, out_path)
    return written


def _raw_tokens(line: str, char_level: bool) -> list[str]:
    if char_level:
        return [ch for ch in line if not ch.isspace()]
    return line.split()


def lexicon(keys: Iterable[str]) -> list[str]:
    """Distinct keys in first-seen order."""
    return list(dict.fromkeys(keys))


__all__ = [
    "EmbeddingTable",
    "build_table",
    "read_embeddings",
    "load_embeddings",
    "save_embeddings",
    "lookup_unit",
    "lookup_segment",
    "segment_key",
    "emit_segmented_corpus",
    "lexicon",
]
