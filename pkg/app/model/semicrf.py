"""0-order semi-Markov CRF over a lattice of segment scores.

Segments are 1-based closed intervals ``(u, v)`` with a label. A segment of
length ``l`` ending at ``j`` extends the best (or summed) prefix ending at
``j - l``.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from app.errors import PreconditionError, RefusalError, ValidationError
from app.model.autodiff import Node, add, constant, dot, logsumexp, sub

ENUMERATION_CAP = 10 ** 6


class Segment(NamedTuple):
    u: int
    v: int
    y: str

    @property
    def length(self) -> int:
        return self.v - self.u + 1


Segmentation = tuple[Segment, ...]


@dataclass
class SegmentLattice:
    n: int
    max_len: int
    labels: tuple[str, ...]
    scores: dict[tuple[int, int, int], Node] = field(repr=False)

    def __post_init__(self):
        if self.max_len < 1:
            raise PreconditionError(f"maximum segment length must be >= 1, got {self.max_len}")
        if not self.labels:
            raise PreconditionError("a lattice needs at least one label")
        self._label_index = {y: k for k, y in enumerate(self.labels)}
        expected = sum(min(self.max_len, self.n - u + 1) for u in range(1, self.n + 1)) * len(self.labels)
        if len(self.scores) != expected:
            raise PreconditionError(f"lattice holds {len(self.scores)} scores, expected {expected}")
        for key, node in self.scores.items():
            if not node.is_scalar or not math.isfinite(float(node.value)):
                raise PreconditionError(f"score {key} is not a finite scalar")

    @classmethod
    def build(cls, n: int, max_len: int, labels: Sequence[str],
              score: Callable[[int, int, int], Node | float]) -> "SegmentLattice":
        scores = {}
        for v in range(1, n + 1):
            for u in range(max(1, v - max_len + 1), v + 1):
                for y in range(len(labels)):
                    s = score(u, v, y)
                    scores[(u, v, y)] = s if isinstance(s, Node) else constant(s)
        return cls(n, max_len, tuple(labels), scores)

    def score(self, u: int, v: int, y: int) -> Node:
        return self.scores[(u, v, y)]

    def label_index(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise ValidationError(f"unknown label {label!r}") from None

    def total(self, segmentation: Sequence[Segment]) -> float:
        return float(sum(self.score(s.u, s.v, self.label_index(s.y)).value for s in segmentation))


def segment_score(weight: Node, segment_repr: Node) -> Node:
    return dot(weight, segment_repr)


def validate_segmentation(segmentation: Sequence[Segment], n: int, max_len: int | None = None) -> None:
    expected_u = 1
    for seg in segmentation:
        if seg.u != expected_u or seg.v < seg.u:
            raise ValidationError(f"segment {tuple(seg)} breaks the cover at position {expected_u}")
        if max_len is not None and seg.v - seg.u + 1 > max_len:
            raise ValidationError(f"segment {tuple(seg)} is longer than L={max_len}")
        expected_u = seg.v + 1
    if expected_u != n + 1:
        raise ValidationError(f"segmentation covers 1..{expected_u - 1}, sequence has {n} units")


def viterbi(lattice: SegmentLattice) -> tuple[Segmentation, float]:
    """Best segmentation and its score; ties go to the shorter segment, then the lower label."""
    n, L = lattice.n, lattice.max_len
    if n == 0:
        raise PreconditionError("viterbi over an empty sequence")
    alpha = np.full(n + 1, -np.inf)
    alpha[0] = 0.0
    back: list[tuple[int, int]] = [(0, 0)] * (n + 1)
    for j in range(1, n + 1):
        for l in range(1, min(L, j) + 1):
            for y in range(len(lattice.labels)):
                cand = float(lattice.score(j - l + 1, j, y).value) + alpha[j - l]
                if cand > alpha[j]:
                    alpha[j] = cand
                    back[j] = (l, y)

    segments = []
    j = n
    while j > 0:
        l, y = back[j]
        segments.append(Segment(j - l + 1, j, lattice.labels[y]))
        j -= l
    return tuple(reversed(segments)), float(alpha[n])


def log_partition(lattice: SegmentLattice) -> Node:
    n, L = lattice.n, lattice.max_len
    if n == 0:
        raise PreconditionError("log partition of an empty sequence")
    beta = [constant(0.0)]
    for j in range(1, n + 1):
        terms = [
            add(lattice.score(j - l + 1, j, y), beta[j - l])
            for l in range(1, min(L, j) + 1)
            for y in range(len(lattice.labels))
        ]
        beta.append(logsumexp(terms))
    return beta[n]


def nll(lattice: SegmentLattice, gold: Sequence[Segment]) -> Node:
    validate_segmentation(gold, lattice.n, lattice.max_len)
    gold_scores = [lattice.score(s.u, s.v, lattice.label_index(s.y)) for s in gold]
    return sub(log_partition(lattice), add(*gold_scores))


def count_segmentations(n: int, max_len: int, num_labels: int) -> int:
    counts = [1] + [0] * n
    for j in range(1, n + 1):
        counts[j] = sum(num_labels * counts[j - l] for l in range(1, min(max_len, j) + 1))
    return counts[n]


def enumerate_segmentations(n: int, max_len: int, labels: Sequence[str],
                            cap: int = ENUMERATION_CAP) -> list[Segmentation]:
    total = count_segmentations(n, max_len, len(labels))
    if total > cap:
        raise RefusalError(f"{total} segmentations exceed the enumeration cap of {cap}")

    out: list[Segmentation] = []

    def extend(start: int, prefix: list[Segment]) -> None:
        if start > n:
            out.append(tuple(prefix))
            return
        for l in range(1, min(max_len, n - start + 1) + 1):
            for y in labels:
                prefix.append(Segment(start, start + l - 1, y))
                extend(start + l, prefix)
                prefix.pop()

    extend(1, [])
    return out


__all__ = [
    "Segment",
    "Segmentation",
    "SegmentLattice",
    "segment_score",
    "validate_segmentation",
    "viterbi",
    "log_partition",
    "nll",
    "count_segmentations",
    "enumerate_segmentations",
    "ENUMERATION_CAP",
]
