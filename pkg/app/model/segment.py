"""Segment representations: input composition (SComp), then the final S_j.

Every composer maps the slice H_u..H_v to a vector of the same size, so the
lattice code never needs to know which one it is talking to.
"""

import abc
from enum import Enum
from typing import Sequence

from typing_extensions import override

from app.errors import ConfigError, PreconditionError
from app.model.autodiff import Node, add, concat, matvec, pointwise_max, relu, row
from app.model.lstm import BiLSTM, lstm_step, run_lstm
from app.model.params import ParameterStore

Span = tuple[int, int]


class CompositionKind(str, Enum):
    SRNN = "srnn"
    SCNN = "scnn"
    SCONCATE = "sconcate"


class Composer(abc.ABC):
    kind: CompositionKind

    def __init__(self, out_dim: int):
        self.out_dim = out_dim

    @abc.abstractmethod
    def compose(self, hs: Sequence[Node]) -> Node:
        ...

    def compose_all(self, H: Sequence[Node], max_len: int) -> dict[Span, Node]:
        """SComp for every 1-based span (u, v) with v - u + 1 <= max_len."""
        n = len(H)
        return {
            (u, v): self.compose(H[u - 1: v])
            for u in range(1, n + 1)
            for v in range(u, min(n, u + max_len - 1) + 1)
        }

    @staticmethod
    def _check(hs: Sequence[Node]) -> None:
        if not hs:
            raise PreconditionError("cannot compose an empty segment")


class SRNNComposer(Composer):
    """ReLU(W_f fwd_last + W_b bwd_last + b) from a segment-level bi-LSTM of its own."""

    kind = CompositionKind.SRNN

    def __init__(self, store: ParameterStore, in_dim: int, lstm_dim: int, out_dim: int):
        super().__init__(out_dim)
        self.lstm = BiLSTM.create(store, "scomp.srnn.lstm", in_dim, lstm_dim)
        self.W_f = store.matrix("scomp.srnn.W_f", out_dim, lstm_dim)
        self.W_b = store.matrix("scomp.srnn.W_b", out_dim, lstm_dim)
        self.b = store.bias("scomp.srnn.b", out_dim)

    def _combine(self, fwd_last: Node, bwd_last: Node) -> Node:
        return relu(add(matvec(self.W_f.node, fwd_last), matvec(self.W_b.node, bwd_last), self.b.node))

    @override
    def compose(self, hs: Sequence[Node]) -> Node:
        self._check(hs)
        fwd = run_lstm(hs, self.lstm.forward)
        bwd = run_lstm(list(reversed(hs)), self.lstm.backward)
        return self._combine(fwd[-1], bwd[-1])

    @override
    def compose_all(self, H: Sequence[Node], max_len: int) -> dict[Span, Node]:
        # a run starting at u is the prefix of every longer segment starting at u,
        # and likewise backwards from v, so each run serves max_len segments
        n = len(H)
        fwd_last: dict[Span, Node] = {}
        bwd_last: dict[Span, Node] = {}
        for u in range(1, n + 1):
            h, c = self.lstm.forward.initial_state()
            for v in range(u, min(n, u + max_len - 1) + 1):
                h, c = lstm_step(H[v - 1], h, c, self.lstm.forward)
                fwd_last[(u, v)] = h
        for v in range(1, n + 1):
            h, c = self.lstm.backward.initial_state()
            for u in range(v, max(1, v - max_len + 1) - 1, -1):
                h, c = lstm_step(H[u - 1], h, c, self.lstm.backward)
                bwd_last[(u, v)] = h
        return {span: self._combine(fwd_last[span], bwd_last[span]) for span in fwd_last}


class SCNNComposer(Composer):
    """Width-2 filter ReLU(W_l H_t + W_r H_t+1 + b), then max-pooling over the windows.

    A single-unit segment is paired with a learned boundary vector on its right.
    """

    kind = CompositionKind.SCNN

    def __init__(self, store: ParameterStore, in_dim: int, out_dim: int):
        super().__init__(out_dim)
        self.W_l = store.matrix("scomp.scnn.W_l", out_dim, in_dim)
        self.W_r = store.matrix("scomp.scnn.W_r", out_dim, in_dim)
        self.b = store.bias("scomp.scnn.b", out_dim)
        self.pad = store.vector("scomp.scnn.pad", in_dim)

    def window(self, left: Node, right: Node) -> Node:
        return relu(add(matvec(self.W_l.node, left), matvec(self.W_r.node, right), self.b.node))

    @override
    def compose(self, hs: Sequence[Node]) -> Node:
        self._check(hs)
        if len(hs) == 1:
            return self.window(hs[0], self.pad.node)
        return pointwise_max(*(self.window(a, b) for a, b in zip(hs, hs[1:])))

    @override
    def compose_all(self, H: Sequence[Node], max_len: int) -> dict[Span, Node]:
        n = len(H)
        pairs = [self.window(H[t], H[t + 1]) for t in range(n - 1)]
        out: dict[Span, Node] = {}
        for u in range(1, n + 1):
            out[(u, u)] = self.window(H[u - 1], self.pad.node)
            for v in range(u + 1, min(n, u + max_len - 1) + 1):
                out[(u, v)] = pointwise_max(*pairs[u - 1: v - 1])
        return out


class SConcateComposer(Composer):
    """ReLU(W [H_u; ..; H_v; pad; ..; pad] + b), padded with a learned vector up to L units."""

    kind = CompositionKind.SCONCATE

    def __init__(self, store: ParameterStore, in_dim: int, out_dim: int, max_len: int):
        super().__init__(out_dim)
        self.max_len = max_len
        self.W = store.matrix("scomp.sconcate.W", out_dim, in_dim * max_len)
        self.b = store.bias("scomp.sconcate.b", out_dim)
        self.pad = store.vector("scomp.sconcate.pad", in_dim)

    @override
    def compose(self, hs: Sequence[Node]) -> Node:
        self._check(hs)
        if len(hs) > self.max_len:
            raise PreconditionError(f"segment of length {len(hs)} exceeds L={self.max_len}")
        parts = list(hs) + [self.pad.node] * (self.max_len - len(hs))
        return relu(add(matvec(self.W.node, concat(*parts)), self.b.node))


def build_composer(kind: CompositionKind | str, store: ParameterStore, in_dim: int, out_dim: int,
                   max_len: int, lstm_dim: int) -> Composer:
    kind = CompositionKind(kind)
    if kind is CompositionKind.SRNN:
        return SRNNComposer(store, in_dim, lstm_dim, out_dim)
    if kind is CompositionKind.SCNN:
        return SCNNComposer(store, in_dim, out_dim)
    return SConcateComposer(store, in_dim, out_dim, max_len)


class SegmentRepresenter:
    """S_j = ReLU(W^S_c SComp_j + W^S_e SEmb_j + W^S_y E^Y_y + b^S).

    With ``semb_dim=None`` the SEmb term and its matrix do not exist.
    """

    def __init__(self, store: ParameterStore, num_labels: int, scomp_dim: int, semb_dim: int | None,
                 label_dim: int, segment_dim: int):
        self.scomp_dim = scomp_dim
        self.semb_dim = semb_dim
        self.W_c = store.matrix("segment.W_c", segment_dim, scomp_dim)
        self.W_e = store.matrix("segment.W_e", segment_dim, semb_dim) if semb_dim else None
        self.W_y = store.matrix("segment.W_y", segment_dim, label_dim)
        self.b = store.bias("segment.b", segment_dim)
        self.E_Y = store.matrix("segment.E_Y", num_labels, label_dim)

    @property
    def num_labels(self) -> int:
        return self.E_Y.shape[0]

    def span_part(self, scomp: Node, semb: Node | None) -> Node:
        """Everything in S_j that does not depend on the label."""
        if scomp.shape != (self.scomp_dim,):
            raise ConfigError(f"SComp has shape {scomp.shape}, expected ({self.scomp_dim},)")
        terms = [matvec(self.W_c.node, scomp), self.b.node]
        if self.W_e is None:
            if semb is not None:
                raise ConfigError("segment embedding given but SEmb is disabled")
        else:
            if semb is None or semb.shape != (self.semb_dim,):
                got = None if semb is None else semb.shape
                raise ConfigError(f"SEmb has shape {got}, expected ({self.semb_dim},)")
            terms.append(matvec(self.W_e.node, semb))
        return add(*terms)

    def label_part(self, y: int) -> Node:
        if not 0 <= y < self.num_labels:
            raise ConfigError(f"label index {y} outside 0..{self.num_labels - 1}")
        return matvec(self.W_y.node, row(self.E_Y.node, y))

    def combine(self, span_part: Node, label_part: Node) -> Node:
        return relu(add(span_part, label_part))

    def segment_repr(self, scomp: Node, semb: Node | None, y: int) -> Node:
        return self.combine(self.span_part(scomp, semb), self.label_part(y))


__all__ = [
    "CompositionKind",
    "Composer",
    "SRNNComposer",
    "SCNNComposer",
    "SConcateComposer",
    "build_composer",
    "SegmentRepresenter",
]
