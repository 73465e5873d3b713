"""LSTM cell with a forget gate and no peepholes.

Each gate is a sigmoid (or tanh, for the candidate) of one matrix applied to
``[x; h_prev]`` plus a bias. The forget-gate bias starts at 1.0.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from app.errors import DimensionError
from app.model.autodiff import (
    Node,
    Parameter,
    add,
    concat,
    constant,
    matvec,
    pointwise_mul,
    sigmoid,
    tanh,
)
from app.model.params import ParameterStore

GATES = ("i", "f", "o", "g")


@dataclass
class LSTMParams:
    input_dim: int
    hidden_dim: int
    W: dict[str, Parameter]
    b: dict[str, Parameter]

    @classmethod
    def create(cls, store: ParameterStore, prefix: str, input_dim: int, hidden_dim: int) -> "LSTMParams":
        W = {g: store.matrix(f"{prefix}.W_{g}", hidden_dim, input_dim + hidden_dim) for g in GATES}
        b = {g: store.bias(f"{prefix}.b_{g}", hidden_dim, 1.0 if g == "f" else 0.0) for g in GATES}
        return cls(input_dim, hidden_dim, W, b)

    def parameters(self) -> list[Parameter]:
        return [self.W[g] for g in GATES] + [self.b[g] for g in GATES]

    def initial_state(self) -> tuple[Node, Node]:
        zeros = np.zeros(self.hidden_dim)
        return constant(zeros), constant(zeros)


def lstm_step(x: Node, h_prev: Node, c_prev: Node, params: LSTMParams) -> tuple[Node, Node]:
    if x.shape != (params.input_dim,):
        raise DimensionError(f"lstm_step: input {x.shape} vs expected ({params.input_dim},)")
    if h_prev.shape != (params.hidden_dim,) or c_prev.shape != (params.hidden_dim,):
        raise DimensionError(
            f"lstm_step: state {h_prev.shape}/{c_prev.shape} vs expected ({params.hidden_dim},)"
        )
    xh = concat(x, h_prev)

    def gate(name: str) -> Node:
        return add(matvec(params.W[name].node, xh), params.b[name].node)

    i = sigmoid(gate("i"))
    f = sigmoid(gate("f"))
    o = sigmoid(gate("o"))
    g = tanh(gate("g"))
    c = add(pointwise_mul(f, c_prev), pointwise_mul(i, g))
    h = pointwise_mul(o, tanh(c))
    return h, c


def run_lstm(inputs: Sequence[Node], params: LSTMParams) -> list[Node]:
    """Hidden states after each input, starting from zero state."""
    h, c = params.initial_state()
    states = []
    for x in inputs:
        h, c = lstm_step(x, h, c, params)
        states.append(h)
    return states


@dataclass
class BiLSTM:
    forward: LSTMParams
    backward: LSTMParams

    @classmethod
    def create(cls, store: ParameterStore, prefix: str, input_dim: int, hidden_dim: int) -> "BiLSTM":
        return cls(
            LSTMParams.create(store, f"{prefix}.fwd", input_dim, hidden_dim),
            LSTMParams.create(store, f"{prefix}.bwd", input_dim, hidden_dim),
        )

    def run(self, inputs: Sequence[Node]) -> tuple[list[Node], list[Node]]:
        """Forward and backward states, both aligned with ``inputs``."""
        fwd = run_lstm(inputs, self.forward)
        bwd = run_lstm(list(reversed(inputs)), self.backward)
        bwd.reverse()
        return fwd, bwd
