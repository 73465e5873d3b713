"""Dense reverse-mode automatic differentiation over float64 numpy arrays.

Graphs are built define-by-run: every primitive returns a new :class:`Node`
holding its value, its predecessors and a closure mapping the output
gradient to one gradient per predecessor. :func:`backward` orders the graph
into a :class:`Tape` and replays it in reverse.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from app.errors import DimensionError, PreconditionError

logger = logging.getLogger(__name__)

DTYPE = np.float64


class Node:
    __slots__ = ("value", "grad", "parents", "op", "requires_grad", "_backward")

    def __init__(self, value, parents: tuple["Node", ...] = (), op: str = "const",
                 backward: Callable | None = None, requires_grad: bool | None = None):
        self.value = np.asarray(value, dtype=DTYPE)
        self.grad: np.ndarray | None = None
        self.parents = parents
        self.op = op
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in parents)
        self.requires_grad = requires_grad
        self._backward = backward if requires_grad else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def gradient(self) -> np.ndarray:
        if self.grad is None:
            return np.zeros_like(self.value)
        return self.grad

    @property
    def is_scalar(self) -> bool:
        return self.value.ndim == 0

    def __repr__(self):
        return f"Node(op={self.op}, shape={self.shape})"


@dataclass(eq=False)
class Parameter:
    name: str
    node: Node
    trainable: bool = True

    @classmethod
    def create(cls, name: str, value, trainable: bool = True) -> "Parameter":
        node = Node(np.array(value, dtype=DTYPE), op="param", requires_grad=trainable)
        return cls(name, node, trainable)

    @property
    def value(self) -> np.ndarray:
        return self.node.value

    @property
    def grad(self) -> np.ndarray:
        return self.node.gradient

    @property
    def shape(self) -> tuple[int, ...]:
        return self.node.shape

    def zero_grad(self) -> None:
        self.node.grad = None

    def assign(self, value) -> None:
        value = np.asarray(value, dtype=DTYPE)
        if value.shape != self.shape:
            raise DimensionError(f"{self.name}: cannot assign {value.shape} into {self.shape}")
        self.node.value = value.copy()


@dataclass
class Tape:
    """Topologically ordered nodes of one forward pass; predecessors come first."""

    nodes: list[Node] = field(default_factory=list)

    @classmethod
    def trace(cls, root: Node) -> "Tape":
        order: list[Node] = []
        seen: set[int] = set()
        stack: list[tuple[Node, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node.parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self):
        return len(self.nodes)


def constant(value) -> Node:
    return Node(value, requires_grad=False)


def variable(value) -> Node:
    """A free leaf that collects gradients, e.g. a lattice score under test."""
    return Node(value, op="var", requires_grad=True)


def backward(loss: Node) -> Tape:
    if not loss.is_scalar:
        raise PreconditionError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = Tape.trace(loss)
    for node in tape.nodes:
        # leaves keep what earlier passes accumulated
        if node.parents or node.grad is None:
            node.grad = np.zeros_like(node.value)
    loss.grad = np.ones((), dtype=DTYPE)

    for node in reversed(tape.nodes):
        if node._backward is None:
            continue
        for parent, g in zip(node.parents, node._backward(node.grad)):
            if g is None or not parent.requires_grad:
                continue
            parent.grad += g
    return tape


def _check_same(op: str, nodes: Sequence[Node]) -> None:
    first = nodes[0].shape
    for other in nodes[1:]:
        if other.shape != first:
            raise DimensionError(f"{op}: shape mismatch {first} vs {other.shape}")


def matvec(W: Node, x: Node) -> Node:
    if W.value.ndim != 2 or x.value.ndim != 1 or W.shape[1] != x.shape[0]:
        raise DimensionError(f"matvec: shape mismatch {W.shape} vs {x.shape}")

    def grads(g):
        return np.outer(g, x.value), W.value.T @ g

    return Node(W.value @ x.value, (W, x), "matvec", grads)


def add(*nodes: Node) -> Node:
    if not nodes:
        raise PreconditionError("add needs at least one operand")
    _check_same("add", nodes)
    value = nodes[0].value.copy()
    for n in nodes[1:]:
        value = value + n.value
    return Node(value, tuple(nodes), "add", lambda g: (g,) * len(nodes))


def sub(a: Node, b: Node) -> Node:
    _check_same("sub", (a, b))
    return Node(a.value - b.value, (a, b), "sub", lambda g: (g, -g))


def scale(a: Node, c: float) -> Node:
    return Node(a.value * c, (a,), "scale", lambda g: (g * c,))


def concat(*nodes: Node) -> Node:
    for n in nodes:
        if n.value.ndim != 1:
            raise DimensionError(f"concat: operands must be rank 1, got {n.shape}")
    sizes = [n.shape[0] for n in nodes]
    bounds = np.cumsum(sizes)[:-1]

    def grads(g):
        return tuple(np.split(g, bounds))

    return Node(np.concatenate([n.value for n in nodes]), tuple(nodes), "concat", grads)


def relu(x: Node) -> Node:
    mask = x.value > 0
    return Node(np.where(mask, x.value, 0.0), (x,), "relu", lambda g: (g * mask,))


def tanh(x: Node) -> Node:
    out = np.tanh(x.value)
    return Node(out, (x,), "tanh", lambda g: (g * (1.0 - out * out),))


def sigmoid(x: Node) -> Node:
    out = 0.5 * (1.0 + np.tanh(0.5 * x.value))
    return Node(out, (x,), "sigmoid", lambda g: (g * out * (1.0 - out),))


def pointwise_mul(a: Node, b: Node) -> Node:
    _check_same("pointwise_mul", (a, b))
    return Node(a.value * b.value, (a, b), "mul", lambda g: (g * b.value, g * a.value))


def pointwise_max(*nodes: Node) -> Node:
    if not nodes:
        raise PreconditionError("pointwise_max needs at least one operand")
    _check_same("pointwise_max", nodes)
    if len(nodes) == 1:
        return Node(nodes[0].value.copy(), nodes, "max", lambda g: (g,))
    stacked = np.stack([n.value for n in nodes])
    winner = np.argmax(stacked, axis=0)

    def grads(g):
        return tuple(np.where(winner == k, g, 0.0) for k in range(len(nodes)))

    return Node(stacked.max(axis=0), tuple(nodes), "max", grads)


def dot(a: Node, b: Node) -> Node:
    _check_same("dot", (a, b))
    return Node(np.dot(a.value, b.value), (a, b), "dot", lambda g: (g * b.value, g * a.value))


def reduce_sum(x: Node) -> Node:
    return Node(x.value.sum(), (x,), "sum", lambda g: (np.full_like(x.value, g),))


def row(table: Node, index: int) -> Node:
    """Row ``index`` of a matrix, scattering its gradient back into that row."""
    if table.value.ndim != 2:
        raise DimensionError(f"row: expected a matrix, got {table.shape}")

    def grads(g):
        full = np.zeros_like(table.value)
        full[index] = g
        return (full,)

    return Node(table.value[index].copy(), (table,), "row", grads)


def logsumexp(scores: Sequence[Node]) -> Node:
    if not scores:
        raise PreconditionError("logsumexp of an empty list")
    for s in scores:
        if not s.is_scalar:
            raise DimensionError(f"logsumexp: operands must be scalars, got {s.shape}")
    values = np.array([s.value for s in scores], dtype=DTYPE)
    m = values.max()
    shifted = np.exp(values - m)
    total = shifted.sum()
    weights = shifted / total

    def grads(g):
        return tuple(g * w for w in weights)

    return Node(m + np.log(total), tuple(scores), "logsumexp", grads)


def clip_grad_norm(params: Iterable[Parameter], max_norm: float) -> float:
    """Rescale trainable gradients in place so their global norm is at most ``max_norm``."""
    params = [p for p in params if p.trainable and p.node.grad is not None]
    norm = float(np.sqrt(sum(float(np.sum(p.node.grad ** 2)) for p in params)))
    if not np.isfinite(norm):
        raise PreconditionError(f"gradient norm is {norm}, refusing to update")
    if norm > max_norm:
        logger.debug("clipping gradient norm %.3f to %.3f", norm, max_norm)
        factor = max_norm / norm
        for p in params:
            p.node.grad *= factor
    return norm


def sgd_step(params: Iterable[Parameter], lr: float) -> None:
    for p in params:
        if not p.trainable or p.node.grad is None:
            continue
        p.node.value = p.node.value - lr * p.node.grad


def numerical_gradient(loss_fn: Callable[[], Node], param: Parameter, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of ``loss_fn()`` with respect to every entry of ``param``."""
    value = param.node.value
    out = np.zeros_like(value)
    flat = value.reshape(-1)
    for k in range(flat.size):
        saved = flat[k]
        flat[k] = saved + h
        up = float(loss_fn().value)
        flat[k] = saved - h
        down = float(loss_fn().value)
        flat[k] = saved
        out.reshape(-1)[k] = (up - down) / (2 * h)
    return out


def relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    analytic = np.asarray(analytic, dtype=DTYPE)
    numeric = np.asarray(numeric, dtype=DTYPE)
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


__all__ = [
    "Node",
    "Parameter",
    "Tape",
    "constant",
    "variable",
    "backward",
    "matvec",
    "add",
    "sub",
    "scale",
    "concat",
    "relu",
    "tanh",
    "sigmoid",
    "pointwise_mul",
    "pointwise_max",
    "dot",
    "reduce_sum",
    "row",
    "logsumexp",
    "clip_grad_norm",
    "sgd_step",
    "numerical_gradient",
    "relative_error",
]
