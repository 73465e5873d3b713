"""Input-unit representation and the sentence-level bi-LSTM."""

from dataclasses import dataclass
from typing import Sequence

from app.errors import ConfigError, PreconditionError
from app.model.autodiff import Node, add, matvec, relu
from app.model.embeddings import EmbeddingTable, lookup_unit
from app.model.lstm import BiLSTM
from app.model.params import ParameterStore


@dataclass
class EncodedSequence:
    tokens: list[str]
    H: list[Node]
    forward: list[Node]
    backward: list[Node]

    def __len__(self):
        return len(self.tokens)


class Encoder:
    """I_i = ReLU(W^I_p E^p_i + W^I_t E^t_i + b^I); H_i = ReLU(W^H_f fwd_i + W^H_b bwd_i + b^H)."""

    def __init__(self, store: ParameterStore, pretrained: EmbeddingTable, tuned: EmbeddingTable,
                 input_dim: int, hidden_dim: int, pretrained_dim: int | None = None,
                 tuned_dim: int | None = None):
        if pretrained_dim is not None and pretrained.dim != pretrained_dim:
            raise ConfigError(f"pretrained unit embeddings have dimension {pretrained.dim}, "
                              f"configuration says {pretrained_dim}")
        if tuned_dim is not None and tuned.dim != tuned_dim:
            raise ConfigError(f"tuned unit embeddings have dimension {tuned.dim}, configuration says {tuned_dim}")
        self.pretrained = pretrained
        self.tuned = tuned
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim

        self.W_I_p = store.matrix("encoder.W_I_p", input_dim, pretrained.dim)
        self.W_I_t = store.matrix("encoder.W_I_t", input_dim, tuned.dim)
        self.b_I = store.bias("encoder.b_I", input_dim)
        self.lstm = BiLSTM.create(store, "encoder.lstm", input_dim, hidden_dim)
        self.W_H_f = store.matrix("encoder.W_H_f", hidden_dim, hidden_dim)
        self.W_H_b = store.matrix("encoder.W_H_b", hidden_dim, hidden_dim)
        self.b_H = store.bias("encoder.b_H", hidden_dim)

    def input_unit_repr(self, token: str) -> Node:
        return relu(add(
            matvec(self.W_I_p.node, lookup_unit(self.pretrained, token)),
            matvec(self.W_I_t.node, lookup_unit(self.tuned, token)),
            self.b_I.node,
        ))

    def encode(self, tokens: Sequence[str]) -> EncodedSequence:
        if not tokens:
            raise PreconditionError("cannot encode an empty sequence")
        inputs = [self.input_unit_repr(t) for t in tokens]
        fwd, bwd = self.lstm.run(inputs)
        H = [
            relu(add(matvec(self.W_H_f.node, f), matvec(self.W_H_b.node, b), self.b_H.node))
            for f, b in zip(fwd, bwd)
        ]
        return EncodedSequence(list(tokens), H, fwd, bwd)
