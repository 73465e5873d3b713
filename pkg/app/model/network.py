"""The neural semi-CRF: encoder, segment representation, lattice scores."""

import logging
import time
from typing import Iterable, Sequence

import numpy as np

from app.config import ModelConfig
from app.errors import CheckpointError, ConfigError, DimensionError, VersionError
from app.model.autodiff import Node, Parameter
from app.model.embeddings import EmbeddingTable, build_table, lexicon, lookup_segment, read_embeddings, segment_key
from app.model.encoder import Encoder
from app.model.params import ParameterStore, read_checkpoint, save_checkpoint
from app.model.segment import SegmentRepresenter, build_composer
from app.model.semicrf import Segment, Segmentation, SegmentLattice, nll, segment_score, viterbi

logger = logging.getLogger(__name__)


class SemiCRFModel:
    def __init__(self, config: ModelConfig, labels: Sequence[str], max_len: int,
                 vocab: dict[str, list[str]], vectors: dict[str, np.ndarray] | None = None):
        vectors = vectors or {}
        self.config = config
        self.labels = tuple(labels)
        self.max_len = max_len
        self.separator = config.key_separator
        self.store = ParameterStore(config.seed)

        self.unit_pretrained = build_table(
            self.store, "embed.unit_pretrained", vocab.get("unit_pretrained", []),
            vectors.get("unit_pretrained"), config.unit_pretrained_dim, config.finetune_unit_pretrained)
        self.unit_tuned = build_table(
            self.store, "embed.unit_tuned", vocab.get("unit_tuned", []), None,
            config.unit_tuned_dim, True)
        self.segment_table: EmbeddingTable | None = None
        if config.use_segment_embeddings:
            self.segment_table = build_table(
                self.store, "embed.segment", vocab.get("segment", []), vectors.get("segment"),
                config.semb_dim, config.finetune_segment)

        self.encoder = Encoder(self.store, self.unit_pretrained, self.unit_tuned, config.input_dim,
                               config.hidden_dim, config.unit_pretrained_dim, config.unit_tuned_dim)
        self.composer = build_composer(config.composition, self.store, config.hidden_dim,
                                       config.scomp_dim, max_len, config.segment_hidden_dim)
        self.representer = SegmentRepresenter(
            self.store, len(self.labels), config.scomp_dim,
            config.semb_dim if config.use_segment_embeddings else None,
            config.label_dim, config.segment_dim)
        self.W = self.store.vector("crf.W", config.segment_dim)

    def parameters(self) -> list[Parameter]:
        return list(self.store)

    def tables(self) -> dict[str, EmbeddingTable]:
        out = {"unit_pretrained": self.unit_pretrained, "unit_tuned": self.unit_tuned}
        if self.segment_table is not None:
            out["segment"] = self.segment_table
        return out

    def segment_embedding(self, tokens: Sequence[str], u: int, v: int) -> Node | None:
        if self.segment_table is None:
            return None
        return lookup_segment(self.segment_table, segment_key(tokens[u - 1: v], self.separator))

    def lattice(self, tokens: Sequence[str]) -> SegmentLattice:
        encoded = self.encoder.encode(tokens)
        label_parts = [self.representer.label_part(y) for y in range(len(self.labels))]
        scores: dict[tuple[int, int, int], Node] = {}
        for (u, v), scomp in self.composer.compose_all(encoded.H, self.max_len).items():
            span = self.representer.span_part(scomp, self.segment_embedding(tokens, u, v))
            for y, label_part in enumerate(label_parts):
                scores[(u, v, y)] = segment_score(self.W.node, self.representer.combine(span, label_part))
        return SegmentLattice(len(tokens), self.max_len, self.labels, scores)

    def loss(self, tokens: Sequence[str], gold: Sequence[Segment]) -> Node:
        return nll(self.lattice(tokens), gold)

    def predict(self, tokens: Sequence[str]) -> Segmentation:
        if not tokens:
            return ()
        return viterbi(self.lattice(tokens))[0]

    def predict_all(self, sequences: Iterable[Sequence[str]]) -> list[Segmentation]:
        return [self.predict(tokens) for tokens in sequences]

    @classmethod
    def from_corpus(cls, config: ModelConfig, corpus) -> "SemiCRFModel":
        """A fresh model whose vocabularies come from ``corpus`` and the configured files."""
        max_len = config.max_segment_length or corpus.max_segment_length()
        vocab: dict[str, list[str]] = {"unit_tuned": corpus.vocabulary()}
        vectors: dict[str, np.ndarray] = {}

        if config.unit_embeddings:
            vocab["unit_pretrained"], vectors["unit_pretrained"] = read_embeddings(
                config.unit_embeddings, config.unit_pretrained_dim)
        else:
            logger.warning("no pretrained unit embeddings configured, E^p contributes nothing")

        if config.use_segment_embeddings:
            if config.segment_embeddings:
                vocab["segment"], vectors["segment"] = read_embeddings(
                    config.segment_embeddings, config.semb_dim)
            else:
                keys = (segment_key(s.tokens[seg.u - 1: seg.v], config.key_separator)
                        for s in corpus for seg in s.segments)
                vocab["segment"] = lexicon(keys)
                logger.info("segment embeddings start random over a %d-entry training lexicon",
                            len(vocab["segment"]))

        logger.info("model: %s, L=%d, %d labels", config.composition, max_len, len(corpus.labels))
        return cls(config, corpus.labels, max_len, vocab, vectors)

    def save(self, path: str) -> None:
        meta = {
            "config": self.config.to_dict(),
            "labels": list(self.labels),
            "max_len": self.max_len,
            "vocab": {name: table.tokens for name, table in self.tables().items()},
        }
        save_checkpoint(path, self.store, meta)

    @classmethod
    def load(cls, path: str) -> "SemiCRFModel":
        meta, state = read_checkpoint(path)
        try:
            config = ModelConfig.from_mapping(meta["config"])
            model = cls(config, meta["labels"], int(meta["max_len"]), meta["vocab"])
        except (ConfigError, KeyError, TypeError) as e:
            raise VersionError(f"{path}: checkpoint does not match this model layout ({e})") from e
        extra = set(state) - set(model.store.names())
        if extra:
            raise VersionError(f"{path}: unexpected parameters {', '.join(sorted(extra))}")
        try:
            model.store.restore(state)
        except DimensionError as e:
            raise CheckpointError(str(e)) from e
        logger.info("loaded %s model with %d parameters from %s", config.composition, len(model.store), path)
        return model


def predict_timed(model: SemiCRFModel, sequences: Sequence[Sequence[str]]) -> tuple[list[Segmentation], float]:
    """Predictions for ``sequences`` and the inference speed in tokens per millisecond."""
    tokens = sum(len(s) for s in sequences)
    start = time.perf_counter()
    predictions = model.predict_all(sequences)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return predictions, (tokens / elapsed_ms if elapsed_ms > 0 else float("inf"))


def measure_throughput(model: SemiCRFModel, sequences: Sequence[Sequence[str]]) -> float:
    return predict_timed(model, sequences)[1]


__all__ = [
    "SemiCRFModel",
    "measure_throughput",
    "predict_timed",
]
