import numpy as np
import pytest

from app import create_app
from app.config import ModelConfig
from app.corpus import LabeledCorpus, Sentence, TaskKind, bieso_encode
from app.model.semicrf import Segment

TINY_DIMS = dict(
    unit_pretrained_dim=3,
    unit_tuned_dim=3,
    input_dim=3,
    hidden_dim=3,
    segment_hidden_dim=3,
    scomp_dim=3,
    semb_dim=3,
    label_dim=2,
    segment_dim=3,
)

SMALL_DIMS = dict(
    unit_pretrained_dim=8,
    unit_tuned_dim=8,
    input_dim=8,
    hidden_dim=8,
    segment_hidden_dim=8,
    scomp_dim=8,
    semb_dim=6,
    label_dim=4,
    segment_dim=8,
)


def tiny_config(**changes) -> ModelConfig:
    return ModelConfig(**{**TINY_DIMS, **changes})


def small_config(**changes) -> ModelConfig:
    return ModelConfig(**{**SMALL_DIMS, **changes})


def lexicon_entries(vocab_size: int = 30, labels=("A", "B")) -> list[tuple[tuple[str, ...], str]]:
    """Entries of length 1, 2, 3, 1, 2, 3, ... over distinct tokens, labels alternating."""
    entries = []
    next_token = 0
    k = 0
    while next_token < vocab_size:
        length = min(k % 3 + 1, vocab_size - next_token)
        tokens = tuple(f"w{next_token + i}" for i in range(length))
        entries.append((tokens, labels[k % len(labels)]))
        next_token += length
        k += 1
    return entries


def lexicon_corpus(n_sentences: int = 20, seed: int = 0, min_entries: int = 2,
                   max_entries: int = 4) -> LabeledCorpus:
    """Sentences glued together from lexicon entries; every token pins down its segment."""
    rng = np.random.default_rng(seed)
    entries = lexicon_entries()
    sentences = []
    for _ in range(n_sentences):
        tokens: list[str] = []
        segments: list[Segment] = []
        for idx in rng.integers(0, len(entries), rng.integers(min_entries, max_entries + 1)):
            entry_tokens, label = entries[int(idx)]
            start = len(tokens) + 1
            tokens.extend(entry_tokens)
            segments.append(Segment(start, len(tokens), label))
        sentences.append(Sentence(tuple(tokens), tuple(segments)))
    return LabeledCorpus(sentences, TaskKind.SPAN)


def conll_text(corpus: LabeledCorpus) -> str:
    blocks = []
    for s in corpus:
        tags = bieso_encode(s.segments, corpus.task)
        blocks.append("".join(f"{tok} {tag}\n" for tok, tag in zip(s.tokens, tags)))
    return "\n".join(blocks)


@pytest.fixture()
def app():
    app = create_app({
        "TESTING": True,
        "LOG_LEVEL": "WARNING",
    })
    yield app


@pytest.fixture()
def runner(app):
    return app.test_cli_runner()


@pytest.fixture()
def toy_corpus():
    return lexicon_corpus()


@pytest.fixture()
def toy_files(tmp_path):
    """A CoNLL train/dev pair and a matching config of small dimensions."""
    train = lexicon_corpus(12, seed=3)
    dev = lexicon_corpus(4, seed=4)
    (tmp_path / "train.conll").write_text(conll_text(train), encoding="utf-8")
    (tmp_path / "dev.conll").write_text(conll_text(dev), encoding="utf-8")
    lines = [f"MODEL_{k.upper()} = {v}" for k, v in SMALL_DIMS.items()]
    lines += ['MODEL_TASK = "span"', 'MODEL_COMPOSITION = "sconcate"',
              "TRAIN_MAX_EPOCHS = 4", "TRAIN_PATIENCE = 4"]
    (tmp_path / "toy.toml").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return tmp_path
