"""Plain SGD over single sequences, with dev-set model selection."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from app.config import TrainConfig
from app.corpus import f_score
from app.errors import PreconditionError, ValidationError
from app.model.autodiff import backward, clip_grad_norm, sgd_step
from app.model.semicrf import validate_segmentation

logger = logging.getLogger(__name__)

LOG_HEADER = ("epoch", "mean_nll", "dev_f", "lr")


def lr(t: int, eta0: float = 0.1) -> float:
    """Step size for epoch ``t``: eta0 / (1 + 0.1 t)."""
    if t < 0:
        raise PreconditionError(f"epoch index must be >= 0, got {t}")
    return eta0 / (1 + 0.1 * t)


@dataclass
class EpochRecord:
    epoch: int
    mean_nll: float
    dev_f: float
    lr: float

    def row(self) -> str:
        return f"{self.epoch}\t{self.mean_nll:.6f}\t{self.dev_f:.4f}\t{self.lr!r}"


@dataclass
class TrainResult:
    best_epoch: int
    best_f: float
    history: list[EpochRecord] = field(default_factory=list)

    @property
    def epochs_run(self) -> int:
        return len(self.history)


def check_gold(model, corpus) -> None:
    """Fail before any update if a training sequence cannot be scored."""
    labels = set(model.labels)
    for k, sentence in enumerate(corpus):
        if not sentence.tokens:
            raise ValidationError(f"training sequence {k} is empty")
        try:
            validate_segmentation(sentence.segments, len(sentence.tokens), model.max_len)
        except ValidationError as e:
            raise ValidationError(f"training sequence {k}: {e}") from None
        unknown = {seg.y for seg in sentence.segments} - labels
        if unknown:
            raise ValidationError(f"training sequence {k}: unknown labels {sorted(unknown)}")


def evaluate(model, corpus) -> float:
    predictions = model.predict_all(s.tokens for s in corpus)
    return f_score(corpus, predictions).f


def write_log(path: str, history: list[EpochRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\t".join(LOG_HEADER) + "\n")
        for record in history:
            f.write(record.row() + "\n")


def train(model, train_data, dev_data, cfg: TrainConfig, log_path: str | None = None,
          checkpoint_path: str | None = None) -> TrainResult:
    """Train ``model`` in place and leave it holding the best-dev parameters."""
    if not len(train_data):
        raise PreconditionError("no training sequences")
    check_gold(model, train_data)

    rng = np.random.default_rng(cfg.seed)
    params = model.parameters()
    result = TrainResult(best_epoch=-1, best_f=-1.0)
    best_state = model.store.snapshot()
    stale = 0

    for t in range(cfg.max_epochs):
        step = lr(t, cfg.eta0)
        total = 0.0
        for k in rng.permutation(len(train_data)):
            sentence = train_data[int(k)]
            model.store.zero_grad()
            loss = model.loss(sentence.tokens, sentence.segments)
            value = float(loss.value)
            if not math.isfinite(value):
                raise PreconditionError(f"epoch {t}: loss on sequence {int(k)} is not finite")
            total += value
            backward(loss)
            clip_grad_norm(params, cfg.clip_norm)
            sgd_step(params, step)

        record = EpochRecord(t, total / len(train_data), evaluate(model, dev_data), step)
        result.history.append(record)
        logger.info("epoch %d: mean nll %.4f, dev F %.4f, lr %.5f",
                    t, record.mean_nll, record.dev_f, step)

        if record.dev_f > result.best_f:
            result.best_epoch, result.best_f = t, record.dev_f
            best_state = model.store.snapshot()
            stale = 0
            if checkpoint_path:
                model.save(checkpoint_path)
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("no dev improvement for %d epochs, stopping", stale)
                break

    model.store.restore(best_state)
    if log_path:
        write_log(log_path, result.history)
    logger.info("best epoch %d with dev F %.4f", result.best_epoch, result.best_f)
    return result


__all__ = [
    "lr",
    "train",
    "evaluate",
    "check_gold",
    "write_log",
    "EpochRecord",
    "TrainResult",
    "LOG_HEADER",
]
