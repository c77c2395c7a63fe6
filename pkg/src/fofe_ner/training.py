"""Mini-batch SGD training with momentum, exponential learning-rate decay,
and early stopping against development-set F1.

The candidate pool is heavily skewed toward NONE, so batches are drawn by
rejection sampling that holds the negative:positive ratio at a configured
value; negatives are effectively resampled every epoch.  The learning rate
decays smoothly from its initial value to 1/16 of it across the epoch
budget.  After every epoch the development documents are decoded and
scored; the best-F1 parameter snapshot is kept and restored at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Diverged, EmptyPool
from .fofe import ForgettingFactor
from .model import NerModel
from .pipeline import decode, evaluate

DECAY_TARGET = 1.0 / 16.0


@dataclass
class TrainingConfig:
    learning_rate: float = 0.128
    momentum: float = 0.9
    batch_size: int = 128
    dropout: float = 0.5
    decay_factor: float = DECAY_TARGET
    max_epochs: int = 50
    patience: int = 5
    neg_ratio: float = 2.0
    seed: int = 0
    alpha_word: float = 0.5
    alpha_char: float = 0.8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.neg_ratio <= 0:
            raise ValueError("negative ratio must be positive")


@dataclass
class OptimizerState:
    """Momentum velocity buffers, shape-matched to the parameters."""

    velocity: dict[str, np.ndarray]

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "OptimizerState":
        return cls(velocity={k: np.zeros_like(v) for k, v in params.items()})


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             state: OptimizerState, lr: float, momentum: float) -> None:
    """v <- momentum * v - lr * g;  theta <- theta + v   (per tensor, in place)."""
    for k in sorted(params):
        v = state.velocity[k]
        v *= momentum
        v -= lr * grads[k]
        params[k] += v


def lr_at(epoch: int, config: TrainingConfig) -> float:
    """Learning rate for an epoch: smooth exponential interpolation from the
    initial rate down to decay_factor times it at the final epoch."""
    if not 0 <= epoch < config.max_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {config.max_epochs})")
    if config.max_epochs == 1:
        return config.learning_rate
    exponent = epoch / (config.max_epochs - 1)
    return config.learning_rate * config.decay_factor ** exponent


def sample_batch(pool, config: TrainingConfig, rng: np.random.Generator,
                 none_label: int):
    """Draw up to batch_size labeled candidates from the pool.

    Walks a freshly shuffled pool, always accepting positives and accepting
    negatives (label == none_label) with the probability that makes the
    accepted stream match the configured negative:positive ratio in
    expectation.  Degenerate pools (all positive, or no positives) are
    passed through as-is.
    """
    if not pool:
        raise EmptyPool("no candidates to sample from")
    n = len(pool)
    n_pos = sum(1 for c in pool if c.label != none_label)
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        accept_neg = 1.0
    else:
        accept_neg = min(1.0, config.neg_ratio * n_pos / n_neg)
    order = rng.permutation(n)
    batch = []
    for i in order:
        cand = pool[i]
        if cand.label != none_label or rng.random() < accept_neg:
            batch.append(cand)
            if len(batch) == config.batch_size:
                break
    return batch


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    lr: float
    dev_precision: float
    dev_recall: float
    dev_f1: float


@dataclass
class TrainResult:
    model: NerModel
    log: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_f1: float = 0.0


def train(model: NerModel, candidates, dev_docs, config: TrainingConfig,
          progress=None) -> TrainResult:
    """Optimize the model on labeled candidates with dev-set early stopping.

    candidates: LabeledFragment pool (positives and NONE negatives mixed).
    dev_docs:   ConllDocuments decoded and scored after every epoch.
    Stops once dev F1 has not improved for `patience` epochs (at least one
    non-improving epoch is always tolerated) or at max_epochs, then
    restores the best snapshot.  Raises Diverged on non-finite loss.
    """
    if not candidates:
        raise EmptyPool("empty training pool")
    ss = np.random.SeedSequence(config.seed)
    rng_sample, rng_dropout = (np.random.default_rng(s) for s in ss.spawn(2))

    # the training config is authoritative for the forgetting factors
    model.extractor.alpha_word = ForgettingFactor(config.alpha_word)
    model.extractor.alpha_char = ForgettingFactor(config.alpha_char)

    none_label = model.labels.none_index
    n_pos = sum(1 for c in candidates if c.label != none_label)
    epoch_target = n_pos * (1.0 + config.neg_ratio) if n_pos else len(candidates)
    batches_per_epoch = max(1, math.ceil(epoch_target / config.batch_size))

    params = model.parameters()
    state = OptimizerState.for_params(params)
    dev_sentences = [s for d in dev_docs for s in d.sentences]
    dev_gold = [g for d in dev_docs for g in d.gold_spans]

    result = TrainResult(model=model)
    best_snapshot = None
    bad_epochs = 0
    for epoch in range(config.max_epochs):
        lr = lr_at(epoch, config)
        total_loss = 0.0
        for _ in range(batches_per_epoch):
            batch = sample_batch(candidates, config, rng_sample, none_label)
            frags = [c.fragment for c in batch]
            gold = np.array([c.label for c in batch], dtype=np.intp)
            batch_loss, grads = model.forward_backward(
                frags, gold, dropout_p=config.dropout, rng=rng_dropout)
            if not np.isfinite(batch_loss):
                raise Diverged(f"loss became {batch_loss} at epoch {epoch}")
            sgd_step(params, grads, state, lr, config.momentum)
            total_loss += batch_loss

        if dev_sentences:
            preds = model.predict(dev_sentences)
            spans = decode(preds, model.labels, threshold=model.threshold)
            scores = evaluate(spans, dev_gold)
        else:
            scores = evaluate([], [])
        record = EpochRecord(epoch=epoch,
                             mean_loss=total_loss / batches_per_epoch,
                             lr=lr,
                             dev_precision=scores.precision,
                             dev_recall=scores.recall,
                             dev_f1=scores.f1)
        result.log.append(record)
        if progress is not None:
            progress(record)

        if record.dev_f1 > result.best_f1 or best_snapshot is None:
            result.best_f1 = record.dev_f1
            result.best_epoch = epoch
            best_snapshot = {k: v.copy() for k, v in params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= max(config.patience, 1):
                break

    model.set_parameters(best_snapshot)
    return result
