"""
Head training: mini-batch AdamW with warm-up + linear decay, gradient clipping, input dropout
and selection of the parameters with the lowest validation loss.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatchError, DivergenceError, EmptyCorpusError
from .head import ClassifierHead, bce_loss, forward, init_head, loss_and_gradients
from .encoders import TrainableEncoder
from .optim import AdamWState, adamw_step, clip_gradients, lr_at_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """
    Training recipe. Defaults follow the fine-tuning setup: 30 epochs, batch size 8,
    learning rate peaking at 6e-5 after one epoch of warm-up, gradient norm clipped at 5.

    ``warmup_steps`` of None means one epoch of steps; ``patience`` of None disables
    early stopping.
    """
    epochs: int = 30
    batch_size: int = 8
    peak_lr: float = 6e-5
    warmup_steps: Optional[int] = None
    clip_norm: float = 5.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.01
    dropout: float = 0.1
    seed: int = 0
    patience: Optional[int] = None

    def __post_init__(self):
        for name in ("epochs", "batch_size", "peak_lr", "clip_norm", "adam_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0):
            raise ValueError("Adam betas must be in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.warmup_steps is not None and self.warmup_steps < 0:
            raise ValueError("warmup_steps must be non-negative")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be at least 1")

    def steps_per_epoch(self, n_train: int) -> int:
        return math.ceil(n_train / self.batch_size)


@dataclass
class LabeledSet:
    """
    Training or validation examples.

    ``inputs`` is an (n, E) feature array, or a list of documents when a trainable encoder is
    used; ``targets`` is the (n, M) binary label matrix.
    """
    inputs: Any
    targets: np.ndarray

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if len(self.inputs) != len(self.targets):
            raise DimensionMismatchError(
                f"{len(self.inputs)} inputs but {len(self.targets)} label vectors"
            )

    def __len__(self) -> int:
        return len(self.targets)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float
    best_val_loss: float


@dataclass
class TrainingLog:
    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def best_val_loss(self) -> float:
        return min(r.val_loss for r in self.records)

    def write_jsonl(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for record in self.records:
                f.write(json.dumps(asdict(record)) + "\n")


@dataclass
class TrainState:
    step: int = 0
    optimizer: AdamWState = field(default_factory=AdamWState)
    best_val_loss: float = math.inf
    best_params: Dict[str, np.ndarray] = field(default_factory=dict)


def label_matrix(label_sets: Sequence, label_codes: Sequence[str]) -> np.ndarray:
    """Binary (n, M) matrix; labels outside ``label_codes`` are ignored."""
    index = {code: j for j, code in enumerate(label_codes)}
    y = np.zeros((len(label_sets), len(label_codes)))
    for row, labels in enumerate(label_sets):
        for code in labels:
            j = index.get(code)
            if j is not None:
                y[row, j] = 1.0
    return y


def _snapshot(params: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    return {name: value.copy() for name, value in params.items()}


def evaluate_loss(
    head: ClassifierHead,
    data: LabeledSet,
    encoder: Optional[TrainableEncoder] = None,
    prepared: Optional[list] = None,
    batch_size: int = 256,
) -> float:
    """Mean validation loss without dropout."""
    total = 0.0
    for start in range(0, len(data), batch_size):
        stop = min(start + batch_size, len(data))
        if encoder is None:
            x = np.asarray(data.inputs[start:stop], dtype=np.float64)
        else:
            x = encoder.forward(prepared[start:stop])
        total += bce_loss(forward(head, x), data.targets[start:stop]) * (stop - start)
    return total / len(data)


def train_head(
    train: LabeledSet,
    val: LabeledSet,
    cfg: TrainConfig,
    label_codes: Sequence[str],
    encoder: Optional[TrainableEncoder] = None,
) -> Tuple[ClassifierHead, TrainingLog]:
    """
    Train a classification head.

    Every epoch shuffles the training set with the seeded generator and runs
    forward -> loss -> gradients -> clipping -> AdamW over mini-batches, with the learning rate
    of :func:`lr_at_step`. After each epoch the validation loss is computed; the parameters of
    the epoch with the lowest validation loss are returned. A trainable encoder, when given, is
    updated jointly and restored to the same epoch.

    Args:
        train: Training examples
        val: Validation examples
        cfg: Training recipe
        label_codes: Descriptor code of each target column
        encoder: Optional trainable encoder; then ``inputs`` are documents

    Returns:
        The best head and the per-epoch training log
    """
    if len(train) == 0 or len(val) == 0:
        raise EmptyCorpusError("training and validation sets must not be empty")
    if train.targets.shape[1] != len(label_codes) or val.targets.shape[1] != len(label_codes):
        raise DimensionMismatchError("target width differs from the number of label codes")

    if encoder is None:
        train_x = np.asarray(train.inputs, dtype=np.float64)
        val_x = np.asarray(val.inputs, dtype=np.float64)
        if train_x.ndim != 2 or val_x.ndim != 2 or train_x.shape[1] != val_x.shape[1]:
            raise DimensionMismatchError("feature matrices must be 2-D with the same width")
        dim = train_x.shape[1]
        train_prepared = val_prepared = None
    else:
        dim = encoder.dim
        train_prepared = [encoder.prepare(doc) for doc in train.inputs]
        val_prepared = [encoder.prepare(doc) for doc in val.inputs]

    rng = np.random.default_rng(cfg.seed)
    head = init_head(dim, label_codes, seed=cfg.seed, dropout_rate=cfg.dropout)
    params: Dict[str, np.ndarray] = {"W": head.W, "b": head.b}
    if encoder is not None:
        params.update({f"encoder.{k}": v for k, v in encoder.parameters().items()})

    steps_per_epoch = cfg.steps_per_epoch(len(train))
    total_steps = cfg.epochs * steps_per_epoch
    warmup = steps_per_epoch if cfg.warmup_steps is None else min(cfg.warmup_steps, total_steps)

    state = TrainState()
    log = TrainingLog()
    stale_epochs = 0
    lr = 0.0

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train))
        epoch_loss = 0.0
        for start in range(0, len(train), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            if encoder is None:
                x = train_x[batch]
            else:
                batch_inputs = [train_prepared[i] for i in batch]
                x = encoder.forward(batch_inputs)

            grads = loss_and_gradients(head, x, train.targets[batch], train_mode=True, rng=rng)
            if not math.isfinite(grads.loss):
                raise DivergenceError(f"training loss became {grads.loss} at step {state.step}")
            named = {"W": grads.W, "b": grads.b}
            if encoder is not None:
                for k, g in encoder.backward(batch_inputs, grads.c).items():
                    named[f"encoder.{k}"] = g

            clipped, _ = clip_gradients(named, cfg.clip_norm)
            lr = lr_at_step(cfg, state.step, total_steps, warmup)
            adamw_step(state.optimizer, params, clipped, lr, cfg)
            state.step += 1
            epoch_loss += grads.loss * len(batch)

        val_loss = evaluate_loss(head, val, encoder, val_prepared)
        if not math.isfinite(val_loss):
            raise DivergenceError(f"validation loss became {val_loss} in epoch {epoch}")
        if val_loss < state.best_val_loss:
            state.best_val_loss = val_loss
            state.best_params = _snapshot(params)
            log.best_epoch = epoch
            stale_epochs = 0
        else:
            stale_epochs += 1

        record = EpochRecord(
            epoch=epoch,
            train_loss=epoch_loss / len(train),
            val_loss=val_loss,
            lr=lr,
            best_val_loss=state.best_val_loss,
        )
        log.records.append(record)
        logger.info(
            "epoch %d train_loss=%.6f val_loss=%.6f lr=%.3g",
            epoch, record.train_loss, val_loss, lr,
        )
        if cfg.patience is not None and stale_epochs >= cfg.patience:
            log.stopped_early = True
            logger.info("Stopping early after %d epochs without improvement", stale_epochs)
            break

    for name, value in state.best_params.items():
        params[name][...] = value
    logger.info("Selected epoch %d (val_loss=%.6f)", log.best_epoch, state.best_val_loss)
    return head, log
