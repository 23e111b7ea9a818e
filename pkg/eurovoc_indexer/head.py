"""
Sigmoid classification head over document feature vectors.

    y_hat = sigmoid(C^T W + b)

with one independent probability per descriptor, trained with the average binary
cross-entropy over the M labels.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from .encoders import Encoder
from .corpus import Document
from .errors import DimensionMismatchError, ParseError

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"EVHD"
CHECKPOINT_VERSION = 1
PROB_CLAMP = 1e-12


@dataclass(eq=False)
class ClassifierHead:
    """
    Attributes:
        W: Weights, shape (E, M)
        b: Bias, shape (M,)
        label_codes: Descriptor code of each output column
        dropout_rate: Inverted dropout applied to the input during training
    """

    W: np.ndarray
    b: np.ndarray
    label_codes: Tuple[str, ...]
    dropout_rate: float = 0.1

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.label_codes = tuple(self.label_codes)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise DimensionMismatchError(f"W {self.W.shape} and b {self.b.shape} do not agree")
        if len(self.label_codes) != self.W.shape[1]:
            raise DimensionMismatchError(
                f"{len(self.label_codes)} label codes for {self.W.shape[1]} outputs"
            )
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError("dropout_rate must be in [0, 1)")

    @property
    def E(self) -> int:
        return self.W.shape[0]

    @property
    def M(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "ClassifierHead":
        return ClassifierHead(self.W.copy(), self.b.copy(), self.label_codes, self.dropout_rate)


@dataclass
class HeadGradients:
    W: np.ndarray
    b: np.ndarray
    c: np.ndarray
    loss: float = 0.0


@dataclass
class ForwardCache:
    inputs: np.ndarray
    dropped: np.ndarray
    mask: Optional[np.ndarray] = field(default=None)


def init_head(E: int, label_codes: Sequence[str], seed: int = 0, dropout_rate: float = 0.1) -> ClassifierHead:
    """W ~ U(-1/sqrt(E), 1/sqrt(E)), b = 0."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(E)
    W = rng.uniform(-bound, bound, size=(E, len(label_codes)))
    return ClassifierHead(W, np.zeros(len(label_codes)), tuple(label_codes), dropout_rate)


def _as_batch(h: ClassifierHead, c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    batch = c.reshape(1, -1) if c.ndim == 1 else c
    if batch.ndim != 2 or batch.shape[1] != h.E:
        raise DimensionMismatchError(f"feature vector of size {c.shape[-1]} for a head with E={h.E}")
    return batch


def _forward(h: ClassifierHead, c: np.ndarray, train_mode: bool, rng) -> Tuple[np.ndarray, ForwardCache]:
    x = _as_batch(h, c)
    mask = None
    dropped = x
    if train_mode and h.dropout_rate > 0:
        if rng is None:
            raise ValueError("train_mode forward needs a random generator")
        keep = 1.0 - h.dropout_rate
        mask = (rng.random(x.shape) < keep) / keep
        dropped = x * mask
    probs = expit(dropped @ h.W + h.b)
    return probs, ForwardCache(inputs=x, dropped=dropped, mask=mask)


def forward(
    h: ClassifierHead,
    c: np.ndarray,
    train_mode: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Label probabilities for one feature vector (shape (E,)) or a batch (shape (n, E)).

    In train mode, inverted dropout with ``h.dropout_rate`` is applied to the input.
    """
    probs, _ = _forward(h, c, train_mode, rng)
    return probs[0] if np.ndim(c) == 1 else probs


def bce_loss(y_hat: np.ndarray, y: np.ndarray) -> float:
    """
    Average binary cross-entropy over the M labels (and over the batch for 2-D input).

    Probabilities are clamped to [1e-12, 1 - 1e-12].
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y_hat.shape != y.shape:
        raise DimensionMismatchError(f"predictions {y_hat.shape} and labels {y.shape} differ")
    p = np.clip(y_hat, PROB_CLAMP, 1.0 - PROB_CLAMP)
    losses = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(losses.mean())


def _backward(h: ClassifierHead, probs: np.ndarray, y: np.ndarray, cache: ForwardCache) -> HeadGradients:
    n = probs.shape[0]
    dlogits = (probs - y) / (h.M * n)
    grad_w = cache.dropped.T @ dlogits
    grad_b = dlogits.sum(axis=0)
    grad_x = dlogits @ h.W.T
    if cache.mask is not None:
        grad_x = grad_x * cache.mask
    return HeadGradients(W=grad_w, b=grad_b, c=grad_x, loss=bce_loss(probs, y))


def loss_and_gradients(
    h: ClassifierHead,
    c: np.ndarray,
    y: np.ndarray,
    train_mode: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> HeadGradients:
    """Batch loss and gradients with respect to W, b and the input features."""
    x = _as_batch(h, c)
    y = np.asarray(y, dtype=np.float64).reshape(x.shape[0], -1)
    if y.shape[1] != h.M:
        raise DimensionMismatchError(f"label vector of size {y.shape[1]} for M={h.M}")
    probs, cache = _forward(h, x, train_mode, rng)
    return _backward(h, probs, y, cache)


def gradients(h: ClassifierHead, c: np.ndarray, y: np.ndarray) -> HeadGradients:
    """
    Gradients of the loss for a single example, without dropout.

    dL/dlogit_i = (y_hat_i - y_i) / M, chained to W, b and the input C.
    """
    grads = loss_and_gradients(h, c, y)
    if np.ndim(c) == 1:
        grads.c = grads.c[0]
    return grads


def rank_labels(codes: Sequence[str], scores: np.ndarray, k: int) -> List[Tuple[str, float]]:
    """Top-k (code, score) pairs, scores descending, ties by ascending code."""
    order = sorted(range(len(codes)), key=lambda i: (-scores[i], codes[i]))
    return [(codes[i], float(scores[i])) for i in order[:k]]


def predict_topk(h: ClassifierHead, encoder: Encoder, document: Document, k: int = 6) -> List[Tuple[str, float]]:
    """
    The k most probable descriptors of a document.

    Args:
        h: Classifier head
        encoder: Feature encoder matching the head's E
        document: Document to classify
        k: Number of descriptors (1 <= k <= M)

    Returns:
        List of (descriptor, probability), best first

    Raises:
        ValueError: k outside 1..M
    """
    if k < 1 or k > h.M:
        raise ValueError(f"k must be between 1 and {h.M}, got {k}")
    probs = forward(h, encoder.encode(document))
    return rank_labels(h.label_codes, probs, k)


def save_head(h: ClassifierHead, path: Union[str, Path]) -> None:
    """
    Write a checkpoint: magic ``EVHD``, little-endian uint32 version and header length, a JSON
    header {E, M, labels, dropout_rate}, then W (row-major) and b as little-endian float64.
    """
    header = json.dumps({
        "E": h.E,
        "M": h.M,
        "labels": list(h.label_codes),
        "dropout_rate": h.dropout_rate,
    }).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(np.array([CHECKPOINT_VERSION, len(header)], dtype="<u4").tobytes())
        f.write(header)
        f.write(np.ascontiguousarray(h.W, dtype="<f8").tobytes(order="C"))
        f.write(np.ascontiguousarray(h.b, dtype="<f8").tobytes())


def load_head(path: Union[str, Path]) -> ClassifierHead:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ParseError("not a head checkpoint", str(path))
    version, header_len = np.frombuffer(raw[4:12], dtype="<u4")
    if version != CHECKPOINT_VERSION:
        raise ParseError(f"unsupported checkpoint version {version}", str(path))
    try:
        header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"corrupt checkpoint header: {e}", str(path)) from e
    E, M = int(header["E"]), int(header["M"])
    offset = 12 + int(header_len)
    expected = offset + 8 * (E * M + M)
    if len(raw) != expected:
        raise ParseError(f"checkpoint has {len(raw)} bytes, expected {expected}", str(path))
    W = np.frombuffer(raw, dtype="<f8", count=E * M, offset=offset).reshape(E, M)
    b = np.frombuffer(raw, dtype="<f8", count=M, offset=offset + 8 * E * M)
    return ClassifierHead(
        W=W.astype(np.float64),
        b=b.astype(np.float64),
        label_codes=tuple(header["labels"]),
        dropout_rate=float(header.get("dropout_rate", 0.1)),
    )
