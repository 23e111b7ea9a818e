"""
Rankers: anything that scores every descriptor of a fixed codebook for a document.
"""

import zlib
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, List, Sequence, Tuple

import numpy as np

from .corpus import Document
from .head import forward, rank_labels

if TYPE_CHECKING:
    from .encoders import Encoder
    from .head import ClassifierHead
    from .jex import SignatureModel


class Ranker(ABC):
    """Scores the descriptors of ``label_codes`` for a document."""

    @property
    @abstractmethod
    def label_codes(self) -> Tuple[str, ...]:
        """Descriptor codebook, one entry per score."""

    @abstractmethod
    def scores(self, document: Document) -> np.ndarray:
        """
        Score every descriptor.

        Args:
            document: Document to rank descriptors for

        Returns:
            Scores aligned with ``label_codes``
        """

    def rank(self, document: Document, k: int = 6) -> List[Tuple[str, float]]:
        """Top-k (descriptor, score) pairs, ties by ascending code."""
        return rank_labels(self.label_codes, self.scores(document), k)


class HeadRanker(Ranker):
    """Classification head over an encoder."""

    def __init__(self, head: "ClassifierHead", encoder: "Encoder"):
        self.head = head
        self.encoder = encoder

    @property
    def label_codes(self) -> Tuple[str, ...]:
        return self.head.label_codes

    def scores(self, document: Document) -> np.ndarray:
        return forward(self.head, self.encoder.encode(document))


class SignatureRanker(Ranker):
    """Topic signature similarity."""

    def __init__(self, model: "SignatureModel"):
        self.model = model

    @property
    def label_codes(self) -> Tuple[str, ...]:
        return self.model.descriptors

    def scores(self, document: Document) -> np.ndarray:
        return self.model.score_vector(document.text)


class RandomRanker(Ranker):
    """Uniform random scores, reproducible per (seed, doc_id)."""

    def __init__(self, label_codes: Sequence[str], seed: int = 0):
        self._codes = tuple(label_codes)
        self.seed = seed

    @property
    def label_codes(self) -> Tuple[str, ...]:
        return self._codes

    def scores(self, document: Document) -> np.ndarray:
        rng = np.random.default_rng([self.seed, zlib.crc32(document.doc_id.encode("utf-8"))])
        return rng.random(len(self._codes))
