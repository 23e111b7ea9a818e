"""
Document encoders producing the feature vector fed to the classification head.
"""

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Union

import numpy as np

from .corpus import Document
from .errors import DimensionMismatchError, ParseError
from .tokenization import SubwordVocabulary, encode_document, tokens_to_ids

logger = logging.getLogger(__name__)


class Encoder(ABC):
    """Maps a document to a fixed-size feature vector."""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Feature vector size E."""

    @abstractmethod
    def encode(self, document: Document) -> np.ndarray:
        """
        Encode a document.

        Args:
            document: Input document

        Returns:
            Vector of shape (E,)
        """

    def encode_batch(self, documents: Sequence[Document]) -> np.ndarray:
        if not documents:
            return np.zeros((0, self.dim))
        return np.stack([self.encode(doc) for doc in documents])


class TrainableEncoder(Encoder):
    """Encoder whose parameters are updated together with the head."""

    @abstractmethod
    def prepare(self, document: Document) -> Any:
        """Parameter-independent preprocessing, computed once per document."""

    @abstractmethod
    def forward(self, prepared: Sequence[Any]) -> np.ndarray:
        """Features of prepared documents, shape (n, E)."""

    @abstractmethod
    def backward(self, prepared: Sequence[Any], grad_features: np.ndarray) -> Dict[str, np.ndarray]:
        """Gradients of the parameters given the gradient of the features."""

    @abstractmethod
    def parameters(self) -> Dict[str, np.ndarray]:
        """Parameter arrays, updated in place by the optimizer."""

    def encode(self, document: Document) -> np.ndarray:
        return self.forward([self.prepare(document)])[0]


class PrecomputedEncoder(Encoder):
    """Looks up externally computed document embeddings by doc_id."""

    def __init__(self, vectors: Mapping[str, np.ndarray]):
        self._vectors = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
        dims = {v.shape for v in self._vectors.values()}
        if len(dims) > 1:
            raise DimensionMismatchError(f"embeddings have different shapes: {sorted(dims)}")
        self._dim = next(iter(dims))[0] if dims else 0
        for doc_id, vec in self._vectors.items():
            if not np.all(np.isfinite(vec)):
                raise ParseError(f"embedding of {doc_id!r} is not finite")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PrecomputedEncoder":
        """Load a ``.npz`` archive holding ``doc_ids`` and ``vectors`` arrays."""
        with np.load(path, allow_pickle=False) as npz:
            doc_ids = [str(d) for d in npz["doc_ids"]]
            vectors = npz["vectors"]
        if len(doc_ids) != len(vectors):
            raise ParseError("doc_ids and vectors differ in length", str(path))
        logger.info("Loaded %d precomputed embeddings from %s", len(doc_ids), path)
        return cls(dict(zip(doc_ids, vectors)))

    def save(self, path: Union[str, Path]) -> None:
        doc_ids = sorted(self._vectors)
        with open(path, "wb") as f:
            np.savez_compressed(
                f,
                doc_ids=np.array(doc_ids, dtype=str),
                vectors=np.stack([self._vectors[d] for d in doc_ids]) if doc_ids else np.zeros((0, 0)),
            )

    @property
    def dim(self) -> int:
        return self._dim

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._vectors

    def encode(self, document: Document) -> np.ndarray:
        try:
            return self._vectors[document.doc_id]
        except KeyError:
            raise KeyError(f"no precomputed embedding for document {document.doc_id!r}") from None


class MeanEmbeddingEncoder(TrainableEncoder):
    """
    Mean of learned token embeddings over the encoded document (special tokens included).

    Args:
        vocab: Subword vocabulary
        dim: Embedding size E
        seed: Initialization seed
        embeddings: Existing (|V|, E) table, used instead of a random one
    """

    def __init__(
        self,
        vocab: SubwordVocabulary,
        dim: int = 32,
        seed: int = 0,
        embeddings: Optional[np.ndarray] = None,
    ):
        self.vocab = vocab
        if embeddings is None:
            rng = np.random.default_rng(seed)
            embeddings = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(len(vocab), dim))
        embeddings = np.asarray(embeddings, dtype=np.float64)
        if embeddings.shape[0] != len(vocab):
            raise DimensionMismatchError(
                f"embedding table has {embeddings.shape[0]} rows for {len(vocab)} tokens"
            )
        self.embeddings = embeddings

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def prepare(self, document: Union[Document, str]) -> np.ndarray:
        text = document if isinstance(document, str) else document.text
        return np.asarray(tokens_to_ids(self.vocab, encode_document(self.vocab, text)), dtype=np.int64)

    def forward(self, prepared: Sequence[np.ndarray]) -> np.ndarray:
        return np.stack([self.embeddings[ids].mean(axis=0) for ids in prepared])

    def backward(self, prepared: Sequence[np.ndarray], grad_features: np.ndarray) -> Dict[str, np.ndarray]:
        grad = np.zeros_like(self.embeddings)
        for ids, g in zip(prepared, grad_features):
            np.add.at(grad, ids, g / len(ids))
        return {"embeddings": grad}

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"embeddings": self.embeddings}

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "wb") as f:
            np.save(f, self.embeddings.astype("<f8"))

    @classmethod
    def load(cls, path: Union[str, Path], vocab: SubwordVocabulary) -> "MeanEmbeddingEncoder":
        embeddings = np.load(path, allow_pickle=False)
        return cls(vocab, dim=embeddings.shape[1], embeddings=embeddings)

