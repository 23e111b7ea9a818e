"""
Topic signature baseline.

Every descriptor gets a profile of weighted term frequencies built from the training documents
it labels; a new document is ranked against all profiles by cosine similarity.

Weights are ``rf_d(term) * idf(term)`` where ``rf_d`` is the relative frequency of the term in
the concatenation of the descriptor's documents. With smoothing the idf is
``log((N + 1) / (df + 1)) + 1``, otherwise ``log(N / df)``.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from sklearn.feature_extraction.text import CountVectorizer
from sklearn.preprocessing import normalize

from .corpus import Corpus
from .errors import EmptyCorpusError, InvariantError, ParseError
from .head import rank_labels
from .tokenization import is_punctuation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SignatureConfig:
    """
    Attributes:
        min_df: Minimum number of training documents a term must occur in
        smooth_idf: Use the add-one smoothed idf
        stopwords: Terms dropped during normalization
        strip_suffixes: Suffixes removed from terms (longest first), a stand-in for lemmatization
        min_stem: Shortest stem left after suffix stripping
    """
    min_df: int = 2
    smooth_idf: bool = True
    stopwords: FrozenSet[str] = frozenset()
    strip_suffixes: Tuple[str, ...] = ()
    min_stem: int = 3

    def to_dict(self) -> dict:
        data = asdict(self)
        data["stopwords"] = sorted(self.stopwords)
        data["strip_suffixes"] = list(self.strip_suffixes)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SignatureConfig":
        return cls(
            min_df=int(data.get("min_df", 2)),
            smooth_idf=bool(data.get("smooth_idf", True)),
            stopwords=frozenset(data.get("stopwords", ())),
            strip_suffixes=tuple(data.get("strip_suffixes", ())),
            min_stem=int(data.get("min_stem", 3)),
        )


@dataclass(frozen=True)
class TermProfile:
    weights: Dict[str, float] = field(default_factory=dict)

    def norm(self) -> float:
        return float(np.sqrt(sum(w * w for w in self.weights.values())))


def _strip_suffix(term: str, config: SignatureConfig) -> str:
    for suffix in sorted(config.strip_suffixes, key=len, reverse=True):
        if term.endswith(suffix) and len(term) - len(suffix) >= config.min_stem:
            return term[: -len(suffix)]
    return term


def normalize_text(text: str, config: Optional[SignatureConfig] = None) -> List[str]:
    """
    Lowercased terms with punctuation removed.

    >>> normalize_text("The Commission's decision.")
    ['the', 'commission', 's', 'decision']
    """
    config = config or SignatureConfig()
    cleaned = "".join(" " if is_punctuation(ch) else ch for ch in text.lower())
    terms = [t for t in cleaned.split() if t not in config.stopwords]
    if config.strip_suffixes:
        terms = [_strip_suffix(t, config) for t in terms]
    return terms


def _identity(terms):
    return terms


def compute_idf(df: np.ndarray, n_docs: int, smooth: bool = True) -> np.ndarray:
    df = np.asarray(df, dtype=np.float64)
    if smooth:
        return np.log((n_docs + 1.0) / (df + 1.0)) + 1.0
    with np.errstate(divide="ignore"):
        return np.where(df > 0, np.log(n_docs / np.maximum(df, 1.0)), 0.0)


@dataclass(frozen=True, eq=False)
class SignatureModel:
    """
    Trained topic signatures.

    Attributes:
        terms: Term dictionary; column order of ``matrix``
        descriptors: Descriptor codes, ascending; row order of ``matrix``
        matrix: L2-normalized signature rows (CSR, descriptors x terms)
        idf: Inverse document frequency per term
        df: Training document frequency per term
        n_train_docs: Number of training documents
    """

    terms: Tuple[str, ...]
    descriptors: Tuple[str, ...]
    matrix: sparse.csr_matrix
    idf: np.ndarray
    df: np.ndarray
    n_train_docs: int
    config: SignatureConfig = field(default_factory=SignatureConfig)
    term_index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "term_index", {t: i for i, t in enumerate(self.terms)})

    @property
    def doc_frequency(self) -> Dict[str, int]:
        return {t: int(n) for t, n in zip(self.terms, self.df)}

    @property
    def signatures(self) -> Dict[str, TermProfile]:
        out = {}
        for row, code in enumerate(self.descriptors):
            start, end = self.matrix.indptr[row], self.matrix.indptr[row + 1]
            out[code] = TermProfile({
                self.terms[j]: float(w)
                for j, w in zip(self.matrix.indices[start:end], self.matrix.data[start:end])
            })
        return out

    def query_vector(self, text: str) -> np.ndarray:
        """L2-normalized tf-idf vector of a document over the model terms."""
        counts = np.zeros(len(self.terms), dtype=np.float64)
        total = 0
        for term in normalize_text(text, self.config):
            total += 1
            j = self.term_index.get(term)
            if j is not None:
                counts[j] += 1.0
        if total == 0:
            return counts
        vec = (counts / total) * self.idf
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec

    def score_vector(self, text: str) -> np.ndarray:
        """Cosine similarity of the document to every signature, in ``descriptors`` order."""
        if not self.descriptors:
            raise EmptyCorpusError("signature model has no descriptors")
        scores = self.matrix @ self.query_vector(text)
        return np.clip(np.asarray(scores, dtype=np.float64).ravel(), 0.0, 1.0)

    def save(self, path: Union[str, Path]) -> None:
        """Write the model as JSON (``.json``) or as a compressed ``.npz`` archive."""
        path = Path(path)
        if path.suffix == ".json":
            data = {
                "config": self.config.to_dict(),
                "n_train_docs": self.n_train_docs,
                "terms": list(self.terms),
                "df": [int(x) for x in self.df],
                "idf": [float(x) for x in self.idf],
                "descriptors": list(self.descriptors),
                "signatures": {code: p.weights for code, p in self.signatures.items()},
            }
            path.write_text(json.dumps(data, ensure_ascii=False), encoding="utf-8")
            return
        with open(path, "wb") as f:
            np.savez_compressed(
                f,
                terms=np.array(self.terms, dtype=str),
                descriptors=np.array(self.descriptors, dtype=str),
                data=self.matrix.data,
                indices=self.matrix.indices,
                indptr=self.matrix.indptr,
                shape=np.array(self.matrix.shape, dtype=np.int64),
                idf=self.idf,
                df=self.df,
                n_train_docs=np.array(self.n_train_docs, dtype=np.int64),
                config=np.array(json.dumps(self.config.to_dict())),
            )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SignatureModel":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Signature model not found: {path}")
        if path.suffix == ".json":
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise ParseError(e.msg, str(path), e.lineno) from e
            terms = tuple(data["terms"])
            index = {t: i for i, t in enumerate(terms)}
            descriptors = tuple(data["descriptors"])
            rows, cols, vals = [], [], []
            for row, code in enumerate(descriptors):
                for term, weight in data["signatures"].get(code, {}).items():
                    rows.append(row)
                    cols.append(index[term])
                    vals.append(weight)
            matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(len(descriptors), len(terms)))
            return cls(
                terms=terms,
                descriptors=descriptors,
                matrix=matrix,
                idf=np.asarray(data["idf"], dtype=np.float64),
                df=np.asarray(data["df"], dtype=np.int64),
                n_train_docs=int(data["n_train_docs"]),
                config=SignatureConfig.from_dict(data.get("config", {})),
            )
        with np.load(path, allow_pickle=False) as npz:
            matrix = sparse.csr_matrix(
                (npz["data"], npz["indices"], npz["indptr"]), shape=tuple(npz["shape"])
            )
            return cls(
                terms=tuple(str(t) for t in npz["terms"]),
                descriptors=tuple(str(d) for d in npz["descriptors"]),
                matrix=matrix,
                idf=npz["idf"],
                df=npz["df"],
                n_train_docs=int(npz["n_train_docs"]),
                config=SignatureConfig.from_dict(json.loads(str(npz["config"]))),
            )


def build_signatures(train: Corpus, config: Optional[SignatureConfig] = None) -> SignatureModel:
    """
    Build one topic signature per descriptor of the training corpus.

    Args:
        train: Labeled training documents
        config: Normalization and weighting settings

    Returns:
        SignatureModel
    """
    config = config or SignatureConfig()
    if not train.documents:
        raise EmptyCorpusError("cannot build signatures from an empty corpus")
    for doc in train.documents:
        if not doc.labels:
            raise InvariantError(f"training document {doc.doc_id!r} has no labels")

    n_docs = len(train)
    term_lists = [normalize_text(doc.text, config) for doc in train.documents]
    descriptors = tuple(train.label_codes())

    if any(term_lists):
        vectorizer = CountVectorizer(analyzer=_identity)
        counts = vectorizer.fit_transform(term_lists).tocsc()
        terms = np.asarray(vectorizer.get_feature_names_out(), dtype=object)
    else:
        counts = sparse.csc_matrix((n_docs, 0), dtype=np.int64)
        terms = np.asarray([], dtype=object)

    df = np.asarray((counts > 0).sum(axis=0)).ravel()
    keep = np.flatnonzero(df >= config.min_df)
    counts = counts[:, keep].tocsr()
    terms = tuple(str(t) for t in terms[keep])
    df = df[keep].astype(np.int64)

    code_index = {code: i for i, code in enumerate(descriptors)}
    rows, cols = [], []
    for row, doc in enumerate(train.documents):
        for code in doc.labels:
            rows.append(row)
            cols.append(code_index[code])
    membership = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n_docs, len(descriptors))
    )

    # term counts of each descriptor's concatenated documents
    per_descriptor = (membership.T @ counts).astype(np.float64).tocsr()
    totals = np.asarray(per_descriptor.sum(axis=1)).ravel()
    inverse = np.divide(1.0, totals, out=np.zeros_like(totals), where=totals > 0)
    relative = sparse.diags(inverse) @ per_descriptor

    idf = compute_idf(df, n_docs, config.smooth_idf)
    weighted = relative @ sparse.diags(idf) if len(terms) else relative
    matrix = normalize(sparse.csr_matrix(weighted), norm="l2", axis=1)
    matrix.eliminate_zeros()

    logger.info(
        "Built %d topic signatures over %d terms from %d documents",
        len(descriptors), len(terms), n_docs,
    )
    return SignatureModel(
        terms=terms,
        descriptors=descriptors,
        matrix=sparse.csr_matrix(matrix),
        idf=idf,
        df=df,
        n_train_docs=n_docs,
        config=config,
    )


def rank_descriptors(m: SignatureModel, text: str, k: int = 6) -> List[Tuple[str, float]]:
    """
    Top-k descriptors by cosine similarity, ties broken by ascending descriptor code.

    Args:
        m: Signature model
        text: Document text
        k: Number of descriptors to return (capped at the number of signatures)

    Returns:
        List of (descriptor, score) pairs, best first
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    return rank_labels(m.descriptors, m.score_vector(text), k)


def rank_many(m: SignatureModel, texts: Sequence[str], k: int = 6) -> List[List[Tuple[str, float]]]:
    return [rank_descriptors(m, text, k) for text in texts]
