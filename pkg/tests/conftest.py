"""
Shared fixtures: a small thesaurus, synthetic corpora and a registered toy model.
"""

import numpy as np
import pytest

from eurovoc_indexer.corpus import Corpus, Document
from eurovoc_indexer.encoders import MeanEmbeddingEncoder
from eurovoc_indexer.head import init_head, save_head
from eurovoc_indexer.registry import ModelRegistry
from eurovoc_indexer.thesaurus import build_thesaurus, save_thesaurus
from eurovoc_indexer.tokenization import SubwordVocabulary, save_vocabulary

# 12 descriptors, 4 microthesauri, 2 domains
HIERARCHY_ROWS = [
    ("1001", "0406", "04"), ("1002", "0406", "04"), ("1003", "0406", "04"),
    ("1004", "0411", "04"), ("1005", "0411", "04"), ("1006", "0411", "04"),
    ("1007", "1206", "12"), ("1008", "1206", "12"), ("1009", "1206", "12"),
    ("1010", "1211", "12"), ("1011", "1211", "12"), ("1012", "1211", "12"),
    # secondary microthesaurus of 1001
    ("1001", "1211", "12"),
]

TOPIC_WORDS = {
    code: [f"w{code}a", f"w{code}b", f"w{code}c"] for code, _, _ in HIERARCHY_ROWS
}
FILLER = ["the", "of", "and", "council", "regulation"]


@pytest.fixture
def thesaurus():
    labels = {code: {"en": f"descriptor {code}"} for code, _, _ in HIERARCHY_ROWS}
    return build_thesaurus(HIERARCHY_ROWS, labels)


def separable_dataset(n_docs=1000, n_labels=30, dim=32, seed=0):
    """Features 3 * Q (2y - 1) + noise with orthonormal Q, so every label is linearly separable."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(dim, n_labels)))
    y = (rng.random((n_docs, n_labels)) < 0.15).astype(np.float64)
    x = 3.0 * (2 * y - 1) @ q.T + rng.normal(scale=0.3, size=(n_docs, dim))
    return x, y


def separable_codes(n_labels: int = 30):
    return [str(1000 + j) for j in range(n_labels)]


def separable_thesaurus(n_labels: int = 30):
    """Five descriptors per microthesaurus, the first half in domain 41, the rest in 42."""
    rows = []
    for j, code in enumerate(separable_codes(n_labels)):
        do = "41" if j < n_labels // 2 else "42"
        rows.append((code, f"{do}{j // 5:02d}", do))
    return build_thesaurus(rows)


def separable_corpus(seed: int = 0) -> Corpus:
    """The label matrix of ``separable_dataset`` as text: each label contributes its topic words."""
    _, y = separable_dataset(seed=seed)
    codes = separable_codes(y.shape[1])
    rng = np.random.default_rng(seed + 1)
    docs = []
    for i, row in enumerate(y):
        labels = [codes[j] for j in np.flatnonzero(row)]
        words = list(FILLER)
        for code in labels:
            words.extend([f"w{code}a", f"w{code}b", f"w{code}c"])
        rng.shuffle(words)
        docs.append(Document(f"sep{i:04d}", "en", " ".join(words), frozenset(labels)))
    return Corpus("en", tuple(docs))


def make_topic_corpus(n_docs: int = 60, seed: int = 0, language: str = "en") -> Corpus:
    """Documents whose words reveal their descriptors."""
    rng = np.random.default_rng(seed)
    codes = sorted(TOPIC_WORDS)
    docs = []
    for i in range(n_docs):
        n_labels = int(rng.integers(1, 4))
        labels = sorted(rng.choice(codes, size=n_labels, replace=False).tolist())
        words = list(FILLER)
        for code in labels:
            words.extend(TOPIC_WORDS[code] * 2)
        rng.shuffle(words)
        docs.append(Document(f"doc{i:03d}", language, " ".join(words), frozenset(labels)))
    return Corpus(language, tuple(docs))


@pytest.fixture
def topic_corpus():
    return make_topic_corpus()


def toy_vocabulary() -> SubwordVocabulary:
    words = sorted({w for ws in TOPIC_WORDS.values() for w in ws}) + FILLER + ["##s", "##ing"]
    return SubwordVocabulary.from_tokens(words)


@pytest.fixture
def toy_vocab():
    return toy_vocabulary()


@pytest.fixture
def registry(tmp_path, thesaurus, toy_vocab):
    """Registry with an English toy model (E=8, all 12 descriptors)."""
    src = tmp_path / "src"
    src.mkdir()
    head = init_head(8, sorted(TOPIC_WORDS), seed=3)
    encoder = MeanEmbeddingEncoder(toy_vocab, dim=8, seed=4)
    save_head(head, src / "head.evhd")
    encoder.save(src / "encoder.npy")
    save_vocabulary(toy_vocab, src / "vocab.txt")
    save_thesaurus(thesaurus, src / "thesaurus.tsv")

    reg = ModelRegistry(tmp_path / "models")
    reg.register(
        "en",
        src / "head.evhd",
        src / "encoder.npy",
        src / "vocab.txt",
        src / "thesaurus.tsv",
        family="legal",
    )
    return reg
