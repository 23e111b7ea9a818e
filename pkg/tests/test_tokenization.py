"""
Tests for the subword tokenizer and vocabulary statistics.
"""

import os

import numpy as np
import pytest

from eurovoc_indexer.corpus import Corpus, Document, load_corpus
from eurovoc_indexer.errors import EmptyCorpusError, InvariantError
from eurovoc_indexer.tokenization import (
    SubwordVocabulary,
    encode_document,
    load_vocabulary,
    pre_split,
    save_vocabulary,
    tokenize_word,
    tokens_to_ids,
    vocab_stats_table,
    vocabulary_stats,
)

BASE_TOKENS = ["the", "cat", "sat", "on", "mat", "un", "##aff", "##able", "aff", "play", "##ing"]


@pytest.fixture
def vocab():
    return SubwordVocabulary.from_tokens(BASE_TOKENS)


def corpus_of(*texts):
    return Corpus("en", tuple(Document(f"d{i}", "en", t, frozenset({"1"})) for i, t in enumerate(texts)))


def greedy_oracle(entries, word, prefix="##", unk="[UNK]"):
    """Longest match table per position, then a walk over it."""
    longest = []
    for start in range(len(word)):
        lengths = [
            end - start for end in range(start + 1, len(word) + 1)
            if (word[start:end] if start == 0 else prefix + word[start:end]) in entries
        ]
        longest.append(max(lengths) if lengths else 0)
    pieces, start = [], 0
    while start < len(word):
        if longest[start] == 0:
            return [unk]
        end = start + longest[start]
        pieces.append(word[start:end] if start == 0 else prefix + word[start:end])
        start = end
    return pieces


def test_vocabulary_invariants():
    with pytest.raises(InvariantError):
        SubwordVocabulary(tokens=("a", "[CLS]", "[SEP]"))
    with pytest.raises(InvariantError):
        SubwordVocabulary.from_tokens(["a"], max_sequence=1)


def test_tokenize_word_examples(vocab):
    assert tokenize_word(vocab, "unaffable") == ["un", "##aff", "##able"]
    assert tokenize_word(vocab, "mat") == ["mat"]
    assert tokenize_word(vocab, "xyz") == ["[UNK]"]
    # no piece matches after "play", so the whole word is one UNK
    assert tokenize_word(vocab, "playxing") == ["[UNK]"]


def test_greedy_matches_oracle_on_random_pairs():
    rng = np.random.default_rng(5)
    alphabet = list("abc")
    for _ in range(10_000):
        pieces = set()
        for _ in range(int(rng.integers(1, 10))):
            piece = "".join(rng.choice(alphabet, size=int(rng.integers(1, 4))))
            pieces.add(piece if rng.random() < 0.5 else "##" + piece)
        v = SubwordVocabulary.from_tokens(sorted(pieces))
        word = "".join(rng.choice(alphabet, size=int(rng.integers(1, 9))))
        assert tokenize_word(v, word) == greedy_oracle(v.entries, word)


def test_detokenization_reproduces_word():
    rng = np.random.default_rng(9)
    chars = list("abcd")
    v = SubwordVocabulary.from_tokens(chars + ["##" + c for c in chars] + ["ab", "##cd", "bca"])
    for _ in range(500):
        word = "".join(rng.choice(chars, size=int(rng.integers(1, 12))))
        pieces = tokenize_word(v, word)
        assert "[UNK]" not in pieces
        assert "".join(p[2:] if p.startswith("##") else p for p in pieces) == word


def test_pre_split_punctuation():
    assert pre_split("Council  Regulation (EC) No. 1/2005;") == [
        "Council", "Regulation", "(", "EC", ")", "No", ".", "1", "/", "2005", ";",
    ]
    assert pre_split("l'Union «européenne»") == ["l", "'", "Union", "«", "européenne", "»"]


def test_encode_empty_document(vocab):
    assert encode_document(vocab, "") == ["[CLS]", "[SEP]"]


def test_encode_truncates_to_max_sequence(vocab):
    tokens = encode_document(vocab, " ".join(["cat"] * 600))
    assert len(tokens) == 512
    assert tokens[0] == "[CLS]"
    assert tokens[-1] == "[SEP]"


def test_encode_matches_composition(vocab):
    text = "the cat, unaffable; playing xyz."
    expected = ["[CLS]"]
    for word in pre_split(text):
        expected.extend(tokenize_word(vocab, word))
    expected.append("[SEP]")
    assert encode_document(vocab, text) == expected


def test_encode_is_idempotent(vocab):
    short = SubwordVocabulary.from_tokens(BASE_TOKENS, max_sequence=8)
    for v in (vocab, short):
        once = encode_document(v, "the cat sat on the unaffable mat playing")
        assert encode_document(v, once) == once


def test_lowercase_flag():
    cased = SubwordVocabulary.from_tokens(["cat"])
    lower = SubwordVocabulary.from_tokens(["cat"], lowercase=True)
    assert encode_document(cased, "Cat") == ["[CLS]", "[UNK]", "[SEP]"]
    assert encode_document(lower, "Cat") == ["[CLS]", "cat", "[SEP]"]


def test_tokens_to_ids(vocab):
    ids = tokens_to_ids(vocab, ["[CLS]", "cat", "nope"])
    assert ids == [vocab.tokens.index("[CLS]"), vocab.tokens.index("cat"), vocab.tokens.index("[UNK]")]


def test_vocabulary_stats_counts(vocab):
    c = corpus_of("the cat sat on the mat", "unaffable playing play xyz.")
    stats = vocabulary_stats(vocab, c)
    assert stats.n_words == 10
    assert stats.n_pieces == 13
    assert stats.tokens_per_word == pytest.approx(1.3)
    assert stats.unk_per_word == pytest.approx(0.1)

    with_punct = vocabulary_stats(vocab, c, include_punctuation=True)
    assert with_punct.n_words == 11
    assert with_punct.n_unk == 2


def test_closure_vocabulary_has_no_unk():
    c = corpus_of("fisheries policy of the union", "aquaculture and fishing quotas")
    chars = sorted({ch for doc in c for ch in doc.text if not ch.isspace()})
    v = SubwordVocabulary.from_tokens(chars + ["##" + ch for ch in chars])
    stats = vocabulary_stats(v, c)
    assert stats.unk_per_word == 0.0
    assert stats.tokens_per_word >= 1.0


def test_whole_word_entries_never_increase_tokens_per_word(vocab):
    # no word of this corpus is a prefix of another
    c = corpus_of("unaffable playing xyz mat", "unaffable mat")
    before = vocabulary_stats(vocab, c).tokens_per_word
    extended = SubwordVocabulary.from_tokens(list(vocab.tokens) + ["unaffable", "playing"])
    assert vocabulary_stats(extended, c).tokens_per_word <= before


def test_empty_corpus_stats(vocab):
    with pytest.raises(EmptyCorpusError):
        vocabulary_stats(vocab, Corpus("en", ()))
    with pytest.raises(EmptyCorpusError):
        vocabulary_stats(vocab, corpus_of("...", ""))


def test_vocabulary_file(tmp_path, vocab):
    save_vocabulary(vocab, tmp_path / "vocab.txt")
    loaded = load_vocabulary(tmp_path / "vocab.txt")
    assert loaded.tokens == vocab.tokens
    table = vocab_stats_table([("en", vocabulary_stats(loaded, corpus_of("the cat")))])
    assert table.splitlines() == ["language,tokens_per_word,unk_per_word", "en,1.0000,0.000000"]


@pytest.mark.skipif(
    not (os.getenv("EUROVOC_ES_CORPUS") and os.getenv("EUROVOC_ES_VOCAB")),
    reason="EUROVOC_ES_CORPUS / EUROVOC_ES_VOCAB not set",
)
def test_spanish_tokens_per_word():
    c = load_corpus(os.environ["EUROVOC_ES_CORPUS"], "es", require_labels=False)
    v = load_vocabulary(os.environ["EUROVOC_ES_VOCAB"])
    assert vocabulary_stats(v, c).tokens_per_word == pytest.approx(1.25, abs=0.05)
