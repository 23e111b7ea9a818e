"""
Greedy longest-match subword tokenization and vocabulary statistics.
"""

import csv
import io
import logging
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple, Union

from .corpus import Corpus
from .errors import EmptyCorpusError, InvariantError

logger = logging.getLogger(__name__)

UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
CONTINUATION_PREFIX = "##"
MAX_SEQUENCE = 512


@dataclass(frozen=True)
class SubwordVocabulary:
    """
    Fixed subword vocabulary.

    ``tokens`` keeps the file order, which defines token ids.
    """

    tokens: Tuple[str, ...]
    continuation_prefix: str = CONTINUATION_PREFIX
    unk_token: str = UNK_TOKEN
    cls_token: str = CLS_TOKEN
    sep_token: str = SEP_TOKEN
    max_sequence: int = MAX_SEQUENCE
    lowercase: bool = False
    entries: FrozenSet[str] = field(init=False, repr=False, compare=False)
    ids: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", frozenset(self.tokens))
        ids: Dict[str, int] = {}
        for index, token in enumerate(self.tokens):
            ids.setdefault(token, index)
        object.__setattr__(self, "ids", ids)
        for special in (self.unk_token, self.cls_token, self.sep_token):
            if special not in self.entries:
                raise InvariantError(f"special token {special} missing from vocabulary")
        if self.max_sequence < 2:
            raise InvariantError("max_sequence must be at least 2")

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], **kwargs) -> "SubwordVocabulary":
        """Build a vocabulary, adding any missing special tokens in front."""
        tokens = list(tokens)
        specials = [
            kwargs.get("unk_token", UNK_TOKEN),
            kwargs.get("cls_token", CLS_TOKEN),
            kwargs.get("sep_token", SEP_TOKEN),
        ]
        missing = [s for s in specials if s not in tokens]
        return cls(tokens=tuple(missing + tokens), **kwargs)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    @property
    def special_tokens(self) -> FrozenSet[str]:
        return frozenset((self.unk_token, self.cls_token, self.sep_token))


@dataclass(frozen=True)
class VocabStats:
    tokens_per_word: float
    unk_per_word: float
    n_words: int = 0
    n_pieces: int = 0
    n_unk: int = 0

    def to_dict(self) -> Dict[str, float]:
        return {"tokens_per_word": self.tokens_per_word, "unk_per_word": self.unk_per_word}


def load_vocabulary(path: Union[str, Path], lowercase: bool = False, max_sequence: int = MAX_SEQUENCE) -> SubwordVocabulary:
    """Load a vocabulary file with one token per line."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Vocabulary file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        tokens = [line.rstrip("\r\n") for line in f]
    tokens = [t for t in tokens if t]
    vocab = SubwordVocabulary(tokens=tuple(tokens), lowercase=lowercase, max_sequence=max_sequence)
    logger.info("Loaded vocabulary %s (%d tokens)", path, len(vocab))
    return vocab


def save_vocabulary(v: SubwordVocabulary, path: Union[str, Path]) -> None:
    Path(path).write_text("".join(t + "\n" for t in v.tokens), encoding="utf-8")


def is_punctuation(char: str) -> bool:
    """Unicode punctuation, plus the ASCII symbols BERT treats as punctuation."""
    cp = ord(char)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(char).startswith("P")


def pre_split(text: str) -> List[str]:
    """Split on Unicode whitespace; every punctuation character becomes a word of its own."""
    words: List[str] = []
    current: List[str] = []
    for char in text:
        if char.isspace():
            if current:
                words.append("".join(current))
                current = []
        elif is_punctuation(char):
            if current:
                words.append("".join(current))
                current = []
            words.append(char)
        else:
            current.append(char)
    if current:
        words.append("".join(current))
    return words


def tokenize_word(v: SubwordVocabulary, word: str) -> List[str]:
    """
    Greedy longest-match-first split of a single word.

    For example, with ``{un, ##aff, ##able}`` the word ``unaffable`` becomes
    ``[un, ##aff, ##able]``. When some position has no matching piece the whole word maps to
    the unknown token.
    """
    if word in v.entries:
        return [word]
    pieces: List[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = v.continuation_prefix + piece
            if piece in v.entries:
                match = piece
                break
            end -= 1
        if match is None:
            return [v.unk_token]
        pieces.append(match)
        start = end
    return pieces


def _words(v: SubwordVocabulary, text: str) -> List[str]:
    return pre_split(text.lower() if v.lowercase else text)


def encode_document(v: SubwordVocabulary, text: Union[str, Sequence[str]]) -> List[str]:
    """
    ``[CLS] + pieces + [SEP]`` truncated to ``v.max_sequence`` tokens.

    ``text`` may also be a list of already split tokens, e.g. a previous output of this
    function; a leading ``[CLS]`` and trailing ``[SEP]`` are then dropped before re-encoding.
    """
    if isinstance(text, str):
        words = _words(v, text)
    else:
        words = list(text)
        if words and words[0] == v.cls_token:
            words = words[1:]
        if words and words[-1] == v.sep_token:
            words = words[:-1]
    budget = v.max_sequence - 2
    pieces: List[str] = []
    for word in words:
        if len(pieces) >= budget:
            break
        pieces.extend(tokenize_word(v, word))
    return [v.cls_token] + pieces[:budget] + [v.sep_token]


def tokens_to_ids(v: SubwordVocabulary, tokens: Sequence[str]) -> List[int]:
    unk = v.ids[v.unk_token]
    return [v.ids.get(t, unk) for t in tokens]


def vocabulary_stats(v: SubwordVocabulary, c: Corpus, include_punctuation: bool = False) -> VocabStats:
    """
    Average number of pieces and of unknown pieces per word over a corpus.

    Pure punctuation words are left out of every count unless ``include_punctuation`` is set.
    """
    if not c.documents:
        raise EmptyCorpusError("corpus has no documents")
    n_words = n_pieces = n_unk = 0
    for doc in c.documents:
        for word in _words(v, doc.text):
            if not include_punctuation and all(is_punctuation(ch) for ch in word):
                continue
            pieces = tokenize_word(v, word)
            n_words += 1
            n_pieces += len(pieces)
            n_unk += sum(1 for p in pieces if p == v.unk_token)
    if n_words == 0:
        raise EmptyCorpusError("corpus has no words")
    return VocabStats(
        tokens_per_word=n_pieces / n_words,
        unk_per_word=n_unk / n_words,
        n_words=n_words,
        n_pieces=n_pieces,
        n_unk=n_unk,
    )


def vocab_stats_table(rows: Iterable[Tuple[str, VocabStats]]) -> str:
    """CSV with one ``language,tokens_per_word,unk_per_word`` row per language."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["language", "tokens_per_word", "unk_per_word"])
    for language, stats in rows:
        writer.writerow([language, f"{stats.tokens_per_word:.4f}", f"{stats.unk_per_word:.6f}"])
    return buf.getvalue()
