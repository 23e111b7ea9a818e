"""
Labeled document collections and their descriptor statistics.
"""

import csv
import io
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DuplicateDocumentError, EmptyCorpusError, ParseError, UnsupportedLanguageError
from .thesaurus import DESCRIPTOR_PATTERN, Level, Thesaurus, map_ids

logger = logging.getLogger(__name__)

SUPPORTED_LANGUAGES: Tuple[str, ...] = (
    "bg", "cs", "da", "de", "el", "en", "es", "et", "fi", "fr", "hu",
    "it", "lt", "lv", "mt", "nl", "pl", "pt", "ro", "sk", "sl", "sv",
)

DEFAULT_GROUP_SIZES = {Level.ID: 50, Level.MT: 5, Level.DO: 1}


def check_language(language: str) -> str:
    if language not in SUPPORTED_LANGUAGES:
        raise UnsupportedLanguageError(language, SUPPORTED_LANGUAGES)
    return language


@dataclass(frozen=True)
class Document:
    """A document and its gold descriptor set."""
    doc_id: str
    language: str
    text: str
    labels: FrozenSet[str] = field(default_factory=frozenset)

    def to_dict(self) -> Dict[str, object]:
        return {
            "doc_id": self.doc_id,
            "language": self.language,
            "text": self.text,
            "labels": sorted(self.labels),
        }


@dataclass(frozen=True)
class Corpus:
    """Documents of one language, in file order."""
    language: str
    documents: Tuple[Document, ...]

    def __post_init__(self):
        seen = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise DuplicateDocumentError(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def doc_ids(self) -> List[str]:
        return [doc.doc_id for doc in self.documents]

    def label_codes(self) -> List[str]:
        """Every descriptor used by at least one document, ascending."""
        return sorted({code for doc in self.documents for code in doc.labels})

    def subset(self, doc_ids: Iterable[str]) -> "Corpus":
        """Documents whose id is in ``doc_ids``, keeping corpus order."""
        wanted = set(doc_ids)
        return Corpus(self.language, tuple(d for d in self.documents if d.doc_id in wanted))


@dataclass(frozen=True)
class DescriptorStats:
    level: Level
    mean: float
    min: int
    max: int


@dataclass(frozen=True)
class FrequencyHistogram:
    level: Level
    group_size: int
    group_counts: Tuple[int, ...]
    # descriptor codes in ranking order, kept for inspection
    ranking: Tuple[str, ...] = ()


@dataclass(frozen=True)
class MultilingualHistogram:
    level: Level
    group_size: int
    languages: Tuple[str, ...]
    counts: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def load_corpus(
    path: Union[str, Path],
    language: str,
    require_labels: bool = True,
) -> Corpus:
    """
    Load a JSONL corpus, one ``{"doc_id", "language", "text", "labels"}`` object per line.

    Args:
        path: JSONL file
        language: Language of the corpus; must be one of the 22 supported codes
        require_labels: Reject documents without labels (training data)

    Returns:
        Corpus
    """
    check_language(language)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Corpus file not found: {path}")

    documents: List[Document] = []
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(e.msg, str(path), line_no) from e
            doc = _parse_document(obj, language, require_labels, str(path), line_no)
            if doc.doc_id in seen:
                raise DuplicateDocumentError(f"{path}:{line_no}: duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)
            documents.append(doc)

    logger.info("Loaded %d documents (%s) from %s", len(documents), language, path)
    return Corpus(language, tuple(documents))


def _parse_document(obj, language: str, require_labels: bool, path: str, line_no: int) -> Document:
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", path, line_no)
    doc_id = obj.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise ParseError("missing or empty doc_id", path, line_no)
    doc_language = obj.get("language", language)
    if doc_language != language:
        check_language(doc_language)
        raise ParseError(f"document language {doc_language!r} differs from corpus {language!r}", path, line_no)
    text = obj.get("text", "")
    if not isinstance(text, str):
        raise ParseError("text must be a string", path, line_no)
    labels = obj.get("labels", [])
    if not isinstance(labels, list):
        raise ParseError("labels must be an array", path, line_no)
    for code in labels:
        if not isinstance(code, str) or not DESCRIPTOR_PATTERN.match(code):
            raise ParseError(f"invalid descriptor code {code!r}", path, line_no)
    if require_labels and not labels:
        raise ParseError(f"document {doc_id!r} has no labels", path, line_no)
    return Document(doc_id, language, text, frozenset(labels))


def save_corpus(c: Corpus, path: Union[str, Path]) -> None:
    """Write a corpus as JSONL."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for doc in c.documents:
            f.write(json.dumps(doc.to_dict(), ensure_ascii=False) + "\n")


def _level_sets(c: Corpus, t: Thesaurus, level: Level) -> List[set]:
    if not c.documents:
        raise EmptyCorpusError("corpus has no documents")
    if level is Level.ID:
        return [set(doc.labels) for doc in c.documents]
    return [map_ids(t, doc.labels, level) for doc in c.documents]


def descriptor_stats(c: Corpus, t: Thesaurus, level: Union[str, Level] = Level.ID) -> DescriptorStats:
    """Mean, minimum and maximum number of labels per document at ``level``."""
    level = Level.parse(level)
    sizes = [len(s) for s in _level_sets(c, t, level)]
    return DescriptorStats(level=level, mean=sum(sizes) / len(sizes), min=min(sizes), max=max(sizes))


def descriptor_frequencies(c: Corpus, t: Thesaurus, level: Union[str, Level] = Level.ID) -> Counter:
    """Number of documents containing each label at ``level``."""
    level = Level.parse(level)
    counts: Counter = Counter()
    for labels in _level_sets(c, t, level):
        counts.update(labels)
    return counts


def frequency_histogram(
    c: Corpus,
    t: Thesaurus,
    level: Union[str, Level] = Level.ID,
    group_size: Optional[int] = None,
) -> FrequencyHistogram:
    """
    Document counts of descriptor groups.

    Descriptors are sorted by document frequency (descending, ties by ascending code) and cut
    into consecutive groups of ``group_size``; each group reports the sum of its descriptors'
    document frequencies.
    """
    level = Level.parse(level)
    size = group_size or DEFAULT_GROUP_SIZES[level]
    if size < 1:
        raise ValueError("group_size must be positive")
    counts = descriptor_frequencies(c, t, level)
    ranking = sorted(counts, key=lambda code: (-counts[code], code))
    groups = tuple(
        sum(counts[code] for code in ranking[start:start + size])
        for start in range(0, len(ranking), size)
    )
    return FrequencyHistogram(level=level, group_size=size, group_counts=groups, ranking=tuple(ranking))


def multilingual_histogram(
    corpora: Sequence[Corpus],
    t: Thesaurus,
    level: Union[str, Level] = Level.ID,
    group_size: Optional[int] = None,
) -> MultilingualHistogram:
    """Group counts of several language corpora with their mean and spread across languages."""
    if not corpora:
        raise EmptyCorpusError("no corpora given")
    level = Level.parse(level)
    histograms = [frequency_histogram(c, t, level, group_size) for c in corpora]
    width = max(len(h.group_counts) for h in histograms)
    counts = np.zeros((len(histograms), width), dtype=np.int64)
    for row, h in enumerate(histograms):
        counts[row, : len(h.group_counts)] = h.group_counts
    return MultilingualHistogram(
        level=level,
        group_size=histograms[0].group_size,
        languages=tuple(c.language for c in corpora),
        counts=counts,
        mean=counts.mean(axis=0),
        std=counts.std(axis=0),
    )


def stats_to_json(stats: Iterable[DescriptorStats]) -> str:
    rows = []
    for s in stats:
        row = asdict(s)
        row["level"] = s.level.value
        rows.append(row)
    return json.dumps(rows, indent=2)


def histogram_to_csv(h: FrequencyHistogram) -> str:
    """``group_index,count`` rows for plotting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group_index", "count"])
    for index, count in enumerate(h.group_counts):
        writer.writerow([index, count])
    return buf.getvalue()
