"""
EuroVoc hierarchy: descriptors (ID) grouped into microthesauri (MT) grouped into domains (DO).
"""

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

from .errors import InvariantError, ParseError, UnknownDescriptorError

logger = logging.getLogger(__name__)

DESCRIPTOR_PATTERN = re.compile(r"^[0-9]+$")
TSV_HEADER = ("id", "mt", "do", "label")


class Level(str, Enum):
    """Label levels of the hierarchy."""
    ID = "ID"
    MT = "MT"
    DO = "DO"

    @classmethod
    def parse(cls, value: Union[str, "Level"]) -> "Level":
        try:
            return cls(str(value.value if isinstance(value, Level) else value).upper())
        except ValueError:
            raise ValueError(f"unknown level {value!r}; expected ID, MT or DO") from None


@dataclass(frozen=True)
class HierarchyCounts:
    n_ids: int
    n_mts: int
    n_dos: int


@dataclass(frozen=True)
class Thesaurus:
    """
    Immutable EuroVoc hierarchy.

    Attributes:
        id_to_mt: Descriptor code -> ordered MT codes, the first one being the primary MT
        mt_to_do: MT code -> DO code
        labels: Descriptor code -> {language: display text}
    """

    id_to_mt: Mapping[str, Tuple[str, ...]]
    mt_to_do: Mapping[str, str]
    labels: Mapping[str, Mapping[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        _check_invariants(self)

    def __contains__(self, code: str) -> bool:
        return code in self.id_to_mt

    def __len__(self) -> int:
        return len(self.id_to_mt)

    @property
    def descriptor_codes(self) -> List[str]:
        """All descriptor codes in ascending order."""
        return sorted(self.id_to_mt)

    def primary_mt(self, code: str) -> str:
        try:
            return self.id_to_mt[code][0]
        except KeyError:
            raise UnknownDescriptorError(code) from None

    def domain_of(self, code: str) -> str:
        return self.mt_to_do[self.primary_mt(code)]

    def label(self, code: str, language: str = "en") -> Optional[str]:
        """Display text of a descriptor, or None when not available."""
        if code not in self.id_to_mt:
            raise UnknownDescriptorError(code)
        return self.labels.get(code, {}).get(language)


def _check_invariants(t: Thesaurus) -> None:
    for code, mts in t.id_to_mt.items():
        if not code or not DESCRIPTOR_PATTERN.match(code):
            raise InvariantError(f"invalid descriptor code {code!r}")
        if not mts:
            raise InvariantError(f"descriptor {code} has no microthesaurus")
        for mt in mts:
            if mt not in t.mt_to_do:
                raise InvariantError(f"microthesaurus {mt} (of descriptor {code}) has no domain")
    for mt, do in t.mt_to_do.items():
        if len(mt) != 4:
            raise InvariantError(f"microthesaurus code {mt!r} must have 4 characters")
        if len(do) != 2 or mt[:2] != do:
            raise InvariantError(f"domain {do!r} of microthesaurus {mt} is not its 2-character prefix")


def build_thesaurus(
    rows: Iterable[Tuple[str, str, str]],
    labels: Optional[Dict[str, Dict[str, str]]] = None,
) -> Thesaurus:
    """Build a thesaurus from (id, mt, do) rows; row order fixes the MT order of each ID."""
    id_to_mt: Dict[str, List[str]] = {}
    mt_to_do: Dict[str, str] = {}
    for code, mt, do in rows:
        mts = id_to_mt.setdefault(code, [])
        if mt not in mts:
            mts.append(mt)
        known = mt_to_do.setdefault(mt, do)
        if known != do:
            raise InvariantError(f"microthesaurus {mt} maps to both {known} and {do}")
    return Thesaurus(
        id_to_mt={k: tuple(v) for k, v in id_to_mt.items()},
        mt_to_do=mt_to_do,
        labels=labels or {},
    )


def load_thesaurus(path: Union[str, Path], label_language: str = "en") -> Thesaurus:
    """
    Load a hierarchy file.

    Two formats are accepted: a TSV with header ``id<TAB>mt<TAB>do<TAB>label`` and one row per
    (id, mt) pair, or a JSON object ``{"ids": {id: [mt, ...]}, "mts": {mt: do},
    "labels": {id: {lang: text}}}``.

    Args:
        path: Hierarchy file
        label_language: Language under which the TSV ``label`` column is stored

    Returns:
        Thesaurus
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Thesaurus file not found: {path}")
    if path.suffix == ".json":
        thesaurus = _load_json(path)
    else:
        thesaurus = _load_tsv(path, label_language)
    logger.info("Loaded thesaurus %s: %s", path, validate_counts(thesaurus))
    return thesaurus


def _load_tsv(path: Path, label_language: str) -> Thesaurus:
    rows = []
    labels: Dict[str, Dict[str, str]] = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header[:3]) != TSV_HEADER[:3]:
            raise ParseError("expected header id\\tmt\\tdo\\tlabel", str(path), 1)
        for line_no, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 3:
                raise ParseError(f"expected at least 3 columns, got {len(row)}", str(path), line_no)
            code, mt, do = (cell.strip() for cell in row[:3])
            if not code or not mt or not do:
                raise ParseError("empty id, mt or do column", str(path), line_no)
            rows.append((code, mt, do))
            if len(row) > 3 and row[3].strip():
                labels.setdefault(code, {})[label_language] = row[3].strip()
    return build_thesaurus(rows, labels)


def _load_json(path: Path) -> Thesaurus:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, str(path), e.lineno) from e
    if not isinstance(data, dict) or "ids" not in data or "mts" not in data:
        raise ParseError("expected an object with 'ids' and 'mts'", str(path))
    id_to_mt = {}
    for k, v in data["ids"].items():
        if not isinstance(v, list) or not all(isinstance(mt, str) for mt in v):
            raise ParseError(f"descriptor {k}: expected a list of microthesaurus codes, got {v!r}", str(path))
        id_to_mt[str(k)] = tuple(v)
    return Thesaurus(
        id_to_mt=id_to_mt,
        mt_to_do={str(k): str(v) for k, v in data["mts"].items()},
        labels={str(k): dict(v) for k, v in data.get("labels", {}).items()},
    )


def save_thesaurus(t: Thesaurus, path: Union[str, Path], label_language: str = "en") -> None:
    """Write the hierarchy as TSV, or JSON when the suffix is ``.json``."""
    path = Path(path)
    if path.suffix == ".json":
        data = {
            "ids": {code: list(mts) for code, mts in sorted(t.id_to_mt.items())},
            "mts": dict(sorted(t.mt_to_do.items())),
            "labels": {code: dict(v) for code, v in sorted(t.labels.items())},
        }
        path.write_text(json.dumps(data, ensure_ascii=False, indent=1), encoding="utf-8")
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\t".join(TSV_HEADER) + "\n")
        for code in t.descriptor_codes:
            text = t.labels.get(code, {}).get(label_language, "")
            for mt in t.id_to_mt[code]:
                f.write(f"{code}\t{mt}\t{t.mt_to_do[mt]}\t{text}\n")


def map_ids_to_mt(t: Thesaurus, ids: Iterable[str]) -> Set[str]:
    """Primary microthesaurus of every descriptor."""
    return {t.primary_mt(code) for code in ids}


def map_ids_to_do(t: Thesaurus, ids: Iterable[str]) -> Set[str]:
    """Domain of the primary microthesaurus of every descriptor."""
    return {t.mt_to_do[mt] for mt in map_ids_to_mt(t, ids)}


def map_ids(t: Thesaurus, ids: Iterable[str], level: Union[str, Level]) -> Set[str]:
    """Map descriptors to the requested level; ID returns the (validated) set itself."""
    level = Level.parse(level)
    if level is Level.MT:
        return map_ids_to_mt(t, ids)
    if level is Level.DO:
        return map_ids_to_do(t, ids)
    ids = set(ids)
    for code in ids:
        if code not in t:
            raise UnknownDescriptorError(code)
    return ids


def map_code(t: Thesaurus, code: str, level: Union[str, Level]) -> str:
    """Single-descriptor form of :func:`map_ids`."""
    level = Level.parse(level)
    if level is Level.MT:
        return t.primary_mt(code)
    if level is Level.DO:
        return t.domain_of(code)
    if code not in t:
        raise UnknownDescriptorError(code)
    return code


def validate_counts(t: Thesaurus) -> HierarchyCounts:
    """Number of distinct IDs, MTs and DOs."""
    mts = {mt for mts in t.id_to_mt.values() for mt in mts} | set(t.mt_to_do)
    dos = {t.mt_to_do[mt] for mt in mts}
    return HierarchyCounts(n_ids=len(t.id_to_mt), n_mts=len(mts), n_dos=len(dos))


AGGREGATIONS = ("max", "sum", "mean")


def aggregate_level_scores(
    t: Thesaurus,
    codes: Iterable[str],
    scores: Iterable[float],
    level: Union[str, Level],
    mode: str = "max",
) -> Dict[str, float]:
    """
    Fold descriptor scores into scores of their MT or DO.

    Args:
        t: Thesaurus
        codes: Descriptor codes
        scores: Score of each descriptor
        level: Target level; ID returns the scores unchanged
        mode: max (default), sum or mean over the contributing descriptors

    Returns:
        Mapping from level code to aggregated score
    """
    if mode not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {mode!r}; expected one of {AGGREGATIONS}")
    level = Level.parse(level)
    grouped: Dict[str, List[float]] = {}
    for code, score in zip(codes, scores):
        grouped.setdefault(map_code(t, code, level), []).append(float(score))
    if mode == "max":
        return {key: max(values) for key, values in grouped.items()}
    if mode == "sum":
        return {key: sum(values) for key, values in grouped.items()}
    return {key: sum(values) / len(values) for key, values in grouped.items()}
