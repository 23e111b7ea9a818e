"""
Multi-label iterative stratification.

Documents are assigned label by label, rarest label first, to the subset that still needs the
most examples of that label. Randomness comes from numpy's PCG64 generator seeded through
``numpy.random.SeedSequence``; it shuffles the document processing order and breaks the
remaining ties, so a plan is a deterministic function of (corpus order, ratios, seed).
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from .corpus import Corpus
from .errors import DuplicateSeedError, EmptyCorpusError, InvalidRatioError, ParseError

logger = logging.getLogger(__name__)

_TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SplitRatios:
    fractions: Tuple[float, ...]

    def __post_init__(self):
        if not self.fractions:
            raise InvalidRatioError("at least one split fraction is required")
        if any(not f > 0 for f in self.fractions):
            raise InvalidRatioError(f"split fractions must be positive: {self.fractions}")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise InvalidRatioError(f"split fractions must sum to 1: {self.fractions}")

    @classmethod
    def parse(cls, text: str) -> "SplitRatios":
        """Parse ``"0.8,0.1,0.1"``."""
        try:
            return cls(tuple(float(part) for part in text.split(",")))
        except ValueError:
            raise InvalidRatioError(f"cannot parse ratios {text!r}") from None

    def __len__(self) -> int:
        return len(self.fractions)


TRAIN_VAL_TEST = SplitRatios((0.8, 0.1, 0.1))
TRAIN_TEST = SplitRatios((0.9, 0.1))


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint doc_id subsets, one per ratio fraction, each in corpus order."""
    seed: int
    subsets: Tuple[Tuple[str, ...], ...]

    def subset_corpus(self, c: Corpus, index: int) -> Corpus:
        return c.subset(self.subsets[index])

    def to_dict(self) -> dict:
        return {"seed": self.seed, "subsets": [list(s) for s in self.subsets]}

    @classmethod
    def from_dict(cls, data: dict) -> "SplitPlan":
        return cls(seed=int(data["seed"]), subsets=tuple(tuple(s) for s in data["subsets"]))


def _label_matrix(c: Corpus) -> Tuple[np.ndarray, List[str]]:
    codes = c.label_codes()
    index = {code: i for i, code in enumerate(codes)}
    y = np.zeros((len(c), len(codes)), dtype=bool)
    for row, doc in enumerate(c.documents):
        for code in doc.labels:
            y[row, index[code]] = True
    return y, codes


def _best_subset(label_demand: np.ndarray, capacity: np.ndarray, rng: np.random.Generator) -> int:
    candidates = np.flatnonzero(label_demand >= label_demand.max() - _TIE_TOLERANCE)
    if len(candidates) > 1:
        caps = capacity[candidates]
        candidates = candidates[caps >= caps.max() - _TIE_TOLERANCE]
    if len(candidates) > 1:
        return int(rng.choice(candidates))
    return int(candidates[0])


def stratified_split(c: Corpus, r: SplitRatios, seed: int) -> SplitPlan:
    """
    Split a corpus with iterative stratification.

    Args:
        c: Corpus to split; every document should carry at least one label
        r: Subset fractions
        seed: Seed of the tie-breaking generator

    Returns:
        SplitPlan with one subset per fraction
    """
    if not c.documents:
        raise EmptyCorpusError("cannot split an empty corpus")
    fractions = np.asarray(r.fractions, dtype=np.float64)
    rng = np.random.default_rng(seed)

    y, _ = _label_matrix(c)
    n_docs = len(c)
    order = rng.permutation(n_docs)

    capacity = fractions * n_docs
    # per subset, per label remaining demand
    demand = np.outer(fractions, y.sum(axis=0)).astype(np.float64)
    assignment = np.full(n_docs, -1, dtype=np.int64)

    while True:
        unassigned = assignment < 0
        remaining = y[unassigned].sum(axis=0)
        live = np.flatnonzero(remaining > 0)
        if len(live) == 0:
            break
        # fewest remaining documents first, ties by ascending label code
        label = int(live[np.argmin(remaining[live])])
        for doc in order:
            if assignment[doc] >= 0 or not y[doc, label]:
                continue
            subset = _best_subset(demand[:, label], capacity, rng)
            assignment[doc] = subset
            demand[subset, y[doc]] -= 1
            capacity[subset] -= 1

    # documents without labels only follow overall capacity
    for doc in order:
        if assignment[doc] < 0:
            subset = _best_subset(capacity, capacity, rng)
            assignment[doc] = subset
            capacity[subset] -= 1

    doc_ids = c.doc_ids
    subsets = tuple(
        tuple(doc_ids[i] for i in range(n_docs) if assignment[i] == j) for j in range(len(fractions))
    )
    logger.debug("Split seed=%d sizes=%s", seed, [len(s) for s in subsets])
    return SplitPlan(seed=seed, subsets=subsets)


def make_multi_splits(c: Corpus, r: SplitRatios, seeds: Sequence[int]) -> List[SplitPlan]:
    """One independent stratified split per seed."""
    seeds = list(seeds)
    if not seeds:
        raise DuplicateSeedError("at least one seed is required")
    if len(set(seeds)) != len(seeds):
        raise DuplicateSeedError(f"seeds must be distinct: {seeds}")
    plans = [stratified_split(c, r, seed) for seed in seeds]
    logger.info("Built %d splits of %d documents with ratios %s", len(plans), len(c), r.fractions)
    return plans


def label_distribution_deviation(c: Corpus, plan: SplitPlan, r: SplitRatios) -> float:
    """Sum over labels and subsets of |label share in subset - ratio|."""
    y, _ = _label_matrix(c)
    position = {doc_id: i for i, doc_id in enumerate(c.doc_ids)}
    totals = y.sum(axis=0)
    mask = totals > 0
    deviation = 0.0
    for fraction, subset in zip(r.fractions, plan.subsets):
        rows = [position[doc_id] for doc_id in subset]
        share = y[rows].sum(axis=0)[mask] / totals[mask]
        deviation += float(np.abs(share - fraction).sum())
    return deviation


def save_split_plan(plan: SplitPlan, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(plan.to_dict()), encoding="utf-8")


def save_split_plans(plans: Sequence[SplitPlan], path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps([p.to_dict() for p in plans]), encoding="utf-8")


def load_split_plans(path: Union[str, Path]) -> List[SplitPlan]:
    """Load one plan or a list of plans."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, str(path), e.lineno) from e
    if isinstance(data, dict):
        data = [data]
    return [SplitPlan.from_dict(item) for item in data]


def load_split_plan(path: Union[str, Path]) -> SplitPlan:
    plans = load_split_plans(path)
    if len(plans) != 1:
        raise ParseError(f"expected a single split plan, found {len(plans)}", str(path))
    return plans[0]
