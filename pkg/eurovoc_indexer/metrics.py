"""
Ranked multi-label metrics.

Scores are ranked descending with ties broken by ascending label code (or by position when
no codes are given), so every value below depends on the scores only through that ranking.
"""

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Union

import numpy as np

from .corpus import Corpus, Document
from .errors import DimensionMismatchError, EmptyCorpusError, UnknownDescriptorError
from .ranking import Ranker
from .stratify import SplitPlan
from .thesaurus import Level, Thesaurus, aggregate_level_scores, map_ids

logger = logging.getLogger(__name__)

DEFAULT_KS = {Level.ID: 6, Level.MT: 5, Level.DO: 4}
METRIC_NAMES = ("precision", "recall", "f1", "r_precision", "ndcg", "micro_f1")
AVERAGING_MODES = ("documents", "pr")


def _check(scores, labels, k: int):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.ndim != 1 or s.shape != y.shape:
        raise DimensionMismatchError(f"scores {s.shape} and labels {y.shape} differ")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if not 1 <= k <= len(s):
        raise ValueError(f"k must be between 1 and {len(s)}, got {k}")
    return s, y


def top_k_indices(scores: Sequence[float], k: int, codes: Optional[Sequence[str]] = None) -> List[int]:
    """Indices of the k best scores, ties by ascending code (or index)."""
    s = np.asarray(scores, dtype=np.float64)
    if codes is None:
        order = np.lexsort((np.arange(len(s)), -s))
        return [int(i) for i in order[:k]]
    return sorted(range(len(s)), key=lambda i: (-s[i], codes[i]))[:k]


def _hits(s: np.ndarray, y: np.ndarray, k: int, codes) -> float:
    return float(sum(y[i] for i in top_k_indices(s, k, codes)))


def precision_at_k(scores, labels, k: int, codes: Optional[Sequence[str]] = None) -> float:
    """
    Share of the top-k ranked labels that are true.

    Args:
        scores: Score of every label
        labels: Binary vector of the true labels, aligned with ``scores``
        k: Rank cut-off, 1 <= k <= L
        codes: Label codes used to break score ties

    Returns:
        hits / k
    """
    s, y = _check(scores, labels, k)
    return _hits(s, y, k, codes) / k


def recall_at_k(scores, labels, k: int, codes: Optional[Sequence[str]] = None) -> float:
    """hits / n; 0 for a document without true labels."""
    s, y = _check(scores, labels, k)
    n = y.sum()
    return _hits(s, y, k, codes) / n if n else 0.0


def f1_at_k(scores, labels, k: int, codes: Optional[Sequence[str]] = None) -> float:
    p = precision_at_k(scores, labels, k, codes)
    r = recall_at_k(scores, labels, k, codes)
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def r_precision_at_k(scores, labels, k: int, codes: Optional[Sequence[str]] = None) -> float:
    """hits / min(k, n); 0 for a document without true labels."""
    s, y = _check(scores, labels, k)
    n = int(y.sum())
    return _hits(s, y, k, codes) / min(k, n) if n else 0.0


def ndcg_at_k(scores, labels, k: int, codes: Optional[Sequence[str]] = None) -> float:
    """DCG of the top k normalised by the ideal DCG of min(n, k) relevant labels."""
    s, y = _check(scores, labels, k)
    n = int(y.sum())
    if n == 0:
        return 0.0
    dcg = sum(y[i] / math.log2(rank + 2) for rank, i in enumerate(top_k_indices(s, k, codes)))
    ideal = sum(1.0 / math.log2(rank + 2) for rank in range(min(n, k)))
    return dcg / ideal


def micro_f1(predictions: Sequence[Set[str]], gold: Sequence[Set[str]]) -> float:
    """F1 of true/false positives and false negatives pooled over all documents."""
    if len(predictions) != len(gold):
        raise DimensionMismatchError(
            f"{len(predictions)} prediction sets for {len(gold)} gold sets"
        )
    tp = fp = fn = 0
    for pred, true in zip(predictions, gold):
        pred, true = set(pred), set(true)
        tp += len(pred & true)
        fp += len(pred - true)
        fn += len(true - pred)
    if tp == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


@dataclass
class LevelReport:
    """
    Metrics of one label level.

    Attributes:
        level: ID, MT or DO
        k: Rank cut-off of the @k metrics
        mean: Metric name -> mean over splits
        std: Metric name -> population standard deviation over splits
        per_split: One metric dict per split
        excluded: Documents skipped because their gold set is empty, summed over splits
        documents: Per-document values ``{split, doc_id, precision, recall, ...}``
    """
    level: str
    k: int
    mean: Dict[str, float] = field(default_factory=dict)
    std: Dict[str, float] = field(default_factory=dict)
    per_split: List[Dict[str, float]] = field(default_factory=list)
    excluded: int = 0
    documents: List[Dict[str, object]] = field(default_factory=list)


@dataclass
class MetricReport:
    language: str
    levels: Dict[str, LevelReport]
    n_splits: int
    averaging: str = "documents"
    micro_rule: str = "top-5"

    def f1(self, level: Union[str, Level]) -> float:
        return self.levels[Level.parse(level).value].mean["f1"]

    def to_dict(self, include_documents: bool = False) -> dict:
        data = asdict(self)
        if not include_documents:
            for level in data["levels"].values():
                level.pop("documents")
        return data

    def to_json(self, include_documents: bool = False) -> str:
        return json.dumps(self.to_dict(include_documents), indent=2)


def _document_metrics(scores: np.ndarray, codes: Sequence[str], gold: Set[str], k: int) -> Dict[str, float]:
    k = min(k, len(codes))
    unreachable = sorted(gold - set(codes))
    if unreachable:
        # gold labels the model cannot predict rank below everything it scored, outside the top k
        floor = float(np.min(scores)) - 1.0
        codes = list(codes) + unreachable
        scores = np.concatenate([scores, np.full(len(unreachable), floor)])
    y = np.array([code in gold for code in codes], dtype=np.float64)
    return {
        "precision": precision_at_k(scores, y, k, codes),
        "recall": recall_at_k(scores, y, k, codes),
        "f1": f1_at_k(scores, y, k, codes),
        "r_precision": r_precision_at_k(scores, y, k, codes),
        "ndcg": ndcg_at_k(scores, y, k, codes),
    }


def _level_view(
    t: Thesaurus,
    codes: List[str],
    scores: List[float],
    gold: Set[str],
    level: Level,
    aggregation: str,
):
    if level is Level.ID:
        return codes, np.asarray(scores), gold
    folded = aggregate_level_scores(t, codes, scores, level, aggregation)
    level_codes = sorted(folded)
    return level_codes, np.array([folded[c] for c in level_codes]), map_ids(t, gold, level)


def _score_document(ranker: Ranker, doc: Document, t: Thesaurus):
    for code in doc.labels:
        if code not in t:
            raise UnknownDescriptorError(code)
    codes = list(ranker.label_codes)
    scores = [float(s) for s in ranker.scores(doc)]
    if not codes or len(scores) != len(codes):
        raise DimensionMismatchError(f"ranker returned {len(scores)} scores for {len(codes)} labels")
    return codes, scores


def _predicted(codes: Sequence[str], scores: np.ndarray, micro_k: int, threshold: Optional[float]) -> Set[str]:
    if threshold is not None:
        return {code for code, s in zip(codes, scores) if s >= threshold}
    return {codes[i] for i in top_k_indices(scores, min(micro_k, len(codes)), codes)}


def _split_summary(rows: List[Dict[str, float]], averaging: str) -> Dict[str, float]:
    summary = {name: float(np.mean([r[name] for r in rows])) for name in METRIC_NAMES[:5]}
    if averaging == "pr":
        p, r = summary["precision"], summary["recall"]
        summary["f1"] = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return summary


def evaluate_corpus(
    ranker: Union[Ranker, Callable[[SplitPlan], Ranker]],
    corpus: Corpus,
    t: Thesaurus,
    plans: Optional[Sequence[SplitPlan]] = None,
    split_index: int = -1,
    ks: Optional[Mapping[Union[str, Level], int]] = None,
    micro_k: int = 5,
    threshold: Optional[float] = None,
    averaging: str = "documents",
    aggregation: str = "max",
) -> MetricReport:
    """
    Evaluate a ranker on the test subset of every split plan.

    Metrics are computed per document, averaged over the documents of a split and then over
    the splits. MT and DO scores come from the ID scores folded through the thesaurus; gold
    MT and DO labels are the mapping of the gold IDs. Documents with an empty gold set are
    excluded from the means and counted in ``excluded``. A cut-off larger than the number of
    labels at a level is lowered to that number.

    Args:
        ranker: A ranker, or a factory building one per plan (e.g. trained on its train subset)
        corpus: Labeled corpus
        t: Thesaurus
        plans: Split plans; None evaluates the whole corpus as a single split
        split_index: Which subset of each plan is the test set (default: the last)
        ks: Cut-off per level, defaults ID 6, MT 5, DO 4
        micro_k: Size of the prediction set of micro-F1 in top-k mode
        threshold: Score threshold; switches micro-F1 prediction sets to threshold mode
        averaging: ``documents`` averages per-document F1; ``pr`` takes F1 of the mean P and R
        aggregation: Folding of ID scores into MT/DO scores (max, sum or mean)

    Returns:
        MetricReport
    """
    if averaging not in AVERAGING_MODES:
        raise ValueError(f"unknown averaging {averaging!r}; expected one of {AVERAGING_MODES}")
    cutoffs = dict(DEFAULT_KS)
    for level, k in (ks or {}).items():
        cutoffs[Level.parse(level)] = int(k)

    levels = {
        level.value: LevelReport(level=level.value, k=cutoffs[level]) for level in Level
    }
    runs = [(None, corpus)] if not plans else [(p, p.subset_corpus(corpus, split_index)) for p in plans]

    for split, (plan, test) in enumerate(runs):
        if len(test) == 0:
            raise EmptyCorpusError(f"test subset of split {split} is empty")
        if isinstance(ranker, Ranker):
            model = ranker
        elif plan is None:
            raise ValueError("a ranker factory needs split plans")
        else:
            model = ranker(plan)
        rows: Dict[str, List[Dict[str, float]]] = {name: [] for name in levels}
        predictions: Dict[str, List[Set[str]]] = {name: [] for name in levels}
        golds: Dict[str, List[Set[str]]] = {name: [] for name in levels}

        for doc in test:
            codes, scores = _score_document(model, doc, t)
            for level in Level:
                report = levels[level.value]
                level_codes, level_scores, gold = _level_view(
                    t, codes, scores, set(doc.labels), level, aggregation
                )
                if not gold:
                    report.excluded += 1
                    continue
                values = _document_metrics(level_scores, level_codes, gold, report.k)
                rows[level.value].append(values)
                report.documents.append({"split": split, "doc_id": doc.doc_id, **values})
                predictions[level.value].append(
                    _predicted(level_codes, level_scores, micro_k, threshold)
                )
                golds[level.value].append(gold)

        for name, report in levels.items():
            if not rows[name]:
                raise EmptyCorpusError(f"no test document of split {split} has {name} labels")
            summary = _split_summary(rows[name], averaging)
            summary["micro_f1"] = micro_f1(predictions[name], golds[name])
            report.per_split.append(summary)
        logger.info(
            "split %d: %d documents, F1 ID=%.4f MT=%.4f DO=%.4f",
            split, len(test), *(levels[lv.value].per_split[-1]["f1"] for lv in Level),
        )

    for report in levels.values():
        for metric in METRIC_NAMES:
            values = [s[metric] for s in report.per_split]
            report.mean[metric] = float(np.mean(values))
            report.std[metric] = float(np.std(values))

    return MetricReport(
        language=corpus.language,
        levels=levels,
        n_splits=len(runs),
        averaging=averaging,
        micro_rule=f"threshold-{threshold}" if threshold is not None else f"top-{micro_k}",
    )


def relative_improvement(report: MetricReport, baseline: MetricReport) -> Dict[str, float]:
    """Relative F1 change per level: (f1 - baseline_f1) / baseline_f1."""
    result = {}
    for level in Level:
        base = baseline.f1(level)
        if base == 0:
            raise ValueError(f"baseline {level.value} F1 is zero")
        result[level.value] = (report.f1(level) - base) / base
    return result


def report_to_csv(reports: Iterable[MetricReport]) -> str:
    """CSV ``language,id_f1,mt_f1,do_f1``, one row per report."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["language", "id_f1", "mt_f1", "do_f1"])
    for report in reports:
        writer.writerow([report.language] + [f"{report.f1(level):.6f}" for level in Level])
    return out.getvalue()
