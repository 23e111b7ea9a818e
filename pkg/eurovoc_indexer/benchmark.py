"""
Classification latency by document length.
"""

import csv
import io
import logging
from dataclasses import dataclass
from timeit import default_timer as timer
from typing import Callable, List, Optional, Sequence

import httpx
import numpy as np

from .core import ClassifyRequest, classify_endpoint
from .registry import ModelBundle

logger = logging.getLogger(__name__)

DEFAULT_LENGTHS = (64, 128, 256, 384, 512)


@dataclass(frozen=True)
class LatencyRow:
    length: int
    mean_ms: float
    std_ms: float


def synthetic_text(bundle: ModelBundle, length: int) -> str:
    """Text whose encoding is ``length`` tokens long (separators included)."""
    words = [t for t in bundle.vocab.tokens
             if t not in bundle.vocab.special_tokens and not t.startswith(bundle.vocab.continuation_prefix)]
    if not words:
        words = ["x"]
    return " ".join(words[i % len(words)] for i in range(max(length - 2, 1)))


def _in_process(bundle: ModelBundle) -> Callable[[str], None]:
    def call(text: str) -> None:
        classify_endpoint(bundle, ClassifyRequest(text=text, num_labels=min(6, bundle.head.M)))
    return call


def _remote(client: httpx.Client, url: str, language: str) -> Callable[[str], None]:
    endpoint = f"{url.rstrip('/')}/classify/{language}"

    def call(text: str) -> None:
        resp = client.post(endpoint, json={"text": text})
        resp.raise_for_status()
    return call


def latency_benchmark(
    bundle: ModelBundle,
    lengths: Sequence[int] = DEFAULT_LENGTHS,
    trials: int = 100,
    warmup: int = 5,
    url: Optional[str] = None,
) -> List[LatencyRow]:
    """
    Measure end-to-end classification latency.

    For each length, ``warmup`` untimed calls are followed by ``trials`` timed ones. Runs
    serially. With ``url`` the requests go to a running service through httpx, otherwise
    the bundle is called in process.

    Args:
        bundle: Loaded model bundle
        lengths: Token lengths, each in 1..max_sequence
        trials: Timed calls per length (>= 1)
        warmup: Untimed calls per length
        url: Base URL of a running service

    Returns:
        One row per length with mean and standard deviation in milliseconds
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if warmup < 0:
        raise ValueError("warmup must be non-negative")
    limit = bundle.vocab.max_sequence
    for length in lengths:
        if not 1 <= length <= limit:
            raise ValueError(f"length {length} outside 1..{limit}")

    client = httpx.Client(timeout=30.0) if url else None
    try:
        call = _remote(client, url, bundle.language) if client else _in_process(bundle)
        rows = []
        for length in lengths:
            text = synthetic_text(bundle, length)
            for _ in range(warmup):
                call(text)
            timings = np.empty(trials)
            for i in range(trials):
                start = timer()
                call(text)
                timings[i] = (timer() - start) * 1000.0
            rows.append(LatencyRow(length, float(timings.mean()), float(timings.std())))
            logger.info("length %d: %.3f ms +- %.3f", length, rows[-1].mean_ms, rows[-1].std_ms)
        return rows
    finally:
        if client is not None:
            client.close()


def benchmark_to_csv(rows: Sequence[LatencyRow]) -> str:
    """CSV ``length,mean_ms,std_ms``."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["length", "mean_ms", "std_ms"])
    for row in rows:
        writer.writerow([row.length, f"{row.mean_ms:.4f}", f"{row.std_ms:.4f}"])
    return out.getvalue()
