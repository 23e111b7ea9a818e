"""
Core EuroVocClassifier class - Main entry point for document classification
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .config import Config
from .corpus import Document
from .errors import InvalidRequestError, UnknownDescriptorError
from .head import forward, predict_topk
from .registry import ModelBundle, ModelRegistry
from .thesaurus import Level, Thesaurus, aggregate_level_scores

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassifyRequest:
    text: str
    level: str = "ID"
    num_labels: int = 6

    @classmethod
    def from_dict(cls, data: Any, defaults: Optional[Config] = None) -> "ClassifyRequest":
        """Validate a decoded JSON request body; malformed fields raise a 400 error."""
        if not isinstance(data, dict):
            raise InvalidRequestError("request body must be a JSON object")
        text = data.get("text")
        if not isinstance(text, str):
            raise InvalidRequestError("field 'text' must be a string")
        level = data.get("level", defaults.level if defaults else "ID")
        num_labels = data.get("num_labels", defaults.num_labels if defaults else 6)
        if isinstance(num_labels, bool) or not isinstance(num_labels, int):
            raise InvalidRequestError("field 'num_labels' must be an integer")
        try:
            level = Level.parse(level).value
        except ValueError as e:
            raise InvalidRequestError(str(e)) from None
        return cls(text=text, level=level, num_labels=num_labels)


@dataclass(frozen=True)
class ClassifyResponse:
    """Labels with their scores, best first."""
    language: str
    level: str
    labels: Tuple[Tuple[str, float], ...]

    def to_dict(self) -> Dict[str, float]:
        return {code: score for code, score in self.labels}


def map_level_scores(
    id_scores: Mapping[str, float],
    t: Thesaurus,
    level: Union[str, Level],
    mode: str = "max",
) -> Dict[str, float]:
    """
    Fold descriptor scores into MT or DO scores through the thesaurus.

    Args:
        id_scores: Descriptor code -> score
        t: Thesaurus
        level: ID, MT or DO
        mode: max (default), sum or mean

    Returns:
        Level code -> score, ordered by score descending with ties by ascending code
    """
    for code in id_scores:
        if code not in t:
            raise UnknownDescriptorError(code)
    folded = aggregate_level_scores(t, id_scores.keys(), id_scores.values(), level, mode)
    return dict(sorted(folded.items(), key=lambda item: (-item[1], item[0])))


def classify_endpoint(
    bundle: ModelBundle,
    request: ClassifyRequest,
    aggregation: str = "max",
) -> ClassifyResponse:
    """
    Classify one text with a loaded bundle.

    Raises:
        InvalidRequestError: 400 for empty text, 422 when num_labels is outside 1..M
    """
    if not request.text.strip():
        raise InvalidRequestError("text must not be empty", status=400)
    try:
        level = Level.parse(request.level)
    except ValueError as e:
        raise InvalidRequestError(str(e), status=400) from None
    head = bundle.head
    k = request.num_labels
    if k < 1 or k > head.M:
        raise InvalidRequestError(f"num_labels must be between 1 and {head.M}, got {k}", status=422)

    document = Document(doc_id="request", language=bundle.language, text=request.text)
    if level is Level.ID:
        labels = predict_topk(head, bundle.encoder, document, k)
    else:
        probs = forward(head, bundle.encoder.encode(document))
        id_scores = {code: float(p) for code, p in zip(head.label_codes, probs)}
        labels = list(map_level_scores(id_scores, bundle.thesaurus, level, aggregation).items())[:k]
    return ClassifyResponse(language=bundle.language, level=level.value, labels=tuple(labels))


class EuroVocClassifier:
    """
    Classifies documents of one language with a registered model.

    Usage:
        model = EuroVocClassifier("en", registry_root="models")
        model("The Commission adopted a regulation on fisheries.", num_labels=6)
        # {"1309": 0.91, "2771": 0.85, ...}
    """

    def __init__(
        self,
        lang: Optional[str] = None,
        registry_root: Optional[str] = None,
        config: Optional[Config] = None,
        registry: Optional[ModelRegistry] = None,
    ):
        """
        Initialize the classifier.

        Args:
            lang: Language code (default: ``config.default_language``)
            registry_root: Registry directory (default: ``config.registry_root``)
            config: Configuration object
            registry: Existing registry, shared between classifiers
        """
        self.config = config or Config()
        self.language = lang or self.config.default_language
        self.registry = registry or ModelRegistry(
            registry_root or self.config.registry_root, lowercase=self.config.lowercase
        )
        self.bundle = self.registry.get(self.language)

    @property
    def label_codes(self) -> Tuple[str, ...]:
        return self.bundle.head.label_codes

    def __call__(
        self,
        text: str,
        num_labels: Optional[int] = None,
        level: Optional[str] = None,
    ) -> Dict[str, float]:
        """
        Classify a text.

        Args:
            text: Document text
            num_labels: Number of labels to return (default: ``config.num_labels``)
            level: ID, MT or DO (default: ``config.level``)

        Returns:
            Ordered dict of label code -> score, best first
        """
        request = ClassifyRequest(
            text=text,
            level=self.config.level if level is None else level,
            num_labels=self.config.num_labels if num_labels is None else num_labels,
        )
        return classify_endpoint(self.bundle, request, self.config.aggregation).to_dict()

    def describe(self, result: Mapping[str, float], language: Optional[str] = None) -> List[Tuple[str, Optional[str], float]]:
        """(code, display text, score) triples for descriptor results."""
        t = self.bundle.thesaurus
        return [(code, t.label(code, language or self.language) if code in t else None, score)
                for code, score in result.items()]
