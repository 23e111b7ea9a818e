"""
Unit tests for EuroVocClassifier and the classification endpoint
"""

import numpy as np
import pytest

from eurovoc_indexer import EuroVocClassifier, classify_endpoint, map_level_scores
from eurovoc_indexer.config import Config
from eurovoc_indexer.core import ClassifyRequest
from eurovoc_indexer.corpus import Document
from eurovoc_indexer.errors import InvalidRequestError, MissingArtifactError, UnknownDescriptorError
from eurovoc_indexer.head import forward, predict_topk
from eurovoc_indexer.thesaurus import map_code

TEXT = "the council regulation w1001a w1001b w1007c"


@pytest.fixture
def bundle(registry):
    """Loaded English toy bundle."""
    return registry.get("en")


@pytest.fixture
def classifier(registry):
    """Classifier sharing the toy registry."""
    return EuroVocClassifier("en", registry=registry)


def test_classify_matches_offline_prediction(bundle):
    """Test that the endpoint returns exactly the offline top-k."""
    response = classify_endpoint(bundle, ClassifyRequest(TEXT, "ID", 6))
    offline = predict_topk(bundle.head, bundle.encoder, Document("x", "en", TEXT), 6)
    assert list(response.labels) == offline
    assert list(response.to_dict()) == [code for code, _ in offline]


def test_num_labels_is_honored(bundle):
    """Test that exactly num_labels labels come back."""
    for k in (1, 3, 12):
        assert len(classify_endpoint(bundle, ClassifyRequest(TEXT, "ID", k)).labels) == k


def test_mt_level(bundle):
    """Test folding descriptor probabilities into microthesaurus scores."""
    response = classify_endpoint(bundle, ClassifyRequest(TEXT, "MT", 3))
    probs = forward(bundle.head, bundle.encoder.encode(Document("x", "en", TEXT)))
    expected = {}
    for code, p in zip(bundle.head.label_codes, probs):
        mt = map_code(bundle.thesaurus, code, "MT")
        expected[mt] = max(expected.get(mt, 0.0), float(p))
    ranked = sorted(expected.items(), key=lambda item: (-item[1], item[0]))[:3]
    assert response.level == "MT"
    assert list(response.labels) == ranked


def test_request_errors(bundle):
    """Test status codes of rejected requests."""
    cases = [
        (ClassifyRequest("   ", "ID", 6), 400),
        (ClassifyRequest(TEXT, "XX", 6), 400),
        (ClassifyRequest(TEXT, "ID", 0), 422),
        (ClassifyRequest(TEXT, "ID", 13), 422),
    ]
    for request, status in cases:
        with pytest.raises(InvalidRequestError) as info:
            classify_endpoint(bundle, request)
        assert info.value.status == status


def test_request_from_dict():
    """Test parsing and validating request bodies."""
    defaults = Config.from_dict({"level": "DO", "num_labels": 2})
    request = ClassifyRequest.from_dict({"text": "x"}, defaults)
    assert (request.level, request.num_labels) == ("DO", 2)
    assert ClassifyRequest.from_dict({"text": "x", "level": "mt"}).level == "MT"

    for body in ([], {"num_labels": 3}, {"text": 5}, {"text": "x", "num_labels": "6"},
                 {"text": "x", "num_labels": True}, {"text": "x", "level": "XX"}):
        with pytest.raises(InvalidRequestError) as info:
            ClassifyRequest.from_dict(body)
        assert info.value.status == 400


def test_map_level_scores(thesaurus):
    """Test the direct mapping of descriptor scores."""
    assert map_level_scores({"1002": 0.9, "1003": 0.8}, thesaurus, "MT") == {"0406": 0.9}
    assert map_level_scores({}, thesaurus, "MT") == {}
    assert list(map_level_scores({"1007": 0.5, "1004": 0.5}, thesaurus, "MT")) == ["0411", "1206"]
    with pytest.raises(UnknownDescriptorError):
        map_level_scores({"9999": 0.1}, thesaurus, "DO")


def test_map_level_scores_is_group_max(thesaurus):
    """Test against grouping by primary microthesaurus and domain."""
    rng = np.random.default_rng(0)
    codes = thesaurus.descriptor_codes
    for _ in range(50):
        chosen = rng.choice(codes, size=int(rng.integers(1, len(codes) + 1)), replace=False)
        scores = {str(c): float(rng.random()) for c in chosen}
        for level in ("MT", "DO"):
            expected = {}
            for code, s in scores.items():
                key = map_code(thesaurus, code, level)
                expected[key] = max(expected.get(key, -1.0), s)
            assert map_level_scores(scores, thesaurus, level) == expected


def test_classifier_call(classifier, bundle):
    """Test the high level classifier."""
    result = classifier(TEXT, num_labels=4)
    assert len(result) == 4
    assert result == classify_endpoint(bundle, ClassifyRequest(TEXT, "ID", 4)).to_dict()
    assert len(classifier(TEXT)) == 6
    assert set(classifier(TEXT, level="DO", num_labels=2)) == {"04", "12"}
    assert classifier.label_codes == bundle.head.label_codes


def test_classifier_rejects_zero_labels(classifier):
    """Test that num_labels=0 is rejected rather than replaced by the default."""
    with pytest.raises(InvalidRequestError) as exc:
        classifier(TEXT, num_labels=0)
    assert exc.value.status == 422


def test_classifier_describe(classifier):
    """Test attaching descriptor display text."""
    described = classifier.describe(classifier(TEXT, num_labels=2))
    assert len(described) == 2
    code, label, _ = described[0]
    assert label == f"descriptor {code}"
    assert classifier.describe({"0406": 0.5}) == [("0406", None, 0.5)]


def test_classifier_from_registry_root(registry):
    """Test building a classifier from a registry directory."""
    model = EuroVocClassifier("en", registry_root=str(registry.root))
    assert model(TEXT, num_labels=3) == EuroVocClassifier("en", registry=registry)(TEXT, num_labels=3)
    with pytest.raises(MissingArtifactError):
        EuroVocClassifier("fr", registry_root=str(registry.root))
