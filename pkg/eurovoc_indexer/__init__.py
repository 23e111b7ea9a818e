"""
eurovoc_indexer - Multilingual EuroVoc document classification

Thesaurus handling, corpus statistics, stratified splitting, subword tokenization, a topic
signature baseline, a sigmoid classification head with its training loop, ranked multi-label
metrics and a small HTTP classification service.
License: MIT
"""

__version__ = "0.3.0"

from .config import Config
from .core import EuroVocClassifier, classify_endpoint, map_level_scores
from .corpus import SUPPORTED_LANGUAGES, Corpus, Document, load_corpus
from .errors import EuroVocError
from .registry import ModelRegistry, registry_load
from .storage import RegistryStore, SQLiteRegistryStore
from .thesaurus import Level, Thesaurus, load_thesaurus

__all__ = [
    "EuroVocClassifier",
    "classify_endpoint",
    "map_level_scores",
    "Config",
    "Corpus",
    "Document",
    "load_corpus",
    "SUPPORTED_LANGUAGES",
    "EuroVocError",
    "ModelRegistry",
    "registry_load",
    "RegistryStore",
    "SQLiteRegistryStore",
    "Level",
    "Thesaurus",
    "load_thesaurus",
]
