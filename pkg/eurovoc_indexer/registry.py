"""
Local model registry: one bundle (head, encoder, vocabulary, thesaurus) per language.

Layout::

    <root>/registry.db          SQLite index with families and sha256 checksums
    <root>/<lang>/head.evhd
    <root>/<lang>/encoder.npy
    <root>/<lang>/vocab.txt
    <root>/<lang>/thesaurus.tsv (or .json)
"""

import hashlib
import logging
import shutil
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from .corpus import check_language
from .encoders import MeanEmbeddingEncoder
from .errors import ChecksumError, DimensionMismatchError, InvariantError, MissingArtifactError
from .head import ClassifierHead, load_head
from .storage import ARTIFACT_ROLES, MODEL_FAMILIES, RegistryEntry, RegistryStore, SQLiteRegistryStore
from .thesaurus import Thesaurus, load_thesaurus
from .tokenization import SubwordVocabulary, load_vocabulary

logger = logging.getLogger(__name__)

REGISTRY_DB = "registry.db"
_ARTIFACT_NAMES = {"head": "head.evhd", "encoder": "encoder.npy", "vocab": "vocab.txt"}


@dataclass(frozen=True, eq=False)
class ModelBundle:
    """Everything needed to classify documents of one language. Arrays are read-only."""
    language: str
    family: str
    head: ClassifierHead
    encoder: MeanEmbeddingEncoder
    vocab: SubwordVocabulary
    thesaurus: Thesaurus


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ModelRegistry:
    """
    Registry of per-language model bundles under a local directory.

    Loaded bundles are cached; :meth:`get` is safe to call from several threads.

    Args:
        root: Registry directory (created on first registration)
        store: Index backend (default: SQLite ``<root>/registry.db``)
        lowercase: Lowercase text before tokenization for every loaded vocabulary
    """

    def __init__(
        self,
        root: Union[str, Path],
        store: Optional[RegistryStore] = None,
        lowercase: bool = False,
    ):
        self.root = Path(root)
        self._store = store
        self.lowercase = lowercase
        self._cache: Dict[str, ModelBundle] = {}
        self._lock = threading.Lock()

    @property
    def store(self) -> RegistryStore:
        if self._store is None:
            self.root.mkdir(parents=True, exist_ok=True)
            self._store = SQLiteRegistryStore(str(self.root / REGISTRY_DB))
        return self._store

    def register(
        self,
        language: str,
        head_path: Union[str, Path],
        encoder_path: Union[str, Path],
        vocab_path: Union[str, Path],
        thesaurus_path: Union[str, Path],
        family: str = "legal",
    ) -> RegistryEntry:
        """
        Copy a bundle into the registry and record its checksums.

        Args:
            language: One of the 22 supported language codes
            head_path: Head checkpoint
            encoder_path: Token embedding table (``.npy``)
            vocab_path: Vocabulary file
            thesaurus_path: Thesaurus TSV or JSON
            family: legal, mono, wiki or multi

        Returns:
            The stored registry entry
        """
        check_language(language)
        if family not in MODEL_FAMILIES:
            raise ValueError(f"unknown model family {family!r}; expected one of {MODEL_FAMILIES}")
        sources = {
            "head": Path(head_path),
            "encoder": Path(encoder_path),
            "vocab": Path(vocab_path),
            "thesaurus": Path(thesaurus_path),
        }
        for role, src in sources.items():
            if not src.exists():
                raise MissingArtifactError(f"{role} artifact not found: {src}")

        target_dir = self.root / language
        target_dir.mkdir(parents=True, exist_ok=True)
        files, checksums = {}, {}
        for role, src in sources.items():
            name = _ARTIFACT_NAMES.get(role) or f"thesaurus{src.suffix or '.tsv'}"
            shutil.copyfile(src, target_dir / name)
            files[role] = f"{language}/{name}"
            checksums[role] = sha256_file(target_dir / name)

        entry = RegistryEntry(language=language, family=family, files=files, checksums=checksums)
        self.store.save(entry)
        with self._lock:
            self._cache.pop(language, None)
        logger.info("Registered %s model (%s) under %s", language, family, target_dir)
        return entry

    def entries(self) -> List[RegistryEntry]:
        if not (self.root / REGISTRY_DB).exists() and self._store is None:
            return []
        return self.store.list()

    def languages(self) -> List[str]:
        return [entry.language for entry in self.entries()]

    def load(self, language: str) -> ModelBundle:
        """Load and verify a bundle, bypassing the cache."""
        check_language(language)
        if self._store is None and not (self.root / REGISTRY_DB).exists():
            raise MissingArtifactError(f"no model registry at {self.root}")
        entry = self.store.get(language)
        if entry is None:
            raise MissingArtifactError(
                f"no model registered for {language!r}; available: {self.languages()}"
            )

        paths = {}
        for role in ARTIFACT_ROLES:
            path = self.root / entry.files[role]
            if not path.exists():
                raise MissingArtifactError(f"{role} artifact of {language} is missing: {path}")
            actual = sha256_file(path)
            if actual != entry.checksums[role]:
                raise ChecksumError(
                    f"{role} artifact of {language} has checksum {actual}, "
                    f"expected {entry.checksums[role]}"
                )
            paths[role] = path

        head = load_head(paths["head"])
        vocab = load_vocabulary(paths["vocab"], lowercase=self.lowercase)
        encoder = MeanEmbeddingEncoder.load(paths["encoder"], vocab)
        thesaurus = load_thesaurus(paths["thesaurus"])
        if encoder.dim != head.E:
            raise DimensionMismatchError(f"encoder dim {encoder.dim} does not match head E={head.E}")
        unknown = [code for code in head.label_codes if code not in thesaurus]
        if unknown:
            raise InvariantError(f"head labels missing from the thesaurus: {unknown[:5]}")

        for array in (head.W, head.b, encoder.embeddings):
            array.setflags(write=False)
        logger.info("Loaded %s model (%d labels, E=%d)", language, head.M, head.E)
        return ModelBundle(
            language=language,
            family=entry.family,
            head=head,
            encoder=encoder,
            vocab=vocab,
            thesaurus=thesaurus,
        )

    def get(self, language: str) -> ModelBundle:
        """Cached :meth:`load`."""
        with self._lock:
            bundle = self._cache.get(language)
            if bundle is None:
                bundle = self.load(language)
                self._cache[language] = bundle
            return bundle


def registry_load(root: Union[str, Path], language: str) -> ModelBundle:
    """Load the verified bundle of ``language`` from the registry at ``root``."""
    return ModelRegistry(root).load(language)

