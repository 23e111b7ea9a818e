"""
Exception hierarchy for eurovoc_indexer.

Every error carries an ``exit_code`` used by the command line front end:
1 for usage errors, 2 for data errors.
"""

from typing import Iterable, Optional


class EuroVocError(Exception):
    """Base class for all eurovoc_indexer errors."""

    exit_code = 2


class ParseError(EuroVocError, ValueError):
    """A file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")


class InvariantError(EuroVocError, ValueError):
    """A loaded structure violates one of its invariants."""


class UnknownDescriptorError(EuroVocError, KeyError):
    """A descriptor (or MT) code is not present in the thesaurus."""

    def __init__(self, code: str):
        self.code = code
        super().__init__(code)

    def __str__(self) -> str:
        return f"unknown descriptor: {self.code}"


class EmptyCorpusError(EuroVocError, ValueError):
    """An operation needs at least one document."""


class DuplicateDocumentError(EuroVocError, ValueError):
    """Two documents share a doc_id."""


class UnsupportedLanguageError(EuroVocError, ValueError):
    """Language code outside the supported set."""

    def __init__(self, language: str, valid: Iterable[str]):
        self.language = language
        self.valid = tuple(valid)
        super().__init__(
            f"unsupported language {language!r}; expected one of: {' '.join(self.valid)}"
        )


class InvalidRatioError(EuroVocError, ValueError):
    """Split ratios are not positive or do not sum to one."""

    exit_code = 1


class DuplicateSeedError(EuroVocError, ValueError):
    """The same seed was given twice."""

    exit_code = 1


class DimensionMismatchError(EuroVocError, ValueError):
    """Array shapes are inconsistent."""


class DivergenceError(EuroVocError, ArithmeticError):
    """Training loss became NaN or infinite."""


class NonFiniteGradientError(EuroVocError, ArithmeticError):
    """A gradient contains NaN or infinity."""


class ChecksumError(EuroVocError):
    """A registry artifact does not match its recorded checksum."""


class MissingArtifactError(EuroVocError, FileNotFoundError):
    """A registry artifact is missing on disk."""


class InvalidRequestError(EuroVocError, ValueError):
    """A classification request was rejected; ``status`` is the HTTP status to report."""

    exit_code = 1

    def __init__(self, message: str, status: int = 400):
        self.status = status
        super().__init__(message)
