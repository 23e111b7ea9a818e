"""
Storage backends for the model registry index
"""

import json
import sqlite3
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional

MODEL_FAMILIES = ("legal", "mono", "wiki", "multi")
ARTIFACT_ROLES = ("head", "encoder", "vocab", "thesaurus")


@dataclass
class RegistryEntry:
    """
    One registered language model.

    Attributes:
        language: Two-letter language code
        family: Model family (legal, mono, wiki or multi)
        files: Artifact role -> path relative to the registry root
        checksums: Artifact role -> sha256 hex digest
        registered_at: ISO-8601 UTC timestamp
    """
    language: str
    family: str
    files: Dict[str, str]
    checksums: Dict[str, str]
    registered_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def to_dict(self) -> dict:
        return {
            "language": self.language,
            "family": self.family,
            "files": dict(self.files),
            "checksums": dict(self.checksums),
            "registered_at": self.registered_at,
        }


class RegistryStore(ABC):
    """Abstract base class for registry indexes."""

    @abstractmethod
    def save(self, entry: RegistryEntry) -> None:
        """Insert or replace the entry of a language."""
        pass

    @abstractmethod
    def get(self, language: str) -> Optional[RegistryEntry]:
        """Entry of a language, or None."""
        pass

    @abstractmethod
    def list(self) -> List[RegistryEntry]:
        """All entries ordered by language."""
        pass

    @abstractmethod
    def delete(self, language: str) -> bool:
        """Remove a language; True when it was registered."""
        pass


class SQLiteRegistryStore(RegistryStore):
    """SQLite-based registry index."""

    def __init__(self, db_path: str = "registry.db"):
        """
        Initialize SQLite registry index.

        Args:
            db_path: Path to SQLite database file
        """
        self.db_path = db_path
        self._init_db()

    def _init_db(self):
        """Initialize database schema."""
        with sqlite3.connect(self.db_path) as conn:
            conn.execute("""
                CREATE TABLE IF NOT EXISTS models (
                    language TEXT PRIMARY KEY,
                    family TEXT NOT NULL,
                    files TEXT NOT NULL,
                    checksums TEXT NOT NULL,
                    registered_at TEXT NOT NULL
                )
            """)
            conn.commit()

    def save(self, entry: RegistryEntry) -> None:
        if entry.family not in MODEL_FAMILIES:
            raise ValueError(f"unknown model family {entry.family!r}; expected one of {MODEL_FAMILIES}")
        with sqlite3.connect(self.db_path) as conn:
            conn.execute(
                """
                INSERT OR REPLACE INTO models
                (language, family, files, checksums, registered_at)
                VALUES (?, ?, ?, ?, ?)
                """,
                (
                    entry.language,
                    entry.family,
                    json.dumps(entry.files, sort_keys=True),
                    json.dumps(entry.checksums, sort_keys=True),
                    entry.registered_at,
                ),
            )
            conn.commit()

    @staticmethod
    def _row_to_entry(row: sqlite3.Row) -> RegistryEntry:
        return RegistryEntry(
            language=row["language"],
            family=row["family"],
            files=json.loads(row["files"]),
            checksums=json.loads(row["checksums"]),
            registered_at=row["registered_at"],
        )

    def get(self, language: str) -> Optional[RegistryEntry]:
        with sqlite3.connect(self.db_path) as conn:
            conn.row_factory = sqlite3.Row
            row = conn.execute("SELECT * FROM models WHERE language = ?", (language,)).fetchone()
        return self._row_to_entry(row) if row else None

    def list(self) -> List[RegistryEntry]:
        with sqlite3.connect(self.db_path) as conn:
            conn.row_factory = sqlite3.Row
            rows = conn.execute("SELECT * FROM models ORDER BY language").fetchall()
        return [self._row_to_entry(row) for row in rows]

    def delete(self, language: str) -> bool:
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.execute("DELETE FROM models WHERE language = ?", (language,))
            conn.commit()
            return cursor.rowcount > 0
