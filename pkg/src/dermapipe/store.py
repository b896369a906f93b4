"""File-backed case persistence: one directory per case, atomic writes, append-only
audit trail, and a small idempotency-key cache."""
from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Any

from .orchestrator import Case

__all__ = ["CaseStore", "CaseNotFoundError"]


class CaseNotFoundError(KeyError):
    pass


class CaseStore:
    """Document-per-case store under a root directory.

    Layout: ``<root>/<case_id>/case.json`` + ``image.bin``. Writes go to a temp
    file in the same directory and are renamed into place, so a crash never
    leaves a half-written document.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, case_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(case_id, threading.Lock())

    def _case_dir(self, case_id: str) -> Path:
        if not case_id or "/" in case_id or case_id.startswith("."):
            raise CaseNotFoundError(case_id)
        return self.root / case_id

    @staticmethod
    def _atomic_write(path: Path, data: bytes) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def save(self, case: Case) -> None:
        d = self._case_dir(case.id)
        d.mkdir(parents=True, exist_ok=True)
        image_path = d / "image.bin"
        if not image_path.exists():
            self._atomic_write(image_path, case.image)
        doc = json.dumps(case.to_dict(), indent=2, sort_keys=True).encode("utf-8")
        self._atomic_write(d / "case.json", doc)

    def load(self, case_id: str) -> Case:
        d = self._case_dir(case_id)
        doc_path = d / "case.json"
        if not doc_path.exists():
            raise CaseNotFoundError(case_id)
        doc = json.loads(doc_path.read_text(encoding="utf-8"))
        return Case.from_dict(doc, image=(d / "image.bin").read_bytes())

    def exists(self, case_id: str) -> bool:
        try:
            return (self._case_dir(case_id) / "case.json").exists()
        except CaseNotFoundError:
            return False

    def list_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / "case.json").exists())

    # Idempotency-key cache: replays the stored response for a repeated mutation.

    def cached_response(self, key: str) -> Any | None:
        path = self.root / ".idempotency" / f"{key}.json"
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return None

    def cache_response(self, key: str, response: Any) -> None:
        d = self.root / ".idempotency"
        d.mkdir(parents=True, exist_ok=True)
        self._atomic_write(d / f"{key}.json", json.dumps(response).encode("utf-8"))
