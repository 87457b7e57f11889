"""Plain-file persistence: ontologies, session records, transcripts, reports.

Everything lives under one data directory, keyed by id, so interview state
stays inspectable with a text editor. Finished session records are frozen.
"""

from __future__ import annotations

import json
import secrets
from datetime import datetime, timezone
from pathlib import Path
from typing import Any


class StoreError(Exception):
    pass


class UnknownId(StoreError):
    pass


class RecordFrozen(StoreError):
    """A finished session record cannot be rewritten."""


def new_id() -> str:
    """Random 128-bit URL-safe token."""
    return secrets.token_urlsafe(16)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class DataStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("ontologies", "sessions", "reports"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # -- ontologies --

    def save_ontology(self, document: dict[str, Any], ontology_id: str | None = None) -> str:
        ontology_id = ontology_id or new_id()
        path = self.root / "ontologies" / f"{ontology_id}.json"
        path.write_text(json.dumps(document, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        return ontology_id

    def load_ontology(self, ontology_id: str) -> dict[str, Any]:
        path = self.root / "ontologies" / f"{ontology_id}.json"
        if not path.exists():
            raise UnknownId(f"no ontology {ontology_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    # -- session records --

    def session_path(self, session_id: str) -> Path:
        return self.root / "sessions" / f"{session_id}.json"

    def transcript_path(self, session_id: str) -> Path:
        return self.root / "sessions" / f"{session_id}.transcript.jsonl"

    def save_session(self, session_id: str, snapshot: dict[str, Any], status: str) -> None:
        path = self.session_path(session_id)
        created = _utcnow()
        if path.exists():
            existing = json.loads(path.read_text(encoding="utf-8"))
            if existing.get("status") == "finished":
                raise RecordFrozen(f"session {session_id!r} is finished and immutable")
            created = existing.get("created", created)
        record = {
            "session_id": session_id,
            "created": created,
            "status": status,
            "snapshot": snapshot,
            "transcript_path": self.transcript_path(session_id).name,
        }
        path.write_text(json.dumps(record, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")

    def load_session(self, session_id: str) -> dict[str, Any]:
        path = self.session_path(session_id)
        if not path.exists():
            raise UnknownId(f"no session {session_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "sessions").glob("*.json"))

    def write_transcript(self, session_id: str, rows: list[dict[str, Any]]) -> Path:
        path = self.transcript_path(session_id)
        path.write_text(
            "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows), encoding="utf-8"
        )
        return path

    # -- evaluation reports --

    def report_dir(self, evaluation_id: str) -> Path:
        path = self.root / "reports" / evaluation_id
        path.mkdir(parents=True, exist_ok=True)
        return path

    def save_report(self, evaluation_id: str, report: dict[str, Any]) -> Path:
        path = self.report_dir(evaluation_id) / "report.json"
        path.write_text(json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def load_report(self, evaluation_id: str) -> dict[str, Any]:
        path = self.root / "reports" / evaluation_id / "report.json"
        if not path.exists():
            raise UnknownId(f"no evaluation {evaluation_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))
