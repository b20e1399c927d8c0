"""Durable local persistence: append-only event logs plus an account file.

Every document is one JSONL file of checksummed events; recovery replays
them through the core model. A write is acknowledged only after the line
is flushed and fsynced. On load, an undecodable FINAL line is treated as
a torn write from a crash and dropped (it was never acknowledged); any
other defect (bad checksum, gap, undecodable middle line) raises
StorageCorrupt for that document alone.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional

from ..canonical import canonical_hash
from ..model import PlanDocument, Revision, replay, ModelError
from ..suggestions import ChatTurn

DOCUMENTS_SUBDIR = "documents"
CONVERSATIONS_SUBDIR = "conversations"
ACCOUNTS_FILENAME = "accounts.json"


class StorageCorrupt(RuntimeError):
    def __init__(self, name: str, reason: str) -> None:
        super().__init__(f"event log for {name} is corrupt: {reason}")
        self.name = name
        self.reason = reason


def _fsync_dir(path: Path) -> None:
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


def _checksummed(record: dict) -> dict:
    return {**record, "checksum": canonical_hash(record)}


def _verify(record: dict, name: str, line_no: int) -> dict:
    body = {k: v for k, v in record.items() if k != "checksum"}
    if record.get("checksum") != canonical_hash(body):
        raise StorageCorrupt(name, f"checksum mismatch at line {line_no}")
    return body


class _EventLog:
    """One append-only JSONL file with per-record checksums."""

    def __init__(self, path: Path, name: str) -> None:
        self.path = path
        self.name = name

    def append(self, record: dict) -> None:
        line = json.dumps(_checksummed(record), sort_keys=True, separators=(",", ":"))
        is_new = not self.path.exists()
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()
            os.fsync(handle.fileno())
        if is_new:
            _fsync_dir(self.path.parent)

    def read(self) -> list[dict]:
        try:
            raw_lines = self.path.read_text(encoding="utf-8").split("\n")
        except FileNotFoundError:
            raise KeyError(self.name)
        # A trailing newline leaves one empty tail entry; drop it.
        if raw_lines and raw_lines[-1] == "":
            raw_lines.pop()
        records: list[dict] = []
        for i, line in enumerate(raw_lines):
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                if i == len(raw_lines) - 1:
                    break  # torn tail from a crash mid-write; never acknowledged
                raise StorageCorrupt(self.name, f"undecodable line {i}")
            if not isinstance(record, dict):
                raise StorageCorrupt(self.name, f"non-object record at line {i}")
            records.append(_verify(record, self.name, i))
        return records


class Storage:
    def __init__(self, data_dir: Path) -> None:
        self.data_dir = Path(data_dir)
        self.documents_dir = self.data_dir / DOCUMENTS_SUBDIR
        self.conversations_dir = self.data_dir / CONVERSATIONS_SUBDIR
        self.accounts_path = self.data_dir / ACCOUNTS_FILENAME
        self.documents_dir.mkdir(parents=True, exist_ok=True)
        self.conversations_dir.mkdir(parents=True, exist_ok=True)

    # Documents --------------------------------------------------------------

    def _document_log(self, document_id: str) -> _EventLog:
        return _EventLog(self.documents_dir / f"{document_id}.events", document_id)

    def append_document_event(
        self, document_id: str, revision: Revision, change_payload: dict
    ) -> None:
        self._document_log(document_id).append({
            "seq": revision.index,
            "revision": revision.to_wire(),
            "change_payload": change_payload,
        })

    def load_document(self, document_id: str) -> PlanDocument:
        """Replay the event log. KeyError when unknown, StorageCorrupt when
        the log fails verification."""
        records = self._document_log(document_id).read()
        if not records:
            raise KeyError(document_id)
        revisions: list[Revision] = []
        payloads: list[dict] = []
        for i, record in enumerate(records):
            if record.get("seq") != i:
                raise StorageCorrupt(document_id, f"sequence gap at line {i}")
            try:
                revisions.append(Revision.from_wire(record["revision"]))
                payloads.append(record["change_payload"])
            except (KeyError, TypeError, ValueError) as exc:
                raise StorageCorrupt(document_id, f"bad record at line {i}: {exc}")
        try:
            return replay(revisions, payloads)
        except ModelError as exc:
            raise StorageCorrupt(document_id, f"replay failed: {exc}")

    def document_exists(self, document_id: str) -> bool:
        return (self.documents_dir / f"{document_id}.events").is_file()

    def list_document_ids(self) -> list[str]:
        return sorted(
            p.name[: -len(".events")]
            for p in self.documents_dir.glob("*.events")
        )

    # Conversations ----------------------------------------------------------

    def _conversation_log(self, conversation_id: str) -> _EventLog:
        return _EventLog(
            self.conversations_dir / f"{conversation_id}.events", conversation_id
        )

    def append_turn(self, conversation_id: str, turn: ChatTurn) -> None:
        self._conversation_log(conversation_id).append({
            "seq": turn.turn_index,
            "turn": turn.to_wire(),
        })

    def load_turns(self, conversation_id: str) -> list[ChatTurn]:
        try:
            records = self._conversation_log(conversation_id).read()
        except KeyError:
            return []
        turns: list[ChatTurn] = []
        for i, record in enumerate(records):
            if record.get("seq") != i:
                raise StorageCorrupt(conversation_id, f"sequence gap at line {i}")
            try:
                turns.append(ChatTurn.from_wire(record["turn"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise StorageCorrupt(conversation_id, f"bad record at line {i}: {exc}")
        return turns

    # Accounts ---------------------------------------------------------------

    def load_accounts(self) -> list[dict]:
        try:
            data = json.loads(self.accounts_path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return []
        return data.get("accounts", [])

    def save_accounts(self, accounts: list[dict]) -> None:
        tmp = self.accounts_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump({"accounts": accounts}, handle, indent=2, sort_keys=True)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, self.accounts_path)
        _fsync_dir(self.accounts_path.parent)

    # Counters ---------------------------------------------------------------

    def next_numbered_id(self, prefix: str, existing: Optional[list[str]] = None) -> str:
        """Smallest unused '<prefix>-NNNNNN' given ids already on disk."""
        if existing is None:
            existing = self.list_document_ids()
        highest = 0
        for name in existing:
            if name.startswith(prefix + "-"):
                tail = name[len(prefix) + 1:]
                if tail.isdigit():
                    highest = max(highest, int(tail))
        return f"{prefix}-{highest + 1:06d}"
