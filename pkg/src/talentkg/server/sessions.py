"""Chat session persistence: one SQLite file, JSON blob per session."""

from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import asdict
from pathlib import Path

from ..agents.pipeline import ChatSession, ChatTurn, RankedCandidate


def _session_to_dict(session: ChatSession) -> dict:
    return asdict(session)


def _session_from_dict(data: dict) -> ChatSession:
    session = ChatSession(
        session_id=data["session_id"],
        author_id=data.get("author_id"),
        seed=data.get("seed", 0),
        ab_mode=data.get("ab_mode", False),
        turn_count=data.get("turn_count", 0),
        preference=data.get("preference"),
        vote_audit=data.get("vote_audit", []),
        last_query=data.get("last_query"),
        last_thoughts=data.get("last_thoughts"),
    )
    session.history = [ChatTurn(**t) for t in data.get("history", [])]
    session.last_ranked = [RankedCandidate(**c) for c in data.get("last_ranked", [])]
    session.ab_lists = {
        label: (pair[0], [RankedCandidate(**c) for c in pair[1]])
        for label, pair in data.get("ab_lists", {}).items()
    }
    return session


class SessionStore:
    """Thread-safe store; per-session locks serialize chat turns."""

    def __init__(self, path: str | Path = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.execute(
            "CREATE TABLE IF NOT EXISTS sessions (session_id TEXT PRIMARY KEY, body TEXT NOT NULL)"
        )
        self._conn.commit()
        self._db_lock = threading.Lock()
        self._turn_locks: dict[str, threading.Lock] = {}

    def turn_lock(self, session_id: str) -> threading.Lock:
        with self._db_lock:
            return self._turn_locks.setdefault(session_id, threading.Lock())

    def load(self, session_id: str) -> ChatSession | None:
        with self._db_lock:
            row = self._conn.execute(
                "SELECT body FROM sessions WHERE session_id = ?", (session_id,)
            ).fetchone()
        return _session_from_dict(json.loads(row[0])) if row else None

    def save(self, session: ChatSession) -> None:
        body = json.dumps(_session_to_dict(session), ensure_ascii=False)
        with self._db_lock:
            self._conn.execute(
                "INSERT INTO sessions (session_id, body) VALUES (?, ?) "
                "ON CONFLICT(session_id) DO UPDATE SET body = excluded.body",
                (session.session_id, body),
            )
            self._conn.commit()

    def dump(self, session_id: str) -> dict | None:
        session = self.load(session_id)
        return _session_to_dict(session) if session else None
