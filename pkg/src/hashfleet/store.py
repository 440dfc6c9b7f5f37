"""Embedded transactional store for users, nodes, jobs, tasks and results.

SQLite-backed; every write commits before returning so API acknowledgments
imply durability. (job_id, hash) is the primary key of cracked_results,
which is what makes replayed crack messages idempotent.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from pathlib import Path

from .models import (
    AttackMode,
    BruteForce,
    Combinator,
    CrackedResult,
    Dictionary,
    EngineKind,
    HashAlgorithm,
    HashSlice,
    Job,
    JobStatus,
    KeyspaceSlice,
    NodeProfile,
    RuleBased,
    TaskAssignment,
    TaskPayload,
    TaskStatus,
    WordlistSlice,
)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    user_id TEXT PRIMARY KEY,
    username TEXT UNIQUE NOT NULL,
    role TEXT NOT NULL,
    salt BLOB NOT NULL,
    pw_hash BLOB NOT NULL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS nodes (
    node_id TEXT PRIMARY KEY,
    agent_name TEXT UNIQUE NOT NULL,
    os TEXT NOT NULL,
    arch TEXT NOT NULL,
    engine TEXT NOT NULL,
    power_json TEXT NOT NULL,
    connected INTEGER NOT NULL,
    last_seen REAL NOT NULL,
    suspect_count INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS jobs (
    job_id TEXT PRIMARY KEY,
    owner TEXT NOT NULL,
    algorithm TEXT NOT NULL,
    mode_json TEXT NOT NULL,
    hashes_json TEXT NOT NULL,
    requested_nodes_json TEXT NOT NULL,
    status TEXT NOT NULL,
    created_at REAL NOT NULL,
    finished_at REAL,
    partial_results INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS tasks (
    task_id TEXT PRIMARY KEY,
    job_id TEXT NOT NULL,
    node_id TEXT NOT NULL,
    payload_json TEXT NOT NULL,
    status TEXT NOT NULL,
    tried INTEGER NOT NULL DEFAULT 0,
    speed_hps REAL NOT NULL DEFAULT 0,
    detail TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS cracked_results (
    job_id TEXT NOT NULL,
    hash TEXT NOT NULL,
    plaintext_hex TEXT NOT NULL,
    node_id TEXT NOT NULL,
    at REAL NOT NULL,
    PRIMARY KEY (job_id, hash)
);
CREATE TABLE IF NOT EXISTS activity_events (
    event_id INTEGER PRIMARY KEY AUTOINCREMENT,
    at REAL NOT NULL,
    kind TEXT NOT NULL,
    user_id TEXT,
    job_id TEXT,
    node_id TEXT,
    detail TEXT
);
"""


def _mode_to_json(mode: AttackMode) -> str:
    if isinstance(mode, BruteForce):
        obj = {"kind": "brute", "min_len": mode.min_len, "max_len": mode.max_len}
    elif isinstance(mode, Dictionary):
        obj = {"kind": "dictionary", "wordlists": list(mode.wordlists)}
    elif isinstance(mode, RuleBased):
        obj = {"kind": "rules", "wordlists": list(mode.wordlists), "rules": list(mode.rules)}
    else:
        obj = {"kind": "combinator", "left": mode.left, "right": mode.right}
    return json.dumps(obj)


def _mode_from_json(text: str) -> AttackMode:
    obj = json.loads(text)
    kind = obj["kind"]
    if kind == "brute":
        return BruteForce(min_len=obj["min_len"], max_len=obj["max_len"])
    if kind == "dictionary":
        return Dictionary(wordlists=tuple(obj["wordlists"]))
    if kind == "rules":
        return RuleBased(wordlists=tuple(obj["wordlists"]), rules=tuple(obj["rules"]))
    return Combinator(left=obj["left"], right=obj["right"])


def _payload_to_json(payload: TaskPayload) -> str:
    if isinstance(payload, HashSlice):
        obj = {"kind": "hash_slice", "hashes": list(payload.hashes)}
    elif isinstance(payload, WordlistSlice):
        obj = {"kind": "wordlist_slice", "hashes": list(payload.hashes),
               "wordlists": list(payload.wordlists)}
    else:
        obj = {"kind": "keyspace_slice", "hashes": list(payload.hashes),
               "start": str(payload.start), "end": str(payload.end),
               "length": payload.length}
    return json.dumps(obj)


def _payload_from_json(text: str) -> TaskPayload:
    obj = json.loads(text)
    kind = obj["kind"]
    if kind == "hash_slice":
        return HashSlice(hashes=tuple(obj["hashes"]))
    if kind == "wordlist_slice":
        return WordlistSlice(hashes=tuple(obj["hashes"]), wordlists=tuple(obj["wordlists"]))
    return KeyspaceSlice(hashes=tuple(obj["hashes"]), start=int(obj["start"]),
                         end=int(obj["end"]), length=obj["length"])


class Store:
    """Serialized access to one SQLite database file (":memory:" works too)."""

    def __init__(self, path: str | Path = ":memory:"):
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- users ---------------------------------------------------------

    def insert_user(self, user_id: str, username: str, role: str,
                    salt: bytes, pw_hash: bytes, created_at: float) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO users VALUES (?,?,?,?,?,?)",
                (user_id, username, role, salt, pw_hash, created_at),
            )

    def get_user_by_name(self, username: str):
        with self._lock:
            row = self._conn.execute(
                "SELECT user_id, username, role, salt, pw_hash FROM users WHERE username=?",
                (username,),
            ).fetchone()
        return row

    def list_users(self) -> list[tuple]:
        with self._lock:
            return self._conn.execute(
                "SELECT user_id, username, role, created_at FROM users ORDER BY created_at"
            ).fetchall()

    def count_users(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM users").fetchone()[0]

    # -- nodes ---------------------------------------------------------

    def upsert_node(self, profile: NodeProfile) -> None:
        power_json = json.dumps({a.value: p for a, p in profile.power.items()})
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO nodes VALUES (?,?,?,?,?,?,?,?,?) "
                "ON CONFLICT(node_id) DO UPDATE SET os=excluded.os, arch=excluded.arch, "
                "engine=excluded.engine, power_json=excluded.power_json, "
                "connected=excluded.connected, last_seen=excluded.last_seen, "
                "suspect_count=excluded.suspect_count",
                (profile.node_id, profile.agent_name, profile.os, profile.arch,
                 profile.engine_kind.value, power_json, int(profile.connected),
                 profile.last_seen, profile.suspect_count),
            )

    def load_nodes(self) -> list[NodeProfile]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT node_id, agent_name, os, arch, engine, power_json, "
                "connected, last_seen, suspect_count FROM nodes"
            ).fetchall()
        return [
            NodeProfile(
                node_id=r[0], agent_name=r[1], os=r[2], arch=r[3],
                engine_kind=EngineKind(r[4]),
                power={HashAlgorithm(k): v for k, v in json.loads(r[5]).items()},
                connected=bool(r[6]), last_seen=r[7], suspect_count=r[8],
            )
            for r in rows
        ]

    # -- jobs ----------------------------------------------------------

    def insert_job(self, job: Job) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO jobs VALUES (?,?,?,?,?,?,?,?,?,?)",
                (job.id, job.owner, job.algorithm.value, _mode_to_json(job.mode),
                 json.dumps(list(job.hashes)), json.dumps(list(job.requested_nodes)),
                 job.status.value, job.created_at, job.finished_at,
                 int(job.partial_results)),
            )

    def update_job(self, job: Job) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE jobs SET status=?, finished_at=?, partial_results=? WHERE job_id=?",
                (job.status.value, job.finished_at, int(job.partial_results), job.id),
            )

    def load_jobs(self) -> list[Job]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT job_id, owner, algorithm, mode_json, hashes_json, "
                "requested_nodes_json, status, created_at, finished_at, partial_results "
                "FROM jobs ORDER BY created_at"
            ).fetchall()
        return [
            Job(
                id=r[0], owner=r[1], algorithm=HashAlgorithm(r[2]),
                mode=_mode_from_json(r[3]), hashes=tuple(json.loads(r[4])),
                requested_nodes=tuple(json.loads(r[5])), status=JobStatus(r[6]),
                created_at=r[7], finished_at=r[8], partial_results=bool(r[9]),
            )
            for r in rows
        ]

    # -- tasks ---------------------------------------------------------

    def insert_task(self, task: TaskAssignment) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO tasks VALUES (?,?,?,?,?,?,?,?)",
                (task.task_id, task.job_id, task.node_id,
                 _payload_to_json(task.payload), task.status.value,
                 task.tried, task.speed_hps, task.detail),
            )

    def update_task(self, task: TaskAssignment) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE tasks SET status=?, tried=?, speed_hps=?, detail=? WHERE task_id=?",
                (task.status.value, task.tried, task.speed_hps, task.detail, task.task_id),
            )

    def delete_task(self, task_id: str) -> None:
        with self._lock, self._conn:
            self._conn.execute("DELETE FROM tasks WHERE task_id=?", (task_id,))

    def load_tasks(self) -> list[TaskAssignment]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT task_id, job_id, node_id, payload_json, status, tried, "
                "speed_hps, detail FROM tasks"
            ).fetchall()
        return [
            TaskAssignment(
                task_id=r[0], job_id=r[1], node_id=r[2],
                payload=_payload_from_json(r[3]), status=TaskStatus(r[4]),
                tried=r[5], speed_hps=r[6], detail=r[7],
            )
            for r in rows
        ]

    # -- cracked results -----------------------------------------------

    def insert_cracked(self, result: CrackedResult) -> bool:
        """Insert if absent; returns False on a (job_id, hash) duplicate."""
        with self._lock, self._conn:
            cur = self._conn.execute(
                "INSERT OR IGNORE INTO cracked_results VALUES (?,?,?,?,?)",
                (result.job_id, result.hash, result.plaintext.hex(),
                 result.node_id, result.at),
            )
            return cur.rowcount == 1

    def cracked_for_job(self, job_id: str) -> list[CrackedResult]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT job_id, hash, plaintext_hex, node_id, at FROM cracked_results "
                "WHERE job_id=? ORDER BY at, rowid",
                (job_id,),
            ).fetchall()
        return [
            CrackedResult(job_id=r[0], hash=r[1], plaintext=bytes.fromhex(r[2]),
                          node_id=r[3], at=r[4])
            for r in rows
        ]

    def cracked_count(self, job_id: str) -> int:
        with self._lock:
            return self._conn.execute(
                "SELECT COUNT(*) FROM cracked_results WHERE job_id=?", (job_id,)
            ).fetchone()[0]

    # -- activity log ----------------------------------------------------

    def log_event(self, at: float, kind: str, *, user_id: str | None = None,
                  job_id: str | None = None, node_id: str | None = None,
                  detail: str = "") -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO activity_events (at, kind, user_id, job_id, node_id, detail) "
                "VALUES (?,?,?,?,?,?)",
                (at, kind, user_id, job_id, node_id, detail),
            )

    def events(self, kind: str | None = None) -> list[tuple]:
        with self._lock:
            if kind is None:
                return self._conn.execute(
                    "SELECT at, kind, user_id, job_id, node_id, detail "
                    "FROM activity_events ORDER BY event_id"
                ).fetchall()
            return self._conn.execute(
                "SELECT at, kind, user_id, job_id, node_id, detail "
                "FROM activity_events WHERE kind=? ORDER BY event_id",
                (kind,),
            ).fetchall()
