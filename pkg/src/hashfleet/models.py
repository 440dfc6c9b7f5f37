"""Core vocabulary types shared by every module, plus job-request validation.

Everything here is a plain value type: safe to share across threads and
to serialize into the store or onto the wire. Plaintexts are byte strings
throughout because wordlists may contain non-UTF-8 bytes.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Union

# Brute-force jobs above this candidate length are refused at validation
# time (95**7 is already ~7e13 candidates). The estimator has no such cap.
DEFAULT_MAX_BRUTE_LENGTH = 6


class DomainError(Exception):
    """Base class for job/request validation failures."""

    code = "domain_error"
    field: str | None = None


class InvalidHash(DomainError):
    code = "invalid_hash"
    field = "hashes"

    def __init__(self, line_no: int, line: str = ""):
        self.line_no = line_no
        self.line = line
        super().__init__(f"line {line_no}: not a valid hex digest: {line!r}")


class EmptyHashes(DomainError):
    code = "empty_hashes"
    field = "hashes"


class UnknownNode(DomainError):
    code = "unknown_node"
    field = "node_ids"


class UnknownWordlist(DomainError):
    code = "unknown_wordlist"
    field = "wordlists"


class ModeConstraintViolated(DomainError):
    code = "mode_constraint"
    field = "mode"


class HashAlgorithm(str, Enum):
    MD5 = "md5"
    SHA1 = "sha1"
    SHA256 = "sha256"

    @property
    def hex_length(self) -> int:
        return _HEX_LENGTHS[self]


_HEX_LENGTHS = {
    HashAlgorithm.MD5: 32,
    HashAlgorithm.SHA1: 40,
    HashAlgorithm.SHA256: 64,
}

_HEX_RE = {alg: re.compile(r"^[0-9a-fA-F]{%d}$" % n) for alg, n in _HEX_LENGTHS.items()}


def is_valid_digest(algorithm: HashAlgorithm, text: str) -> bool:
    return bool(_HEX_RE[algorithm].match(text))


# --------------------------------------------------------------------------
# Attack modes


@dataclass(frozen=True)
class BruteForce:
    min_len: int
    max_len: int


@dataclass(frozen=True)
class Dictionary:
    wordlists: tuple[str, ...]


@dataclass(frozen=True)
class RuleBased:
    wordlists: tuple[str, ...]
    rules: tuple[str, ...]


@dataclass(frozen=True)
class Combinator:
    left: str
    right: str


AttackMode = Union[BruteForce, Dictionary, RuleBased, Combinator]


def mode_name(mode: AttackMode) -> str:
    """Wire/storage name of an attack mode."""
    return _MODE_NAMES[type(mode)]


_MODE_NAMES = {
    BruteForce: "brute",
    Dictionary: "dictionary",
    RuleBased: "rules",
    Combinator: "combinator",
}


def validate_mode(mode: AttackMode, max_brute_length: int = DEFAULT_MAX_BRUTE_LENGTH) -> None:
    """Raise ModeConstraintViolated unless the mode payload is well-formed."""
    if isinstance(mode, BruteForce):
        if not (1 <= mode.min_len <= mode.max_len <= max_brute_length):
            raise ModeConstraintViolated(
                f"brute-force lengths must satisfy 1 <= min <= max <= {max_brute_length}, "
                f"got min={mode.min_len} max={mode.max_len}"
            )
    elif isinstance(mode, Dictionary):
        if not mode.wordlists:
            raise ModeConstraintViolated("dictionary attack needs at least one wordlist")
    elif isinstance(mode, RuleBased):
        if not mode.wordlists:
            raise ModeConstraintViolated("rule-based attack needs at least one wordlist")
        if not mode.rules:
            raise ModeConstraintViolated("rule-based attack needs at least one rule")
    elif isinstance(mode, Combinator):
        if not mode.left or not mode.right:
            raise ModeConstraintViolated("combinator attack needs exactly two wordlists")
    else:  # pragma: no cover - exhaustive by construction
        raise ModeConstraintViolated(f"unknown attack mode {mode!r}")


def mode_wordlists(mode: AttackMode) -> tuple[str, ...]:
    """Every wordlist id a mode references (combinator sides may repeat)."""
    if isinstance(mode, (Dictionary, RuleBased)):
        return mode.wordlists
    if isinstance(mode, Combinator):
        return (mode.left, mode.right)
    return ()


# --------------------------------------------------------------------------
# Jobs and tasks


class JobStatus(str, Enum):
    CREATED = "created"
    DISTRIBUTING = "distributing"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


# Distributing -> Failed covers jobs whose every node vanishes before the
# plan is accepted; there is nothing to run so Running is never reached.
JOB_TRANSITIONS: dict[JobStatus, frozenset[JobStatus]] = {
    JobStatus.CREATED: frozenset({JobStatus.DISTRIBUTING}),
    JobStatus.DISTRIBUTING: frozenset({JobStatus.RUNNING, JobStatus.FAILED}),
    JobStatus.RUNNING: frozenset({JobStatus.COMPLETED, JobStatus.FAILED}),
    JobStatus.COMPLETED: frozenset(),
    JobStatus.FAILED: frozenset(),
}


def check_job_transition(old: JobStatus, new: JobStatus) -> None:
    if new not in JOB_TRANSITIONS[old]:
        raise ValueError(f"illegal job transition {old.value} -> {new.value}")


class TaskStatus(str, Enum):
    PENDING = "pending"
    SENT = "sent"
    RUNNING = "running"
    EXHAUSTED = "exhausted"
    DONE = "done"
    LOST = "lost"
    FAILED = "failed"


TERMINAL_TASK_STATUSES = frozenset(
    {TaskStatus.EXHAUSTED, TaskStatus.DONE, TaskStatus.LOST, TaskStatus.FAILED}
)

# Statuses that count as "the work of this slice was carried out".
SUCCESSFUL_TASK_STATUSES = frozenset({TaskStatus.EXHAUSTED, TaskStatus.DONE})


class EngineKind(str, Enum):
    BUILTIN = "builtin"
    EXTERNAL = "external"


@dataclass
class NodeProfile:
    node_id: str
    agent_name: str
    os: str
    arch: str
    engine_kind: EngineKind
    power: dict[HashAlgorithm, float]  # hashes per second, strictly positive
    connected: bool = False
    last_seen: float = 0.0
    suspect_count: int = 0


@dataclass(frozen=True)
class WordlistMeta:
    id: str  # file stem
    path: str
    line_count: int
    byte_size: int


@dataclass
class Job:
    id: str
    owner: str
    algorithm: HashAlgorithm
    mode: AttackMode
    hashes: tuple[str, ...]  # deduplicated, lowercase, first-seen order
    requested_nodes: tuple[str, ...]
    status: JobStatus = JobStatus.CREATED
    created_at: float = 0.0
    finished_at: float | None = None
    partial_results: bool = False

    def transition(self, new: JobStatus) -> None:
        check_job_transition(self.status, new)
        self.status = new


@dataclass(frozen=True)
class HashSlice:
    hashes: tuple[str, ...]


@dataclass(frozen=True)
class WordlistSlice:
    hashes: tuple[str, ...]
    wordlists: tuple[str, ...]


@dataclass(frozen=True)
class KeyspaceSlice:
    hashes: tuple[str, ...]
    start: int
    end: int
    length: int


TaskPayload = Union[HashSlice, WordlistSlice, KeyspaceSlice]


@dataclass
class TaskAssignment:
    task_id: str
    job_id: str
    node_id: str
    payload: TaskPayload
    status: TaskStatus = TaskStatus.PENDING
    tried: int = 0
    speed_hps: float = 0.0
    detail: str = ""


@dataclass(frozen=True)
class CrackedResult:
    job_id: str
    hash: str
    plaintext: bytes
    node_id: str
    at: float


# --------------------------------------------------------------------------
# Operations


def parse_hash_list(raw: str, algorithm: HashAlgorithm) -> list[str]:
    """Parse a hash-list document: one hex digest per line, LF or CRLF.

    Returns deduplicated lowercase digests in first-seen order. Blank lines
    and surrounding whitespace are ignored. Raises InvalidHash with the
    1-based line number of the first offending non-blank line.
    """
    seen: dict[str, None] = {}
    for line_no, line in enumerate(raw.split("\n"), start=1):
        text = line.strip()
        if not text:
            continue
        if not is_valid_digest(algorithm, text):
            raise InvalidHash(line_no, text)
        seen.setdefault(text.lower())
    return list(seen)


@dataclass(frozen=True)
class JobRequest:
    owner: str
    algorithm: HashAlgorithm
    mode: AttackMode
    hashes: tuple[str, ...]
    node_ids: tuple[str, ...]


def validate_job(
    request: JobRequest,
    registry: Iterable[NodeProfile],
    wordlists: Iterable[WordlistMeta],
    *,
    job_id: str,
    now: float | None = None,
    max_brute_length: int = DEFAULT_MAX_BRUTE_LENGTH,
) -> Job:
    """Gate a user request into a Created Job.

    Checks: hashes present and valid for the algorithm, every requested
    node registered and currently connected, every referenced wordlist
    registered, and the mode payload within its constraints.
    """
    validate_mode(request.mode, max_brute_length)

    if not request.hashes:
        raise EmptyHashes("no hashes submitted")
    cleaned: dict[str, None] = {}
    for i, h in enumerate(request.hashes, start=1):
        text = h.strip()
        if not is_valid_digest(request.algorithm, text):
            raise InvalidHash(i, text)
        cleaned.setdefault(text.lower())

    if not request.node_ids:
        raise UnknownNode("no nodes requested")
    live = {n.node_id for n in registry if n.connected}
    for node_id in request.node_ids:
        if node_id not in live:
            raise UnknownNode(f"node {node_id!r} is not connected")

    known = {w.id for w in wordlists}
    for wl in mode_wordlists(request.mode):
        if wl not in known:
            raise UnknownWordlist(f"wordlist {wl!r} is not registered")

    return Job(
        id=job_id,
        owner=request.owner,
        algorithm=request.algorithm,
        mode=request.mode,
        hashes=tuple(cleaned),
        requested_nodes=tuple(dict.fromkeys(request.node_ids)),
        status=JobStatus.CREATED,
        created_at=time.time() if now is None else now,
    )
