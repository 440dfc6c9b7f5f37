"""Wire protocol for the agent<->coordinator websocket channel.

Every message is one JSON text frame with a "type" discriminator.
Keyspace bounds travel as decimal strings because 95**x exceeds the
53-bit float mantissa from x = 9 up; everything else is plain JSON.
Decoding is total: any input produces either a message or a typed
error naming what went wrong, never an unhandled exception.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Union

PROTOCOL_VERSION = 1

ATTACK_MODES = ("brute", "dictionary", "rules", "combinator")
ENGINE_KINDS = ("builtin", "external")
TASK_OUTCOMES = ("all_cracked", "exhausted", "failed")
ALGORITHMS = ("md5", "sha1", "sha256")


class ProtocolError(Exception):
    code = "protocol_error"


class MalformedFrame(ProtocolError):
    code = "malformed_frame"


class UnknownType(ProtocolError):
    code = "unknown_type"


class SchemaViolation(ProtocolError):
    code = "schema_violation"

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(message or f"missing or invalid field {field!r}")


@dataclass(frozen=True)
class Register:
    agent_name: str
    os: str
    arch: str
    engine: str  # "builtin" | "external"
    benchmark: dict[str, float]  # algorithm name -> hashes/second
    v: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class RegisterAck:
    node_id: str
    v: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class KeyspaceRef:
    length: int
    start: int
    end: int


@dataclass(frozen=True)
class TaskAssign:
    task_id: str
    job_id: str
    algorithm: str
    mode: str  # "brute" | "dictionary" | "rules" | "combinator"
    hashes: tuple[str, ...]
    keyspace: KeyspaceRef | None = None
    wordlists: tuple[str, ...] | None = None
    rules: tuple[str, ...] | None = None


@dataclass(frozen=True)
class TaskAccept:
    task_id: str


@dataclass(frozen=True)
class ProgressMsg:
    task_id: str
    tried: int
    speed_hps: float


@dataclass(frozen=True)
class CrackedMsg:
    task_id: str
    hash: str
    plaintext_hex: str


@dataclass(frozen=True)
class TaskDone:
    task_id: str
    outcome: str  # "all_cracked" | "exhausted" | "failed"
    detail: str | None = None


@dataclass(frozen=True)
class ErrorMsg:
    code: str
    message: str


@dataclass(frozen=True)
class Ping:
    pass


@dataclass(frozen=True)
class Pong:
    pass


ProtocolMessage = Union[
    Register, RegisterAck, TaskAssign, TaskAccept, ProgressMsg,
    CrackedMsg, TaskDone, ErrorMsg, Ping, Pong,
]


def encode_message(msg: ProtocolMessage) -> str:
    if isinstance(msg, Register):
        body: dict[str, Any] = {
            "type": "register", "v": msg.v, "agent_name": msg.agent_name,
            "os": msg.os, "arch": msg.arch, "engine": msg.engine,
            "benchmark": dict(msg.benchmark),
        }
    elif isinstance(msg, RegisterAck):
        body = {"type": "register_ack", "v": msg.v, "node_id": msg.node_id}
    elif isinstance(msg, TaskAssign):
        body = {
            "type": "task_assign", "task_id": msg.task_id, "job_id": msg.job_id,
            "algorithm": msg.algorithm, "attack": {"mode": msg.mode},
            "hashes": list(msg.hashes),
        }
        if msg.keyspace is not None:
            body["keyspace"] = {
                "length": msg.keyspace.length,
                "start": str(msg.keyspace.start),
                "end": str(msg.keyspace.end),
            }
        if msg.wordlists is not None:
            body["wordlists"] = list(msg.wordlists)
        if msg.rules is not None:
            body["rules"] = list(msg.rules)
    elif isinstance(msg, TaskAccept):
        body = {"type": "task_accept", "task_id": msg.task_id}
    elif isinstance(msg, ProgressMsg):
        body = {"type": "progress", "task_id": msg.task_id,
                "tried": msg.tried, "speed_hps": msg.speed_hps}
    elif isinstance(msg, CrackedMsg):
        body = {"type": "cracked", "task_id": msg.task_id,
                "hash": msg.hash, "plaintext_hex": msg.plaintext_hex}
    elif isinstance(msg, TaskDone):
        body = {"type": "task_done", "task_id": msg.task_id, "outcome": msg.outcome}
        if msg.detail is not None:
            body["detail"] = msg.detail
    elif isinstance(msg, ErrorMsg):
        body = {"type": "error", "code": msg.code, "message": msg.message}
    elif isinstance(msg, Ping):
        body = {"type": "ping"}
    elif isinstance(msg, Pong):
        body = {"type": "pong"}
    else:
        raise ProtocolError(f"cannot encode {type(msg).__name__}")
    return json.dumps(body, separators=(",", ":"))


# --------------------------------------------------------------------------
# Decoding


def _str(obj: dict, field: str) -> str:
    v = obj.get(field)
    if not isinstance(v, str):
        raise SchemaViolation(field)
    return v


def _str_choice(obj: dict, field: str, choices) -> str:
    v = _str(obj, field)
    if v not in choices:
        raise SchemaViolation(field, f"field {field!r} must be one of {choices}, got {v!r}")
    return v


def _int(obj: dict, field: str) -> int:
    v = obj.get(field)
    if not isinstance(v, int) or isinstance(v, bool):
        raise SchemaViolation(field)
    return v


def _number(obj: dict, field: str) -> float:
    v = obj.get(field)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaViolation(field)
    return float(v)


def _str_list(obj: dict, field: str) -> tuple[str, ...]:
    v = obj.get(field)
    if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
        raise SchemaViolation(field)
    return tuple(v)


def _decimal(obj: dict, field: str) -> int:
    v = obj.get(field)
    if not isinstance(v, str) or not v.isdigit():
        raise SchemaViolation(field, f"field {field!r} must be a decimal string")
    return int(v)


def _hex_str(obj: dict, field: str) -> str:
    v = _str(obj, field)
    try:
        bytes.fromhex(v)
    except ValueError:
        raise SchemaViolation(field, f"field {field!r} is not valid hex") from None
    return v


def decode_message(frame: str | bytes) -> ProtocolMessage:
    """Inverse of encode_message; raises a typed ProtocolError otherwise."""
    try:
        obj = json.loads(frame)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedFrame(f"frame is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedFrame("frame is not a JSON object")
    if "type" not in obj or not isinstance(obj["type"], str):
        raise SchemaViolation("type")
    mtype = obj["type"]

    if mtype == "register":
        bench = obj.get("benchmark")
        if not isinstance(bench, dict):
            raise SchemaViolation("benchmark")
        benchmark: dict[str, float] = {}
        for k, v in bench.items():
            if not isinstance(k, str) or isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaViolation("benchmark")
            benchmark[k] = float(v)
        return Register(
            v=_int(obj, "v"),
            agent_name=_str(obj, "agent_name"),
            os=_str(obj, "os"),
            arch=_str(obj, "arch"),
            engine=_str_choice(obj, "engine", ENGINE_KINDS),
            benchmark=benchmark,
        )
    if mtype == "register_ack":
        return RegisterAck(v=_int(obj, "v"), node_id=_str(obj, "node_id"))
    if mtype == "task_assign":
        mode_obj = obj.get("attack")
        if not isinstance(mode_obj, dict):
            raise SchemaViolation("attack")
        mode = _str_choice(mode_obj, "mode", ATTACK_MODES)
        if "hashes" not in obj:
            raise SchemaViolation("hashes")
        hashes = _str_list(obj, "hashes")
        for h in hashes:
            try:
                bytes.fromhex(h)
            except ValueError:
                raise SchemaViolation("hashes", f"hash {h!r} is not valid hex") from None
        keyspace = None
        wordlists = None
        rules = None
        if mode == "brute":
            ks = obj.get("keyspace")
            if not isinstance(ks, dict):
                raise SchemaViolation("keyspace")
            length = _int(ks, "length")
            start = _decimal(ks, "start")
            end = _decimal(ks, "end")
            if length < 1 or not (0 <= start < end):
                raise SchemaViolation("keyspace", "keyspace bounds out of order")
            keyspace = KeyspaceRef(length=length, start=start, end=end)
        else:
            wordlists = _str_list(obj, "wordlists")
            if not wordlists:
                raise SchemaViolation("wordlists", "wordlists must be non-empty")
            if mode == "combinator" and len(wordlists) != 2:
                raise SchemaViolation("wordlists", "combinator takes exactly two wordlists")
            if mode == "rules":
                rules = _str_list(obj, "rules")
                if not rules:
                    raise SchemaViolation("rules", "rules must be non-empty")
        return TaskAssign(
            task_id=_str(obj, "task_id"),
            job_id=_str(obj, "job_id"),
            algorithm=_str_choice(obj, "algorithm", ALGORITHMS),
            mode=mode,
            hashes=hashes,
            keyspace=keyspace,
            wordlists=wordlists,
            rules=rules,
        )
    if mtype == "task_accept":
        return TaskAccept(task_id=_str(obj, "task_id"))
    if mtype == "progress":
        tried = _int(obj, "tried")
        if tried < 0:
            raise SchemaViolation("tried", "tried must be >= 0")
        return ProgressMsg(task_id=_str(obj, "task_id"), tried=tried,
                           speed_hps=_number(obj, "speed_hps"))
    if mtype == "cracked":
        return CrackedMsg(task_id=_str(obj, "task_id"), hash=_hex_str(obj, "hash"),
                          plaintext_hex=_hex_str(obj, "plaintext_hex"))
    if mtype == "task_done":
        detail = obj.get("detail")
        if detail is not None and not isinstance(detail, str):
            raise SchemaViolation("detail")
        return TaskDone(task_id=_str(obj, "task_id"),
                        outcome=_str_choice(obj, "outcome", TASK_OUTCOMES),
                        detail=detail)
    if mtype == "error":
        return ErrorMsg(code=_str(obj, "code"), message=_str(obj, "message"))
    if mtype == "ping":
        return Ping()
    if mtype == "pong":
        return Pong()
    raise UnknownType(f"unknown message type {mtype!r}")
