"""Agent-side cracking engine.

Pure-CPU digest loop over four candidate generators (brute force,
dictionary, rule expansion, combinator). Candidate order over the
brute-force keyspace is the big-endian base-95 expansion of the index
over ascending printable ASCII, which is what makes keyspace splitting
well defined: concatenating per-range enumerations reproduces the full
enumeration byte for byte.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator, Sequence, Union

from .distribution import KeyspaceRange
from .models import HashAlgorithm

CHARSET = bytes(range(0x20, 0x7F))  # 95 printable ASCII bytes, ascending
CHARSET_SIZE = len(CHARSET)

# Design cap on candidate length; rule appends beyond this are a caller error.
MAX_CANDIDATE_LEN = 256

PROGRESS_EVERY = 100_000

_HASHERS: dict[HashAlgorithm, Callable] = {
    HashAlgorithm.MD5: hashlib.md5,
    HashAlgorithm.SHA1: hashlib.sha1,
    HashAlgorithm.SHA256: hashlib.sha256,
}


class EngineError(Exception):
    pass


class IndexOutOfRange(EngineError):
    pass


class RuleParseError(EngineError):
    pass


class FileUnreadable(EngineError):
    pass


class EngineAborted(EngineError):
    """Raised out of run_attack when the stop signal is set."""


def digest(algorithm: HashAlgorithm, data: bytes) -> str:
    return _HASHERS[algorithm](data).hexdigest()


def hasher(algorithm: HashAlgorithm) -> Callable:
    """Constructor for raw digest objects (hot-loop use)."""
    return _HASHERS[algorithm]


# --------------------------------------------------------------------------
# Keyspace enumeration


def index_to_candidate(length: int, index: int) -> bytes:
    """Big-endian base-95 expansion of index, left-padded to `length`."""
    if not (0 <= index < CHARSET_SIZE**length):
        raise IndexOutOfRange(f"index {index} outside [0, 95**{length})")
    out = bytearray(length)
    for pos in range(length - 1, -1, -1):
        index, d = divmod(index, CHARSET_SIZE)
        out[pos] = CHARSET[d]
    return bytes(out)


def candidate_to_index(candidate: bytes) -> int:
    value = 0
    for b in candidate:
        d = b - 0x20
        if not (0 <= d < CHARSET_SIZE):
            raise IndexOutOfRange(f"byte {b:#x} outside the 95-char charset")
        value = value * CHARSET_SIZE + d
    return value


def brute_candidates(rng: KeyspaceRange) -> Iterator[bytes]:
    """Yield candidates for indices [start, end) in ascending order.

    Runs as an odometer over a byte buffer instead of re-expanding every
    index; this loop dominates brute-force throughput.
    """
    length = rng.length
    first = index_to_candidate(length, rng.start)
    digits = [b - 0x20 for b in first]
    buf = bytearray(first)
    charset = CHARSET
    last = length - 1
    for _ in range(rng.end - rng.start):
        yield bytes(buf)
        pos = last
        while pos >= 0:
            d = digits[pos] + 1
            if d < CHARSET_SIZE:
                digits[pos] = d
                buf[pos] = charset[d]
                break
            digits[pos] = 0
            buf[pos] = 0x20
            pos -= 1


# --------------------------------------------------------------------------
# Rule language: ':' 'l' 'u' 'c' 'r' 'd' '$X' '^X'


@dataclass(frozen=True)
class Rule:
    source: str
    ops: tuple[tuple[str, bytes], ...]

    def apply(self, word: bytes) -> bytes:
        for op, arg in self.ops:
            if op == ":":
                pass
            elif op == "l":
                word = word.lower()
            elif op == "u":
                word = word.upper()
            elif op == "c":
                word = word.capitalize()
            elif op == "r":
                word = word[::-1]
            elif op == "d":
                word = word + word
            elif op == "$":
                word = word + arg
            else:  # '^'
                word = arg + word
        return word


def parse_rule(source: str) -> Rule:
    """Compile a rule string; unknown ops or truncated arguments fail here."""
    ops: list[tuple[str, bytes]] = []
    raw = source.encode("latin-1", errors="strict")
    i = 0
    while i < len(raw):
        op = chr(raw[i])
        if op in ":lucrd":
            ops.append((op, b""))
            i += 1
        elif op in "$^":
            if i + 1 >= len(raw):
                raise RuleParseError(f"rule {source!r}: {op!r} at position {i} is missing its argument")
            ops.append((op, raw[i + 1 : i + 2]))
            i += 2
        else:
            raise RuleParseError(f"rule {source!r}: unknown op {op!r} at position {i}")
    return Rule(source=source, ops=tuple(ops))


def apply_rule(rule: str | Rule, word: bytes) -> bytes:
    if isinstance(rule, str):
        rule = parse_rule(rule)
    return rule.apply(word)


# --------------------------------------------------------------------------
# File-backed generators


def _read_words(path: Path | str) -> Iterator[bytes]:
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise FileUnreadable(f"cannot read wordlist {path}: {exc}") from exc
    with f:
        for line in f:
            line = line.rstrip(b"\n")
            if line.endswith(b"\r"):
                line = line[:-1]
            yield line


def wordlist_candidates(paths: Sequence[Path | str]) -> Iterator[bytes]:
    for path in paths:
        yield from _read_words(path)


def rule_candidates(paths: Sequence[Path | str], rules: Sequence[str | Rule]) -> Iterator[bytes]:
    """Word-major expansion: every rule applied to each word in turn.

    Yields exactly len(words) * len(rules) candidates.
    """
    compiled = [parse_rule(r) if isinstance(r, str) else r for r in rules]
    for word in wordlist_candidates(paths):
        for rule in compiled:
            yield rule.apply(word)


def combinator_candidates(left: Path | str, right: Path | str) -> Iterator[bytes]:
    """Concatenate every left word with every right word (left-major)."""
    right_words = list(_read_words(right))
    for l_word in _read_words(left):
        for r_word in right_words:
            yield l_word + r_word


# --------------------------------------------------------------------------
# Attack loop


@dataclass(frozen=True)
class BruteGen:
    range: KeyspaceRange


@dataclass(frozen=True)
class WordlistGen:
    paths: tuple[str, ...]


@dataclass(frozen=True)
class RulesGen:
    paths: tuple[str, ...]
    rules: tuple[str, ...]


@dataclass(frozen=True)
class CombinatorGen:
    left: str
    right: str


GeneratorSpec = Union[BruteGen, WordlistGen, RulesGen, CombinatorGen]


@dataclass(frozen=True)
class EngineTask:
    algorithm: HashAlgorithm
    targets: frozenset[str]  # lowercase hex digests
    generator: GeneratorSpec


class Outcome(Enum):
    ALL_CRACKED = "all_cracked"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class Cracked:
    hash: str
    plaintext: bytes


@dataclass(frozen=True)
class Progress:
    tried: int
    speed_hps: float


@dataclass(frozen=True)
class Finished:
    outcome: Outcome


EngineEvent = Union[Cracked, Progress, Finished]


def candidates_for(spec: GeneratorSpec) -> Iterator[bytes]:
    if isinstance(spec, BruteGen):
        return brute_candidates(spec.range)
    if isinstance(spec, WordlistGen):
        return wordlist_candidates(spec.paths)
    if isinstance(spec, RulesGen):
        return rule_candidates(spec.paths, spec.rules)
    if isinstance(spec, CombinatorGen):
        return combinator_candidates(spec.left, spec.right)
    raise EngineError(f"unknown generator spec {spec!r}")


def run_attack(
    task: EngineTask,
    emit: Callable[[EngineEvent], None],
    *,
    progress_every: int = PROGRESS_EVERY,
    stop=None,
) -> Outcome:
    """Stream candidates, emitting Cracked/Progress/Finished events.

    Cracked fires the moment a digest matches a remaining target; the loop
    exits as soon as the target set empties, without touching another
    candidate. Progress fires every `progress_every` candidates and once
    at the end. `stop` (a threading.Event) is polled at progress points
    and aborts the run via EngineAborted.
    """
    if not task.targets:
        raise EngineError("target set is empty")
    make = _HASHERS[task.algorithm]
    remaining = {bytes.fromhex(h): h for h in task.targets}
    started = time.perf_counter()
    tried = 0
    next_report = progress_every

    def speed() -> float:
        elapsed = time.perf_counter() - started
        return tried / elapsed if elapsed > 0 else 0.0

    for candidate in candidates_for(task.generator):
        tried += 1
        d = make(candidate).digest()
        if d in remaining:
            emit(Cracked(remaining.pop(d), candidate))
            if not remaining:
                emit(Progress(tried, speed()))
                emit(Finished(Outcome.ALL_CRACKED))
                return Outcome.ALL_CRACKED
        if tried >= next_report:
            emit(Progress(tried, speed()))
            next_report = tried + progress_every
            if stop is not None and stop.is_set():
                raise EngineAborted("stop requested")

    emit(Progress(tried, speed()))
    emit(Finished(Outcome.EXHAUSTED))
    return Outcome.EXHAUSTED


def self_benchmark(
    algorithm: HashAlgorithm,
    *,
    max_candidates: int = 1_000_000,
    time_budget: float = 0.5,
    candidate_length: int = 8,
) -> float:
    """Measured digest throughput in hashes/second, always positive.

    Digests a fixed keyspace prefix of length-8 candidates until either
    the candidate budget or the time budget runs out.
    """
    make = _HASHERS[algorithm]
    rng = KeyspaceRange(start=0, end=max_candidates, length=candidate_length)
    started = time.perf_counter()
    count = 0
    for candidate in brute_candidates(rng):
        make(candidate).digest()
        count += 1
        if count % 10_000 == 0 and time.perf_counter() - started >= time_budget:
            break
    elapsed = time.perf_counter() - started
    return count / elapsed if elapsed > 0 else float(count or 1)
