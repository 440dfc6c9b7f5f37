"""Adapter that delegates a task to an external cracker process.

Builds a hashcat-compatible invocation (explicit hash type, attack mode,
hash file, wordlists or mask), runs it, and parses its outfile into the
same event stream run_attack produces. The exact flag mapping is
implementation-defined and documented here:

    -m 0|100|1400            md5 | sha1 | sha256
    -a 0                     dictionary (optionally with -r <rulefile>)
    -a 1 <left> <right>      combinator
    -a 3 <mask>              brute force, mask = "?a" * length,
                             --skip/--limit carry the range bounds
    --outfile <path>         cracked pairs, one "hash:plaintext" per line;
                             plaintext may be $HEX[..] wrapped
    --potfile-disable --quiet

Any failure (missing binary, spawn error, unparseable output) fails the
task with a typed error; the agent stays up.
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .engine import (
    BruteGen,
    CombinatorGen,
    Cracked,
    EngineEvent,
    EngineTask,
    Finished,
    Outcome,
    Progress,
    RulesGen,
    WordlistGen,
)
from .models import HashAlgorithm

HASH_TYPE_FLAGS = {
    HashAlgorithm.MD5: "0",
    HashAlgorithm.SHA1: "100",
    HashAlgorithm.SHA256: "1400",
}


class ExternalEngineError(Exception):
    pass


class BinaryMissing(ExternalEngineError):
    pass


class SpawnFailure(ExternalEngineError):
    pass


class ParseFailure(ExternalEngineError):
    pass


@dataclass(frozen=True)
class ExternalEngineConfig:
    binary_path: str | None = None
    timeout: float | None = None  # seconds; None = wait forever


def build_command(task: EngineTask, config: ExternalEngineConfig,
                  hash_file: str, outfile: str, rule_file: str | None = None) -> list[str]:
    """Translate an EngineTask into an external cracker argument vector."""
    if not config.binary_path:
        raise BinaryMissing("no external engine binary configured")
    cmd = [config.binary_path, "-m", HASH_TYPE_FLAGS[task.algorithm],
           "--potfile-disable", "--quiet", "--outfile", outfile]
    gen = task.generator
    if isinstance(gen, WordlistGen):
        cmd += ["-a", "0", hash_file, *gen.paths]
    elif isinstance(gen, RulesGen):
        if rule_file is None:
            raise SpawnFailure("rule-based task needs a rule file")
        cmd += ["-a", "0", "-r", rule_file, hash_file, *gen.paths]
    elif isinstance(gen, CombinatorGen):
        cmd += ["-a", "1", hash_file, gen.left, gen.right]
    elif isinstance(gen, BruteGen):
        rng = gen.range
        cmd += ["-a", "3", "--skip", str(rng.start),
                "--limit", str(rng.end - rng.start), hash_file, "?a" * rng.length]
    else:
        raise SpawnFailure(f"unsupported generator {gen!r}")
    return cmd


def parse_outfile_line(line: str) -> tuple[str, bytes]:
    """One cracked pair: "hash:plaintext", plaintext possibly $HEX[..]."""
    if ":" not in line:
        raise ParseFailure(f"unparseable outfile line: {line!r}")
    digest_hex, _, plain = line.partition(":")
    digest_hex = digest_hex.strip().lower()
    try:
        bytes.fromhex(digest_hex)
    except ValueError:
        raise ParseFailure(f"bad digest in outfile line: {line!r}") from None
    if plain.startswith("$HEX[") and plain.endswith("]"):
        try:
            plaintext = bytes.fromhex(plain[5:-1])
        except ValueError:
            raise ParseFailure(f"bad $HEX payload in line: {line!r}") from None
    else:
        plaintext = plain.encode("utf-8", errors="surrogateescape")
    return digest_hex, plaintext


def run_external(task: EngineTask, config: ExternalEngineConfig,
                 emit: Callable[[EngineEvent], None]) -> Outcome:
    """Same contract as engine.run_attack, backed by the external binary."""
    if not config.binary_path:
        raise BinaryMissing("no external engine binary configured")
    if not Path(config.binary_path).exists():
        raise BinaryMissing(f"external engine binary not found: {config.binary_path}")

    with tempfile.TemporaryDirectory(prefix="hashfleet-ext-") as tmp:
        hash_file = str(Path(tmp) / "hashes.txt")
        outfile = str(Path(tmp) / "cracked.txt")
        Path(hash_file).write_text("".join(h + "\n" for h in sorted(task.targets)))
        rule_file = None
        if isinstance(task.generator, RulesGen):
            rule_file = str(Path(tmp) / "rules.txt")
            Path(rule_file).write_text("".join(r + "\n" for r in task.generator.rules))
        cmd = build_command(task, config, hash_file, outfile, rule_file)
        try:
            proc = subprocess.run(cmd, capture_output=True, timeout=config.timeout)
        except OSError as exc:
            raise SpawnFailure(f"cannot spawn {config.binary_path}: {exc}") from exc
        except subprocess.TimeoutExpired as exc:
            raise SpawnFailure(f"external engine timed out: {exc}") from exc
        # hashcat exit codes: 0 = all cracked, 1 = exhausted; anything else
        # is a hard failure.
        if proc.returncode not in (0, 1):
            raise SpawnFailure(
                f"external engine exited {proc.returncode}: "
                f"{proc.stderr.decode(errors='replace')[:500]}")

        cracked = 0
        remaining = {h.lower() for h in task.targets}
        out_path = Path(outfile)
        lines = out_path.read_text(errors="surrogateescape").splitlines() if out_path.exists() else []
        for line in lines:
            if not line.strip():
                continue
            digest_hex, plaintext = parse_outfile_line(line)
            if digest_hex in remaining:
                remaining.discard(digest_hex)
                cracked += 1
                emit(Cracked(digest_hex, plaintext))
        emit(Progress(tried=cracked, speed_hps=0.0))
        outcome = Outcome.ALL_CRACKED if not remaining else Outcome.EXHAUSTED
        emit(Finished(outcome))
        return outcome
