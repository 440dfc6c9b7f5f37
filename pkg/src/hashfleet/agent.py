"""Node-resident agent runtime.

Connects to the coordinator, registers with a benchmark, then alternates
between waiting for work and driving the engine, relaying engine events
upstream as they happen. One task runs at a time; a second assignment is
answered with a "busy" error. Lost connections trigger exponential-backoff
reconnects with fresh registration, and task events that could not be sent
are buffered (up to a limit) and replayed after reconnecting under the
same task id; the coordinator deduplicates.
"""

from __future__ import annotations

import logging
import platform
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from . import protocol
from .distribution import KeyspaceRange
from .engine import (
    BruteGen,
    CombinatorGen,
    Cracked,
    EngineAborted,
    EngineError,
    EngineTask,
    Finished,
    Progress,
    RulesGen,
    WordlistGen,
    run_attack,
    self_benchmark,
)
from .external import ExternalEngineConfig, ExternalEngineError, run_external
from .models import EngineKind, HashAlgorithm

log = logging.getLogger("hashfleet.agent")

REGISTER_ACK_TIMEOUT = 10.0


class TransportClosed(Exception):
    """The peer is gone; reconnect and re-register."""


class Transport(Protocol):
    def send(self, frame: str) -> None: ...  # raises TransportClosed

    def recv(self, timeout: float | None = None) -> str | None: ...  # None on timeout

    def close(self) -> None: ...


class WebsocketTransport:
    """Blocking websocket client, the production transport."""

    def __init__(self, url: str):
        from websockets.sync.client import connect

        self._ws = connect(url, max_size=64 * 1024 * 1024)

    def send(self, frame: str) -> None:
        try:
            self._ws.send(frame)
        except Exception as exc:
            raise TransportClosed(str(exc)) from exc

    def recv(self, timeout: float | None = None) -> str | None:
        try:
            frame = self._ws.recv(timeout=timeout)
        except TimeoutError:
            return None
        except Exception as exc:
            raise TransportClosed(str(exc)) from exc
        return frame if isinstance(frame, str) else frame.decode()

    def close(self) -> None:
        try:
            self._ws.close()
        except Exception:
            pass


@dataclass
class AgentConfig:
    agent_name: str
    coordinator_url: str = ""
    engine_kind: EngineKind = EngineKind.BUILTIN
    external_engine_path: str | None = None
    wordlist_dir: str | Path | None = None
    reconnect_initial: float = 1.0
    reconnect_max: float = 30.0
    heartbeat_interval: float = 10.0
    progress_every: int = 100_000
    benchmark_budget: float = 0.5
    # Advertise these rates instead of measuring (deterministic planning).
    fixed_benchmark: dict[HashAlgorithm, float] | None = None
    replay_buffer_limit: int = 10_000


@dataclass
class _ActiveTask:
    task_id: str
    stop: threading.Event = field(default_factory=threading.Event)
    thread: threading.Thread | None = None


class _TaskFailed:
    def __init__(self, detail: str):
        self.detail = detail


class Agent:
    """Drives one engine against one coordinator connection.

    `transport_factory` must return a freshly connected Transport or raise
    on failure; the agent retries forever with doubling backoff.
    """

    def __init__(
        self,
        config: AgentConfig,
        transport_factory: Callable[[], Transport],
        *,
        sleeper: Callable[[float], None] | None = None,
    ):
        self.config = config
        self._factory = transport_factory
        self.node_id: str | None = None
        self._shutdown = threading.Event()
        self._killed = False
        self._events: queue.Queue = queue.Queue()
        self._active: _ActiveTask | None = None
        self._working = False
        self._replay: list[str] = []
        self._replay_overflowed = False
        self._transport: Transport | None = None
        self._thread: threading.Thread | None = None
        self._sleep = sleeper if sleeper is not None else self._shutdown.wait

    # ------------------------------------------------------------------
    # Lifecycle

    def start(self) -> None:
        self._thread = threading.Thread(target=self.run, name=f"agent-{self.config.agent_name}",
                                        daemon=True)
        self._thread.start()

    def run(self) -> None:
        backoff = self.config.reconnect_initial
        while not self._shutdown.is_set():
            try:
                transport = self._factory()
            except Exception:
                self._sleep(backoff)
                backoff = min(backoff * 2, self.config.reconnect_max)
                continue
            self._transport = transport
            try:
                self._register(transport)
                backoff = self.config.reconnect_initial
                self._flush_replay(transport)
                self._session(transport)
            except TransportClosed:
                pass
            except Exception:
                log.exception("agent session error")
            finally:
                try:
                    transport.close()
                except Exception:
                    pass
                self._transport = None
            if self._shutdown.is_set():
                break
            self._sleep(backoff)
            backoff = min(backoff * 2, self.config.reconnect_max)
        self._stop_engine()

    def stop(self) -> None:
        """Shut down cleanly: stop the engine, drop the connection, return."""
        self._shutdown.set()
        self._stop_engine()
        transport = self._transport
        if transport is not None:
            try:
                transport.close()
            except Exception:
                pass
        if self._thread is not None and self._thread is not threading.current_thread():
            self._thread.join(timeout=10)

    def kill(self) -> None:
        """Die abruptly: no farewell messages, engine abandoned mid-loop."""
        self._killed = True
        self.stop()

    def _stop_engine(self) -> None:
        active = self._active
        if active is not None:
            active.stop.set()

    # ------------------------------------------------------------------
    # Registration

    def measure_benchmark(self) -> dict[HashAlgorithm, float]:
        if self.config.fixed_benchmark is not None:
            return dict(self.config.fixed_benchmark)
        return {
            alg: self_benchmark(alg, time_budget=self.config.benchmark_budget)
            for alg in HashAlgorithm
        }

    def _register(self, transport: Transport) -> None:
        bench = self.measure_benchmark()
        transport.send(protocol.encode_message(protocol.Register(
            agent_name=self.config.agent_name,
            os=platform.system(),
            arch=platform.machine(),
            engine=self.config.engine_kind.value,
            benchmark={alg.value: hps for alg, hps in bench.items()},
        )))
        deadline = time.monotonic() + REGISTER_ACK_TIMEOUT
        while time.monotonic() < deadline:
            if self._shutdown.is_set():
                raise TransportClosed("shutting down")
            frame = transport.recv(timeout=0.2)
            if frame is None:
                continue
            msg = protocol.decode_message(frame)
            if isinstance(msg, protocol.RegisterAck):
                self.node_id = msg.node_id
                return
            if isinstance(msg, protocol.ErrorMsg):
                log.warning("registration rejected: %s: %s", msg.code, msg.message)
                raise TransportClosed(f"registration rejected: {msg.code}")
        raise TransportClosed("no register_ack before deadline")

    # ------------------------------------------------------------------
    # Session

    def _session(self, transport: Transport) -> None:
        next_ping = time.monotonic() + self.config.heartbeat_interval
        while not self._shutdown.is_set():
            self._pump_events(transport)
            now = time.monotonic()
            if now >= next_ping:
                self._send(transport, protocol.Ping())
                next_ping = now + self.config.heartbeat_interval
            frame = transport.recv(timeout=0.05)
            if frame is None:
                continue
            try:
                msg = protocol.decode_message(frame)
            except protocol.ProtocolError as exc:
                log.warning("dropping bad frame from coordinator: %s", exc)
                continue
            if isinstance(msg, protocol.TaskAssign):
                self._on_assign(transport, msg)
            elif isinstance(msg, protocol.ErrorMsg):
                log.warning("coordinator error: %s: %s", msg.code, msg.message)
            # Pong and anything else: nothing to do.

    def _send(self, transport: Transport, msg) -> None:
        if self._killed:
            raise TransportClosed("killed")
        transport.send(protocol.encode_message(msg))

    def _send_task_message(self, transport: Transport, msg) -> None:
        """Task-scoped send with buffering for replay after reconnect."""
        frame = protocol.encode_message(msg)
        if self._killed:
            raise TransportClosed("killed")
        try:
            transport.send(frame)
        except TransportClosed:
            self._buffer_for_replay(frame, msg)
            raise

    def _buffer_for_replay(self, frame: str, msg) -> None:
        if self._replay_overflowed or self._killed:
            return
        if len(self._replay) >= self.config.replay_buffer_limit:
            # Too much backlog: give up on the task instead of the memory.
            task_id = getattr(msg, "task_id", None)
            self._replay = []
            self._replay_overflowed = True
            if task_id is not None:
                self._replay.append(protocol.encode_message(protocol.TaskDone(
                    task_id=task_id, outcome="failed", detail="replay buffer overflow")))
            return
        self._replay.append(frame)

    def _flush_replay(self, transport: Transport) -> None:
        pending, self._replay = self._replay, []
        self._replay_overflowed = False
        for i, frame in enumerate(pending):
            try:
                transport.send(frame)
            except TransportClosed:
                self._replay = pending[i:]
                raise

    def _pump_events(self, transport: Transport) -> None:
        while True:
            try:
                task_id, event = self._events.get_nowait()
            except queue.Empty:
                return
            if isinstance(event, Cracked):
                msg = protocol.CrackedMsg(task_id=task_id, hash=event.hash,
                                          plaintext_hex=event.plaintext.hex())
            elif isinstance(event, Progress):
                msg = protocol.ProgressMsg(task_id=task_id, tried=event.tried,
                                           speed_hps=event.speed_hps)
            elif isinstance(event, Finished):
                msg = protocol.TaskDone(task_id=task_id, outcome=event.outcome.value)
                self._working = False
                self._active = None
            elif isinstance(event, _TaskFailed):
                msg = protocol.TaskDone(task_id=task_id, outcome="failed",
                                        detail=event.detail)
                self._working = False
                self._active = None
            else:
                continue
            self._send_task_message(transport, msg)

    # ------------------------------------------------------------------
    # Task execution

    def _on_assign(self, transport: Transport, msg: protocol.TaskAssign) -> None:
        if self._working:
            self._send(transport, protocol.ErrorMsg(
                code="busy", message=f"already running a task; rejected {msg.task_id}"))
            return
        self._working = True
        active = _ActiveTask(task_id=msg.task_id)
        self._active = active
        self._send(transport, protocol.TaskAccept(task_id=msg.task_id))
        thread = threading.Thread(target=self._run_task, args=(msg, active),
                                  name=f"engine-{msg.task_id}", daemon=True)
        active.thread = thread
        thread.start()

    def _resolve_wordlist(self, wordlist_id: str) -> str:
        root = Path(self.config.wordlist_dir) if self.config.wordlist_dir else None
        if root is not None and root.is_dir():
            for path in sorted(root.iterdir()):
                if path.is_file() and path.stem == wordlist_id:
                    return str(path)
        raise EngineError(f"wordlist {wordlist_id!r} not present on this node")

    def _build_engine_task(self, msg: protocol.TaskAssign) -> EngineTask:
        algorithm = HashAlgorithm(msg.algorithm)
        targets = frozenset(h.lower() for h in msg.hashes)
        if msg.mode == "brute":
            ks = msg.keyspace
            generator: object = BruteGen(KeyspaceRange(
                start=ks.start, end=ks.end, length=ks.length))
        elif msg.mode == "dictionary":
            generator = WordlistGen(tuple(self._resolve_wordlist(w) for w in msg.wordlists))
        elif msg.mode == "rules":
            generator = RulesGen(tuple(self._resolve_wordlist(w) for w in msg.wordlists),
                                 tuple(msg.rules))
        else:  # combinator
            left, right = msg.wordlists
            generator = CombinatorGen(self._resolve_wordlist(left),
                                      self._resolve_wordlist(right))
        return EngineTask(algorithm=algorithm, targets=targets, generator=generator)

    def _run_task(self, msg: protocol.TaskAssign, active: _ActiveTask) -> None:
        emit = lambda event: self._events.put((msg.task_id, event))
        try:
            task = self._build_engine_task(msg)
            if self.config.engine_kind is EngineKind.EXTERNAL:
                run_external(task, ExternalEngineConfig(
                    binary_path=self.config.external_engine_path), emit)
            else:
                run_attack(task, emit, progress_every=self.config.progress_every,
                           stop=active.stop)
        except EngineAborted:
            pass  # killed or shutting down; say nothing
        except (EngineError, ExternalEngineError, OSError, ValueError) as exc:
            self._events.put((msg.task_id, _TaskFailed(str(exc))))
        except Exception as exc:  # engine bugs must not wedge the agent
            log.exception("engine crashed")
            self._events.put((msg.task_id, _TaskFailed(f"engine crash: {exc}")))
