"""The coordination service between agents and the HTTP surface.

Owns the node registry, plans jobs through the distribution module,
dispatches task assignments over agent channels, re-verifies and persists
cracked results, and replans work lost to node failures. All state
mutations run under one lock, so job state machines are linearized;
transports only need to deliver per-connection frames in order.

Channel contract (any transport): call `agent_channel_opened` with a
frame-sender callable, feed inbound frames to `agent_frame`, and call
`agent_channel_closed` when the peer goes away. Senders must not block.
"""

from __future__ import annotations

import itertools
import json
import logging
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

from . import protocol
from .distribution import (
    distribute_dictionaries,
    distribute_hashes,
    split_keyspace,
    split_span,
)
from .engine import digest
from .models import (
    BruteForce,
    Combinator,
    CrackedResult,
    Dictionary,
    HashAlgorithm,
    HashSlice,
    Job,
    JobRequest,
    JobStatus,
    KeyspaceSlice,
    NodeProfile,
    RuleBased,
    EngineKind,
    TaskAssignment,
    TaskStatus,
    TERMINAL_TASK_STATUSES,
    WordlistMeta,
    WordlistSlice,
    mode_name,
    validate_job,
)
from .stats import (
    AdminStats,
    JobStats,
    UnknownJob,
    UserStats,
    build_admin_stats,
    build_job_stats,
    build_user_stats,
)
from .store import Store

log = logging.getLogger("hashfleet.coordinator")

ACCEPT_TIMEOUT = 10.0
HEARTBEAT_INTERVAL = 10.0
# A node is declared dead after two silent heartbeat intervals.
HEARTBEAT_TIMEOUT = 2 * HEARTBEAT_INTERVAL


class CoordinatorError(Exception):
    code = "coordinator_error"
    field: str | None = None


class NoEligibleNodes(CoordinatorError):
    code = "no_eligible_nodes"
    field = "node_ids"


class PowerUnknown(CoordinatorError):
    code = "power_unknown"
    field = "node_ids"


@dataclass
class _NodeState:
    profile: NodeProfile
    conn_id: int | None = None
    sender: Callable[[str], None] | None = None
    closer: Callable[[], None] | None = None
    queue: deque = field(default_factory=deque)  # task_ids waiting for this node
    current_task: str | None = None
    sent_task: str | None = None  # assigned but not yet accepted
    sent_at: float = 0.0  # monotonic
    last_seen: float = 0.0  # monotonic


@dataclass
class _Conn:
    sender: Callable[[str], None]
    closer: Callable[[], None] | None
    node_id: str | None = None


def scan_wordlists(wordlist_dir: str | Path) -> dict[str, WordlistMeta]:
    """Register every regular file in the directory as a wordlist.

    The id is the file stem; the size metric is the line count.
    """
    metas: dict[str, WordlistMeta] = {}
    root = Path(wordlist_dir)
    if not root.is_dir():
        return metas
    for path in sorted(root.iterdir()):
        if not path.is_file():
            continue
        data = path.read_bytes()
        lines = data.split(b"\n")
        if lines and lines[-1] == b"":
            lines.pop()
        metas[path.stem] = WordlistMeta(
            id=path.stem, path=str(path), line_count=max(1, len(lines)),
            byte_size=len(data),
        )
    return metas


def plan_assignments(
    job: Job,
    powers: dict[str, float],
    wordlists: dict[str, WordlistMeta],
    new_task_id: Callable[[], str],
) -> list[TaskAssignment]:
    """Pure planning: job -> per-node task assignments.

    Brute force produces one keyspace slice per node per length (ascending
    lengths form separate dispatch waves). Dictionary and rule jobs with a
    single wordlist and several hashes split the hash list instead, since
    the wordlist cannot be divided; with several wordlists, whole wordlists
    are packed per node and each node receives the full hash set. Combinator
    jobs are indivisible and go to the single strongest node.
    """
    mode = job.mode
    tasks: list[TaskAssignment] = []

    def task(node_id: str, payload) -> None:
        tasks.append(TaskAssignment(task_id=new_task_id(), job_id=job.id,
                                    node_id=node_id, payload=payload))

    if isinstance(mode, BruteForce):
        for length in range(mode.min_len, mode.max_len + 1):
            for node_id, rng in split_keyspace(length, powers).items():
                task(node_id, KeyspaceSlice(hashes=job.hashes, start=rng.start,
                                            end=rng.end, length=length))
    elif isinstance(mode, (Dictionary, RuleBased)):
        if len(mode.wordlists) == 1 and len(job.hashes) > 1:
            for node_id, slice_hashes in distribute_hashes(job.hashes, powers).items():
                if slice_hashes:
                    task(node_id, HashSlice(hashes=tuple(slice_hashes)))
        else:
            metas = [wordlists[w] for w in mode.wordlists]
            dist = distribute_dictionaries(metas, powers)
            for node_id, wl_ids in dist.per_node.items():
                if wl_ids:
                    task(node_id, WordlistSlice(hashes=job.hashes, wordlists=tuple(wl_ids)))
    elif isinstance(mode, Combinator):
        strongest = min(powers, key=lambda n: (-powers[n], n))
        task(strongest, WordlistSlice(hashes=job.hashes,
                                      wordlists=(mode.left, mode.right)))
    else:  # pragma: no cover
        raise CoordinatorError(f"unplannable mode {mode!r}")
    return tasks


class Coordinator:
    def __init__(
        self,
        store: Store,
        wordlist_dir: str | Path | None = None,
        *,
        accept_timeout: float = ACCEPT_TIMEOUT,
        heartbeat_timeout: float = HEARTBEAT_TIMEOUT,
        wall_clock: Callable[[], float] = time.time,
        mono_clock: Callable[[], float] = time.monotonic,
    ):
        self._lock = threading.RLock()
        self._store = store
        self._wall = wall_clock
        self._mono = mono_clock
        self._accept_timeout = accept_timeout
        self._heartbeat_timeout = heartbeat_timeout

        self._conn_ids = itertools.count(1)
        self._conns: dict[int, _Conn] = {}
        self._nodes: dict[str, _NodeState] = {}
        self._by_name: dict[str, str] = {}
        self._jobs: dict[str, Job] = {}
        self._tasks: dict[str, TaskAssignment] = {}
        self._job_tasks: dict[str, list[str]] = {}
        self._cracked: dict[str, set[str]] = {}
        self._queued: set[str] = set()  # task_ids sitting in some node queue
        self._ui_sub_ids = itertools.count(1)
        self._ui_subs: dict[str, dict[int, Callable[[str], None]]] = {}

        self.wordlists: dict[str, WordlistMeta] = (
            scan_wordlists(wordlist_dir) if wordlist_dir is not None else {}
        )

        self._recover()

    # ------------------------------------------------------------------
    # Recovery

    def _recover(self) -> None:
        """Reload persisted state; in-flight work is lost and replanned.

        No agent is connected at startup, so replanning in-flight tasks
        can only take the fail path: such jobs end Failed with their
        partial results retained. Terminal jobs reload untouched.
        """
        for profile in self._store.load_nodes():
            profile.connected = False
            self._store.upsert_node(profile)
            state = _NodeState(profile=profile)
            self._nodes[profile.node_id] = state
            self._by_name[profile.agent_name] = profile.node_id
        for job in self._store.load_jobs():
            self._jobs[job.id] = job
            self._job_tasks[job.id] = []
            self._cracked[job.id] = {r.hash for r in self._store.cracked_for_job(job.id)}
        for task in self._store.load_tasks():
            self._tasks[task.task_id] = task
            self._job_tasks.setdefault(task.job_id, []).append(task.task_id)
        for job in list(self._jobs.values()):
            if job.status in (JobStatus.DISTRIBUTING, JobStatus.RUNNING):
                for task in self._tasks_of(job.id):
                    if task.status not in TERMINAL_TASK_STATUSES:
                        self._mark_task(task, TaskStatus.LOST, detail="coordinator restart")
                self._fail_job(job, "no nodes connected after restart")

    # ------------------------------------------------------------------
    # Agent channel plumbing

    def agent_channel_opened(self, sender: Callable[[str], None],
                             closer: Callable[[], None] | None = None) -> int:
        with self._lock:
            conn_id = next(self._conn_ids)
            self._conns[conn_id] = _Conn(sender=sender, closer=closer)
            return conn_id

    def agent_channel_closed(self, conn_id: int) -> None:
        with self._lock:
            conn = self._conns.pop(conn_id, None)
            if conn is None or conn.node_id is None:
                return
            state = self._nodes.get(conn.node_id)
            if state is not None and state.conn_id == conn_id:
                self._node_lost(state, reason="disconnect")

    def agent_frame(self, conn_id: int, frame: str) -> None:
        with self._lock:
            conn = self._conns.get(conn_id)
            if conn is None:
                return
            try:
                msg = protocol.decode_message(frame)
            except protocol.ProtocolError as exc:
                self._send_raw(conn, protocol.ErrorMsg(code=exc.code, message=str(exc)))
                return

            if conn.node_id is not None:
                state = self._nodes.get(conn.node_id)
                if state is not None:
                    state.last_seen = self._mono()
                    state.profile.last_seen = self._wall()

            if isinstance(msg, protocol.Register):
                self._on_register(conn_id, conn, msg)
            elif conn.node_id is None:
                self._send_raw(conn, protocol.ErrorMsg(
                    code="not_registered", message="register before sending traffic"))
            elif isinstance(msg, protocol.TaskAccept):
                self._on_accept(conn.node_id, msg)
            elif isinstance(msg, protocol.ProgressMsg):
                self._on_progress(conn.node_id, msg)
            elif isinstance(msg, protocol.CrackedMsg):
                self._on_cracked(conn.node_id, msg)
            elif isinstance(msg, protocol.TaskDone):
                self._on_task_done(conn.node_id, msg)
            elif isinstance(msg, protocol.Ping):
                self._send_raw(conn, protocol.Pong())
            elif isinstance(msg, protocol.ErrorMsg):
                self._store.log_event(self._wall(), "agent_error", node_id=conn.node_id,
                                      detail=f"{msg.code}: {msg.message}")
            # Pong and unexpected coordinator->agent types are ignored.

    def _send_raw(self, conn: _Conn, msg) -> None:
        try:
            conn.sender(protocol.encode_message(msg))
        except Exception:  # sender must not take the coordinator down
            log.exception("agent sender failed")

    def _close_conn(self, conn_id: int | None) -> None:
        if conn_id is None:
            return
        conn = self._conns.pop(conn_id, None)
        if conn is not None and conn.closer is not None:
            try:
                conn.closer()
            except Exception:
                log.exception("closer failed")

    # ------------------------------------------------------------------
    # Registration

    def _on_register(self, conn_id: int, conn: _Conn, msg: protocol.Register) -> None:
        if msg.v != protocol.PROTOCOL_VERSION:
            self._send_raw(conn, protocol.ErrorMsg(
                code="version_mismatch",
                message=f"coordinator speaks v{protocol.PROTOCOL_VERSION}, agent sent v{msg.v}"))
            self._close_conn(conn_id)
            return
        if conn.node_id is not None:
            self._send_raw(conn, protocol.ErrorMsg(
                code="already_registered", message="connection already has a node"))
            return
        power: dict[HashAlgorithm, float] = {}
        for name, hps in msg.benchmark.items():
            try:
                alg = HashAlgorithm(name)
            except ValueError:
                continue  # benchmark entries for algorithms we do not track
            if hps <= 0:
                self._send_raw(conn, protocol.ErrorMsg(
                    code="invalid_benchmark", message=f"non-positive rate for {name}"))
                self._close_conn(conn_id)
                return
            power[alg] = float(hps)
        if not power:
            self._send_raw(conn, protocol.ErrorMsg(
                code="invalid_benchmark", message="no usable benchmark entries"))
            self._close_conn(conn_id)
            return

        existing_id = self._by_name.get(msg.agent_name)
        if existing_id is not None:
            state = self._nodes[existing_id]
            if state.conn_id is not None and state.conn_id in self._conns:
                self._send_raw(conn, protocol.ErrorMsg(
                    code="name_in_use", message=f"agent {msg.agent_name!r} already connected"))
                self._close_conn(conn_id)
                return
            node_id = existing_id
            state.profile.os = msg.os
            state.profile.arch = msg.arch
            state.profile.engine_kind = EngineKind(msg.engine)
            state.profile.power = power
        else:
            node_id = uuid.uuid4().hex[:12]
            state = _NodeState(profile=NodeProfile(
                node_id=node_id, agent_name=msg.agent_name, os=msg.os, arch=msg.arch,
                engine_kind=EngineKind(msg.engine), power=power))
            self._nodes[node_id] = state
            self._by_name[msg.agent_name] = node_id

        state.conn_id = conn_id
        state.sender = conn.sender
        state.closer = conn.closer
        state.current_task = None
        state.sent_task = None
        state.queue.clear()
        state.last_seen = self._mono()
        state.profile.connected = True
        state.profile.last_seen = self._wall()
        conn.node_id = node_id
        self._store.upsert_node(state.profile)
        self._store.log_event(self._wall(), "node_registered", node_id=node_id,
                              detail=msg.agent_name)
        self._send_raw(conn, protocol.RegisterAck(node_id=node_id))

    # ------------------------------------------------------------------
    # Job submission and planning

    def submit_job(self, request: JobRequest) -> Job:
        """Validate, persist, plan and dispatch a job. Raises on bad input."""
        with self._lock:
            job = validate_job(
                request,
                (s.profile for s in self._nodes.values()),
                self.wordlists.values(),
                job_id=uuid.uuid4().hex[:12],
                now=self._wall(),
            )
            powers = self._planning_powers(job)
            tasks = plan_assignments(job, powers, self.wordlists,
                                     lambda: uuid.uuid4().hex[:12])
            self._jobs[job.id] = job
            self._cracked[job.id] = set()
            self._job_tasks[job.id] = [t.task_id for t in tasks]
            self._store.insert_job(job)
            self._store.log_event(self._wall(), "job_created", user_id=job.owner,
                                  job_id=job.id, detail=mode_name(job.mode))
            job.transition(JobStatus.DISTRIBUTING)
            self._store.update_job(job)
            for t in tasks:
                self._tasks[t.task_id] = t
                self._store.insert_task(t)
            self._dispatch_next_wave(job)
            return job

    def _planning_powers(self, job: Job) -> dict[str, float]:
        powers: dict[str, float] = {}
        for node_id in job.requested_nodes:
            state = self._nodes.get(node_id)
            if state is None or not state.profile.connected:
                continue
            if job.algorithm not in state.profile.power:
                raise PowerUnknown(
                    f"node {node_id!r} has no benchmark for {job.algorithm.value}")
            powers[node_id] = state.profile.power[job.algorithm]
        if not powers:
            raise NoEligibleNodes("no requested node is connected")
        return powers

    # ------------------------------------------------------------------
    # Dispatch

    def _tasks_of(self, job_id: str) -> list[TaskAssignment]:
        return [self._tasks[tid] for tid in self._job_tasks.get(job_id, ())]

    def _remaining_hashes(self, job: Job, universe: Iterable[str]) -> tuple[str, ...]:
        cracked = self._cracked.get(job.id, set())
        return tuple(h for h in universe if h not in cracked)

    def _dispatch_next_wave(self, job: Job) -> None:
        """Send the lowest-keyspace-length group of still-undispatched tasks.

        Non-brute plans form a single wave. If every hash is already
        cracked, remaining waves are withdrawn instead of dispatched.
        """
        pending = [t for t in self._tasks_of(job.id)
                   if t.status is TaskStatus.PENDING and t.task_id not in self._queued]
        if not pending:
            return
        if not self._remaining_hashes(job, job.hashes):
            for t in pending:
                self._job_tasks[job.id].remove(t.task_id)
                del self._tasks[t.task_id]
                self._store.delete_task(t.task_id)
            self._store.log_event(self._wall(), "waves_skipped", job_id=job.id,
                                  detail="all hashes recovered")
            return

        def wave_key(t: TaskAssignment):
            return t.payload.length if isinstance(t.payload, KeyspaceSlice) else 0

        current = min(wave_key(t) for t in pending)
        for t in pending:
            if wave_key(t) == current:
                self._offer_task(t)

    def _offer_task(self, task: TaskAssignment) -> bool:
        """Send a task to its node, or queue it while the node is occupied.

        Returns True when the task is now in flight (sent or queued) and
        False when it resolved on the spot (vacuous exhaustion, dead node);
        callers must then re-advance the owning job.
        """
        state = self._nodes[task.node_id]
        if state.sender is None:
            # Node vanished between planning and dispatch.
            self._mark_task(task, TaskStatus.LOST, detail="node gone before dispatch")
            self._replan_task(task)
            return False
        if state.current_task is not None or state.sent_task is not None:
            if task.task_id not in self._queued:
                state.queue.append(task.task_id)
                self._queued.add(task.task_id)
            return True
        job = self._jobs[task.job_id]
        remaining = self._remaining_hashes(job, task.payload.hashes or job.hashes)
        if not remaining:
            self._mark_task(task, TaskStatus.EXHAUSTED,
                            detail="vacuous: every target already recovered")
            return False
        if remaining != tuple(task.payload.hashes):
            task.payload = replace(task.payload, hashes=remaining)
            self._store.update_task(task)
        self._mark_task(task, TaskStatus.SENT)
        state.sent_task = task.task_id
        state.sent_at = self._mono()
        self._send_raw(self._conns[state.conn_id], self._assign_message(job, task))
        return True

    def _assign_message(self, job: Job, task: TaskAssignment) -> protocol.TaskAssign:
        payload = task.payload
        keyspace = None
        wordlists: tuple[str, ...] | None = None
        rules: tuple[str, ...] | None = None
        mode = job.mode
        if isinstance(payload, KeyspaceSlice):
            wire_mode = "brute"
            keyspace = protocol.KeyspaceRef(length=payload.length, start=payload.start,
                                            end=payload.end)
        elif isinstance(mode, Combinator):
            wire_mode = "combinator"
            wordlists = payload.wordlists if isinstance(payload, WordlistSlice) else (
                mode.left, mode.right)
        elif isinstance(mode, RuleBased):
            wire_mode = "rules"
            rules = mode.rules
            wordlists = (payload.wordlists if isinstance(payload, WordlistSlice)
                         else mode.wordlists)
        else:
            wire_mode = "dictionary"
            wordlists = (payload.wordlists if isinstance(payload, WordlistSlice)
                         else mode.wordlists)
        return protocol.TaskAssign(
            task_id=task.task_id, job_id=job.id, algorithm=job.algorithm.value,
            mode=wire_mode, hashes=tuple(payload.hashes), keyspace=keyspace,
            wordlists=wordlists, rules=rules,
        )

    def _dispatch_queued(self, state: _NodeState) -> dict[str, Job]:
        """Feed the node its next queued task; returns jobs whose tasks
        resolved without leaving anything in flight (they need advancing)."""
        resolved: dict[str, Job] = {}
        while state.queue and state.current_task is None and state.sent_task is None:
            task_id = state.queue.popleft()
            self._queued.discard(task_id)
            task = self._tasks.get(task_id)
            if task is None or task.status is not TaskStatus.PENDING:
                continue
            if not self._offer_task(task):
                resolved[task.job_id] = self._jobs[task.job_id]
        return resolved

    # ------------------------------------------------------------------
    # Agent message handlers

    def _on_accept(self, node_id: str, msg: protocol.TaskAccept) -> None:
        task = self._tasks.get(msg.task_id)
        if task is None or task.node_id != node_id or task.status is not TaskStatus.SENT:
            return
        state = self._nodes[node_id]
        self._mark_task(task, TaskStatus.RUNNING)
        state.sent_task = None
        state.current_task = task.task_id
        job = self._jobs[task.job_id]
        if job.status is JobStatus.DISTRIBUTING:
            in_flight = [t for t in self._tasks_of(job.id) if t.status is TaskStatus.SENT]
            if not in_flight:
                job.transition(JobStatus.RUNNING)
                self._store.update_job(job)
                self._ui_status(job)

    def _on_progress(self, node_id: str, msg: protocol.ProgressMsg) -> None:
        task = self._tasks.get(msg.task_id)
        if task is None or task.node_id != node_id:
            return
        task.tried = max(task.tried, msg.tried)
        task.speed_hps = msg.speed_hps
        self._store.update_task(task)
        self._ui_broadcast(task.job_id, {
            "type": "progress", "job_id": task.job_id, "task_id": task.task_id,
            "node_id": node_id, "tried": task.tried, "speed_hps": task.speed_hps,
        })

    def _on_cracked(self, node_id: str, msg: protocol.CrackedMsg) -> None:
        task = self._tasks.get(msg.task_id)
        if task is None:
            return
        job = self._jobs.get(task.job_id)
        if job is None or job.status in (JobStatus.COMPLETED, JobStatus.FAILED):
            return
        state = self._nodes.get(node_id)
        digest_hex = msg.hash.lower()
        plaintext = bytes.fromhex(msg.plaintext_hex)
        if digest_hex not in set(job.hashes) or digest(job.algorithm, plaintext) != digest_hex:
            if state is not None:
                state.profile.suspect_count += 1
                self._store.upsert_node(state.profile)
            self._store.log_event(self._wall(), "suspect_crack", node_id=node_id,
                                  job_id=job.id, detail=digest_hex)
            log.warning("discarding unverifiable crack from %s for job %s", node_id, job.id)
            return
        result = CrackedResult(job_id=job.id, hash=digest_hex, plaintext=plaintext,
                               node_id=node_id, at=self._wall())
        if not self._store.insert_cracked(result):
            return  # replay duplicate
        self._cracked[job.id].add(digest_hex)
        self._store.log_event(result.at, "cracked", node_id=node_id, job_id=job.id,
                              detail=digest_hex)
        self._ui_broadcast(job.id, {
            "type": "cracked", "job_id": job.id, "hash": digest_hex,
            "plaintext_hex": msg.plaintext_hex, "node_id": node_id, "at": result.at,
        })

    def _on_task_done(self, node_id: str, msg: protocol.TaskDone) -> None:
        task = self._tasks.get(msg.task_id)
        if task is None or task.node_id != node_id:
            return
        state = self._nodes[node_id]
        if state.current_task == task.task_id:
            state.current_task = None
        if state.sent_task == task.task_id:
            state.sent_task = None
        if task.status in TERMINAL_TASK_STATUSES:
            for job in self._dispatch_queued(state).values():
                self._advance_job(job)
            return  # late replay for a task we already wrote off
        status = {
            "all_cracked": TaskStatus.DONE,
            "exhausted": TaskStatus.EXHAUSTED,
            "failed": TaskStatus.FAILED,
        }[msg.outcome]
        self._mark_task(task, status, detail=msg.detail or "")
        resolved = self._dispatch_queued(state)
        resolved[task.job_id] = self._jobs[task.job_id]
        for job in resolved.values():
            self._advance_job(job)

    # ------------------------------------------------------------------
    # Node failure and replanning

    def _node_lost(self, state: _NodeState, reason: str) -> None:
        node_id = state.profile.node_id
        state.profile.connected = False
        state.sender = None
        state.closer = None
        state.conn_id = None
        state.current_task = None
        state.sent_task = None
        for task_id in state.queue:
            self._queued.discard(task_id)
        state.queue.clear()
        self._store.upsert_node(state.profile)
        self._store.log_event(self._wall(), "node_lost", node_id=node_id, detail=reason)

        affected = [t for t in self._tasks.values()
                    if t.node_id == node_id and t.status not in TERMINAL_TASK_STATUSES]
        jobs_touched: dict[str, Job] = {}
        for task in affected:
            self._mark_task(task, TaskStatus.LOST, detail=reason)
            job = self._jobs[task.job_id]
            if job.status not in (JobStatus.COMPLETED, JobStatus.FAILED):
                self._replan_task(task)
                jobs_touched[job.id] = job
        for job in jobs_touched.values():
            self._advance_job(job)

    def _replan_task(self, task: TaskAssignment) -> None:
        """Redistribute a lost task's whole payload over surviving nodes."""
        job = self._jobs[task.job_id]
        if job.status in (JobStatus.COMPLETED, JobStatus.FAILED):
            return
        try:
            powers = self._planning_powers(job)
        except CoordinatorError:
            self._fail_job(job, "no eligible nodes left")
            return

        dispatched = task.status is not TaskStatus.PENDING or task.task_id in self._queued
        payload = task.payload
        replacements: list[TaskAssignment] = []

        def new_task(node_id: str, new_payload) -> None:
            replacements.append(TaskAssignment(
                task_id=uuid.uuid4().hex[:12], job_id=job.id, node_id=node_id,
                payload=new_payload))

        if isinstance(payload, KeyspaceSlice):
            remaining = self._remaining_hashes(job, job.hashes)
            if not remaining:
                strongest = min(powers, key=lambda n: (-powers[n], n))
                vacuous = TaskAssignment(
                    task_id=uuid.uuid4().hex[:12], job_id=job.id, node_id=strongest,
                    payload=replace(payload, hashes=()),
                    status=TaskStatus.EXHAUSTED,
                    detail="vacuous: every target already recovered")
                self._tasks[vacuous.task_id] = vacuous
                self._job_tasks[job.id].append(vacuous.task_id)
                self._store.insert_task(vacuous)
                return
            for node_id, rng in split_span(payload.start, payload.end,
                                           payload.length, powers).items():
                new_task(node_id, KeyspaceSlice(hashes=remaining, start=rng.start,
                                                end=rng.end, length=payload.length))
        elif isinstance(payload, HashSlice):
            remaining = self._remaining_hashes(job, payload.hashes)
            if remaining:
                for node_id, slice_hashes in distribute_hashes(remaining, powers).items():
                    if slice_hashes:
                        new_task(node_id, HashSlice(hashes=tuple(slice_hashes)))
        else:  # WordlistSlice moves whole to the strongest survivor
            remaining = self._remaining_hashes(job, job.hashes)
            if remaining:
                strongest = min(powers, key=lambda n: (-powers[n], n))
                new_task(strongest, replace(payload, hashes=remaining))

        for t in replacements:
            self._tasks[t.task_id] = t
            self._job_tasks[job.id].append(t.task_id)
            self._store.insert_task(t)
        self._store.log_event(self._wall(), "task_replanned", job_id=job.id,
                              detail=f"{task.task_id} -> {len(replacements)} replacement(s)")
        if dispatched:
            for t in replacements:
                self._offer_task(t)

    def _fail_job(self, job: Job, reason: str) -> None:
        if job.status in (JobStatus.COMPLETED, JobStatus.FAILED):
            return
        for t in self._tasks_of(job.id):
            if t.status not in TERMINAL_TASK_STATUSES:
                self._mark_task(t, TaskStatus.LOST, detail=reason)
        if job.status is JobStatus.CREATED:
            job.transition(JobStatus.DISTRIBUTING)
        job.transition(JobStatus.FAILED)
        job.finished_at = self._wall()
        job.partial_results = bool(self._cracked.get(job.id))
        self._store.update_job(job)
        self._store.log_event(job.finished_at, "job_failed", job_id=job.id, detail=reason)
        self._ui_status(job)

    # ------------------------------------------------------------------
    # Job progress bookkeeping

    def _advance_job(self, job: Job) -> None:
        if job.status in (JobStatus.COMPLETED, JobStatus.FAILED):
            return
        tasks = self._tasks_of(job.id)
        live = [t for t in tasks if t.status in (TaskStatus.SENT, TaskStatus.RUNNING)]
        if live:
            return
        queued = [t for t in tasks
                  if t.status is TaskStatus.PENDING and t.task_id in self._queued]
        if queued:
            return
        pending = [t for t in tasks if t.status is TaskStatus.PENDING]
        if pending:
            self._dispatch_next_wave(job)
            # Dispatch may complete everything synchronously (vacuous tasks).
            if any(t.status in (TaskStatus.SENT, TaskStatus.RUNNING)
                   or (t.status is TaskStatus.PENDING and t.task_id in self._queued)
                   for t in self._tasks_of(job.id)):
                return
            if any(t.status is TaskStatus.PENDING for t in self._tasks_of(job.id)):
                return
        self._finalize_job(job)

    def _finalize_job(self, job: Job) -> None:
        tasks = self._tasks_of(job.id)
        succeeded = [t for t in tasks if t.status in (TaskStatus.DONE, TaskStatus.EXHAUSTED)]
        failed = [t for t in tasks if t.status is TaskStatus.FAILED]
        if succeeded:
            if job.status is JobStatus.DISTRIBUTING:
                job.transition(JobStatus.RUNNING)
            job.transition(JobStatus.COMPLETED)
            job.partial_results = bool(failed)
        else:
            job.transition(JobStatus.FAILED)
            job.partial_results = bool(self._cracked.get(job.id))
        job.finished_at = self._wall()
        self._store.update_job(job)
        self._store.log_event(job.finished_at, "job_finished", job_id=job.id,
                              detail=job.status.value)
        self._ui_status(job)

    def _mark_task(self, task: TaskAssignment, status: TaskStatus, detail: str = "") -> None:
        task.status = status
        if detail:
            task.detail = detail
        self._store.update_task(task)

    # ------------------------------------------------------------------
    # Maintenance

    def tick(self, now: float | None = None) -> None:
        """Enforce accept and heartbeat deadlines; call periodically."""
        with self._lock:
            now = self._mono() if now is None else now
            for state in list(self._nodes.values()):
                if not state.profile.connected:
                    continue
                if state.sent_task is not None and now - state.sent_at > self._accept_timeout:
                    conn_id = state.conn_id
                    self._node_lost(state, reason="accept timeout")
                    self._close_conn(conn_id)
                elif now - state.last_seen > self._heartbeat_timeout:
                    conn_id = state.conn_id
                    self._node_lost(state, reason="heartbeat timeout")
                    self._close_conn(conn_id)

    # ------------------------------------------------------------------
    # UI subscriptions

    def subscribe_ui(self, job_id: str, sender: Callable[[str], None]) -> int:
        with self._lock:
            if job_id not in self._jobs:
                raise UnknownJob(job_id)
            sub_id = next(self._ui_sub_ids)
            self._ui_subs.setdefault(job_id, {})[sub_id] = sender
            self._ui_status(self._jobs[job_id])
            return sub_id

    def unsubscribe_ui(self, job_id: str, sub_id: int) -> None:
        with self._lock:
            self._ui_subs.get(job_id, {}).pop(sub_id, None)

    def _ui_status(self, job: Job) -> None:
        self._ui_broadcast(job.id, {
            "type": "status", "job_id": job.id, "status": job.status.value,
            "cracked_count": len(self._cracked.get(job.id, ())),
            "total_hashes": len(job.hashes),
            "partial_results": job.partial_results,
        })

    def _ui_broadcast(self, job_id: str, event: dict) -> None:
        subs = self._ui_subs.get(job_id)
        if not subs:
            return
        frame = json.dumps(event, separators=(",", ":"))
        dead = []
        for sub_id, sender in subs.items():
            try:
                sender(frame)
            except Exception:
                dead.append(sub_id)
        for sub_id in dead:
            subs.pop(sub_id, None)

    # ------------------------------------------------------------------
    # Read surface (API layer)

    def list_nodes(self, connected_only: bool = True) -> list[NodeProfile]:
        with self._lock:
            profiles = [s.profile for s in self._nodes.values()]
            if connected_only:
                profiles = [p for p in profiles if p.connected]
            return sorted(profiles, key=lambda p: p.agent_name)

    def get_job(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(job_id)
            return job

    def list_jobs(self, owner: str | None = None) -> list[Job]:
        with self._lock:
            jobs = list(self._jobs.values())
            if owner is not None:
                jobs = [j for j in jobs if j.owner == owner]
            return sorted(jobs, key=lambda j: j.created_at)

    def job_statistics(self, job_id: str) -> JobStats:
        with self._lock:
            job = self.get_job(job_id)
            return build_job_stats(job, self._tasks_of(job_id),
                                   len(self._cracked.get(job_id, ())), now=self._wall())

    def user_statistics(self, owner: str) -> UserStats:
        with self._lock:
            return build_user_stats(j for j in self._jobs.values() if j.owner == owner)

    def admin_statistics(self) -> AdminStats:
        with self._lock:
            return build_admin_stats(
                self._jobs.values(),
                (s.profile for s in self._nodes.values()),
                self._store.count_users(),
            )

    def cracked_results(self, job_id: str) -> list[CrackedResult]:
        with self._lock:
            self.get_job(job_id)
            return self._store.cracked_for_job(job_id)

    def tasks_for_job(self, job_id: str) -> list[TaskAssignment]:
        with self._lock:
            self.get_job(job_id)
            return [replace(t) for t in self._tasks_of(job_id)]
