"""Job, per-user and admin statistics assembled from coordinator state."""

from __future__ import annotations

import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Sequence

from .models import (
    Job,
    JobStatus,
    NodeProfile,
    TaskAssignment,
    mode_name,
)

ACTIVE_STATUSES = (JobStatus.CREATED, JobStatus.DISTRIBUTING, JobStatus.RUNNING)


class StatsError(Exception):
    code = "stats_error"


class UnknownJob(StatsError):
    code = "unknown_job"


class UnknownUser(StatsError):
    code = "unknown_user"


@dataclass(frozen=True)
class NodeTaskStats:
    tried: int
    speed_hps: float
    tasks: int


@dataclass(frozen=True)
class JobStats:
    job_id: str
    status: str
    algorithm: str
    mode: str
    owner: str
    total_hashes: int
    cracked_count: int
    per_node: dict[str, NodeTaskStats]
    elapsed_seconds: float
    created_at: float
    finished_at: float | None
    partial_results: bool

    @property
    def recovery_percent(self) -> float:
        return 100.0 * self.cracked_count / self.total_hashes if self.total_hashes else 0.0


@dataclass(frozen=True)
class UserStats:
    total_jobs: int
    active: int
    completed: int
    failed: int
    by_mode: dict[str, int]
    by_algorithm: dict[str, int]
    mode_percent: dict[str, float]
    algorithm_percent: dict[str, float]
    activity_by_day: dict[str, int]  # "YYYY-MM-DD" (UTC) -> jobs submitted


@dataclass(frozen=True)
class NodeInventoryEntry:
    node_id: str
    agent_name: str
    os: str
    arch: str
    engine: str
    connected: bool
    power: dict[str, float]
    suspect_count: int
    last_seen: float


@dataclass(frozen=True)
class AdminStats:
    totals: UserStats  # across every user
    users: int
    nodes: list[NodeInventoryEntry]


def build_job_stats(job: Job, tasks: Sequence[TaskAssignment], cracked_count: int,
                    *, now: float | None = None) -> JobStats:
    per_node: dict[str, NodeTaskStats] = {}
    grouped: dict[str, list[TaskAssignment]] = {}
    for t in tasks:
        grouped.setdefault(t.node_id, []).append(t)
    for node_id, ts in grouped.items():
        per_node[node_id] = NodeTaskStats(
            tried=sum(t.tried for t in ts),
            speed_hps=max((t.speed_hps for t in ts), default=0.0),
            tasks=len(ts),
        )
    end = job.finished_at if job.finished_at is not None else (time.time() if now is None else now)
    return JobStats(
        job_id=job.id,
        status=job.status.value,
        algorithm=job.algorithm.value,
        mode=mode_name(job.mode),
        owner=job.owner,
        total_hashes=len(job.hashes),
        cracked_count=cracked_count,
        per_node=per_node,
        elapsed_seconds=max(0.0, end - job.created_at),
        created_at=job.created_at,
        finished_at=job.finished_at,
        partial_results=job.partial_results,
    )


def _percentages(counts: dict[str, int]) -> dict[str, float]:
    total = sum(counts.values())
    if total == 0:
        return {}
    return {k: 100.0 * v / total for k, v in counts.items()}


def _day(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%d")


def build_user_stats(jobs: Iterable[Job]) -> UserStats:
    by_mode: dict[str, int] = {}
    by_algorithm: dict[str, int] = {}
    activity: dict[str, int] = {}
    active = completed = failed = total = 0
    for job in jobs:
        total += 1
        if job.status in ACTIVE_STATUSES:
            active += 1
        elif job.status is JobStatus.COMPLETED:
            completed += 1
        else:
            failed += 1
        by_mode[mode_name(job.mode)] = by_mode.get(mode_name(job.mode), 0) + 1
        by_algorithm[job.algorithm.value] = by_algorithm.get(job.algorithm.value, 0) + 1
        day = _day(job.created_at)
        activity[day] = activity.get(day, 0) + 1
    return UserStats(
        total_jobs=total,
        active=active,
        completed=completed,
        failed=failed,
        by_mode=by_mode,
        by_algorithm=by_algorithm,
        mode_percent=_percentages(by_mode),
        algorithm_percent=_percentages(by_algorithm),
        activity_by_day=dict(sorted(activity.items())),
    )


def build_admin_stats(jobs: Iterable[Job], nodes: Iterable[NodeProfile], user_count: int) -> AdminStats:
    inventory = [
        NodeInventoryEntry(
            node_id=n.node_id,
            agent_name=n.agent_name,
            os=n.os,
            arch=n.arch,
            engine=n.engine_kind.value,
            connected=n.connected,
            power={a.value: p for a, p in n.power.items()},
            suspect_count=n.suspect_count,
            last_seen=n.last_seen,
        )
        for n in sorted(nodes, key=lambda n: n.agent_name)
    ]
    return AdminStats(totals=build_user_stats(jobs), users=user_count, nodes=inventory)
