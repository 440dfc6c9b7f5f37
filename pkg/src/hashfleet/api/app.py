"""FastAPI application wrapping one Coordinator.

Normative HTTP surface (all routes but /auth/login require a bearer
token; admins additionally pass the role check):

    POST /auth/login                 -> {token}
    POST /auth/logout                -> 204, token revoked
    GET  /nodes                      -> connected node profiles
    GET  /wordlists                  -> registered wordlists
    POST /jobs                       -> 201 {job_id}; JSON body or multipart
    GET  /jobs                       -> own jobs (admin: all)
    GET  /jobs/{id}                  -> status + stats; 403 foreign, 404 unknown
    GET  /jobs/{id}/results          -> cracked pairs
    GET  /jobs/{id}/results.csv      -> CSV export
    GET  /stats/me                   -> per-user statistics
    GET  /admin/stats                -> global statistics (admin)
    GET  /admin/users, POST /admin/users
    WS   /ws/agent                   -> agent protocol channel
    WS   /ws/ui?job=..&token=..      -> live job event stream

Errors use one body shape: {"code", "message", "field"?}. Job live events
on /ws/ui: {"type":"status"|"cracked"|"progress", ...} as produced by the
coordinator; REST remains the source of truth after reconnects.
"""

from __future__ import annotations

import asyncio
import queue
import threading
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Depends, FastAPI, Request, Response, WebSocket, WebSocketDisconnect
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import ValidationError
from starlette.concurrency import run_in_threadpool

from ..coordinator import Coordinator, CoordinatorError
from ..models import DomainError, EmptyHashes, JobRequest, parse_hash_list
from ..stats import StatsError, UnknownJob
from ..store import Store
from . import auth as auth_mod
from .auth import AuthUser, TokenTable
from .schemas import (
    AdminStatsOut,
    CrackedOut,
    CreateUserRequest,
    ErrorBody,
    JobStatsOut,
    JobSubmitRequest,
    JobSubmitResponse,
    LoginRequest,
    LoginResponse,
    NodeOut,
    NodeTaskStatsOut,
    UserOut,
    UserStatsOut,
    WordlistOut,
)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, field: str | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.field = field
        super().__init__(message)


def _error_response(status: int, code: str, message: str, field: str | None = None) -> JSONResponse:
    body = ErrorBody(code=code, message=message, field=field).model_dump(exclude_none=True)
    return JSONResponse(status_code=status, content=body)


def format_csv_plaintext(data: bytes) -> str:
    """Render plaintext bytes for CSV: printable ASCII as-is, backslash and
    everything else as \\xHH, whole field double-quoted with quotes doubled."""
    chars = []
    for b in data:
        if b == 0x5C or not (0x20 <= b <= 0x7E):
            chars.append(f"\\x{b:02x}")
        else:
            chars.append(chr(b))
    text = "".join(chars)
    return '"' + text.replace('"', '""') + '"'


def export_csv(coordinator: Coordinator, job_id: str) -> str:
    """CSV of a job's cracked results, chronological, LF line endings."""
    rows = ["hash,plaintext,cracked_at,node"]
    for r in coordinator.cracked_results(job_id):
        ts = datetime.fromtimestamp(r.at, tz=timezone.utc).isoformat()
        rows.append(f"{r.hash},{format_csv_plaintext(r.plaintext)},{ts},{r.node_id}")
    return "\n".join(rows) + "\n"


def create_app(
    coordinator: Coordinator,
    store: Store,
    tokens: TokenTable | None = None,
    *,
    static_dir: str | Path | None = None,
    tick_interval: float = 1.0,
) -> FastAPI:
    tokens = tokens if tokens is not None else TokenTable()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        stop = threading.Event()

        def ticker():
            while not stop.wait(tick_interval):
                coordinator.tick()

        thread = threading.Thread(target=ticker, name="coordinator-tick", daemon=True)
        thread.start()
        try:
            yield
        finally:
            stop.set()
            thread.join(timeout=5)

    app = FastAPI(title="hashfleet", lifespan=lifespan)
    app.state.coordinator = coordinator
    app.state.tokens = tokens

    # -- error normalization -------------------------------------------

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return _error_response(exc.status, exc.code, exc.message, exc.field)

    @app.exception_handler(DomainError)
    async def handle_domain_error(request: Request, exc: DomainError):
        return _error_response(422, exc.code, str(exc), exc.field)

    @app.exception_handler(CoordinatorError)
    async def handle_coordinator_error(request: Request, exc: CoordinatorError):
        return _error_response(422, exc.code, str(exc), exc.field)

    @app.exception_handler(StatsError)
    async def handle_stats_error(request: Request, exc: StatsError):
        status = 404 if isinstance(exc, UnknownJob) else 422
        return _error_response(status, exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = [str(p) for p in first.get("loc", ()) if p != "body"]
        return _error_response(422, "validation", first.get("msg", "invalid request"),
                               ".".join(loc) or None)

    # -- auth ------------------------------------------------------------

    def current_user(request: Request) -> AuthUser:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise ApiError(401, "unauthorized", "missing bearer token")
        user = tokens.resolve(header[7:].strip())
        if user is None:
            raise ApiError(401, "unauthorized", "invalid or expired token")
        return user

    def admin_user(user: AuthUser = Depends(current_user)) -> AuthUser:
        if not user.is_admin:
            raise ApiError(403, "forbidden", "admin role required")
        return user

    def job_for(user: AuthUser, job_id: str):
        try:
            job = coordinator.get_job(job_id)
        except UnknownJob:
            raise ApiError(404, "not_found", f"no job {job_id!r}") from None
        if job.owner != user.user_id and not user.is_admin:
            raise ApiError(403, "forbidden", "not your job")
        return job

    # -- routes ----------------------------------------------------------

    @app.post("/auth/login", response_model=LoginResponse)
    async def login(body: LoginRequest):
        user = await run_in_threadpool(auth_mod.authenticate, store,
                                       body.username, body.password)
        if user is None:
            raise ApiError(401, "unauthorized", "bad credentials")
        return LoginResponse(token=tokens.issue(user), user_id=user.user_id,
                             username=user.username, role=user.role)

    @app.post("/auth/logout", status_code=204)
    async def logout(request: Request, user: AuthUser = Depends(current_user)):
        tokens.revoke(request.headers.get("authorization", "")[7:].strip())
        return Response(status_code=204)

    def _node_out(profile) -> NodeOut:
        return NodeOut(
            node_id=profile.node_id, agent_name=profile.agent_name, os=profile.os,
            arch=profile.arch, engine=profile.engine_kind.value,
            connected=profile.connected,
            power={a.value: p for a, p in profile.power.items()},
            suspect_count=profile.suspect_count,
        )

    @app.get("/nodes", response_model=list[NodeOut])
    async def nodes(user: AuthUser = Depends(current_user)):
        return [_node_out(p) for p in coordinator.list_nodes(connected_only=True)]

    @app.get("/wordlists", response_model=list[WordlistOut])
    async def wordlists(user: AuthUser = Depends(current_user)):
        return [WordlistOut(id=w.id, line_count=w.line_count, byte_size=w.byte_size)
                for w in sorted(coordinator.wordlists.values(), key=lambda w: w.id)]

    @app.post("/jobs", response_model=JobSubmitResponse, status_code=201)
    async def submit_job(request: Request, user: AuthUser = Depends(current_user)):
        content_type = request.headers.get("content-type", "")
        file_text: str | None = None
        if content_type.startswith("multipart/"):
            form = await request.form()
            spec_raw = form.get("spec")
            if not isinstance(spec_raw, str):
                raise ApiError(422, "validation", "multipart submissions need a "
                               "'spec' field with the job JSON", field="spec")
            try:
                body = JobSubmitRequest.model_validate_json(spec_raw)
            except ValidationError as exc:
                first = exc.errors()[0]
                raise ApiError(422, "validation", first.get("msg", "invalid spec"),
                               field=".".join(str(p) for p in first.get("loc", ()))) from None
            upload = form.get("hashes_file")
            if upload is not None and not isinstance(upload, str):
                try:
                    file_text = (await upload.read()).decode("utf-8")
                except UnicodeDecodeError:
                    raise ApiError(422, "validation", "hash file is not UTF-8 text",
                                   field="hashes_file") from None
        else:
            try:
                body = JobSubmitRequest.model_validate(await request.json())
            except (ValidationError, ValueError) as exc:
                if isinstance(exc, ValidationError):
                    first = exc.errors()[0]
                    raise ApiError(422, "validation", first.get("msg", "invalid request"),
                                   field=".".join(str(p) for p in first.get("loc", ()))) from None
                raise ApiError(422, "validation", "request body is not valid JSON") from None

        hashes: list[str] = list(body.hashes or [])
        raw_text = body.hashes_text if body.hashes_text is not None else file_text
        if raw_text is not None:
            hashes.extend(parse_hash_list(raw_text, body.algorithm))
        if not hashes:
            raise EmptyHashes("no hashes submitted")

        job_request = JobRequest(
            owner=user.user_id,
            algorithm=body.algorithm,
            mode=body.mode.to_attack_mode(),
            hashes=tuple(hashes),
            node_ids=tuple(body.node_ids),
        )
        job = await run_in_threadpool(coordinator.submit_job, job_request)
        return JobSubmitResponse(job_id=job.id)

    def _stats_out(job_id: str) -> JobStatsOut:
        s = coordinator.job_statistics(job_id)
        return JobStatsOut(
            job_id=s.job_id, status=s.status, algorithm=s.algorithm, mode=s.mode,
            owner=s.owner, total_hashes=s.total_hashes, cracked_count=s.cracked_count,
            recovery_percent=s.recovery_percent,
            per_node={n: NodeTaskStatsOut(tried=v.tried, speed_hps=v.speed_hps,
                                          tasks=v.tasks)
                      for n, v in s.per_node.items()},
            elapsed_seconds=s.elapsed_seconds, created_at=s.created_at,
            finished_at=s.finished_at, partial_results=s.partial_results,
        )

    @app.get("/jobs", response_model=list[JobStatsOut])
    async def list_jobs(user: AuthUser = Depends(current_user)):
        owner = None if user.is_admin else user.user_id
        return [_stats_out(j.id) for j in coordinator.list_jobs(owner=owner)]

    @app.get("/jobs/{job_id}", response_model=JobStatsOut)
    async def get_job(job_id: str, user: AuthUser = Depends(current_user)):
        job_for(user, job_id)
        return _stats_out(job_id)

    @app.get("/jobs/{job_id}/results", response_model=list[CrackedOut])
    async def job_results(job_id: str, user: AuthUser = Depends(current_user)):
        job_for(user, job_id)
        return [CrackedOut(hash=r.hash, plaintext_hex=r.plaintext.hex(),
                           node_id=r.node_id, at=r.at)
                for r in coordinator.cracked_results(job_id)]

    @app.get("/jobs/{job_id}/results.csv")
    async def job_results_csv(job_id: str, user: AuthUser = Depends(current_user)):
        job_for(user, job_id)
        csv_text = export_csv(coordinator, job_id)
        return Response(content=csv_text, media_type="text/csv", headers={
            "Content-Disposition": f'attachment; filename="{job_id}-results.csv"',
        })

    def _user_stats_out(s) -> UserStatsOut:
        return UserStatsOut(
            total_jobs=s.total_jobs, active=s.active, completed=s.completed,
            failed=s.failed, by_mode=s.by_mode, by_algorithm=s.by_algorithm,
            mode_percent=s.mode_percent, algorithm_percent=s.algorithm_percent,
            activity_by_day=s.activity_by_day,
        )

    @app.get("/stats/me", response_model=UserStatsOut)
    async def my_stats(user: AuthUser = Depends(current_user)):
        return _user_stats_out(coordinator.user_statistics(user.user_id))

    @app.get("/admin/stats", response_model=AdminStatsOut)
    async def admin_stats(user: AuthUser = Depends(admin_user)):
        s = coordinator.admin_statistics()
        return AdminStatsOut(
            totals=_user_stats_out(s.totals),
            users=s.users,
            nodes=[NodeOut(node_id=n.node_id, agent_name=n.agent_name, os=n.os,
                           arch=n.arch, engine=n.engine, connected=n.connected,
                           power=n.power, suspect_count=n.suspect_count)
                   for n in s.nodes],
        )

    @app.get("/admin/users", response_model=list[UserOut])
    async def list_users(user: AuthUser = Depends(admin_user)):
        return [UserOut(user_id=r[0], username=r[1], role=r[2])
                for r in store.list_users()]

    @app.post("/admin/users", response_model=UserOut, status_code=201)
    async def create_user(body: CreateUserRequest, user: AuthUser = Depends(admin_user)):
        import sqlite3

        try:
            created = await run_in_threadpool(
                auth_mod.create_user, store, body.username, body.password, body.role)
        except sqlite3.IntegrityError:
            raise ApiError(422, "validation", f"username {body.username!r} taken",
                           field="username") from None
        return UserOut(user_id=created.user_id, username=created.username,
                       role=created.role)

    # -- websocket endpoints ----------------------------------------------

    @app.websocket("/ws/agent")
    async def agent_channel(ws: WebSocket):
        await ws.accept()
        outbound: queue.Queue = queue.Queue()
        conn_id = coordinator.agent_channel_opened(outbound.put,
                                                   lambda: outbound.put(None))

        async def pump_outbound():
            while True:
                frame = await run_in_threadpool(outbound.get)
                if frame is None:
                    try:
                        await ws.close()
                    except Exception:
                        pass
                    return
                await ws.send_text(frame)

        sender_task = asyncio.ensure_future(pump_outbound())
        try:
            while True:
                frame = await ws.receive_text()
                await run_in_threadpool(coordinator.agent_frame, conn_id, frame)
        except WebSocketDisconnect:
            pass
        finally:
            await run_in_threadpool(coordinator.agent_channel_closed, conn_id)
            outbound.put(None)  # unblock the pump if still draining
            try:
                await sender_task
            except Exception:
                pass

    @app.websocket("/ws/ui")
    async def ui_channel(ws: WebSocket, job: str = "", token: str = ""):
        user = tokens.resolve(token)
        if user is None:
            await ws.close(code=1008)
            return
        try:
            job_obj = coordinator.get_job(job)
        except UnknownJob:
            await ws.close(code=1008)
            return
        if job_obj.owner != user.user_id and not user.is_admin:
            await ws.close(code=1008)
            return
        await ws.accept()
        events: queue.Queue = queue.Queue()
        sub_id = coordinator.subscribe_ui(job, events.put)

        async def pump():
            while True:
                frame = await run_in_threadpool(events.get)
                if frame is None:
                    return
                await ws.send_text(frame)

        sender_task = asyncio.ensure_future(pump())
        try:
            while True:
                await ws.receive_text()  # clients only listen; detect disconnect
        except WebSocketDisconnect:
            pass
        finally:
            coordinator.unsubscribe_ui(job, sub_id)
            events.put(None)
            try:
                await sender_task
            except Exception:
                pass

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app
