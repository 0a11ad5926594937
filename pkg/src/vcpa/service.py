"""HTTP front for the session engine.

The app is built by create_app() from a ServiceConfig plus an injectable
clock. Catalog and profile artifacts are read once at startup and served
back byte-identical; all mutation goes through the engine and lands in the
JSONL event log. Each request stamps elapsed_ms/wall_time exactly once, so
every event produced by one request shares one timestamp pair.
"""
from __future__ import annotations

import itertools
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Iterator, Protocol

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware

from . import schemas
from .catalog import Catalog
from .config import ServiceConfig
from .engine import Engine, SessionState
from .errors import (
    NoPendingNotice,
    NotDownloaded,
    NoProfileSelected,
    UnknownApp,
    UnknownProfile,
    UnknownSession,
    VcpaError,
)
from .eventlog import EventLog
from .profiles import load_profiles


class Clock(Protocol):
    def monotonic(self) -> float: ...
    def wall_time(self) -> str: ...


class SystemClock:
    def monotonic(self) -> float:
        return time.monotonic()

    def wall_time(self) -> str:
        return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class FakeClock:
    """Deterministic clock for tests and scripted runs: advance() by hand."""

    def __init__(self, epoch: str = "2026-01-01T00:00:00+00:00") -> None:
        self._now = 0.0
        self._epoch = datetime.fromisoformat(epoch)

    def advance(self, seconds: float) -> None:
        self._now += seconds

    def set_elapsed(self, seconds: float) -> None:
        if seconds < self._now:
            raise ValueError("clock cannot go backwards")
        self._now = seconds

    def monotonic(self) -> float:
        return self._now

    def wall_time(self) -> str:
        stamp = self._epoch + timedelta(seconds=self._now)
        return stamp.isoformat(timespec="milliseconds")


_NOT_FOUND = (UnknownApp, UnknownProfile, UnknownSession)
_CONFLICT = (NoProfileSelected, NoPendingNotice, NotDownloaded)


@contextmanager
def _http_errors() -> Iterator[None]:
    try:
        yield
    except _NOT_FOUND as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    except _CONFLICT as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc
    except VcpaError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@dataclass
class _SessionRuntime:
    state: SessionState
    started_monotonic: float
    lock: threading.Lock
    entry_concern: float | None = None
    exit_concern: float | None = None


def create_app(config: ServiceConfig, *, clock: Clock | None = None) -> FastAPI:
    config = config.validate()
    clock = clock or SystemClock()

    catalog_bytes = config.catalog_path.read_bytes()
    profiles_bytes = config.profiles_path.read_bytes()
    catalog = Catalog.load(config.catalog_path)
    profiles = load_profiles(config.profiles_path)

    engine = Engine(
        catalog,
        profiles,
        window_start_ms=config.window_start_ms,
        window_end_ms=config.window_end_ms,
        alternatives_above=config.alternatives_above,
        red_below=config.red_below,
        green_above=config.green_above,
    )
    log = EventLog(config.log_path, fsync=config.fsync)
    sessions: dict[str, _SessionRuntime] = {}
    sessions_lock = threading.Lock()
    session_ids = itertools.count(1)

    app = FastAPI(title="vcpa", version="0.1.0")
    # The web UI is served as static files from whatever origin is handy, so
    # the API has to answer cross-origin. Nothing here uses cookies or auth;
    # a wildcard without credentials is the whole story.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.engine = engine
    app.state.log = log
    app.state.clock = clock
    app.state.config = config

    def get_session(session_id: str) -> _SessionRuntime:
        runtime = sessions.get(session_id)
        if runtime is None:
            raise UnknownSession(session_id)
        return runtime

    def stamp(runtime: _SessionRuntime) -> tuple[int, str]:
        elapsed_ms = int(round((clock.monotonic() - runtime.started_monotonic) * 1000))
        return max(elapsed_ms, 0), clock.wall_time()

    def session_info(runtime: _SessionRuntime) -> schemas.SessionInfo:
        state = runtime.state
        return schemas.SessionInfo(
            session_id=state.session_id,
            profile_id=state.profile_id,
            exploratory_shown=state.exploratory_shown,
            pending_notice=state.pending.kind.value if state.pending else None,
            pending_app_id=state.pending.app_id if state.pending else None,
            downloaded=sorted(state.downloaded),
            entry_concern=runtime.entry_concern,
            exit_concern=runtime.exit_concern,
        )

    @app.get("/catalog")
    def get_catalog() -> Response:
        return Response(content=catalog_bytes, media_type="application/json")

    @app.get("/profiles")
    def get_profiles() -> Response:
        return Response(content=profiles_bytes, media_type="application/json")

    @app.post("/session", response_model=schemas.SessionCreated)
    def create_session(body: schemas.SessionCreate | None = None) -> schemas.SessionCreated:
        with sessions_lock:
            session_id = f"s-{next(session_ids):06d}"
            sessions[session_id] = _SessionRuntime(
                state=engine.new_session(session_id),
                started_monotonic=clock.monotonic(),
                lock=threading.Lock(),
                entry_concern=body.entry_concern if body else None,
                exit_concern=body.exit_concern if body else None,
            )
        return schemas.SessionCreated(session_id=session_id)

    @app.get("/session/{session_id}", response_model=schemas.SessionInfo)
    def get_session_info(session_id: str) -> schemas.SessionInfo:
        with _http_errors():
            runtime = get_session(session_id)
        with runtime.lock:
            return session_info(runtime)

    @app.post("/session/{session_id}/profile", response_model=schemas.SessionInfo)
    def select_profile(session_id: str, body: schemas.ProfileChoice) -> schemas.SessionInfo:
        with _http_errors():
            runtime = get_session(session_id)
            with runtime.lock:
                elapsed_ms, wall = stamp(runtime)
                events = engine.select_profile(runtime.state, body.profile_id, elapsed_ms, wall)
                log.append(events)
                return session_info(runtime)

    @app.get("/session/{session_id}/apps", response_model=schemas.Storefront)
    def storefront(session_id: str) -> schemas.Storefront:
        with _http_errors():
            runtime = get_session(session_id)
            with runtime.lock:
                profile_id = runtime.state.profile_id
                scores = engine.score_all(profile_id)
        return schemas.Storefront(
            profile_id=profile_id,
            apps=[
                schemas.StoreApp.from_record(
                    catalog.apps[app_id], schemas.Score.model_validate(score.to_dict())
                )
                for app_id, score in scores.items()
            ],
        )

    @app.post("/session/{session_id}/view/{app_id}", response_model=schemas.Ack)
    def view_app(session_id: str, app_id: str) -> schemas.Ack:
        with _http_errors():
            runtime = get_session(session_id)
            with runtime.lock:
                elapsed_ms, wall = stamp(runtime)
                log.append(engine.view_app(runtime.state, app_id, elapsed_ms, wall))
        return schemas.Ack()

    @app.post("/session/{session_id}/download/{app_id}", response_model=schemas.Decision)
    def attempt_download(session_id: str, app_id: str) -> schemas.Decision:
        with _http_errors():
            runtime = get_session(session_id)
            with runtime.lock:
                elapsed_ms, wall = stamp(runtime)
                decision, events = engine.attempt_download(
                    runtime.state, app_id, elapsed_ms, wall
                )
                log.append(events)
        return schemas.Decision.from_engine(decision)

    @app.post("/session/{session_id}/ignore", response_model=schemas.Decision)
    def ignore_notice(session_id: str, body: schemas.IgnoreRequest | None = None) -> schemas.Decision:
        reason = body.reason if body else ""
        with _http_errors():
            runtime = get_session(session_id)
            with runtime.lock:
                elapsed_ms, wall = stamp(runtime)
                decision, events = engine.ignore_notice(runtime.state, elapsed_ms, wall, reason)
                log.append(events)
        return schemas.Decision.from_engine(decision)

    @app.post("/session/{session_id}/exploratory-answer", response_model=schemas.Decision)
    def answer_exploratory(session_id: str, body: schemas.ExploratoryAnswer) -> schemas.Decision:
        with _http_errors():
            runtime = get_session(session_id)
            with runtime.lock:
                elapsed_ms, wall = stamp(runtime)
                decision, events = engine.answer_exploratory(
                    runtime.state, elapsed_ms, wall,
                    keep=body.keep, new_profile_id=body.new_profile_id,
                )
                log.append(events)
        return schemas.Decision.from_engine(decision)

    @app.post("/session/{session_id}/remove/{app_id}", response_model=schemas.Ack)
    def remove_app(session_id: str, app_id: str) -> schemas.Ack:
        with _http_errors():
            runtime = get_session(session_id)
            with runtime.lock:
                elapsed_ms, wall = stamp(runtime)
                log.append(engine.remove_app(runtime.state, app_id, elapsed_ms, wall))
        return schemas.Ack()

    @app.get("/session/{session_id}/alternatives/{app_id}", response_model=schemas.AlternativesOut)
    def alternatives(session_id: str, app_id: str) -> schemas.AlternativesOut:
        with _http_errors():
            runtime = get_session(session_id)
            with runtime.lock:
                elapsed_ms, wall = stamp(runtime)
                found, events = engine.alternatives(runtime.state, app_id, elapsed_ms, wall)
                log.append(events)
        return schemas.AlternativesOut(
            app_id=app_id,
            alternatives=[schemas.AlternativeOut.from_engine(a) for a in found],
        )

    @app.get("/session/{session_id}/log", response_model=schemas.SessionLog)
    def session_log(session_id: str) -> schemas.SessionLog:
        with _http_errors():
            get_session(session_id)
            events = log.read_session(session_id)
        return schemas.SessionLog(
            session_id=session_id,
            events=[schemas.EventOut.from_event(e) for e in events],
        )

    return app
