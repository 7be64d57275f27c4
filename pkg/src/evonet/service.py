"""Control service: one live engine run per session, steerable over HTTP.

Commands (step, pause, resume, config patches) are serialized through a
per-session lock, so they are totally ordered and config changes land
exactly on generation boundaries.  Reads snapshot the last completed
generation; the record stream pushes one server-sent event per generation.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import threading
import uuid
from enum import Enum
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .engine import ConfigError, Evolution, GaConfig, GenerationRecord
from .model import network_to_doc

logger = logging.getLogger(__name__)

UI_DIR_ENV = "EVONET_UI_DIR"


class SessionMode(Enum):
    RUNNING = "running"
    PAUSED = "paused"
    FINISHED = "finished"


class Session:
    """A single engine run plus the machinery to steer and observe it."""

    def __init__(self, run_id: str, cfg: GaConfig):
        self.run_id = run_id
        self.lock = threading.RLock()
        self.engine = Evolution(cfg)
        self.pending_patch: dict = {}
        self.subscribers: list[queue.Queue] = []
        self._worker: threading.Thread | None = None
        self._stop_requested = False

    # All state transitions happen under self.lock.

    @property
    def mode(self) -> SessionMode:
        if self.engine.finished:
            return SessionMode.FINISHED
        if self._worker is not None and self._worker.is_alive() and not self._stop_requested:
            return SessionMode.RUNNING
        return SessionMode.PAUSED

    def state_doc(self) -> dict:
        with self.lock:
            records = self.engine.records
            latest = records[-1].to_doc() if records else None
            elite = network_to_doc(self.engine.elite().network)
            return {
                "run_id": self.run_id,
                "mode": self.mode.value,
                "current_generation": self.engine.generation,
                "live_config": self.engine.cfg.to_doc(),
                "latest_record": latest,
                "elite_network": elite,
            }

    def _apply_pending_patch(self) -> None:
        if self.pending_patch:
            self.engine.replace_config(self.engine.cfg.patched(self.pending_patch))
            self.pending_patch = {}

    def _publish(self, record: GenerationRecord) -> None:
        for q in list(self.subscribers):
            q.put(record)

    def queue_patch(self, patch: dict) -> None:
        """Validate a partial config against the engine's effective config
        and stage it; it lands at the next generation boundary (immediately
        when the loop is not running)."""
        with self.lock:
            if self.mode is SessionMode.FINISHED:
                raise HTTPException(status_code=409, detail="session is finished")
            merged = dict(self.pending_patch)
            merged.update(patch)
            candidate = self.engine.cfg.patched(merged)  # raises ConfigError
            errors = candidate.validate()
            if errors:
                raise ConfigError(errors)
            self.pending_patch = merged
            if self.mode is SessionMode.PAUSED:
                self._apply_pending_patch()

    def step(self, n_generations: int) -> None:
        with self.lock:
            if self.mode is SessionMode.RUNNING:
                raise HTTPException(status_code=409, detail="cannot step while running; pause first")
            if self.mode is SessionMode.FINISHED:
                raise HTTPException(status_code=409, detail="session is finished")
            for _ in range(n_generations):
                if self.engine.finished:
                    break
                self._apply_pending_patch()
                self._publish(self.engine.step())

    def resume(self) -> None:
        with self.lock:
            if self.mode is SessionMode.FINISHED:
                raise HTTPException(status_code=409, detail="session is finished")
            if self.mode is SessionMode.RUNNING:
                return
            self._stop_requested = False
            self._worker = threading.Thread(target=self._run_loop, daemon=True)
            self._worker.start()

    def pause(self) -> None:
        with self.lock:
            if self.mode is SessionMode.FINISHED:
                raise HTTPException(status_code=409, detail="session is finished")
            worker = self._worker
            self._stop_requested = True
        if worker is not None:
            worker.join()  # boundary = end of the in-flight generation

    def _run_loop(self) -> None:
        while True:
            with self.lock:
                if self._stop_requested or self.engine.finished:
                    break
                self._apply_pending_patch()
                record = self.engine.step()
                self._publish(record)

    def records_from(self, start: int) -> list[dict]:
        with self.lock:
            return [r.to_doc() for r in self.engine.records if r.generation >= start]

    def subscribe(self, start: int) -> tuple[list[GenerationRecord], queue.Queue]:
        """Atomically snapshot the backlog and register for new records, so
        the stream is gap-free and duplicate-free."""
        q: queue.Queue = queue.Queue()
        with self.lock:
            backlog = [r for r in self.engine.records if r.generation >= start]
            self.subscribers.append(q)
        return backlog, q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self.lock:
            if q in self.subscribers:
                self.subscribers.remove(q)


class SessionManager:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, cfg: GaConfig) -> Session:
        run_id = uuid.uuid4().hex[:12]
        session = Session(run_id, cfg)
        with self._lock:
            self._sessions[run_id] = session
        return session

    def get(self, run_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(run_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {run_id}")
        return session


def _sse_event(record: GenerationRecord) -> str:
    payload = json.dumps(record.to_doc(), sort_keys=True)
    return f"event: generation\ndata: {payload}\n\n"


def create_app(ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="evonet control service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    manager = SessionManager()
    app.state.sessions = manager

    @app.exception_handler(ConfigError)
    def _config_error(_request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"errors": exc.errors})

    @app.post("/sessions")
    def create_session(config: dict = Body(default={})):
        cfg = GaConfig.from_doc(config)
        errors = cfg.validate()
        if errors:
            raise ConfigError(errors)
        session = manager.create(cfg)
        return {"run_id": session.run_id, "state": session.state_doc()}

    @app.get("/sessions/{run_id}")
    def get_session(run_id: str):
        return manager.get(run_id).state_doc()

    @app.patch("/sessions/{run_id}/config")
    def patch_config(run_id: str, patch: dict = Body(...)):
        session = manager.get(run_id)
        session.queue_patch(patch)
        return session.state_doc()

    @app.post("/sessions/{run_id}/step")
    def step_session(run_id: str, body: dict = Body(default={})):
        session = manager.get(run_id)
        n = body.get("n_generations", 1)
        if not isinstance(n, int) or n < 0:
            raise ConfigError({"n_generations": "must be a non-negative integer"})
        session.step(n)
        return session.state_doc()

    @app.post("/sessions/{run_id}/pause")
    def pause_session(run_id: str):
        session = manager.get(run_id)
        session.pause()
        return session.state_doc()

    @app.post("/sessions/{run_id}/resume")
    def resume_session(run_id: str):
        session = manager.get(run_id)
        session.resume()
        return session.state_doc()

    @app.get("/sessions/{run_id}/records")
    def get_records(run_id: str, start: int = Query(default=1, alias="from", ge=0)):
        return manager.get(run_id).records_from(start)

    @app.get("/sessions/{run_id}/network")
    def get_network(run_id: str):
        session = manager.get(run_id)
        with session.lock:
            return network_to_doc(session.engine.elite().network)

    @app.get("/sessions/{run_id}/stream")
    def stream_records(run_id: str, start: int = Query(default=1, alias="from", ge=0)):
        session = manager.get(run_id)
        backlog, q = session.subscribe(start)

        def event_source():
            last = backlog[-1].generation if backlog else start - 1
            idle_polls = 0
            try:
                for record in backlog:
                    yield _sse_event(record)
                while True:
                    try:
                        record = q.get(timeout=0.25)
                    except queue.Empty:
                        if session.mode is SessionMode.FINISHED:
                            return
                        # periodic comment so idle streams stay responsive
                        # to disconnects and proxies keep the pipe open
                        idle_polls += 1
                        if idle_polls >= 8:
                            idle_polls = 0
                            yield ": keep-alive\n\n"
                        continue
                    idle_polls = 0
                    if record.generation > last:
                        last = record.generation
                        yield _sse_event(record)
            finally:
                session.unsubscribe(q)

        return StreamingResponse(
            event_source(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    if ui_dir is None:
        ui_dir = os.environ.get(UI_DIR_ENV, "frontend/dist")
    ui_path = Path(ui_dir)
    if ui_path.is_dir():
        app.mount("/", StaticFiles(directory=str(ui_path), html=True), name="ui")
        logger.info("serving dashboard from %s", ui_path)

    return app
