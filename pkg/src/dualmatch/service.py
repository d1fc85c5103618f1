"""HTTP session service for human verification.

Exposes the interactive loop as JSON endpoints: task upload, session creation,
batch retrieval and annotation, final-prediction verification, the shared
observation list, status (including the stop indicator history), and the final
alignment export. The companion browser client under ``frontend/`` is served
statically when present.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .ontology import OntologyParseError
from .sessions import Session, SessionConfig, SessionError, SessionStore


def create_app(data_dir: str | Path, frontend_dir: str | Path | None = None) -> FastAPI:
    store = SessionStore(data_dir)
    app = FastAPI(title="dualmatch session service")
    app.state.store = store

    @app.exception_handler(SessionError)
    async def session_error_handler(request: Request, exc: SessionError):
        return JSONResponse(status_code=exc.status, content={"detail": str(exc)})

    @app.exception_handler(OntologyParseError)
    async def parse_error_handler(request: Request, exc: OntologyParseError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    # -- tasks ----------------------------------------------------------

    @app.post("/tasks")
    def upload_task(payload: dict = Body(...)):
        task_id = payload.get("id") or f"task{len(store.list_tasks()) + 1}"
        if "source" not in payload or "target" not in payload:
            raise SessionError("task upload needs 'source' and 'target' ontology documents")
        store.add_task(task_id, payload["source"], payload["target"], payload.get("alignment"))
        return {"taskId": task_id}

    @app.get("/tasks")
    def list_tasks():
        return {"tasks": store.list_tasks()}

    # -- sessions ---------------------------------------------------------

    @app.post("/sessions")
    def create_session(payload: dict = Body(...)):
        if "taskId" not in payload:
            raise SessionError("missing 'taskId'")
        config = SessionConfig.from_dict(payload.get("config", {}))
        try:
            session = store.create_session(payload["taskId"], config)
        except ValueError as exc:  # engine-side config validation
            raise SessionError(str(exc)) from exc
        return {"sessionId": session.id}

    def _session(session_id: str) -> Session:
        return store.get_session(session_id)

    @app.get("/sessions/{session_id}/batch")
    def get_batch(session_id: str):
        return _session(session_id).get_batch()

    @app.post("/sessions/{session_id}/annotations")
    def submit_annotations(session_id: str, payload: dict = Body(...)):
        token = payload.get("batchToken")
        answers = payload.get("answers")
        if not isinstance(token, str) or not isinstance(answers, dict):
            raise SessionError("payload needs 'batchToken' and an 'answers' map")
        return _session(session_id).submit_annotations(token, answers)

    @app.get("/sessions/{session_id}/predictions")
    def get_predictions(session_id: str):
        return _session(session_id).get_predictions()

    @app.post("/sessions/{session_id}/verifications")
    def submit_verifications(session_id: str, payload: dict = Body(...)):
        decisions = payload.get("decisions")
        if not isinstance(decisions, dict):
            raise SessionError("payload needs a 'decisions' map of pairId -> bool")
        return _session(session_id).submit_verifications(
            {k: bool(v) for k, v in decisions.items()}
        )

    @app.get("/sessions/{session_id}/observations")
    def list_observations(session_id: str):
        return _session(session_id).list_observations()

    @app.post("/sessions/{session_id}/observations")
    def add_observation(session_id: str, payload: dict = Body(...)):
        if "pairId" not in payload:
            raise SessionError("payload needs 'pairId'")
        return _session(session_id).add_observation(payload["pairId"], payload.get("note", ""))

    @app.delete("/sessions/{session_id}/observations")
    def remove_observation(session_id: str, pairId: str):
        return _session(session_id).remove_observation(pairId)

    @app.get("/sessions/{session_id}/status")
    def status(session_id: str):
        return _session(session_id).status()

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        return _session(session_id).export()

    if frontend_dir is None:
        default_front = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        frontend_dir = default_front if default_front.exists() else None
    if frontend_dir is not None and Path(frontend_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
