"""HTTP+JSON wire API over the session store.

Endpoints (all JSON, schema version 1):

    GET  /health
    GET  /api/sessions
    POST /api/sessions                      {config, initial_observations}
    GET  /api/sessions/{id}/proposal
    POST /api/sessions/{id}/observation     {results}
    POST /api/sessions/{id}/note            {text}
    GET  /api/sessions/{id}/state[?history_limit=n]

Structured errors carry {"error": <exception name>, "detail", "hint"?}.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .errors import (
    ConflictError,
    InvalidInput,
    LosboError,
    NotFound,
    ParseError,
    SeedUnsafe,
)
from .session import SessionStore

_STATUS_BY_ERROR = {
    NotFound: 404,
    ConflictError: 409,
    SeedUnsafe: 422,
    InvalidInput: 400,
    ParseError: 400,
}


class ObservationItem(BaseModel):
    y_f: float
    y_g: float | None = None
    rating: str | None = None


class InitialObservation(ObservationItem):
    x: list[float]


class CreateSessionBody(BaseModel):
    config: dict
    initial_observations: list[InitialObservation] = Field(min_length=1)


class ObservationBody(BaseModel):
    results: list[ObservationItem] = Field(min_length=1)


class NoteBody(BaseModel):
    text: str


def _jsonsafe(value):
    """Replace non-finite floats with None; JSON has no NaN/Inf."""
    import math

    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonsafe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_jsonsafe(v) for v in value]
    return value


def create_app(store: SessionStore, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="losbo session service", version="1")

    @app.exception_handler(LosboError)
    async def _losbo_error(request: Request, exc: LosboError):
        status = 500
        for cls, code in _STATUS_BY_ERROR.items():
            if isinstance(exc, cls):
                status = code
                break
        body = {"error": type(exc).__name__, "detail": str(exc)}
        if isinstance(exc, SeedUnsafe):
            body["hint"] = (
                "no safe initial observation; set bootstrap_unsafe_seed "
                "in the config to start from the least unsafe seed"
            )
        return JSONResponse(status_code=status, content=body)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/sessions")
    def list_sessions():
        return {"sessions": store.list_sessions()}

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = store.create_session(
            body.config,
            [item.model_dump() for item in body.initial_observations],
        )
        return _jsonsafe(store.get_state(session.id))

    @app.get("/api/sessions/{session_id}/proposal")
    def get_proposal(session_id: str):
        return store.get_proposal(session_id)

    @app.post("/api/sessions/{session_id}/observation")
    def post_observation(session_id: str, body: ObservationBody):
        return _jsonsafe(
            store.post_observation(
                session_id, [item.model_dump() for item in body.results]
            )
        )

    @app.post("/api/sessions/{session_id}/note")
    def post_note(session_id: str, body: NoteBody):
        return store.add_note(session_id, body.text)

    @app.get("/api/sessions/{session_id}/state")
    def get_state(session_id: str, history_limit: int | None = None):
        snapshot = store.get_state(session_id, history_limit)
        snapshot["state_hash"] = store.state_hash(session_id)
        return _jsonsafe(snapshot)

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
