"""HTTP surface for live audit sessions.

JSON over HTTP with canonical number encoding (17 significant digits,
infinities as "inf"/"-inf" strings). Optimistic concurrency via the
expected_k token; stale submissions get 409 and nothing is persisted.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request, Response
from pydantic import BaseModel

from betmart import wire
from betmart.codecs import config_from_json, policy_from_json
from betmart.errors import ConfigError, ConflictError, SessionNotFound
from betmart.sessions import SessionStore

TOKEN_ENV = "BETMART_SERVICE_TOKEN"
TOKEN_HEADER = "x-betmart-token"


class CreateSessionBody(BaseModel):
    config: dict
    policy: dict


class ObservationBody(BaseModel):
    t: float
    expected_k: int


class PolicyBody(BaseModel):
    policy: dict
    expected_k: int


def _json(payload: dict, status_code: int = 200) -> Response:
    return Response(content=wire.dumps(payload) + "\n", media_type="application/json", status_code=status_code)


def create_app(data_dir: str | Path) -> FastAPI:
    store = SessionStore(data_dir)
    store.load_existing()
    app = FastAPI(title="betmart session service")
    app.state.store = store

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        token = os.environ.get(TOKEN_ENV)
        if token and request.headers.get(TOKEN_HEADER) != token:
            return _json({"detail": "missing or wrong service token"}, 401)
        return await call_next(request)

    @app.exception_handler(ConfigError)
    async def config_error(_, exc: ConfigError) -> Response:
        return _json({"detail": str(exc), "field": exc.field}, 422)

    @app.exception_handler(ValueError)
    async def value_error(_, exc: ValueError) -> Response:
        return _json({"detail": str(exc)}, 422)

    @app.exception_handler(ConflictError)
    async def conflict(_, exc: ConflictError) -> Response:
        return _json({"detail": str(exc)}, 409)

    @app.exception_handler(SessionNotFound)
    async def not_found(_, exc: SessionNotFound) -> Response:
        return _json({"detail": f"unknown session {exc.args[0]}"}, 404)

    @app.post("/sessions")
    async def create_session(body: CreateSessionBody) -> Response:
        cfg = config_from_json(body.config)
        policy = policy_from_json(body.policy)
        session_id, state = store.create_session(cfg, policy)
        return _json({"id": session_id, "state": state}, 201)

    @app.post("/sessions/{session_id}/observations")
    async def append_observation(session_id: str, body: ObservationBody) -> Response:
        snapshot = store.append_observation(session_id, body.t, body.expected_k)
        return _json({"id": session_id, "state": snapshot})

    @app.post("/sessions/{session_id}/policy")
    async def change_policy(session_id: str, body: PolicyBody) -> Response:
        result = store.change_policy(session_id, policy_from_json(body.policy), body.expected_k)
        return _json({"id": session_id, **result})

    @app.get("/sessions/{session_id}/state")
    async def get_state(session_id: str) -> Response:
        return _json(store.get_state(session_id))

    @app.get("/sessions/{session_id}/trajectory")
    async def get_trajectory(session_id: str) -> Response:
        return _json(store.get_trajectory(session_id))

    return app


def serve(data_dir: str | Path, host: str = "127.0.0.1", port: int = 8710) -> None:
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="info")
