"""HTTP surface over the workbench store.

Thin translation layer: bodies are parsed with the same strict schema
functions the store uses, all state changes go through WorkbenchStore, and
every failure becomes a structured {code, message, detail} body.
"""

from __future__ import annotations

from typing import Optional

from fastapi import Body, FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .ann import SchemaError, edit_from_data
from .compiler import anet_from_data, report_from_data
from .cppn import cppn_from_data
from .maze import evaluation_to_data, maze_to_data
from .store import (
    StoreError,
    WorkbenchStore,
    brain_record_to_data,
    session_to_data,
)

_STATUS = {
    "not_found": 404,
    "invalid": 400,
    "schema": 400,
    "round_trip": 409,
    "internal": 500,
}


def _error_response(exc: StoreError) -> JSONResponse:
    return JSONResponse(
        status_code=_STATUS.get(exc.code, 400),
        content={"code": exc.code, "message": exc.message, "detail": exc.detail},
    )


def _require(payload: dict, allowed: set[str], required: set[str]) -> None:
    if not isinstance(payload, dict):
        raise StoreError("schema", "body must be a JSON object")
    unknown = set(payload) - allowed
    if unknown:
        raise StoreError("schema", f"unknown fields {sorted(unknown)}")
    missing = required - set(payload)
    if missing:
        raise StoreError("schema", f"missing fields {sorted(missing)}")


def create_app(store: WorkbenchStore) -> FastAPI:
    app = FastAPI(title="neuroforge workbench", docs_url=None, redoc_url=None)

    @app.exception_handler(StoreError)
    async def _store_error(request, exc: StoreError):
        return _error_response(exc)

    @app.exception_handler(SchemaError)
    async def _schema_error(request, exc: SchemaError):
        return _error_response(StoreError("schema", str(exc)))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request, exc: RequestValidationError):
        return _error_response(
            StoreError("schema", "malformed request", detail=str(exc.errors()[:3]))
        )

    @app.post("/brains", status_code=201)
    def save_brain(payload: dict = Body(...)):
        _require(
            payload,
            {"author", "maze_id", "anet", "cppn", "report", "parent_id"},
            {"author", "maze_id", "anet"},
        )
        anet = anet_from_data(payload["anet"])
        cppn = (
            cppn_from_data(payload["cppn"]) if payload.get("cppn") is not None else None
        )
        report = (
            report_from_data(payload["report"])
            if payload.get("report") is not None
            else None
        )
        rec = store.save_brain(
            author=payload["author"],
            maze_id=payload["maze_id"],
            anet=anet,
            cppn=cppn,
            report=report,
            parent_id=payload.get("parent_id"),
        )
        return brain_record_to_data(rec)

    @app.get("/brains/{brain_id}")
    def get_brain(brain_id: str):
        return brain_record_to_data(store.get_brain(brain_id))

    @app.post("/brains/{brain_id}/fork", status_code=201)
    def fork_brain(brain_id: str, payload: dict = Body(...)):
        _require(payload, {"author"}, {"author"})
        return brain_record_to_data(store.fork_brain(brain_id, payload["author"]))

    @app.post("/brains/{brain_id}/evaluate")
    def evaluate_brain(brain_id: str):
        return evaluation_to_data(store.evaluate_brain(brain_id))

    @app.post("/brains/{brain_id}/edits")
    def edit_brain(brain_id: str, payload: dict = Body(...)):
        edit = edit_from_data(payload)
        return brain_record_to_data(store.apply_edit_to_brain(brain_id, edit))

    @app.get("/mazes")
    def list_mazes():
        return [maze_to_data(m) for _, m in sorted(store.mazes().items())]

    @app.get("/mazes/{maze_id}")
    def get_maze(maze_id: str):
        return maze_to_data(store.maze(maze_id))

    @app.get("/leaderboard")
    def leaderboard(maze: str, limit: int = 10):
        rows = store.leaderboard(maze, limit)
        return [
            {"brain_id": r.brain_id, "author": r.author, "best_fitness": r.best_fitness}
            for r in rows
        ]

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        _require(payload, {"brain_id", "mode", "seed"}, {"brain_id", "mode"})
        sess = store.create_session(
            payload["brain_id"], payload["mode"], payload.get("seed")
        )
        return session_to_data(sess)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_to_data(store.get_session(session_id))

    @app.post("/sessions/{session_id}/breed")
    def breed(session_id: str, payload: dict = Body(...)):
        _require(payload, {"selections", "mode"}, {"selections"})
        selections = payload["selections"]
        if not isinstance(selections, list) or not all(
            isinstance(s, str) for s in selections
        ):
            raise StoreError("schema", "selections must be a list of candidate ids")
        sess = store.breed(session_id, selections, payload.get("mode"))
        return session_to_data(sess)

    return app
