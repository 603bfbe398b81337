"""HTTP API over :class:`ctxsearch.session.SearchService`.

Every response body carries ``schema_version``; errors map to
400 (validation/parse), 404 (unknown resource), 409 (state), and
502 (backend adapter failure).
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import AdapterError, ParseError, SessionStateError, ValidationError
from .profile_store import entry_to_json
from .session import SearchService

SCHEMA_VERSION = 1


class CreateSessionRequest(BaseModel):
    user_id: str
    phase: str
    task_id: str = ""


class QueryRequest(BaseModel):
    query: str


class SelectionRequest(BaseModel):
    stage: str
    chosen: list[str] = Field(default_factory=list)


class ClickRequest(BaseModel):
    url: str


class CompleteRequest(BaseModel):
    found: bool


def _body(payload: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, **payload}


def create_app(service: SearchService) -> FastAPI:
    app = FastAPI(title="ctxsearch", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _error(status: int, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=status, content=_body({"error": str(exc)}))

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return _error(400, exc)

    @app.exception_handler(ParseError)
    async def _parse(request: Request, exc: ParseError):
        return _error(400, exc)

    @app.exception_handler(SessionStateError)
    async def _state(request: Request, exc: SessionStateError):
        return _error(409, exc)

    @app.exception_handler(AdapterError)
    async def _adapter(request: Request, exc: AdapterError):
        return _error(502, exc)

    @app.exception_handler(KeyError)
    async def _missing(request: Request, exc: KeyError):
        return _error(404, exc)

    @app.exception_handler(RequestValidationError)
    async def _request_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content=_body({"error": exc.errors()}))

    @app.post("/sessions")
    async def create_session(req: CreateSessionRequest):
        session = service.create_session(req.user_id, req.phase, req.task_id)
        return _body(
            {
                "session_id": session.session_id,
                "user_id": session.user_id,
                "phase": session.phase,
                "task_id": session.task_id,
                "state": session.state,
                "sckb_enabled": session.sckb_read_enabled and service.config.sckb_enabled,
            }
        )

    @app.post("/sessions/{session_id}/query")
    async def submit_query(session_id: str, req: QueryRequest):
        return _body(service.submit_query(session_id, req.query))

    @app.get("/sessions/{session_id}/recommendations")
    async def recommendations(session_id: str):
        return _body(service.current_recommendations(session_id))

    @app.post("/sessions/{session_id}/selections")
    async def selections(session_id: str, req: SelectionRequest):
        return _body(service.apply_selection(session_id, req.stage, req.chosen))

    @app.get("/sessions/{session_id}/results")
    async def results(session_id: str, page: int = 1):
        return _body(service.get_results(session_id, page))

    @app.post("/sessions/{session_id}/clicks")
    async def clicks(session_id: str, req: ClickRequest):
        metrics = service.report_click(session_id, req.url)
        return _body({"session_id": session_id, "metrics": metrics.to_json()})

    @app.post("/sessions/{session_id}/complete")
    async def complete(session_id: str, req: CompleteRequest):
        metrics = service.complete_task(session_id, req.found)
        session = service.get_session(session_id)
        return _body(
            {
                "session_id": session_id,
                "state": session.state,
                "found": session.found,
                "metrics": metrics.to_json(),
            }
        )

    @app.get("/sessions/{session_id}/metrics")
    async def metrics(session_id: str):
        session = service.get_session(session_id)
        return _body(
            {
                "session_id": session_id,
                "state": session.state,
                "found": session.found,
                "metrics": session.metrics.to_json(),
            }
        )

    @app.get("/users/{user_id}/profile")
    async def profile(user_id: str, limit: int = 20):
        summary = service.profile_summary(user_id, limit)
        return _body(
            {
                "user_id": summary["user_id"],
                "entry_count": summary["entry_count"],
                "entries": [entry_to_json(e) for e in summary["entries"]],
            }
        )

    @app.get("/sckb/stats")
    async def sckb_stats():
        return _body(service.sckb_stats())

    return app
