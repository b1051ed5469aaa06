"""HTTP service wrapping the engine.

The do_* handlers hold the request/response logic; the FastAPI app and
the command-line client both dispatch through them, so local and remote
invocations behave identically. Engine errors map onto HTTP statuses by
exception type.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import EngineConfig
from ..engine import Engine
from ..errors import (
    ConfigError,
    CorpusParseError,
    LockError,
    PersistenceError,
    ProviderError,
    SceneMemError,
)
from ..evaluation import format_table
from ..persistence import CONTAINER_NAME
from .schemas import (
    BuildRequest,
    BuildResponse,
    EvalRequest,
    EvalResponse,
    HealthResponse,
    IngestRequest,
    IngestResponse,
    QueryRequest,
    QueryResponse,
)


def status_for(error: SceneMemError) -> int:
    if isinstance(error, (CorpusParseError, ConfigError)):
        return 400
    if isinstance(error, LockError):
        return 409
    if isinstance(error, PersistenceError):
        return 409
    if isinstance(error, ProviderError):
        return 502
    return 400


def do_health(engine: Engine) -> HealthResponse:
    return HealthResponse(
        status="ok",
        version=__version__,
        index_built=(Path(engine.index_dir) / CONTAINER_NAME).exists(),
    )


def do_config(engine: Engine) -> dict:
    return engine.config.to_dict()


def do_ingest(engine: Engine, request: IngestRequest) -> IngestResponse:
    result = engine.ingest(request.corpus_path, format=request.format, sample=request.sample)
    return IngestResponse(**result.to_dict())


def do_build(engine: Engine, request: BuildRequest) -> BuildResponse:
    del request
    return BuildResponse(**engine.build().to_dict())


def do_query(engine: Engine, request: QueryRequest) -> QueryResponse:
    trace = engine.query(
        request.question, mode=request.mode, k=request.k, with_answer=request.answer
    )
    return QueryResponse(**trace.to_dict())


def do_eval(engine: Engine, request: EvalRequest) -> EvalResponse:
    sweep = None
    if request.sweep_param is not None:
        sweep = (request.sweep_param, request.sweep_values)
    reports = engine.evaluate(
        request.questions,
        repeats=request.repeats,
        sweep=sweep,
        ablations=request.ablations,
        with_judge=request.judge,
    )
    return EvalResponse(reports=[r.to_dict() for r in reports], table=format_table(reports))


def create_app(workspace: str | Path, config: EngineConfig | None = None) -> FastAPI:
    engine = Engine(workspace, config)
    app = FastAPI(title="scenemem", version=__version__)

    @app.exception_handler(SceneMemError)
    async def scenemem_error(request: Request, exc: SceneMemError) -> JSONResponse:
        del request
        return JSONResponse(
            status_code=status_for(exc),
            content={"error": str(exc), "kind": type(exc).__name__},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return do_health(engine)

    @app.get("/config")
    def config_endpoint() -> dict:
        return do_config(engine)

    @app.post("/ingest", response_model=IngestResponse)
    def ingest(request: IngestRequest) -> IngestResponse:
        return do_ingest(engine, request)

    @app.post("/build", response_model=BuildResponse)
    def build(request: BuildRequest | None = None) -> BuildResponse:
        return do_build(engine, request or BuildRequest())

    @app.post("/query", response_model=QueryResponse)
    def query(request: QueryRequest) -> QueryResponse:
        return do_query(engine, request)

    @app.post("/eval", response_model=EvalResponse)
    def eval_endpoint(request: EvalRequest) -> EvalResponse:
        return do_eval(engine, request)

    return app
