"""HTTP query service over one shared, read-only snapshot"""

import logging

import uvicorn
from fastapi import FastAPI, HTTPException

from qinterp.config import Settings
from qinterp.core.export import InterpretResponse, result_payload
from qinterp.core.interpreter import interpret
from qinterp.core.models import QueryError
from qinterp.kb.snapshot import KnowledgeSnapshot


logger = logging.getLogger(__name__)


def create_app(snapshot: KnowledgeSnapshot, settings: Settings) -> FastAPI:
    """FastAPI app with GET /health and GET /interpret?q=<query>.

    Handlers are sync, so FastAPI runs each request on its worker thread pool.
    """
    app = FastAPI(title="qinterp")

    @app.get("/health")
    def health() -> dict[str, object]:
        return {"status": "ok", "kb": settings.kb, "counts": snapshot.counts()}

    @app.get("/interpret", response_model=InterpretResponse)
    def interpret_query(q: str = "") -> InterpretResponse:
        try:
            result = interpret(snapshot, q, settings)
        except QueryError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        return result_payload(result)

    return app


def serve(snapshot: KnowledgeSnapshot, settings: Settings, address: str | None = None) -> None:
    """Run the service on host:port until interrupted."""
    host, _, port = (address or settings.address).rpartition(":")
    logger.info("Serving %s on %s:%s", settings.kb, host, port)
    uvicorn.run(create_app(snapshot, settings), host=host, port=int(port), log_level=settings.log_level.lower())
