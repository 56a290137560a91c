"""HTTP API over a :class:`~kgxeval.store.SystemStore`.

Endpoints (all JSON unless noted):

    POST   /api/systems                         body = native system-output text
                                                -> {"id": ...}
    GET    /api/systems                         -> [entry, ...]
    GET    /api/systems/{id}                    -> entry metadata
    GET    /api/systems/{id}/analysis           ?metric=&feature=&ci=&ci_level=
                                                &ci_seed=&ci_resamples=
                                                -> single-analysis report
    GET    /api/compare                         ?ids=a,b,c&metric=&... -> comparison
    GET    /api/systems/{id}/buckets/{feature}/{label}/examples?offset=&limit=
                                                -> {"records": [...], ...}
    DELETE /api/systems/{id}

Errors return {"error": {"code": ..., "message": ...}} with 400 for
validation problems, 404 for unknown ids/buckets, and 409 for comparability
errors.  Handlers are stateless; all state lives in the store.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, Response

from kgxeval.analysis import (
    SingleAnalysisReport,
    compare_systems,
    drill_down,
)
from kgxeval.confidence import CiConfig
from kgxeval.errors import (
    ComparabilityError,
    ConfigurationError,
    DataError,
    KgxError,
    NotFoundError,
)
from kgxeval.store import AnalysisRequest, SystemStore
from kgxeval.sysout import record_to_dict

DEFAULT_PAGE_LIMIT = 50


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": message}},
    )


def _csv(value: str | None) -> tuple[str, ...] | None:
    if value is None or value == "":
        return None
    return tuple(part for part in value.split(",") if part)


def _ci_config(ci: str | None, ci_level: float | None, ci_seed: int | None,
               ci_resamples: int | None) -> CiConfig:
    base = CiConfig()
    return CiConfig(
        method=ci if ci is not None else base.method,
        level=ci_level if ci_level is not None else base.level,
        n_resamples=ci_resamples if ci_resamples is not None else base.n_resamples,
        seed=ci_seed if ci_seed is not None else base.seed,
    )


def create_app(store: SystemStore, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="kgxeval", docs_url=None, redoc_url=None)

    @app.exception_handler(NotFoundError)
    async def _not_found(_req, exc):
        return _error_response(404, exc.code, str(exc))

    @app.exception_handler(ComparabilityError)
    async def _conflict(_req, exc):
        return _error_response(409, exc.code, str(exc))

    @app.exception_handler(ConfigurationError)
    async def _config(_req, exc):
        return _error_response(400, exc.code, str(exc))

    @app.exception_handler(DataError)
    async def _bad_data(_req, exc):
        return _error_response(400, exc.code, str(exc))

    @app.exception_handler(KgxError)
    async def _internal(_req, exc):
        return _error_response(500, exc.code, str(exc))

    @app.post("/api/systems")
    async def upload(request: Request):
        body = await request.body()
        if not body:
            raise DataError("empty request body; expected a system-output file")
        system_id = store.put_bytes(body)
        return {"id": system_id}

    @app.get("/api/systems")
    async def list_systems():
        return [entry.to_dict() for entry in store.list()]

    @app.get("/api/systems/{system_id}")
    async def get_system(system_id: str):
        return store.get_entry(system_id).to_dict()

    @app.delete("/api/systems/{system_id}")
    async def delete_system(system_id: str):
        store.delete(system_id)
        return {"deleted": system_id}

    @app.get("/api/systems/{system_id}/analysis")
    async def analysis(
        system_id: str,
        metric: str | None = None,
        feature: str | None = None,
        ci: str | None = None,
        ci_level: float | None = None,
        ci_seed: int | None = None,
        ci_resamples: int | None = None,
    ):
        request = AnalysisRequest(
            features=_csv(feature),
            metrics=_csv(metric),
            ci=_ci_config(ci, ci_level, ci_seed, ci_resamples),
        )
        data = store.analysis(system_id, request)
        return Response(content=data, media_type="application/json")

    @app.get("/api/compare")
    async def compare(
        ids: str,
        metric: str = "mrr",
        feature: str | None = None,
        ci: str | None = None,
        ci_level: float | None = None,
        ci_seed: int | None = None,
        ci_resamples: int | None = None,
    ):
        id_list = _csv(ids)
        if id_list is None or len(id_list) < 2:
            raise DataError("ids must name at least two systems, comma-separated")
        request = AnalysisRequest(
            features=_csv(feature),
            metrics=_csv(metric) if metric else None,
            ci=_ci_config(ci, ci_level, ci_seed, ci_resamples),
        )
        reports = [
            SingleAnalysisReport.from_json(store.analysis(sid, request))
            for sid in id_list
        ]
        comparison = compare_systems(reports, metric)
        return JSONResponse(content=comparison.to_dict())

    @app.get("/api/systems/{system_id}/buckets/{feature}/{label:path}/examples")
    async def bucket_examples(
        system_id: str,
        feature: str,
        label: str,
        offset: int = Query(0, ge=0),
        limit: int = Query(DEFAULT_PAGE_LIMIT, ge=0),
    ):
        s = store.get(system_id)
        records = drill_down(s, feature, label, offset=offset, limit=limit,
                             resources=store.resources)
        return {
            "system_id": system_id,
            "feature": feature,
            "label": label,
            "offset": offset,
            "limit": limit,
            "records": [record_to_dict(rec) for rec in records],
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(store: SystemStore, host: str = "127.0.0.1", port: int = 8399,
          ui_dir: str | None = None) -> None:
    """Run the API with uvicorn until interrupted."""
    import uvicorn

    uvicorn.run(create_app(store, ui_dir=ui_dir), host=host, port=port,
                log_level="info")
