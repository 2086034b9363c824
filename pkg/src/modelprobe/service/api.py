"""HTTP API over the store and orchestrator.

Endpoints (JSON bodies, errors as {"code", "message", "detail"}):
    POST   /projects
    GET    /projects
    GET    /properties
    POST   /projects/{id}/subjects          model registration + training data
    POST   /subjects/{id}/configs
    POST   /configs/{id}/run
    GET    /collections/{id}/status
    GET    /runs/{id}/metrics
    GET    /runs/{id}/failures?offset&limit
    GET    /projects/{id}/compare?collections=a,b
    DELETE /collections/{id}                cancel
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..errors import (
    DuplicateError,
    ModelProbeError,
    NotFoundError,
    StateError,
    ValidationError,
)
from ..entities import FORMAT_CSV, KIND_LABELED_EVAL, RunConfiguration
from ..gateway import GatewayClient
from ..gateway.spec import ModelSpec
from ..store import Store
from .orchestrator import Orchestrator
from .reports import build_metric_report

_STATUS = {
    NotFoundError: 404,
    DuplicateError: 409,
    ValidationError: 422,
    StateError: 409,
}


class ProjectBody(BaseModel):
    name: str


class ModelBody(BaseModel):
    name: str
    endpoint_url: str
    request_template: str = '{"instances": {{SAMPLES}}}'
    http_method: str = "POST"
    headers: dict[str, str] = Field(default_factory=dict)
    label_path: str = "$.predictions[*].label"
    confidence_path: str | None = None
    batch_limit: int = 50


class SubjectBody(BaseModel):
    model: ModelBody
    training_csv: str
    data_format: str = FORMAT_CSV
    labeled_eval_csv: str | None = None


class ConfigBody(BaseModel):
    selected_properties: list[str]
    parameter_values: dict[str, dict[str, Any]] = Field(default_factory=dict)
    data_specific: dict[str, Any] = Field(default_factory=dict)
    generation_limit: int = 100
    seed: int = 0


class RunBody(BaseModel):
    idempotency_key: str | None = None
    force: bool = False


def create_app(store_root: str, gateway: GatewayClient | None = None) -> FastAPI:
    store = Store(store_root)
    orchestrator = Orchestrator(store, gateway)
    app = FastAPI(title="modelprobe", version="0.1.0")
    app.state.store = store
    app.state.orchestrator = orchestrator

    @app.exception_handler(ModelProbeError)
    async def handle_domain_error(_request: Request, exc: ModelProbeError) -> JSONResponse:
        status = 500
        for klass, code in _STATUS.items():
            if isinstance(exc, klass):
                status = code
                break
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.post("/projects")
    def create_project(body: ProjectBody) -> dict[str, Any]:
        return store.create_project(body.name).to_dict()

    @app.get("/projects")
    def list_projects() -> list[dict[str, Any]]:
        return [p.to_dict() for p in store.list_projects()]

    @app.get("/properties")
    def list_properties() -> list[dict[str, Any]]:
        return [d.to_dict() for d in store.list_property_definitions()]

    @app.post("/projects/{project_id}/subjects")
    def register_subject(project_id: str, body: SubjectBody) -> dict[str, Any]:
        spec = ModelSpec(id="", **body.model.model_dump())
        subject = store.register_test_subject(
            project_id, spec, body.training_csv, body.data_format
        )
        if body.labeled_eval_csv:
            store.add_data_ref(subject.id, body.labeled_eval_csv, FORMAT_CSV, KIND_LABELED_EVAL)
            subject = store.get_subject(subject.id)
        return subject.to_dict()

    @app.post("/subjects/{subject_id}/configs")
    def create_config(subject_id: str, body: ConfigBody) -> dict[str, Any]:
        config = RunConfiguration(
            id="",
            test_subject_id=subject_id,
            selected_properties=body.selected_properties,
            parameter_values=body.parameter_values,
            data_specific=body.data_specific,
            generation_limit=body.generation_limit,
            seed=body.seed,
        )
        return store.save_run_configuration(config).to_dict()

    @app.post("/configs/{config_id}/run")
    def execute(config_id: str, body: RunBody | None = None) -> dict[str, Any]:
        body = body or RunBody()
        collection_id = orchestrator.execute_run(
            config_id, idempotency_key=body.idempotency_key, force=body.force
        )
        return {"collection_id": collection_id}

    @app.get("/collections/{collection_id}/status")
    def status(collection_id: str) -> dict[str, Any]:
        return orchestrator.poll_status(collection_id)

    @app.get("/runs/{run_id}/metrics")
    def metrics(run_id: str) -> dict[str, Any]:
        run = store.get_run(run_id)
        collection = store.get_collection(run.run_collection_id)
        config = store.get_run_configuration(collection.run_configuration_id)
        return build_metric_report(store, run, config.data_specific)

    @app.get("/runs/{run_id}/failures")
    def failures(
        run_id: str,
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=20, ge=1, le=500),
    ) -> dict[str, Any]:
        return orchestrator.get_failures(run_id, offset=offset, limit=limit)

    @app.get("/projects/{project_id}/compare")
    def compare(project_id: str, collections: str) -> dict[str, Any]:
        ids = [c for c in collections.split(",") if c]
        report = store.compare_collections(*ids)
        for cid in report["collections"]:
            collection = store.get_collection(cid)
            config = store.get_run_configuration(collection.run_configuration_id)
            subject = store.get_subject(config.test_subject_id)
            if subject.project_id != project_id:
                raise ValidationError("collection does not belong to this project")
        return report

    @app.delete("/collections/{collection_id}")
    def cancel(collection_id: str) -> dict[str, Any]:
        return orchestrator.cancel(collection_id)

    return app
