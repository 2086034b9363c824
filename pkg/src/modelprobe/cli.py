"""Command-line interface.

The CLI operates directly on a store directory (``--store`` or the
MODELPROBE_STORE environment variable); ``modelprobe serve`` exposes the same
store over HTTP for the web console. ``mock-model serve`` starts one of the
deterministic mock model servers for local testing.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path
from typing import Any

import click

from .entities import FORMAT_CSV, KIND_LABELED_EVAL, RunConfiguration
from .errors import ModelProbeError
from .gateway.mocks import MOCK_KINDS, MockModelServer, make_mock
from .gateway.spec import ModelSpec
from .service.orchestrator import Orchestrator
from .service.reports import build_metric_report
from .store import Store


def _echo(ctx: click.Context, payload: Any) -> None:
    if ctx.obj.get("json"):
        click.echo(json.dumps(payload, indent=None, separators=(",", ":")))
    else:
        click.echo(json.dumps(payload, indent=2))


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _split_kv(pairs: tuple[str, ...], what: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.UsageError(f"{what} must look like key=value: {pair!r}")
        key, raw = pair.split("=", 1)
        out[key] = _parse_value(raw)
    return out


@click.group()
@click.option("--store", "store_root", envvar="MODELPROBE_STORE", default="./probe-store",
              show_default=True, help="Store directory.")
@click.option("--json", "as_json", is_flag=True, help="Compact JSON output.")
@click.pass_context
def main(ctx: click.Context, store_root: str, as_json: bool) -> None:
    ctx.obj = {"store_root": store_root, "json": as_json}


def _orchestrator(ctx: click.Context) -> Orchestrator:
    if "orchestrator" not in ctx.obj:
        ctx.obj["orchestrator"] = Orchestrator(Store(ctx.obj["store_root"]))
    return ctx.obj["orchestrator"]


def _store(ctx: click.Context) -> Store:
    return _orchestrator(ctx).store


def _fail(exc: ModelProbeError) -> None:
    click.echo(json.dumps({"code": exc.code, "message": exc.message, "detail": exc.detail}), err=True)
    sys.exit(1)


# ---------------------------------------------------------------------project

@main.group()
def project() -> None:
    """Manage projects."""


@project.command("create")
@click.option("--name", required=True)
@click.pass_context
def project_create(ctx: click.Context, name: str) -> None:
    try:
        _echo(ctx, _store(ctx).create_project(name).to_dict())
    except ModelProbeError as exc:
        _fail(exc)


@project.command("list")
@click.pass_context
def project_list(ctx: click.Context) -> None:
    _echo(ctx, [p.to_dict() for p in _store(ctx).list_projects()])


# ----------------------------------------------------------------------model

@main.group()
def model() -> None:
    """Register models."""


@model.command("register")
@click.option("--project", "project_id", required=True)
@click.option("--name", required=True)
@click.option("--endpoint", required=True)
@click.option("--template", default='{"instances": {{SAMPLES}}}', show_default=True)
@click.option("--method", default="POST", show_default=True)
@click.option("--label-path", default="$.predictions[*].label", show_default=True)
@click.option("--confidence-path", default=None)
@click.option("--header", "headers", multiple=True, help="Repeatable: Name=value (may hold secrets).")
@click.option("--batch-limit", default=50, show_default=True)
@click.option("--training", "training_file", required=True, type=click.Path(exists=True))
@click.option("--format", "data_format", default=FORMAT_CSV, show_default=True,
              type=click.Choice(["csv-table", "text-lines", "timeseries-csv"]))
@click.option("--labeled-eval", "labeled_eval_file", type=click.Path(exists=True))
@click.pass_context
def model_register(ctx: click.Context, project_id: str, name: str, endpoint: str, template: str,
                   method: str, label_path: str, confidence_path: str | None,
                   headers: tuple[str, ...], batch_limit: int, training_file: str,
                   data_format: str, labeled_eval_file: str | None) -> None:
    """Register a model plus its training data as a new test subject."""
    try:
        spec = ModelSpec(
            id="",
            name=name,
            endpoint_url=endpoint,
            request_template=template,
            http_method=method,
            headers={k: str(v) for k, v in _split_kv(headers, "--header").items()},
            label_path=label_path,
            confidence_path=confidence_path,
            batch_limit=batch_limit,
        )
        store = _store(ctx)
        subject = store.register_test_subject(
            project_id, spec, Path(training_file).read_text(encoding="utf-8"), data_format
        )
        if labeled_eval_file:
            store.add_data_ref(
                subject.id, Path(labeled_eval_file).read_text(encoding="utf-8"),
                FORMAT_CSV, KIND_LABELED_EVAL,
            )
            subject = store.get_subject(subject.id)
        _echo(ctx, subject.to_dict())
    except ModelProbeError as exc:
        _fail(exc)


# ---------------------------------------------------------------------config

@main.group()
def config() -> None:
    """Run configurations."""


@config.command("create")
@click.option("--subject", "subject_id", required=True)
@click.option("--properties", required=True, help="Comma-separated property ids.")
@click.option("--param", "params", multiple=True,
              help="Repeatable: property.parameter=value (value parsed as JSON when possible).")
@click.option("--data", "data_items", multiple=True,
              help="Repeatable shared inputs, e.g. favorable_label=yes, protected_attributes='[\"group\"]'.")
@click.option("--udc", "udc_file", type=click.Path(exists=True), help="User-defined constraints JSON file.")
@click.option("--limit", "generation_limit", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def config_create(ctx: click.Context, subject_id: str, properties: str, params: tuple[str, ...],
                  data_items: tuple[str, ...], udc_file: str | None,
                  generation_limit: int, seed: int) -> None:
    try:
        parameter_values: dict[str, dict[str, Any]] = {}
        for key, value in _split_kv(params, "--param").items():
            if "." not in key:
                raise click.UsageError(f"--param needs property.parameter=value, got {key!r}")
            prop, param_name = key.split(".", 1)
            parameter_values.setdefault(prop, {})[param_name] = value
        data_specific = _split_kv(data_items, "--data")
        if udc_file:
            data_specific["udc"] = json.loads(Path(udc_file).read_text(encoding="utf-8"))
        run_config = RunConfiguration(
            id="",
            test_subject_id=subject_id,
            selected_properties=[p.strip() for p in properties.split(",") if p.strip()],
            parameter_values=parameter_values,
            data_specific=data_specific,
            generation_limit=generation_limit,
            seed=seed,
        )
        _echo(ctx, _store(ctx).save_run_configuration(run_config).to_dict())
    except ModelProbeError as exc:
        _fail(exc)


# ------------------------------------------------------------------------run

@main.group()
def run() -> None:
    """Execute and inspect test runs."""


@run.command("exec")
@click.option("--config", "config_id", required=True)
@click.option("--idempotency-key", default=None)
@click.option("--force", is_flag=True, help="Skip the model reachability probe.")
@click.option("--wait/--no-wait", default=True, show_default=True)
@click.option("--timeout", default=120.0, show_default=True)
@click.pass_context
def run_exec(ctx: click.Context, config_id: str, idempotency_key: str | None,
             force: bool, wait: bool, timeout: float) -> None:
    try:
        orchestrator = _orchestrator(ctx)
        collection_id = orchestrator.execute_run(config_id, idempotency_key=idempotency_key, force=force)
        if wait:
            orchestrator.wait(collection_id, timeout=timeout)
        _echo(ctx, orchestrator.poll_status(collection_id))
    except ModelProbeError as exc:
        _fail(exc)


@run.command("status")
@click.argument("collection_id")
@click.pass_context
def run_status(ctx: click.Context, collection_id: str) -> None:
    try:
        _echo(ctx, _orchestrator(ctx).poll_status(collection_id))
    except ModelProbeError as exc:
        _fail(exc)


@run.command("metrics")
@click.argument("run_id")
@click.pass_context
def run_metrics(ctx: click.Context, run_id: str) -> None:
    try:
        store = _store(ctx)
        run_entity = store.get_run(run_id)
        collection = store.get_collection(run_entity.run_collection_id)
        cfg = store.get_run_configuration(collection.run_configuration_id)
        _echo(ctx, build_metric_report(store, run_entity, cfg.data_specific))
    except ModelProbeError as exc:
        _fail(exc)


@run.command("failures")
@click.argument("run_id")
@click.option("--offset", default=0, show_default=True)
@click.option("--limit", default=20, show_default=True)
@click.pass_context
def run_failures(ctx: click.Context, run_id: str, offset: int, limit: int) -> None:
    try:
        _echo(ctx, _orchestrator(ctx).get_failures(run_id, offset=offset, limit=limit))
    except ModelProbeError as exc:
        _fail(exc)


@run.command("compare")
@click.option("--collections", required=True, help="Comma-separated collection ids.")
@click.pass_context
def run_compare(ctx: click.Context, collections: str) -> None:
    try:
        ids = [c.strip() for c in collections.split(",") if c.strip()]
        _echo(ctx, _store(ctx).compare_collections(*ids))
    except ModelProbeError as exc:
        _fail(exc)


@run.command("cancel")
@click.argument("collection_id")
@click.pass_context
def run_cancel(ctx: click.Context, collection_id: str) -> None:
    try:
        _echo(ctx, _orchestrator(ctx).cancel(collection_id))
    except ModelProbeError as exc:
        _fail(exc)


# ----------------------------------------------------------------------serve

@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True)
@click.pass_context
def serve(ctx: click.Context, host: str, port: int) -> None:
    """Serve the HTTP API for the web console."""
    import uvicorn

    from .service.api import create_app

    uvicorn.run(create_app(ctx.obj["store_root"]), host=host, port=port)


# -----------------------------------------------------------------mock-model

@click.group()
def mock_model() -> None:
    """Deterministic mock model servers."""


@mock_model.command("serve")
@click.option("--kind", required=True, type=click.Choice(list(MOCK_KINDS)))
@click.option("--port", default=8399, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--params", "params_json", default="{}", show_default=True,
              help="JSON object with model parameters.")
def mock_model_serve(kind: str, port: int, host: str, params_json: str) -> None:
    model_instance = make_mock(kind, **json.loads(params_json))
    server = MockModelServer(model_instance, host=host, port=port).start()
    click.echo(f"mock model {kind!r} listening on {server.url}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.stop()


main.add_command(mock_model, name="mock-model")
