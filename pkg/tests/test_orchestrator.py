import threading
import time

import numpy as np
import pytest

from modelprobe.entities import RunConfiguration, STATE_CANCELLED, STATE_COMPLETED
from modelprobe.errors import StateError, ValidationError
from modelprobe.gateway import GatewayClient
from modelprobe.gateway.mocks import make_mock
from modelprobe.gateway.spec import ModelSpec
from modelprobe.service.orchestrator import Orchestrator
from modelprobe.service.reports import build_metric_report
from modelprobe.store import Store


def tabular_training_csv(n=160, seed=4):
    rng = np.random.default_rng(seed)
    lines = ["score,protected,other"]
    for _ in range(n):
        lines.append(f"{rng.random():.6f},{'A' if rng.random() < 0.5 else 'B'},{rng.random():.4f}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def env(store, serve_mock, fast_gateway):
    """Project + subject wired to a live planted-bias mock server."""
    server = serve_mock(make_mock(
        "planted-bias",
        protected_attr="protected",
        favored_value="A",
        numeric_col="score",
        threshold=0.5,
        favorable_label="yes",
        unfavorable_label="no",
    ))
    orchestrator = Orchestrator(store, fast_gateway)
    project = store.create_project("demo")
    spec = ModelSpec(id="", name="planted", endpoint_url=server.url, batch_limit=64)
    subject = store.register_test_subject(project.id, spec, tabular_training_csv())
    return orchestrator, project, subject, server


def make_config(store, subject, properties, limit=40, seed=7, params=None):
    return store.save_run_configuration(RunConfiguration(
        id="",
        test_subject_id=subject.id,
        selected_properties=properties,
        parameter_values=params or {},
        data_specific={
            "protected_attributes": ["protected"],
            "favorable_label": "yes",
            "minority_group": "protected == 'B'",
        },
        generation_limit=limit,
        seed=seed,
    ))


def test_collection_has_one_run_per_property(env):
    orchestrator, project, subject, _ = env
    config = make_config(orchestrator.store, subject,
                         ["individual-discrimination", "group-discrimination", "robustness"])
    collection_id = orchestrator.execute_run(config.id)
    collection = orchestrator.wait(collection_id, timeout=60)
    assert len(collection.runs) == 3
    assert collection.state == STATE_COMPLETED
    assert collection.finished_at is not None


def test_idempotency_key_dedupes(env):
    orchestrator, project, subject, _ = env
    config = make_config(orchestrator.store, subject, ["group-discrimination"], limit=20)
    first = orchestrator.execute_run(config.id, idempotency_key="retry-1")
    orchestrator.wait(first, timeout=60)
    second = orchestrator.execute_run(config.id, idempotency_key="retry-1")
    assert second == first


def test_generation_limit_caps_source_rows_not_pairs(env):
    orchestrator, project, subject, _ = env
    config = make_config(orchestrator.store, subject, ["individual-discrimination"], limit=30)
    collection_id = orchestrator.execute_run(config.id)
    orchestrator.wait(collection_id, timeout=60)
    status = orchestrator.poll_status(collection_id)
    run_row = status["runs"][0]
    # 30 source rows x 1 alternate (protected has 2 categories) = 30 pairs
    assert run_row["generated"] == 30
    assert run_row["executed"] == run_row["generated"]
    assert run_row["executed"] == run_row["passed"] + run_row["failed"] + run_row["errored"]


def test_status_monotone_and_arithmetic_during_run(env):
    orchestrator, project, subject, _ = env
    config = make_config(orchestrator.store, subject,
                         ["individual-discrimination", "robustness"], limit=60)
    collection_id = orchestrator.execute_run(config.id)
    seen = {r: (0, 0) for r in orchestrator.store.get_collection(collection_id).runs}
    for _ in range(50):
        status = orchestrator.poll_status(collection_id)
        for row in status["runs"]:
            generated, executed = seen[row["run_id"]]
            assert row["generated"] >= generated
            assert row["executed"] >= executed
            assert row["executed"] == row["passed"] + row["failed"] + row["errored"]
            assert row["executed"] <= row["generated"]
            seen[row["run_id"]] = (row["generated"], row["executed"])
        if status["state"] != "running":
            break
        time.sleep(0.02)
    collection = orchestrator.wait(collection_id, timeout=60)
    final = orchestrator.poll_status(collection_id)
    for row in final["runs"]:
        assert row["executed"] == row["generated"]


def test_unreachable_model_rejected_without_force(store, fast_gateway):
    orchestrator = Orchestrator(store, fast_gateway)
    project = store.create_project("p")
    spec = ModelSpec(id="", name="down", endpoint_url="http://127.0.0.1:9/predict")
    subject = store.register_test_subject(project.id, spec, tabular_training_csv(40))
    config = make_config(store, subject, ["group-discrimination"], limit=10)
    with pytest.raises(ValidationError, match="unreachable"):
        orchestrator.execute_run(config.id)


def test_worker_crash_isolated_to_its_run(env, monkeypatch):
    orchestrator, project, subject, _ = env
    from modelprobe.service import orchestrator as orch_mod

    def exploding_worker(ctx):
        raise RuntimeError("synthetic crash")

    monkeypatch.setitem(orch_mod._WORKERS, "robustness", exploding_worker)
    config = make_config(orchestrator.store, subject,
                         ["robustness", "group-discrimination"], limit=20)
    collection_id = orchestrator.execute_run(config.id)
    orchestrator.wait(collection_id, timeout=60)
    status = orchestrator.poll_status(collection_id)
    by_property = {r["property_id"]: r for r in status["runs"]}
    assert by_property["robustness"]["state"] == "errored"
    assert by_property["group-discrimination"]["state"] == "completed"
    assert status["state"] == STATE_COMPLETED
    run = orchestrator.store.get_run(by_property["robustness"]["run_id"])
    assert "synthetic crash" in run.detail


def test_cancel_flow(env, monkeypatch):
    orchestrator, project, subject, _ = env
    from modelprobe.service import orchestrator as orch_mod

    gate = threading.Event()
    original = orch_mod.WorkerContext.persist

    def slow_persist(self, outcomes):
        gate.set()
        time.sleep(0.05)
        return original(self, outcomes)

    monkeypatch.setattr(orch_mod.WorkerContext, "persist", slow_persist)
    config = make_config(orchestrator.store, subject, ["individual-discrimination"], limit=120)
    collection_id = orchestrator.execute_run(config.id)
    assert gate.wait(30)
    ack = orchestrator.cancel(collection_id)
    assert ack["state"] == STATE_CANCELLED
    # double cancel is a no-op acknowledge
    assert orchestrator.cancel(collection_id)["state"] == STATE_CANCELLED
    orchestrator.wait(collection_id, timeout=60)
    status = orchestrator.poll_status(collection_id)
    assert status["state"] == STATE_CANCELLED
    row = status["runs"][0]
    assert row["executed"] == row["passed"] + row["failed"] + row["errored"]


def test_cancel_completed_collection_is_error(env):
    orchestrator, project, subject, _ = env
    config = make_config(orchestrator.store, subject, ["group-discrimination"], limit=10)
    collection_id = orchestrator.execute_run(config.id)
    orchestrator.wait(collection_id, timeout=60)
    with pytest.raises(StateError, match="terminal"):
        orchestrator.cancel(collection_id)


def test_failures_page_pairs_and_pagination(env):
    orchestrator, project, subject, _ = env
    config = make_config(orchestrator.store, subject, ["individual-discrimination"], limit=80)
    collection_id = orchestrator.execute_run(config.id)
    orchestrator.wait(collection_id, timeout=60)
    run_id = orchestrator.store.get_collection(collection_id).runs[0]
    page = orchestrator.get_failures(run_id, offset=0, limit=10)
    assert page["total_failures"] > 0
    seen = set()
    offset = 0
    while True:
        page = orchestrator.get_failures(run_id, offset=offset, limit=10)
        ids = [item["case"]["id"] for item in page["items"]]
        assert not (set(ids) & seen)  # disjoint pages
        seen.update(ids)
        for item in page["items"]:
            assert item["result"]["verdict"] == "fail"
            original, transformed = item["case"]["samples"]
            differing = [k for k in original if original[k] != transformed[k]]
            assert differing == ["protected"]
            assert item["case"]["role_tags"] == ["original", "transformed"]
        if len(page["items"]) < 10:
            break
        offset += 10
    assert len(seen) == page["total_failures"]


def test_reevaluation_reproduces_identical_results(env):
    orchestrator, project, subject, _ = env
    config = make_config(orchestrator.store, subject,
                         ["individual-discrimination", "group-discrimination"], limit=30)
    collection_id = orchestrator.execute_run(config.id)
    orchestrator.wait(collection_id, timeout=60)
    for run_id in orchestrator.store.get_collection(collection_id).runs:
        stored = {r.test_case_id: r for r in orchestrator.store.load_results(run_id)}
        fresh = orchestrator.reevaluate_run(run_id)
        assert len(fresh) == len(stored)
        for result in fresh:
            assert result.verdict == stored[result.test_case_id].verdict
            assert result.predictions == stored[result.test_case_id].predictions


def test_new_metric_def_needs_no_case_migration(env):
    """Adding a MetricDef to a stored property and recomputing over the
    already-persisted cases/results leaves every stored row byte-identical."""
    from modelprobe.entities import MetricDef

    orchestrator, project, subject, _ = env
    store = orchestrator.store
    config = make_config(store, subject, ["individual-discrimination"], limit=20)
    collection_id = orchestrator.execute_run(config.id)
    orchestrator.wait(collection_id, timeout=60)
    run_id = store.get_collection(collection_id).runs[0]

    cases_file = store._project_dir(project.id) / "cases" / f"{run_id}.jsonl"
    results_file = store._project_dir(project.id) / "results" / f"{run_id}.jsonl"
    cases_before = cases_file.read_bytes()
    results_before = results_file.read_bytes()

    definition = store.get_property_definition("individual-discrimination")
    definition.metric_defs.append(MetricDef("pair_count", direction="none"))
    store.update_property_definition(definition)

    # the new metric computes straight from the stored rows
    updated = store.get_property_definition("individual-discrimination")
    assert any(m.name == "pair_count" for m in updated.metric_defs)
    pair_count = len(store.load_cases(run_id))
    results = store.load_results(run_id)
    flip_rate = sum(1 for r in results if r.verdict == "fail") / len(results)
    assert pair_count == len(results)
    assert 0.0 <= flip_rate <= 1.0
    assert cases_file.read_bytes() == cases_before
    assert results_file.read_bytes() == results_before


def test_metric_report_grid_intensities(env):
    orchestrator, project, subject, _ = env
    config = make_config(orchestrator.store, subject, ["group-discrimination"], limit=40)
    collection_id = orchestrator.execute_run(config.id)
    orchestrator.wait(collection_id, timeout=60)
    run_id = orchestrator.store.get_collection(collection_id).runs[0]
    run = orchestrator.store.get_run(run_id)
    report = build_metric_report(orchestrator.store, run, config.data_specific)
    assert "disparate_impact" in report["metrics"]
    grid = report["grid"]
    assert grid["rows"] and grid["cols"]
    for row in grid["values"]:
        for value in row:
            assert 0.0 <= value <= 1.0
    assert report["explanation"]


def test_text_flow_end_to_end(store, serve_mock, fast_gateway):
    server = serve_mock(make_mock("keyword-text", keywords=["good"]))
    orchestrator = Orchestrator(store, fast_gateway)
    project = store.create_project("text-p")
    spec = ModelSpec(id="", name="kw", endpoint_url=server.url)
    corpus = "\n".join([
        "good day here",
        "nothing else matters",
        "a good outcome",
        "plain words only",
        "good good story",
    ])
    subject = store.register_test_subject(project.id, spec, corpus, "text-lines")
    config = store.save_run_configuration(RunConfiguration(
        id="", test_subject_id=subject.id,
        selected_properties=["noise-sensitivity"],
        generation_limit=5, seed=3,
    ))
    collection_id = orchestrator.execute_run(config.id)
    orchestrator.wait(collection_id, timeout=60)
    run = orchestrator.store.get_run(store.get_collection(collection_id).runs[0])
    assert run.state == STATE_COMPLETED
    assert run.run_metrics["flip_rate"]["value"] == 0.0
    # zero failures -> empty page
    page = orchestrator.get_failures(run.id, offset=0, limit=10)
    assert page["total_failures"] == 0
    assert page["items"] == []


def test_timeseries_flow_end_to_end(store, serve_mock, fast_gateway):
    server = serve_mock(make_mock("forecast-last-value"))
    orchestrator = Orchestrator(store, fast_gateway)
    project = store.create_project("ts-p")
    spec = ModelSpec(
        id="", name="lv", endpoint_url=server.url,
        request_template='{"instance": {{SAMPLE}}}',
        label_path="$.predictions[0].forecast[*]",
    )
    rng = np.random.default_rng(12)
    lines = ["timestamp,value"] + [f"{i*60},{i + rng.normal(0, 0.2):.5f}" for i in range(120)]
    subject = store.register_test_subject(project.id, spec, "\n".join(lines), "timeseries-csv")
    config = store.save_run_configuration(RunConfiguration(
        id="", test_subject_id=subject.id,
        selected_properties=["ts-small-linear-change", "ts-large-linear-change"],
        parameter_values={
            "ts-small-linear-change": {"history_len": 24, "horizon_len": 6, "stride": 6},
            "ts-large-linear-change": {"history_len": 24, "horizon_len": 6, "stride": 6},
        },
        generation_limit=6, seed=2,
    ))
    collection_id = orchestrator.execute_run(config.id)
    orchestrator.wait(collection_id, timeout=60)
    status = orchestrator.poll_status(collection_id)
    by_property = {r["property_id"]: r for r in status["runs"]}
    small = orchestrator.store.get_run(by_property["ts-small-linear-change"]["run_id"])
    large = orchestrator.store.get_run(by_property["ts-large-linear-change"]["run_id"])
    assert abs(float(small.run_metrics["delta_r"]["value"])) <= 1e-9
    assert small.run_metrics["delta_r"]["verdict"] == "pass"
    # last-value tracks the +10*(max-min) shift, so its error stays flat -> fail
    assert large.run_metrics["delta_r"]["verdict"] == "fail"
