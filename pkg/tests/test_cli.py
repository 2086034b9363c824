import json
import time

import pytest
from click.testing import CliRunner

from modelprobe.cli import main, mock_model
from modelprobe.gateway.mocks import make_mock

from tests.test_orchestrator import tabular_training_csv


@pytest.fixture
def cli_env(tmp_path, serve_mock):
    server = serve_mock(make_mock(
        "planted-bias", protected_attr="protected", favored_value="A",
        numeric_col="score", threshold=0.5, favorable_label="yes", unfavorable_label="no",
    ))
    training = tmp_path / "training.csv"
    training.write_text(tabular_training_csv(100))
    runner = CliRunner()
    store_root = str(tmp_path / "store")
    return runner, store_root, server, training


def invoke(runner, store_root, *args, expect=0):
    result = runner.invoke(main, ["--store", store_root, "--json", *args], catch_exceptions=False)
    assert result.exit_code == expect, result.output
    return json.loads(result.output) if result.output.strip() and expect == 0 else None


def test_cli_workflow(cli_env):
    runner, store_root, server, training = cli_env

    project = invoke(runner, store_root, "project", "create", "--name", "cli-demo")
    subject = invoke(
        runner, store_root, "model", "register",
        "--project", project["id"], "--name", "planted",
        "--endpoint", server.url, "--training", str(training),
        "--header", "Authorization=Bearer cli-secret",
    )
    assert subject["data_properties"]["columns"] == ["score", "protected", "other"]

    config = invoke(
        runner, store_root, "config", "create",
        "--subject", subject["id"],
        "--properties", "group-discrimination,individual-discrimination",
        "--data", 'protected_attributes=["protected"]',
        "--data", "favorable_label=yes",
        "--data", "minority_group=protected == 'B'",
        "--limit", "20", "--seed", "3",
    )
    status = invoke(runner, store_root, "run", "exec", "--config", config["id"],
                    "--timeout", "60")
    assert status["state"] == "completed"
    assert len(status["runs"]) == 2
    for row in status["runs"]:
        assert row["executed"] == row["passed"] + row["failed"] + row["errored"]

    status2 = invoke(runner, store_root, "run", "status", status["collection_id"])
    assert status2["state"] == "completed"

    run_id = status["runs"][0]["run_id"]
    metrics = invoke(runner, store_root, "run", "metrics", run_id)
    assert "metrics" in metrics and "grid" in metrics

    failures = invoke(runner, store_root, "run", "failures", run_id, "--limit", "5")
    assert failures["run_id"] == run_id

    compare = invoke(runner, store_root, "run", "compare",
                     "--collections", f"{status['collection_id']},{status['collection_id']}")
    assert compare["collections"] == [status["collection_id"]] * 2


def test_cli_project_list(cli_env):
    runner, store_root, *_ = cli_env
    invoke(runner, store_root, "project", "create", "--name", "one")
    listing = invoke(runner, store_root, "project", "list")
    assert [p["name"] for p in listing] == ["one"]


def test_cli_duplicate_project_fails(cli_env):
    runner, store_root, *_ = cli_env
    invoke(runner, store_root, "project", "create", "--name", "same")
    result = runner.invoke(main, ["--store", store_root, "project", "create", "--name", "same"])
    assert result.exit_code == 1


def test_cli_idempotency(cli_env):
    runner, store_root, server, training = cli_env
    project = invoke(runner, store_root, "project", "create", "--name", "idem")
    subject = invoke(runner, store_root, "model", "register", "--project", project["id"],
                     "--name", "m", "--endpoint", server.url, "--training", str(training))
    config = invoke(runner, store_root, "config", "create", "--subject", subject["id"],
                    "--properties", "robustness", "--limit", "10")
    first = invoke(runner, store_root, "run", "exec", "--config", config["id"],
                   "--idempotency-key", "k1", "--timeout", "60")
    second = invoke(runner, store_root, "run", "exec", "--config", config["id"],
                    "--idempotency-key", "k1", "--timeout", "60")
    assert first["collection_id"] == second["collection_id"]


def test_mock_model_cli_help_lists_kinds():
    runner = CliRunner()
    result = runner.invoke(mock_model, ["serve", "--help"])
    assert result.exit_code == 0
    assert "planted-bias" in result.output
    assert "forecast-normalizing" in result.output
