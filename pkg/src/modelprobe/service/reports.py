"""Metric reports: values, verdicts, recommendations, explanations, and a
result-visualization grid (row x column intensities in [0, 1])."""

from __future__ import annotations

from typing import Any

from ..entities import Run, TestCase, TestResult, VERDICT_ERROR
from ..store import Store


def _normalized_grid(rows: list[str], cols: list[str], counts: dict[tuple[str, str], float]) -> dict[str, Any]:
    peak = max(counts.values(), default=0.0)
    values = [
        [(counts.get((r, c), 0.0) / peak) if peak > 0 else 0.0 for c in cols]
        for r in rows
    ]
    return {"rows": rows, "cols": cols, "values": values}


def _grid_pairwise(cases: list[TestCase], results: dict[str, TestResult]) -> dict[str, Any]:
    """Original label x transformed label, normalized counts."""
    counts: dict[tuple[str, str], float] = {}
    for case in cases:
        result = results.get(case.id)
        if result is None or len(result.predictions) < 2:
            continue
        a = result.predictions[0].get("label")
        b = result.predictions[1].get("label")
        if a is None or b is None:
            continue
        counts[(a, b)] = counts.get((a, b), 0.0) + 1.0
    labels = sorted({k[0] for k in counts} | {k[1] for k in counts})
    return _normalized_grid(labels, labels, counts)


def _grid_group(cases: list[TestCase], results: dict[str, TestResult], protected: str) -> dict[str, Any]:
    """Protected-attribute categories x predicted labels, normalized counts."""
    counts: dict[tuple[str, str], float] = {}
    for case in cases:
        result = results.get(case.id)
        if result is None:
            continue
        for sample, prediction in zip(case.samples, result.predictions):
            label = prediction.get("label")
            if label is None or not isinstance(sample, dict):
                continue
            category = str(sample.get(protected, "?"))
            counts[(category, label)] = counts.get((category, label), 0.0) + 1.0
    rows = sorted({k[0] for k in counts})
    cols = sorted({k[1] for k in counts})
    return _normalized_grid(rows, cols, counts)


def _grid_correctness(cases: list[TestCase], results: dict[str, TestResult]) -> dict[str, Any]:
    counts: dict[tuple[str, str], float] = {}
    for case in cases:
        result = results.get(case.id)
        if result is None or result.verdict == VERDICT_ERROR:
            continue
        gold = str(case.reference.get("gold_label"))
        predicted = result.predictions[0].get("label")
        if predicted is None:
            continue
        counts[(gold, predicted)] = counts.get((gold, predicted), 0.0) + 1.0
    rows = sorted({k[0] for k in counts})
    cols = sorted({k[1] for k in counts})
    return _normalized_grid(rows, cols, counts)


def _grid_timeseries(cases: list[TestCase]) -> dict[str, Any]:
    """One row per window; intensity is |delta_r| scaled by the worst window."""
    deltas = []
    for case in cases:
        delta = case.reference.get("delta_r")
        deltas.append(abs(float(delta)) if delta is not None else 0.0)
    peak = max(deltas, default=0.0)
    values = [[(d / peak) if peak > 0 else 0.0] for d in deltas]
    return {"rows": [f"window {i}" for i in range(len(deltas))], "cols": ["delta_r"], "values": values}


def build_metric_report(store: Store, run: Run, data_specific: dict[str, Any]) -> dict[str, Any]:
    definition = store.get_property_definition(run.property_id)
    cases = store.load_cases(run.id)
    results = {r.test_case_id: r for r in store.load_results(run.id)}
    if definition.modality == "timeseries":
        grid = _grid_timeseries(cases)
    elif run.property_id == "group-discrimination":
        protected = (data_specific.get("protected_attributes") or ["?"])[0]
        grid = _grid_group(cases, results, protected)
    elif run.property_id == "correctness":
        grid = _grid_correctness(cases, results)
    else:
        grid = _grid_pairwise(cases, results)
    snapshot = store.compute_status_snapshot(run.id)
    explanation = _explanation(run, snapshot.to_dict())
    return {
        "run_id": run.id,
        "property_id": run.property_id,
        "display_name": definition.display_name or run.property_id,
        "state": run.state,
        "status": snapshot.to_dict(),
        "metrics": run.run_metrics,
        "result_schema": definition.result_schema,
        "explanation": explanation,
        "grid": grid,
    }


def _explanation(run: Run, status: dict[str, int]) -> str:
    parts = [
        f"{status['generated']} test cases generated, {status['executed']} executed: "
        f"{status['passed']} passed, {status['failed']} failed, {status['errored']} errored."
    ]
    for name, entry in run.run_metrics.items():
        value = entry.get("value")
        shown = value if value is not None else "n/a"
        if isinstance(value, float):
            shown = f"{value:.6g}"
        parts.append(f"{name} = {shown} ({entry.get('verdict')}).")
    if run.detail:
        parts.append(run.detail)
    return " ".join(parts)
