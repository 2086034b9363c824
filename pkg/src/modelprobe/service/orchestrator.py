"""Run execution: one worker thread per selected property, live status from
the store, cooperative cancellation, failure pages and metric reports."""

from __future__ import annotations

import math
import threading
import time
import zlib
from dataclasses import dataclass
from typing import Any, Callable

from .. import ids
from ..catalog import install_builtin_catalog
from ..entities import (
    KIND_LABELED_EVAL,
    KIND_TRAINING,
    PropertyDefinition,
    Run,
    RunCollection,
    RunConfiguration,
    STATE_CANCELLED,
    STATE_COMPLETED,
    STATE_ERRORED,
    STATE_PENDING,
    STATE_RUNNING,
    TERMINAL_STATES,
    TestCase,
    TestResult,
    TestSubject,
    VERDICT_ERROR,
    VERDICT_FAIL,
    VERDICT_INFO,
    VERDICT_PASS,
    encode_number,
)
from ..errors import StateError, ValidationError
from ..gateway import GatewayClient, PredictorHandle
from ..gateway.spec import PredictionError
from ..store import Store
from ..synth import (
    TableSchema,
    apply_udc,
    extract_paths,
    fit_distribution_model,
    fit_surrogate,
    generate_for_paths,
    path_coverage,
)
from ..synth.schema import parse_rows, read_csv_rows
from ..testers import timeseries as ts_tester
from ..testers.base import CaseOutcome, flip_rate
from ..testers.tabular import (
    FairnessConfig,
    RobustnessConfig,
    correctness_metrics_from_cases,
    correctness_outcomes,
    individual_discrimination_pairs,
    perturb_rows,
    test_group_discrimination,
)
from ..testers.base import pair_outcome
from ..testers.text import TextTransformSpec, build_text_pairs

BATCH_SIZE = 32


def derive_seed(seed: int, token: str) -> int:
    return (seed ^ zlib.crc32(token.encode())) & 0x7FFFFFFF


@dataclass
class WorkerContext:
    store: Store
    config: RunConfiguration
    subject: TestSubject
    handle: PredictorHandle
    run: Run
    definition: PropertyDefinition
    params: dict[str, Any]
    cancel: threading.Event
    seed: int

    def cancelled(self) -> bool:
        return self.cancel.is_set()

    def persist(self, outcomes: list[CaseOutcome]) -> list[TestCase]:
        """Cases first (generated counts rise), then results (executed)."""
        cases = [
            TestCase(
                id=ids.new_id(),
                run_id=self.run.id,
                samples=o.samples,
                role_tags=o.role_tags,
                reference=o.reference,
            )
            for o in outcomes
        ]
        self.store.append_cases(self.run.id, cases)
        results = [
            TestResult(
                test_case_id=case.id,
                predictions=o.predictions,
                verdict=o.verdict,
                detail=o.detail,
            )
            for case, o in zip(cases, outcomes)
        ]
        self.store.append_results(self.run.id, results)
        return cases


Worker = Callable[[WorkerContext], tuple[dict[str, float | None], str]]
# Returns ({metric -> value}, detail text); None values mean "not computable".

_WORKERS: dict[str, Worker] = {}


def register_tester(property_id: str, worker: Worker) -> None:
    """Plug-in point mirroring the data-driven property registry."""
    _WORKERS[property_id] = worker


def _batches(items: list, size: int = BATCH_SIZE):
    for start in range(0, len(items), size):
        yield items[start : start + size]


# ------------------------------------------------------------ tabular workers

def _subject_schema(ctx: WorkerContext) -> TableSchema:
    return TableSchema.from_dict(ctx.subject.data_properties["schema"])


def _training_rows(ctx: WorkerContext) -> list[dict[str, Any]]:
    ref = ctx.subject.data_ref(KIND_TRAINING)
    if ref is None:
        raise ValidationError("subject has no training data")
    schema = _subject_schema(ctx)
    _, raw = read_csv_rows(ctx.store.read_data(ctx.subject, ref))
    return parse_rows(schema, raw)


def _generated_rows(ctx: WorkerContext) -> tuple[list[dict[str, Any]], str]:
    """Synthesize realistic rows equally across surrogate decision paths."""
    schema = _subject_schema(ctx)
    training = _training_rows(ctx)
    model = fit_distribution_model(schema, training, bins=10, seed=ctx.seed)
    udc = ctx.config.data_specific.get("udc")
    if udc:
        model = apply_udc(model, udc)
    tree = fit_surrogate(schema, training, ctx.handle, seed=ctx.seed)
    paths = extract_paths(tree)
    budget = max(ctx.config.generation_limit, sum(1 for _ in paths))
    rows, report = generate_for_paths(paths, model, budget, seed=ctx.seed)
    rows = rows[: ctx.config.generation_limit]
    coverage = path_coverage(rows, tree)
    detail = (
        f"surrogate fidelity {tree.fidelity:.3f} over {tree.leaf_count} decision paths; "
        f"path coverage {coverage:.3f} on {len(rows)} generated rows"
    )
    if report.warnings:
        detail += "; " + "; ".join(report.warnings)
    return rows, detail


def _fairness_config(ctx: WorkerContext) -> FairnessConfig:
    data = ctx.config.data_specific
    return FairnessConfig(
        protected_attributes=list(data.get("protected_attributes", [])),
        favorable_label=str(data.get("favorable_label", "")),
        minority_group=str(data.get("minority_group", "") or ""),
        di_low=float(ctx.params.get("di_low", 0.8)),
        di_high=float(ctx.params.get("di_high", 1.25)),
    )


def _worker_correctness(ctx: WorkerContext) -> tuple[dict[str, float | None], str]:
    ref = ctx.subject.data_ref(KIND_LABELED_EVAL)
    if ref is None:
        raise ValidationError("correctness needs a labeled-eval data reference")
    schema = _subject_schema(ctx)
    header, raw = read_csv_rows(ctx.store.read_data(ctx.subject, ref))
    gold_column = ctx.config.data_specific.get("gold_label_column")
    if gold_column is None:
        gold_column = "label" if "label" in header else header[-1]
    if gold_column not in header:
        raise ValidationError(f"missing gold column {gold_column!r} in labeled-eval data")
    gold_index = header.index(gold_column)
    feature_names = [h for h in header if h != gold_column]
    rows = []
    gold = []
    for record in raw:
        gold.append(record[gold_index].strip())
        row: dict[str, Any] = {}
        for name, cell in zip(header, record):
            if name == gold_column:
                continue
            column = schema.column(name)
            row[name] = float(cell) if column.kind == "numeric" else cell.strip()
        rows.append(row)
    rows = rows[: ctx.config.generation_limit]
    gold = gold[: ctx.config.generation_limit]
    collected: list[CaseOutcome] = []
    for batch_rows, batch_gold in zip(_batches(rows), _batches(gold)):
        if ctx.cancelled():
            break
        outcomes = correctness_outcomes(batch_rows, batch_gold, ctx.handle.predict_batch(batch_rows))
        ctx.persist(outcomes)
        collected.extend(outcomes)
    metrics = correctness_metrics_from_cases(collected)
    detail = f"evaluated {len(collected)} labeled rows from {ref.location} (gold column {gold_column!r})"
    return dict(metrics), detail


def _worker_group_discrimination(ctx: WorkerContext) -> tuple[dict[str, float | None], str]:
    rows, gen_detail = _generated_rows(ctx)
    if ctx.cancelled():
        return {}, gen_detail
    config = _fairness_config(ctx)
    metrics, outcomes = test_group_discrimination(rows, ctx.handle, config)
    ctx.persist(outcomes)
    detail = (
        f"minority {metrics.minority_count} rows at favorable rate {metrics.rate_minority:.4g}, "
        f"majority {metrics.majority_count} at {metrics.rate_majority:.4g}; {gen_detail}"
    )
    return {
        "disparate_impact": metrics.disparate_impact,
        "demographic_parity": metrics.demographic_parity,
    }, detail


def _pairwise_worker(ctx: WorkerContext, pairs) -> list[CaseOutcome]:
    collected: list[CaseOutcome] = []
    for batch in _batches(pairs):
        if ctx.cancelled():
            break
        originals = [p[0] for p in batch]
        transformed = [p[1] for p in batch]
        p_orig = ctx.handle.predict_batch(originals)
        p_trans = ctx.handle.predict_batch(transformed)
        outcomes = [
            pair_outcome(o, t, po, pt, ref)
            for (o, t, ref), po, pt in zip(batch, p_orig, p_trans)
        ]
        ctx.persist(outcomes)
        collected.extend(outcomes)
    return collected


def _worker_individual_discrimination(ctx: WorkerContext) -> tuple[dict[str, float | None], str]:
    rows, gen_detail = _generated_rows(ctx)
    if ctx.cancelled():
        return {}, gen_detail
    config = _fairness_config(ctx)
    pairs = individual_discrimination_pairs(rows, _subject_schema(ctx), config.protected_attributes)
    if not pairs:
        raise ValidationError("nothing to test: protected attributes have no alternate values")
    collected = _pairwise_worker(ctx, pairs)
    detail = f"{len(pairs)} pairs from {len(rows)} source rows; {gen_detail}"
    return {"flip_rate": flip_rate(collected)}, detail


def _worker_robustness(ctx: WorkerContext) -> tuple[dict[str, float | None], str]:
    schema = _subject_schema(ctx)
    if not any(c.kind == "numeric" for c in schema.columns):
        return {"flip_rate": None}, "no numeric columns; robustness not applicable"
    rows, gen_detail = _generated_rows(ctx)
    if ctx.cancelled():
        return {}, gen_detail
    config = RobustnessConfig(
        epsilon=float(ctx.params["epsilon"]),
        neighbors_per_sample=int(ctx.params["neighbors_per_sample"]),
    )
    pairs = perturb_rows(rows, schema, config, seed=ctx.seed)
    collected = _pairwise_worker(ctx, pairs)
    detail = f"{len(pairs)} neighbor pairs from {len(rows)} source rows; {gen_detail}"
    return {"flip_rate": flip_rate(collected)}, detail


# --------------------------------------------------------------- text worker

def _text_worker(kind: str) -> Worker:
    def worker(ctx: WorkerContext) -> tuple[dict[str, float | None], str]:
        ref = ctx.subject.data_ref(KIND_TRAINING)
        corpus = [l for l in ctx.store.read_data(ctx.subject, ref).splitlines() if l.strip()]
        # optional tab-separated gold labels are ignored by sensitivity testing
        corpus = [line.split("\t", 1)[0] for line in corpus]
        spec = TextTransformSpec(kind=kind, level=int(ctx.params["level"]), seed=ctx.seed)
        pairs = build_text_pairs(corpus, spec, ctx.config.generation_limit)
        collected = _pairwise_worker(ctx, pairs)
        detail = f"{len(collected)} transformed sentences at level {spec.level}"
        return {"flip_rate": flip_rate(collected)}, detail

    return worker


# -------------------------------------------------------- timeseries workers

def _ts_worker(kind: str) -> Worker:
    def worker(ctx: WorkerContext) -> tuple[dict[str, float | None], str]:
        ref = ctx.subject.data_ref(KIND_TRAINING)
        series = ts_tester.load_series(ctx.store.read_data(ctx.subject, ref))
        training_min = ctx.params.get("training_min")
        training_max = ctx.params.get("training_max")
        if training_min is None:
            training_min = ctx.subject.data_properties.get("training_min")
        if training_max is None:
            training_max = ctx.subject.data_properties.get("training_max")
        spec = ts_tester.MetamorphicSpec(
            kind=kind,
            alpha=float(ctx.params.get("alpha", 0.10)),
            beta=float(ctx.params.get("beta", 0.10)),
            training_min=training_min if kind == ts_tester.KIND_LARGE_LINEAR else None,
            training_max=training_max if kind == ts_tester.KIND_LARGE_LINEAR else None,
            seed=ctx.seed,
        )
        windows = ts_tester.make_windows(
            series,
            history_len=int(ctx.params["history_len"]),
            horizon_len=int(ctx.params["horizon_len"]),
            stride=int(ctx.params["stride"]),
        )[: ctx.config.generation_limit]
        deltas: list[float] = []
        evaluated = 0
        for batch in _batches(windows, 8):
            if ctx.cancelled():
                break
            outcomes = []
            for window in batch:
                delta, outcome = ts_tester.evaluate_window(window, ctx.handle, spec)
                outcomes.append(outcome)
                if delta is not None:
                    deltas.append(delta)
            ctx.persist(outcomes)
            evaluated += len(outcomes)
        mean_delta = sum(deltas) / len(deltas) if deltas else None
        detail = f"{evaluated} windows (history {ctx.params['history_len']}, horizon {ctx.params['horizon_len']})"
        return {"delta_r": mean_delta}, detail

    return worker


register_tester("correctness", _worker_correctness)
register_tester("group-discrimination", _worker_group_discrimination)
register_tester("individual-discrimination", _worker_individual_discrimination)
register_tester("robustness", _worker_robustness)
register_tester("typo-sensitivity", _text_worker("typo"))
register_tester("noise-sensitivity", _text_worker("noise"))
register_tester("ts-small-linear-change", _ts_worker(ts_tester.KIND_SMALL_LINEAR))
register_tester("ts-unordered-data", _ts_worker(ts_tester.KIND_UNORDERED))
register_tester("ts-large-linear-change", _ts_worker(ts_tester.KIND_LARGE_LINEAR))


# ---------------------------------------------------------------orchestrator

class Orchestrator:
    def __init__(self, store: Store, gateway: GatewayClient | None = None):
        self.store = store
        self.gateway = gateway or GatewayClient()
        install_builtin_catalog(store)
        self._cancel_events: dict[str, threading.Event] = {}
        self._threads: dict[str, list[threading.Thread]] = {}
        self._finalize_locks: dict[str, threading.Lock] = {}

    # ------------------------------------------------------------- execution

    def execute_run(
        self, config_id: str, idempotency_key: str | None = None, force: bool = False
    ) -> str:
        """Start one run per selected property; returns the collection id.

        Repeated requests with the same idempotency key return the existing
        collection without duplicating work.
        """
        config = self.store.get_run_configuration(config_id)
        if idempotency_key:
            existing = self.store.find_collection_by_key(config_id, idempotency_key)
            if existing is not None:
                return existing.id
        subject = self.store.get_subject(config.test_subject_id)
        if subject.data_ref(KIND_TRAINING) is None:
            raise ValidationError("subject has no training data")
        spec = self.store.get_model(subject.project_id, subject.model_id)
        if not force and not self.gateway.probe(spec):
            raise ValidationError(
                f"model endpoint {spec.endpoint_url} unreachable; pass force to override"
            )
        collection = RunCollection(
            id=ids.new_id(),
            run_configuration_id=config_id,
            state=STATE_RUNNING,
            started_at=time.time(),
            idempotency_key=idempotency_key,
        )
        runs = [
            Run(id=ids.new_id(), run_collection_id=collection.id, property_id=property_id)
            for property_id in config.selected_properties
        ]
        collection.runs = [r.id for r in runs]
        self.store.create_collection(collection, runs)
        cancel = threading.Event()
        self._cancel_events[collection.id] = cancel
        self._finalize_locks[collection.id] = threading.Lock()
        columns = subject.data_properties.get("columns")
        handle = self.gateway.handle_for(spec, columns=columns)
        threads = []
        for run in runs:
            thread = threading.Thread(
                target=self._run_worker,
                args=(collection.id, run, config, subject, handle, cancel),
                daemon=True,
                name=f"worker-{run.property_id}-{run.id[:6]}",
            )
            threads.append(thread)
        self._threads[collection.id] = threads
        for thread in threads:
            thread.start()
        return collection.id

    def _run_worker(
        self,
        collection_id: str,
        run: Run,
        config: RunConfiguration,
        subject: TestSubject,
        handle: PredictorHandle,
        cancel: threading.Event,
    ) -> None:
        try:
            definition = self.store.get_property_definition(run.property_id)
            params = definition.resolve_parameters(config.parameter_values.get(run.property_id))
            worker = _WORKERS.get(run.property_id)
            if worker is None:
                raise ValidationError(f"no tester registered for property {run.property_id!r}")
            run.state = STATE_RUNNING
            self.store.update_run(run)
            ctx = WorkerContext(
                store=self.store,
                config=config,
                subject=subject,
                handle=handle,
                run=run,
                definition=definition,
                params=params,
                cancel=cancel,
                seed=derive_seed(config.seed, run.property_id),
            )
            values, detail = worker(ctx)
            run.run_metrics = self._metric_entries(definition, values, params)
            run.detail = detail
            run.state = STATE_CANCELLED if cancel.is_set() else STATE_COMPLETED
        except Exception as exc:  # property isolation: only this run errors
            run.state = STATE_ERRORED
            run.detail = f"{type(exc).__name__}: {exc}"
        finally:
            run.status = self.store.compute_status_snapshot(run.id)
            self.store.update_run(run)
            self._maybe_finalize(collection_id)

    @staticmethod
    def _metric_entries(
        definition: PropertyDefinition, values: dict[str, float | None], params: dict[str, Any]
    ) -> dict[str, dict[str, Any]]:
        entries: dict[str, dict[str, Any]] = {}
        for metric in definition.metric_defs:
            if metric.name not in values:
                continue
            value = values[metric.name]
            if value is None:
                verdict = VERDICT_INFO
            elif isinstance(value, float) and math.isnan(value):
                verdict = VERDICT_ERROR
            else:
                verdict = metric.verdict_for(float(value), params)
            entries[metric.name] = {
                "value": encode_number(value),
                "verdict": verdict,
                "recommendation": metric.recommendations.get(
                    verdict, metric.recommendations.get(VERDICT_INFO, "")
                ),
            }
        return entries

    def _maybe_finalize(self, collection_id: str) -> None:
        lock = self._finalize_locks.get(collection_id) or threading.Lock()
        with lock:
            collection = self.store.get_collection(collection_id)
            if collection.state in TERMINAL_STATES:
                return
            runs = [self.store.get_run(run_id) for run_id in collection.runs]
            if any(r.state in (STATE_PENDING, STATE_RUNNING) for r in runs):
                return
            cancel = self._cancel_events.get(collection_id)
            if cancel is not None and cancel.is_set():
                collection.state = STATE_CANCELLED
            elif all(r.state == STATE_ERRORED for r in runs):
                collection.state = STATE_ERRORED
            else:
                collection.state = STATE_COMPLETED
            collection.finished_at = time.time()
            self.store.update_collection(collection)

    def wait(self, collection_id: str, timeout: float | None = None) -> RunCollection:
        deadline = None if timeout is None else time.monotonic() + timeout
        for thread in self._threads.get(collection_id, []):
            remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
            thread.join(remaining)
        return self.store.get_collection(collection_id)

    # ---------------------------------------------------------------- status

    def poll_status(self, collection_id: str) -> dict[str, Any]:
        collection = self.store.get_collection(collection_id)
        rows = []
        for run_id in collection.runs:
            run = self.store.get_run(run_id)
            snapshot = self.store.compute_status_snapshot(run_id)
            rows.append({
                "run_id": run_id,
                "property_id": run.property_id,
                "state": run.state,
                **snapshot.to_dict(),
            })
        return {
            "collection_id": collection_id,
            "state": collection.state,
            "started_at": collection.started_at,
            "finished_at": collection.finished_at,
            "runs": rows,
        }

    def cancel(self, collection_id: str) -> dict[str, Any]:
        collection = self.store.get_collection(collection_id)
        if collection.state == STATE_CANCELLED:
            return {"collection_id": collection_id, "state": STATE_CANCELLED}
        if collection.state in TERMINAL_STATES:
            raise StateError(f"collection is terminal ({collection.state})")
        event = self._cancel_events.get(collection_id)
        if event is None:
            raise StateError("collection is not managed by this orchestrator instance")
        event.set()
        collection.state = STATE_CANCELLED
        collection.finished_at = time.time()
        self.store.update_collection(collection)
        return {"collection_id": collection_id, "state": STATE_CANCELLED}

    # -------------------------------------------------------------- failures

    def get_failures(self, run_id: str, offset: int = 0, limit: int = 20) -> dict[str, Any]:
        """Failing cases only, stable order by case id, offset/limit paging."""
        run = self.store.get_run(run_id)
        results = {r.test_case_id: r for r in self.store.load_results(run_id)}
        failing = [
            case
            for case in sorted(self.store.load_cases(run_id), key=lambda c: c.id)
            if results.get(case.id) is not None and results[case.id].verdict == VERDICT_FAIL
        ]
        page = failing[offset : offset + limit]
        return {
            "run_id": run_id,
            "property_id": run.property_id,
            "offset": offset,
            "limit": limit,
            "total_failures": len(failing),
            "items": [
                {"case": case.to_dict(), "result": results[case.id].to_dict()} for case in page
            ],
        }

    # ---------------------------------------------------------- reevaluation

    def reevaluate_run(self, run_id: str) -> list[TestResult]:
        """Evaluate the stored cases afresh against the current model.

        Returns new results (not persisted): byte-identical to the stored
        ones while the model behind the API is unchanged.
        """
        run = self.store.get_run(run_id)
        collection = self.store.get_collection(run.run_collection_id)
        config = self.store.get_run_configuration(collection.run_configuration_id)
        subject = self.store.get_subject(config.test_subject_id)
        spec = self.store.get_model(subject.project_id, subject.model_id)
        handle = self.gateway.handle_for(spec, columns=subject.data_properties.get("columns"))
        definition = self.store.get_property_definition(run.property_id)
        params = definition.resolve_parameters(config.parameter_values.get(run.property_id))
        cases = self.store.load_cases(run_id)
        if definition.modality == "timeseries":
            return [self._reevaluate_ts_case(case, handle, params, subject) for case in cases]
        if run.property_id == "correctness":
            outcomes = correctness_outcomes(
                [c.samples[0] for c in cases],
                [c.reference["gold_label"] for c in cases],
                handle.predict_batch([c.samples[0] for c in cases]),
            )
            return [
                TestResult(case.id, o.predictions, o.verdict, o.detail)
                for case, o in zip(cases, outcomes)
            ]
        if run.property_id == "group-discrimination":
            config_f = FairnessConfig(
                protected_attributes=list(config.data_specific["protected_attributes"]),
                favorable_label=str(config.data_specific["favorable_label"]),
                minority_group=str(config.data_specific["minority_group"]),
                di_low=float(params["di_low"]),
                di_high=float(params["di_high"]),
            )
            out = []
            for case in cases:
                _, outcomes = test_group_discrimination(case.samples, handle, config_f)
                o = outcomes[0]
                out.append(TestResult(case.id, o.predictions, o.verdict, o.detail))
            return out
        # pairwise label-mismatch properties
        out = []
        for case in cases:
            p = handle.predict_batch(case.samples)
            o = pair_outcome(case.samples[0], case.samples[1], p[0], p[1], case.reference)
            out.append(TestResult(case.id, o.predictions, o.verdict, o.detail))
        return out

    def _reevaluate_ts_case(
        self, case: TestCase, handle: PredictorHandle, params: dict[str, Any], subject: TestSubject
    ) -> TestResult:
        kind = case.reference["kind"]
        spec = ts_tester.MetamorphicSpec(
            kind=kind,
            alpha=float(params.get("alpha", 0.10)),
            beta=float(params.get("beta", 0.10)),
            training_min=subject.data_properties.get("training_min") if kind == ts_tester.KIND_LARGE_LINEAR else None,
            training_max=subject.data_properties.get("training_max") if kind == ts_tester.KIND_LARGE_LINEAR else None,
        )
        sample_o, sample_t = case.samples
        horizon = int(sample_o["horizon_len"])
        f_orig = handle.forecast(sample_o, horizon)
        f_trans = handle.forecast(sample_t, horizon)
        if isinstance(f_orig, PredictionError) or isinstance(f_trans, PredictionError):
            message = f_orig.message if isinstance(f_orig, PredictionError) else f_trans.message
            return TestResult(
                case.id,
                [{"label": None, "confidence": None, "error": message}] * 2,
                VERDICT_ERROR,
                message,
            )
        actuals_o = [v for _, v in case.reference["horizon_original"]]
        actuals_t = [v for _, v in case.reference["horizon_transformed"]]
        ro = ts_tester.rmse(f_orig, actuals_o)
        rt = ts_tester.rmse(f_trans, actuals_t)
        delta = (rt - ro) / max(ro, ts_tester.RMSE_FLOOR)
        verdict = ts_tester.judge(delta, spec)
        return TestResult(
            case.id,
            [
                {"label": None, "confidence": None, "error": None, "forecast": list(f_orig)},
                {"label": None, "confidence": None, "error": None, "forecast": list(f_trans)},
            ],
            verdict,
            "" if verdict == VERDICT_PASS else f"delta_r={delta:.6g}",
        )
