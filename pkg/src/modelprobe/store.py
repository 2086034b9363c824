"""Durable store: directory per project, line-delimited JSON entity files.

Layout:
    <root>/projects/projects.jsonl                     project records
    <root>/properties/properties.jsonl                 property catalog
    <root>/<project-id>/{subjects,models,configs,collections,runs}/<type>.jsonl
    <root>/<project-id>/cases/<run-id>.jsonl           append-only
    <root>/<project-id>/results/<run-id>.jsonl         append-only
    <root>/<project-id>/data/<dataref-id>.<ext>        copied training data

Mutations are serialized through one writer lock with atomic per-record
appends; updates append a fresh record version and readers fold last-wins.
Readers never take the lock and tolerate a partially written trailing line,
so status aggregation always sees a consistent prefix.
"""

from __future__ import annotations

import json
import math
import re
import shutil
import threading
from pathlib import Path
from typing import Any, Iterable

from . import ids
from .entities import (
    DataRef,
    FORMAT_CSV,
    FORMAT_TEXT,
    FORMAT_TIMESERIES,
    KIND_LABELED_EVAL,
    KIND_TRAINING,
    Project,
    PropertyDefinition,
    Run,
    RunCollection,
    RunConfiguration,
    StatusSnapshot,
    TestCase,
    TestResult,
    TestSubject,
    VERDICT_ERROR,
    VERDICT_FAIL,
    VERDICT_PASS,
)
from .errors import DuplicateError, NotFoundError, ValidationError
from .gateway.spec import ModelSpec
from .synth import schema as tableschema
from .testers import timeseries as ts

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

ENTITY_DIRS = ("subjects", "models", "configs", "collections", "runs", "cases", "results", "data")

_EXTENSIONS = {FORMAT_CSV: "csv", FORMAT_TEXT: "txt", FORMAT_TIMESERIES: "csv"}


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "projects").mkdir(exist_ok=True)
        (self.root / "properties").mkdir(exist_ok=True)
        self._lock = threading.RLock()
        self._project_of: dict[str, str] = {}  # entity id -> project id

    # ------------------------------------------------------------- low level

    def _append(self, path: Path, record: dict[str, Any]) -> None:
        line = json.dumps(record, separators=(",", ":")) + "\n"
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
            self._refresh_index(path.parent)

    def _append_many(self, path: Path, records: Iterable[dict[str, Any]]) -> None:
        lines = "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in records)
        if not lines:
            return
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(lines)
                fh.flush()

    def _refresh_index(self, directory: Path) -> None:
        seen: list[str] = []
        have: set[str] = set()
        for file in sorted(directory.glob("*.jsonl")):
            for record in self._read_lines(file):
                rid = record.get("id") or record.get("test_case_id")
                if rid and rid not in have:
                    have.add(rid)
                    seen.append(rid)
        tmp = directory / "index.json.tmp"
        tmp.write_text(json.dumps({"ids": seen}))
        tmp.replace(directory / "index.json")

    @staticmethod
    def _read_lines(path: Path) -> list[dict[str, Any]]:
        if not path.exists():
            return []
        out = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError:
                    continue  # concurrent append in flight; consistent prefix only
        return out

    @classmethod
    def _fold(cls, path: Path) -> dict[str, dict[str, Any]]:
        """id -> latest record version."""
        folded: dict[str, dict[str, Any]] = {}
        for record in cls._read_lines(path):
            folded[record["id"]] = record
        return folded

    def _project_dir(self, project_id: str) -> Path:
        return self.root / project_id

    def _entity_file(self, project_id: str, entity: str) -> Path:
        return self._project_dir(project_id) / entity / f"{entity}.jsonl"

    def _find_project_of(self, entity: str, entity_id: str) -> str:
        cached = self._project_of.get(entity_id)
        if cached:
            return cached
        for project in self.list_projects():
            if entity_id in self._fold(self._entity_file(project.id, entity)):
                self._project_of[entity_id] = project.id
                return project.id
        raise NotFoundError(f"unknown {entity[:-1]} {entity_id!r}")

    # -------------------------------------------------------------- projects

    def create_project(self, name: str) -> Project:
        with self._lock:
            if any(p.name == name for p in self.list_projects()):
                raise DuplicateError(f"project name {name!r} already exists")
            project = Project(id=ids.new_id(), name=name)
            self._append(self.root / "projects" / "projects.jsonl", project.to_dict())
            for sub in ENTITY_DIRS:
                (self._project_dir(project.id) / sub).mkdir(parents=True, exist_ok=True)
        return project

    def list_projects(self) -> list[Project]:
        folded = self._fold(self.root / "projects" / "projects.jsonl")
        return [Project.from_dict(r) for r in folded.values() if not r.get("deleted")]

    def get_project(self, project_id: str) -> Project:
        for project in self.list_projects():
            if project.id == project_id:
                return project
        raise NotFoundError(f"unknown project {project_id!r}")

    def delete_project(self, project_id: str) -> None:
        """Cascades: the project directory holds every owned entity."""
        project = self.get_project(project_id)
        with self._lock:
            record = project.to_dict()
            record["deleted"] = True
            self._append(self.root / "projects" / "projects.jsonl", record)
            shutil.rmtree(self._project_dir(project_id), ignore_errors=True)

    def _update_project(self, project: Project) -> None:
        self._append(self.root / "projects" / "projects.jsonl", project.to_dict())

    # -------------------------------------------------------------- subjects

    def register_test_subject(
        self,
        project_id: str,
        model: ModelSpec,
        training_text: str,
        data_format: str = FORMAT_CSV,
    ) -> TestSubject:
        """Persist a subject with exactly one model and its training data.

        The training payload is parsed under its declared format (schema
        sniffed and stored as data properties) and copied into the project's
        data directory.
        """
        project = self.get_project(project_id)
        with self._lock:
            models = self._fold(self._entity_file(project_id, "models"))
            if any(m["name"] == model.name for m in models.values()):
                raise DuplicateError(f"model name {model.name!r} already registered in project")
            data_properties = self._sniff(training_text, data_format)
            subject_id = ids.new_id()
            ref = self._store_data(project_id, training_text, data_format, KIND_TRAINING)
            if not model.id:
                model.id = ids.new_id()
            subject = TestSubject(
                id=subject_id,
                project_id=project_id,
                model_id=model.id,
                data_refs=[ref],
                data_properties=data_properties,
            )
            self._append(self._entity_file(project_id, "models"), model.to_dict())
            self._append(self._entity_file(project_id, "subjects"), subject.to_dict())
            project.test_subjects.append(subject_id)
            self._update_project(project)
            self._project_of[subject_id] = project_id
            self._project_of[model.id] = project_id
        return subject

    def _sniff(self, text: str, data_format: str) -> dict[str, Any]:
        if data_format == FORMAT_CSV:
            schema, rows = tableschema.load_table(text)
            return {
                "modality": "tabular",
                "columns": schema.names,
                "schema": schema.to_dict(),
                "row_count": len(rows),
            }
        if data_format == FORMAT_TEXT:
            lines = [l for l in text.splitlines() if l.strip()]
            if not lines:
                raise ValidationError("empty training data")
            return {"modality": "text", "row_count": len(lines)}
        if data_format == FORMAT_TIMESERIES:
            series = ts.load_series(text)
            values = [v for _, v in series]
            return {
                "modality": "timeseries",
                "row_count": len(series),
                "training_min": min(values),
                "training_max": max(values),
            }
        raise ValidationError(f"unknown data format {data_format!r}")

    def _store_data(self, project_id: str, text: str, data_format: str, kind: str) -> DataRef:
        ref_id = ids.new_id()
        ext = _EXTENSIONS[data_format]
        location = f"data/{ref_id}.{ext}"
        target = self._project_dir(project_id) / location
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        row_count = self._sniff(text, data_format)["row_count"]
        return DataRef(id=ref_id, kind=kind, format=data_format, location=location, row_count=row_count)

    def add_data_ref(self, subject_id: str, text: str, data_format: str, kind: str = KIND_LABELED_EVAL) -> DataRef:
        project_id = self._find_project_of("subjects", subject_id)
        subject = self.get_subject(subject_id)
        with self._lock:
            ref = self._store_data(project_id, text, data_format, kind)
            subject.data_refs.append(ref)
            self._append(self._entity_file(project_id, "subjects"), subject.to_dict())
        return ref

    def get_subject(self, subject_id: str) -> TestSubject:
        project_id = self._find_project_of("subjects", subject_id)
        record = self._fold(self._entity_file(project_id, "subjects")).get(subject_id)
        if record is None:
            raise NotFoundError(f"unknown subject {subject_id!r}")
        return TestSubject.from_dict(record)

    def get_model(self, project_id: str, model_id: str) -> ModelSpec:
        record = self._fold(self._entity_file(project_id, "models")).get(model_id)
        if record is None:
            raise NotFoundError(f"unknown model {model_id!r}")
        return ModelSpec.from_dict(record)

    def read_data(self, subject: TestSubject, ref: DataRef) -> str:
        return (self._project_dir(subject.project_id) / ref.location).read_text(encoding="utf-8")

    # ------------------------------------------------------------ properties

    def register_property_definition(self, definition: PropertyDefinition) -> str:
        if not definition.metric_defs:
            raise ValidationError("property needs at least one metric")
        for m in definition.metric_defs:
            if not _IDENT_RE.match(m.name):
                raise ValidationError(f"metric name {m.name!r} is not a valid identifier")
        names = [m.name for m in definition.metric_defs]
        if len(set(names)) != len(names):
            raise ValidationError("metric names must be unique within the property")
        for p in definition.parameter_defs:
            if not _IDENT_RE.match(p.name):
                raise ValidationError(f"parameter name {p.name!r} is not a valid identifier")
            if p.default is not None:
                p.validate(p.default)
            elif not p.mandatory:
                # optional without default is allowed only for auto-computed values
                pass
        with self._lock:
            existing = self._fold(self.root / "properties" / "properties.jsonl")
            if definition.id in existing:
                raise DuplicateError(f"property {definition.id!r} exists")
            self._append(self.root / "properties" / "properties.jsonl", definition.to_dict())
        return definition.id

    def update_property_definition(self, definition: PropertyDefinition) -> None:
        """Append a new version (e.g. an added metric); stored cases and
        results need no migration, metrics are recomputed from them."""
        existing = self._fold(self.root / "properties" / "properties.jsonl")
        if definition.id not in existing:
            raise NotFoundError(f"unknown property {definition.id!r}")
        if not definition.metric_defs:
            raise ValidationError("property needs at least one metric")
        self._append(self.root / "properties" / "properties.jsonl", definition.to_dict())

    def list_property_definitions(self) -> list[PropertyDefinition]:
        folded = self._fold(self.root / "properties" / "properties.jsonl")
        return [PropertyDefinition.from_dict(r) for r in folded.values()]

    def get_property_definition(self, property_id: str) -> PropertyDefinition:
        record = self._fold(self.root / "properties" / "properties.jsonl").get(property_id)
        if record is None:
            raise NotFoundError(f"unknown property {property_id!r}")
        return PropertyDefinition.from_dict(record)

    # ----------------------------------------------------------------configs

    def save_run_configuration(self, config: RunConfiguration) -> RunConfiguration:
        subject = self.get_subject(config.test_subject_id)
        if not config.selected_properties:
            raise ValidationError("select at least one property")
        if config.generation_limit < 1:
            raise ValidationError("generation_limit must be >= 1")
        for property_id in config.selected_properties:
            definition = self.get_property_definition(property_id)
            if definition.modality != subject.modality:
                raise ValidationError(
                    f"property {property_id} is {definition.modality}, subject is {subject.modality}"
                )
            definition.resolve_parameters(config.parameter_values.get(property_id))
            if property_id in ("group-discrimination", "individual-discrimination"):
                for key in ("protected_attributes", "favorable_label"):
                    if not config.data_specific.get(key):
                        raise ValidationError(f"{property_id} requires data_specific[{key!r}]")
                if property_id == "group-discrimination" and not config.data_specific.get("minority_group"):
                    raise ValidationError("group-discrimination requires data_specific['minority_group']")
        if not config.id:
            config.id = ids.new_id()
        project_id = subject.project_id
        self._append(self._entity_file(project_id, "configs"), config.to_dict())
        self._project_of[config.id] = project_id
        return config

    def get_run_configuration(self, config_id: str) -> RunConfiguration:
        project_id = self._find_project_of("configs", config_id)
        record = self._fold(self._entity_file(project_id, "configs")).get(config_id)
        if record is None:
            raise NotFoundError(f"unknown run configuration {config_id!r}")
        return RunConfiguration.from_dict(record)

    # ------------------------------------------------------ collections/runs

    def create_collection(self, collection: RunCollection, runs: list[Run]) -> None:
        config = self.get_run_configuration(collection.run_configuration_id)
        project_id = self._find_project_of("configs", config.id)
        with self._lock:
            self._append(self._entity_file(project_id, "collections"), collection.to_dict())
            for run in runs:
                self._append(self._entity_file(project_id, "runs"), run.to_dict())
                self._project_of[run.id] = project_id
            self._project_of[collection.id] = project_id

    def update_collection(self, collection: RunCollection) -> None:
        project_id = self._find_project_of("collections", collection.id)
        self._append(self._entity_file(project_id, "collections"), collection.to_dict())

    def get_collection(self, collection_id: str) -> RunCollection:
        project_id = self._find_project_of("collections", collection_id)
        record = self._fold(self._entity_file(project_id, "collections")).get(collection_id)
        if record is None:
            raise NotFoundError(f"unknown run collection {collection_id!r}")
        return RunCollection.from_dict(record)

    def find_collection_by_key(self, config_id: str, idempotency_key: str) -> RunCollection | None:
        project_id = self._find_project_of("configs", config_id)
        for record in self._fold(self._entity_file(project_id, "collections")).values():
            if (
                record.get("run_configuration_id") == config_id
                and record.get("idempotency_key") == idempotency_key
            ):
                return RunCollection.from_dict(record)
        return None

    def update_run(self, run: Run) -> None:
        project_id = self._find_project_of("runs", run.id)
        self._append(self._entity_file(project_id, "runs"), run.to_dict())

    def get_run(self, run_id: str) -> Run:
        project_id = self._find_project_of("runs", run_id)
        record = self._fold(self._entity_file(project_id, "runs")).get(run_id)
        if record is None:
            raise NotFoundError(f"unknown run {run_id!r}")
        return Run.from_dict(record)

    # --------------------------------------------------------- cases/results

    def append_cases(self, run_id: str, cases: list[TestCase]) -> None:
        project_id = self._find_project_of("runs", run_id)
        path = self._project_dir(project_id) / "cases" / f"{run_id}.jsonl"
        self._append_many(path, (c.to_dict() for c in cases))

    def append_results(self, run_id: str, results: list[TestResult]) -> None:
        project_id = self._find_project_of("runs", run_id)
        path = self._project_dir(project_id) / "results" / f"{run_id}.jsonl"
        self._append_many(path, (r.to_dict() for r in results))

    def load_cases(self, run_id: str) -> list[TestCase]:
        project_id = self._find_project_of("runs", run_id)
        path = self._project_dir(project_id) / "cases" / f"{run_id}.jsonl"
        return [TestCase.from_dict(r) for r in self._read_lines(path)]

    def load_results(self, run_id: str) -> list[TestResult]:
        project_id = self._find_project_of("runs", run_id)
        path = self._project_dir(project_id) / "results" / f"{run_id}.jsonl"
        return [TestResult.from_dict(r) for r in self._read_lines(path)]

    def compute_status_snapshot(self, run_id: str) -> StatusSnapshot:
        """Aggregate stored cases and results; reads a consistent prefix.

        Results are read before cases: a case is always appended before its
        result, so executed <= generated holds even mid-append.
        """
        self.get_run(run_id)
        results = self.load_results(run_id)
        cases = self.load_cases(run_id)
        snapshot = StatusSnapshot(
            generated=len(cases),
            executed=len(results),
            passed=sum(1 for r in results if r.verdict == VERDICT_PASS),
            failed=sum(1 for r in results if r.verdict == VERDICT_FAIL),
            errored=sum(1 for r in results if r.verdict == VERDICT_ERROR),
        )
        snapshot.check()
        return snapshot

    # ------------------------------------------------------------ comparison

    def compare_collections(self, *collection_ids: str) -> dict[str, Any]:
        """Per-property, per-metric table; one column per collection.

        Properties a collection never ran are marked "not run"; the best
        column per metric follows the metric's direction metadata.
        """
        if len(collection_ids) < 1:
            raise ValidationError("nothing to compare")
        collections = [self.get_collection(cid) for cid in collection_ids]
        project_ids = {self._find_project_of("collections", c.id) for c in collections}
        if len(project_ids) > 1:
            raise ValidationError("collections span projects")
        runs_by_collection: dict[str, dict[str, Run]] = {}
        property_ids: list[str] = []
        for collection in collections:
            by_property: dict[str, Run] = {}
            for run_id in collection.runs:
                run = self.get_run(run_id)
                by_property[run.property_id] = run
                if run.property_id not in property_ids:
                    property_ids.append(run.property_id)
            runs_by_collection[collection.id] = by_property
        rows = []
        for property_id in property_ids:
            definition = self.get_property_definition(property_id)
            for metric in definition.metric_defs:
                values: list[Any] = []
                verdicts: list[str] = []
                for collection in collections:
                    run = runs_by_collection[collection.id].get(property_id)
                    entry = run.run_metrics.get(metric.name) if run is not None else None
                    if entry is None:
                        values.append("not run")
                        verdicts.append("")
                    else:
                        values.append(entry.get("value"))
                        verdicts.append(entry.get("verdict", ""))
                rows.append({
                    "property_id": property_id,
                    "metric": metric.name,
                    "direction": metric.direction,
                    "values": values,
                    "verdicts": verdicts,
                    "best": self._best_column(values, metric.direction),
                })
        return {
            "collections": [c.id for c in collections],
            "rows": rows,
        }

    @staticmethod
    def _best_column(values: list[Any], direction: str) -> int | None:
        """Index of the winning column, or None on ties / no direction."""
        numeric = {
            i: v for i, v in enumerate(values)
            if isinstance(v, (int, float)) and not isinstance(v, bool)
            and not (isinstance(v, float) and math.isnan(v))
        }
        if direction not in ("higher", "lower") or len(numeric) < 2:
            return None
        pick = max if direction == "higher" else min
        best_value = pick(numeric.values())
        winners = [i for i, v in numeric.items() if v == best_value]
        return winners[0] if len(winners) == 1 else None
