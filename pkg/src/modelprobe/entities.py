"""Entity model for projects, subjects, properties, runs, cases and results.

Everything here is a plain dataclass with a stable JSON shape (``to_dict`` /
``from_dict``) so the store can persist records as line-delimited JSON and the
HTTP layer can return them verbatim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Any

from .errors import ValidationError

# DataRef kinds / formats
KIND_TRAINING = "training"
KIND_LABELED_EVAL = "labeled-eval"
KIND_RESULT_VIS = "result-visualization"
FORMAT_CSV = "csv-table"
FORMAT_TEXT = "text-lines"
FORMAT_TIMESERIES = "timeseries-csv"

# Collection states
STATE_PENDING = "pending"
STATE_RUNNING = "running"
STATE_COMPLETED = "completed"
STATE_CANCELLED = "cancelled"
STATE_ERRORED = "errored"
TERMINAL_STATES = {STATE_COMPLETED, STATE_CANCELLED, STATE_ERRORED}

# Verdicts
VERDICT_PASS = "pass"
VERDICT_FAIL = "fail"
VERDICT_ERROR = "error"
VERDICT_INFO = "informational"


def encode_number(value: float | None) -> float | str | None:
    """Non-finite floats are not valid strict JSON; encode them as strings."""
    if value is None:
        return None
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)  # "inf", "-inf", "nan"
    return value


def decode_number(value: Any) -> float | None:
    if value is None:
        return None
    if isinstance(value, str):
        return float(value)
    return float(value)


@dataclass
class Project:
    id: str
    name: str
    test_subjects: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Project":
        return cls(id=d["id"], name=d["name"], test_subjects=list(d.get("test_subjects", [])))


@dataclass
class DataRef:
    id: str
    kind: str
    format: str
    location: str  # store-relative path
    row_count: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DataRef":
        return cls(**d)


@dataclass
class TestSubject:
    __test__ = False  # not a pytest class

    id: str
    project_id: str
    model_id: str
    data_refs: list[DataRef] = field(default_factory=list)
    data_properties: dict[str, Any] = field(default_factory=dict)

    @property
    def modality(self) -> str:
        return self.data_properties.get("modality", "tabular")

    def data_ref(self, kind: str) -> DataRef | None:
        for ref in self.data_refs:
            if ref.kind == kind:
                return ref
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "project_id": self.project_id,
            "model_id": self.model_id,
            "data_refs": [r.to_dict() for r in self.data_refs],
            "data_properties": self.data_properties,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestSubject":
        return cls(
            id=d["id"],
            project_id=d["project_id"],
            model_id=d["model_id"],
            data_refs=[DataRef.from_dict(r) for r in d.get("data_refs", [])],
            data_properties=dict(d.get("data_properties", {})),
        )


@dataclass
class MetricDef:
    """One metric a property reports, with its data-driven verdict rule.

    ``verdict_rule`` keeps pass/fail mapping out of code:
      {"kind": "informational"}
      {"kind": "fail_if_outside", "low_param": "di_low", "high_param": "di_high"}
      {"kind": "fail_if_greater", "param": "alpha"}
      {"kind": "fail_if_less", "param": "beta"}
    ``direction`` drives best-per-metric flags in comparisons: "higher",
    "lower" or "none".
    """

    name: str
    direction: str = "none"
    verdict_rule: dict[str, Any] = field(default_factory=lambda: {"kind": "informational"})
    recommendations: dict[str, str] = field(default_factory=dict)
    description: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MetricDef":
        return cls(**d)

    def verdict_for(self, value: float, params: dict[str, Any]) -> str:
        rule = self.verdict_rule
        kind = rule.get("kind", "informational")
        if kind == "informational":
            return VERDICT_INFO
        if kind == "fail_if_outside":
            low = float(params[rule["low_param"]])
            high = float(params[rule["high_param"]])
            return VERDICT_PASS if low <= value <= high else VERDICT_FAIL
        if kind == "fail_if_greater":
            return VERDICT_FAIL if value > float(params[rule["param"]]) else VERDICT_PASS
        if kind == "fail_if_less":
            return VERDICT_FAIL if value < float(params[rule["param"]]) else VERDICT_PASS
        raise ValidationError(f"unknown verdict rule kind {kind!r}")


@dataclass
class ParameterDef:
    name: str
    value_type: str = "float"  # int | float | string | json
    default: Any = None
    minimum: float | None = None
    maximum: float | None = None
    mandatory: bool = False
    help: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ParameterDef":
        return cls(**d)

    def validate(self, value: Any) -> Any:
        if self.value_type == "int":
            value = int(value)
        elif self.value_type == "float":
            value = float(value)
        if self.minimum is not None and value < self.minimum:
            raise ValidationError(f"parameter {self.name}={value} below minimum {self.minimum}")
        if self.maximum is not None and value > self.maximum:
            raise ValidationError(f"parameter {self.name}={value} above maximum {self.maximum}")
        return value


@dataclass
class PropertyDefinition:
    id: str
    modality: str  # tabular | text | timeseries
    metric_defs: list[MetricDef] = field(default_factory=list)
    parameter_defs: list[ParameterDef] = field(default_factory=list)
    result_schema: list[str] = field(default_factory=list)
    display_name: str = ""
    description: str = ""

    def metric(self, name: str) -> MetricDef:
        for m in self.metric_defs:
            if m.name == name:
                return m
        raise ValidationError(f"property {self.id} has no metric {name!r}")

    def parameter(self, name: str) -> ParameterDef | None:
        for p in self.parameter_defs:
            if p.name == name:
                return p
        return None

    def resolve_parameters(self, overrides: dict[str, Any] | None) -> dict[str, Any]:
        """Defaults merged with overrides; mandatory parameters must be bound."""
        overrides = overrides or {}
        unknown = set(overrides) - {p.name for p in self.parameter_defs}
        if unknown:
            raise ValidationError(f"unknown parameters for {self.id}: {sorted(unknown)}")
        resolved: dict[str, Any] = {}
        for p in self.parameter_defs:
            if p.name in overrides:
                resolved[p.name] = p.validate(overrides[p.name])
            elif p.default is not None or not p.mandatory:
                resolved[p.name] = p.default
            else:
                raise ValidationError(f"mandatory parameter {self.id}.{p.name} not bound")
        return resolved

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "modality": self.modality,
            "metric_defs": [m.to_dict() for m in self.metric_defs],
            "parameter_defs": [p.to_dict() for p in self.parameter_defs],
            "result_schema": list(self.result_schema),
            "display_name": self.display_name,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PropertyDefinition":
        return cls(
            id=d["id"],
            modality=d["modality"],
            metric_defs=[MetricDef.from_dict(m) for m in d.get("metric_defs", [])],
            parameter_defs=[ParameterDef.from_dict(p) for p in d.get("parameter_defs", [])],
            result_schema=list(d.get("result_schema", [])),
            display_name=d.get("display_name", ""),
            description=d.get("description", ""),
        )


@dataclass
class RunConfiguration:
    id: str
    test_subject_id: str
    selected_properties: list[str]
    parameter_values: dict[str, dict[str, Any]] = field(default_factory=dict)
    data_specific: dict[str, Any] = field(default_factory=dict)
    generation_limit: int = 100
    seed: int = 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfiguration":
        return cls(
            id=d["id"],
            test_subject_id=d["test_subject_id"],
            selected_properties=list(d["selected_properties"]),
            parameter_values={k: dict(v) for k, v in d.get("parameter_values", {}).items()},
            data_specific=dict(d.get("data_specific", {})),
            generation_limit=int(d.get("generation_limit", 100)),
            seed=int(d.get("seed", 0)),
        )


@dataclass
class RunCollection:
    id: str
    run_configuration_id: str
    state: str = STATE_PENDING
    started_at: float | None = None
    finished_at: float | None = None
    runs: list[str] = field(default_factory=list)
    idempotency_key: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunCollection":
        return cls(
            id=d["id"],
            run_configuration_id=d["run_configuration_id"],
            state=d.get("state", STATE_PENDING),
            started_at=d.get("started_at"),
            finished_at=d.get("finished_at"),
            runs=list(d.get("runs", [])),
            idempotency_key=d.get("idempotency_key"),
        )


@dataclass
class StatusSnapshot:
    generated: int = 0
    executed: int = 0
    passed: int = 0
    failed: int = 0
    errored: int = 0

    def check(self) -> None:
        if self.executed != self.passed + self.failed + self.errored:
            raise ValidationError("executed != passed + failed + errored")
        if self.executed > self.generated:
            raise ValidationError("executed > generated")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StatusSnapshot":
        return cls(**d)


@dataclass
class Run:
    id: str
    run_collection_id: str
    property_id: str
    state: str = STATE_PENDING
    status: StatusSnapshot = field(default_factory=StatusSnapshot)
    # metric name -> {"value": number, "verdict": str, "recommendation": str}
    run_metrics: dict[str, dict[str, Any]] = field(default_factory=dict)
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "run_collection_id": self.run_collection_id,
            "property_id": self.property_id,
            "state": self.state,
            "status": self.status.to_dict(),
            "run_metrics": self.run_metrics,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Run":
        return cls(
            id=d["id"],
            run_collection_id=d["run_collection_id"],
            property_id=d["property_id"],
            state=d.get("state", STATE_PENDING),
            status=StatusSnapshot.from_dict(d.get("status", {})),
            run_metrics=dict(d.get("run_metrics", {})),
            detail=d.get("detail", ""),
        )


@dataclass
class TestCase:
    __test__ = False  # not a pytest class

    id: str
    run_id: str
    samples: list[Any]  # each: column->value mapping, text, or series window dict
    role_tags: list[str]
    reference: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValidationError("test case needs at least one sample")
        if len(self.role_tags) != len(self.samples):
            raise ValidationError("role_tags length must equal samples length")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestCase":
        return cls(
            id=d["id"],
            run_id=d["run_id"],
            samples=list(d["samples"]),
            role_tags=list(d["role_tags"]),
            reference=dict(d.get("reference", {})),
        )


@dataclass
class TestResult:
    __test__ = False  # not a pytest class

    test_case_id: str
    # per sample: {"label": str|None, "confidence": float|None, "error": str|None}
    predictions: list[dict[str, Any]]
    verdict: str
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestResult":
        return cls(
            test_case_id=d["test_case_id"],
            predictions=list(d.get("predictions", [])),
            verdict=d["verdict"],
            detail=d.get("detail", ""),
        )
