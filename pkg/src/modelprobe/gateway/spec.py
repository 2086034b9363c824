"""Model API contract: endpoint, request template, response extraction paths."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Any

from ..errors import ValidationError
from . import jsonpath

PLACEHOLDER_BATCH = "{{SAMPLES}}"
PLACEHOLDER_SINGLE = "{{SAMPLE}}"


@dataclass
class ModelSpec:
    id: str
    name: str
    endpoint_url: str
    request_template: str = '{"instances": {{SAMPLES}}}'
    http_method: str = "POST"
    headers: dict[str, str] = field(default_factory=dict)
    label_path: str = "$.predictions[*].label"
    confidence_path: str | None = None
    batch_limit: int = 50

    def __post_init__(self) -> None:
        if self.http_method not in ("POST", "GET"):
            raise ValidationError(f"unsupported http method {self.http_method!r}")
        if self.batch_limit < 1:
            raise ValidationError("batch_limit must be >= 1")
        if not self.label_path:
            raise ValidationError("label_path must be non-empty")
        jsonpath.parse(self.label_path)
        if self.confidence_path:
            jsonpath.parse(self.confidence_path)
        n_batch = self.request_template.count(PLACEHOLDER_BATCH)
        n_single = self.request_template.count(PLACEHOLDER_SINGLE)
        if n_batch + n_single != 1:
            raise ValidationError(
                "request template must contain exactly one placeholder "
                f"({PLACEHOLDER_BATCH} or {PLACEHOLDER_SINGLE})"
            )

    @property
    def single_sample_mode(self) -> bool:
        return PLACEHOLDER_SINGLE in self.request_template

    @property
    def effective_batch_limit(self) -> int:
        return 1 if self.single_sample_mode else self.batch_limit

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelSpec":
        return cls(
            id=d["id"],
            name=d["name"],
            endpoint_url=d["endpoint_url"],
            request_template=d.get("request_template", '{"instances": {{SAMPLES}}}'),
            http_method=d.get("http_method", "POST"),
            headers=dict(d.get("headers", {})),
            label_path=d.get("label_path", "$.predictions[*].label"),
            confidence_path=d.get("confidence_path"),
            batch_limit=int(d.get("batch_limit", 50)),
        )


@dataclass
class Prediction:
    label: str
    confidence: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "confidence": self.confidence, "error": None}


@dataclass
class PredictionError:
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {"label": None, "confidence": None, "error": self.message}
