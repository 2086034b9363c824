"""Request body rendering and response extraction for model APIs."""

from __future__ import annotations

import json
from typing import Any

from ..errors import CardinalityError, GatewayError, ValidationError
from . import jsonpath
from .spec import ModelSpec, Prediction, PLACEHOLDER_BATCH, PLACEHOLDER_SINGLE

Sample = Any  # column->value mapping, raw text, or a series-window dict


def _ordered_sample(sample: Sample, columns: list[str] | None) -> Any:
    if columns is None or not isinstance(sample, dict):
        return sample
    ordered = {name: sample[name] for name in columns if name in sample}
    for name, value in sample.items():  # keep extras (e.g. derived fields) after schema columns
        if name not in ordered:
            ordered[name] = value
    return ordered


def render_request(spec: ModelSpec, samples: list[Sample], columns: list[str] | None = None) -> str:
    """Substitute samples into the request template.

    ``{{SAMPLES}}`` becomes a JSON array of sample objects in subject column
    order; ``{{SAMPLE}}`` a single object and requires exactly one sample.
    """
    if not samples:
        raise ValidationError("at least one sample required")
    if len(samples) > spec.effective_batch_limit:
        raise ValidationError(
            f"batch overflow: {len(samples)} samples exceed limit {spec.effective_batch_limit}"
        )
    ordered = [_ordered_sample(s, columns) for s in samples]
    if spec.single_sample_mode:
        payload = json.dumps(ordered[0])
        return spec.request_template.replace(PLACEHOLDER_SINGLE, payload)
    payload = json.dumps(ordered)
    return spec.request_template.replace(PLACEHOLDER_BATCH, payload)


def extract_predictions(body: str, spec: ModelSpec, expected: int) -> list[Prediction]:
    """Pull labels (and confidences when configured) out of a response body.

    The label path must yield exactly ``expected`` values; anything else is an
    error rather than silent truncation.
    """
    try:
        document = json.loads(body)
    except json.JSONDecodeError as exc:
        raise GatewayError(f"malformed JSON response: {exc}") from exc
    labels = jsonpath.evaluate(spec.label_path, document)
    if len(labels) != expected:
        raise CardinalityError(
            f"label path {spec.label_path!r} yielded {len(labels)} values, expected {expected}"
        )
    confidences: list[float | None] = [None] * expected
    if spec.confidence_path:
        raw = jsonpath.evaluate(spec.confidence_path, document)
        if len(raw) != expected:
            raise CardinalityError(
                f"confidence path {spec.confidence_path!r} yielded {len(raw)} values, "
                f"expected {expected}"
            )
        parsed = []
        for value in raw:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise GatewayError(f"non-numeric confidence: {value!r}")
            parsed.append(float(value))
        confidences = parsed
    return [
        Prediction(label=_stringify(label), confidence=conf)
        for label, conf in zip(labels, confidences)
    ]


def extract_values(body: str, spec: ModelSpec, expected: int) -> list[float]:
    """Forecast variant: label path values reinterpreted as reals."""
    try:
        document = json.loads(body)
    except json.JSONDecodeError as exc:
        raise GatewayError(f"malformed JSON response: {exc}") from exc
    values = jsonpath.evaluate(spec.label_path, document)
    if len(values) != expected:
        raise CardinalityError(
            f"label path {spec.label_path!r} yielded {len(values)} values, expected {expected}"
        )
    out = []
    for value in values:
        try:
            out.append(float(value))
        except (TypeError, ValueError) as exc:
            raise GatewayError(f"non-numeric forecast value: {value!r}") from exc
    return out


def _stringify(label: Any) -> str:
    if isinstance(label, str):
        return label
    return json.dumps(label)
