"""Published JSON response schemas for the HTTP API.

Contract tests and third-party clients validate against these; the shapes are
deliberately additive-friendly (additionalProperties stays open unless noted).
"""

from __future__ import annotations

_ID = {"type": "string", "minLength": 1}
_NUMBER_OR_ENCODED = {"type": ["number", "string", "null"]}

STATUS_ROW = {
    "type": "object",
    "required": ["run_id", "property_id", "state", "generated", "executed",
                 "passed", "failed", "errored"],
    "properties": {
        "run_id": _ID,
        "property_id": _ID,
        "state": {"enum": ["pending", "running", "completed", "cancelled", "errored"]},
        "generated": {"type": "integer", "minimum": 0},
        "executed": {"type": "integer", "minimum": 0},
        "passed": {"type": "integer", "minimum": 0},
        "failed": {"type": "integer", "minimum": 0},
        "errored": {"type": "integer", "minimum": 0},
    },
}

PROJECT = {
    "type": "object",
    "required": ["id", "name", "test_subjects"],
    "properties": {
        "id": _ID,
        "name": {"type": "string"},
        "test_subjects": {"type": "array", "items": _ID},
    },
}

SUBJECT = {
    "type": "object",
    "required": ["id", "project_id", "model_id", "data_refs", "data_properties"],
    "properties": {
        "id": _ID,
        "project_id": _ID,
        "model_id": _ID,
        "data_refs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "format", "location", "row_count"],
            },
        },
        "data_properties": {"type": "object"},
    },
}

PROPERTY_DEFINITION = {
    "type": "object",
    "required": ["id", "modality", "metric_defs", "parameter_defs", "result_schema"],
    "properties": {
        "id": _ID,
        "modality": {"enum": ["tabular", "text", "timeseries"]},
        "metric_defs": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "direction", "verdict_rule", "recommendations"],
            },
        },
        "parameter_defs": {
            "type": "array",
            "items": {"type": "object", "required": ["name", "value_type", "default", "mandatory"]},
        },
        "result_schema": {"type": "array", "items": {"type": "string"}},
    },
}

CONFIG = {
    "type": "object",
    "required": ["id", "test_subject_id", "selected_properties", "parameter_values",
                 "data_specific", "generation_limit", "seed"],
    "properties": {
        "id": _ID,
        "test_subject_id": _ID,
        "selected_properties": {"type": "array", "items": _ID, "minItems": 1},
        "generation_limit": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
    },
}

RUN_STARTED = {
    "type": "object",
    "required": ["collection_id"],
    "properties": {"collection_id": _ID},
}

STATUS = {
    "type": "object",
    "required": ["collection_id", "state", "runs"],
    "properties": {
        "collection_id": _ID,
        "state": {"enum": ["pending", "running", "completed", "cancelled", "errored"]},
        "runs": {"type": "array", "items": STATUS_ROW},
    },
}

METRIC_REPORT = {
    "type": "object",
    "required": ["run_id", "property_id", "state", "status", "metrics",
                 "result_schema", "explanation", "grid"],
    "properties": {
        "run_id": _ID,
        "property_id": _ID,
        "metrics": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["value", "verdict", "recommendation"],
                "properties": {
                    "value": _NUMBER_OR_ENCODED,
                    "verdict": {"enum": ["pass", "fail", "informational", "error"]},
                    "recommendation": {"type": "string"},
                },
            },
        },
        "explanation": {"type": "string"},
        "grid": {
            "type": "object",
            "required": ["rows", "cols", "values"],
            "properties": {
                "rows": {"type": "array", "items": {"type": "string"}},
                "cols": {"type": "array", "items": {"type": "string"}},
                "values": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": "number", "minimum": 0, "maximum": 1},
                    },
                },
            },
        },
    },
}

FAILURE_PAGE = {
    "type": "object",
    "required": ["run_id", "offset", "limit", "total_failures", "items"],
    "properties": {
        "run_id": _ID,
        "offset": {"type": "integer", "minimum": 0},
        "limit": {"type": "integer", "minimum": 1},
        "total_failures": {"type": "integer", "minimum": 0},
        "items": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["case", "result"],
                "properties": {
                    "case": {
                        "type": "object",
                        "required": ["id", "run_id", "samples", "role_tags"],
                    },
                    "result": {
                        "type": "object",
                        "required": ["test_case_id", "predictions", "verdict"],
                        "properties": {"verdict": {"const": "fail"}},
                    },
                },
            },
        },
    },
}

COMPARISON = {
    "type": "object",
    "required": ["collections", "rows"],
    "properties": {
        "collections": {"type": "array", "items": _ID, "minItems": 1},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["property_id", "metric", "direction", "values", "best"],
                "properties": {
                    "direction": {"enum": ["higher", "lower", "none"]},
                    "values": {"type": "array"},
                    "best": {"type": ["integer", "null"]},
                },
            },
        },
    },
}

ERROR = {
    "type": "object",
    "required": ["code", "message", "detail"],
    "properties": {
        "code": {"type": "string"},
        "message": {"type": "string"},
        "detail": {"type": "string"},
    },
}

CANCELLED = {
    "type": "object",
    "required": ["collection_id", "state"],
    "properties": {"state": {"const": "cancelled"}},
}

SCHEMAS = {
    "project": PROJECT,
    "subject": SUBJECT,
    "property_definition": PROPERTY_DEFINITION,
    "config": CONFIG,
    "run_started": RUN_STARTED,
    "status": STATUS,
    "metric_report": METRIC_REPORT,
    "failure_page": FAILURE_PAGE,
    "comparison": COMPARISON,
    "error": ERROR,
    "cancelled": CANCELLED,
}
