"""Exception hierarchy shared across the platform."""

from __future__ import annotations


class ModelProbeError(Exception):
    """Base class; carries a short machine-readable code."""

    code = "error"

    def __init__(self, message: str, detail: str | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or ""


class NotFoundError(ModelProbeError):
    code = "not_found"


class DuplicateError(ModelProbeError):
    code = "duplicate"


class ValidationError(ModelProbeError):
    code = "invalid"


class GatewayError(ModelProbeError):
    """Transport or extraction failure when talking to a model API."""

    code = "gateway"


class CardinalityError(GatewayError):
    code = "cardinality"


class StateError(ModelProbeError):
    """Operation not legal in the entity's current state."""

    code = "state"
