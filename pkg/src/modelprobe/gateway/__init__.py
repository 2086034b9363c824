from .spec import ModelSpec, Prediction, PredictionError
from .client import GatewayClient, PredictorHandle
from .template import render_request, extract_predictions, extract_values
from .mocks import MockModel, MockModelServer, make_mock, mock_predict, MOCK_KINDS

__all__ = [
    "ModelSpec",
    "Prediction",
    "PredictionError",
    "GatewayClient",
    "PredictorHandle",
    "render_request",
    "extract_predictions",
    "extract_values",
    "MockModel",
    "MockModelServer",
    "make_mock",
    "mock_predict",
    "MOCK_KINDS",
]
