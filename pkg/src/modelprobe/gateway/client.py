"""HTTP gateway to model APIs.

This is the only component that sees endpoint credentials. Testers receive a
:class:`PredictorHandle`, whose public surface exposes nothing beyond the
model's name, its batch limit and the prediction methods.
"""

from __future__ import annotations

import os
import threading
import time
from typing import Any

import requests

from ..errors import GatewayError, ValidationError
from .spec import ModelSpec, Prediction, PredictionError
from .template import extract_predictions, extract_values, render_request

DEFAULT_BACKOFF = (0.2, 0.8, 3.2)
DEFAULT_MAX_INFLIGHT = int(os.environ.get("MODELPROBE_MAX_INFLIGHT", "8"))


class GatewayClient:
    """Renders requests, talks HTTP with retries, extracts predictions.

    Retries happen per chunk, only on transport errors and 5xx responses;
    4xx means misconfiguration and is surfaced immediately. A shared
    semaphore caps in-flight upstream requests across worker threads.
    """

    def __init__(
        self,
        max_inflight: int = DEFAULT_MAX_INFLIGHT,
        backoff: tuple[float, ...] = DEFAULT_BACKOFF,
        timeout: float = 10.0,
        session: requests.Session | None = None,
    ):
        self._semaphore = threading.Semaphore(max_inflight)
        self._backoff = backoff
        self._timeout = timeout
        self._session = session or requests.Session()

    def handle_for(self, spec: ModelSpec, columns: list[str] | None = None) -> "PredictorHandle":
        return PredictorHandle(self, spec, columns)

    def probe(self, spec: ModelSpec) -> bool:
        """Reachability check: did the endpoint answer HTTP at all?"""
        try:
            with self._semaphore:
                self._session.request(
                    spec.http_method, spec.endpoint_url, data="{}",
                    headers=spec.headers, timeout=min(self._timeout, 3.0),
                )
            return True
        except requests.RequestException:
            return False

    def _send(self, spec: ModelSpec, body: str) -> str:
        attempts = len(self._backoff)
        last_error = "unknown"
        for attempt in range(attempts):
            try:
                with self._semaphore:
                    response = self._session.request(
                        spec.http_method,
                        spec.endpoint_url,
                        data=body.encode("utf-8"),
                        headers={"Content-Type": "application/json", **spec.headers},
                        timeout=self._timeout,
                    )
            except requests.RequestException as exc:
                last_error = f"transport error: {exc}"
            else:
                if response.status_code < 400:
                    return response.text
                last_error = f"HTTP {response.status_code}"
                if response.status_code < 500:
                    raise GatewayError(f"model API rejected request: {last_error}")
            if attempt + 1 < attempts:
                time.sleep(self._backoff[attempt])
        raise GatewayError(f"model API unreachable after {attempts} attempts: {last_error}")

    def predict_chunk(
        self, spec: ModelSpec, samples: list[Any], columns: list[str] | None
    ) -> list[Prediction]:
        body = render_request(spec, samples, columns)
        return extract_predictions(self._send(spec, body), spec, expected=len(samples))

    def forecast_window(
        self, spec: ModelSpec, window_sample: dict[str, Any], horizon: int
    ) -> list[float]:
        body = render_request(spec, [window_sample], None)
        return extract_values(self._send(spec, body), spec, expected=horizon)


class PredictorHandle:
    """Capability to query one model; carries no readable credential data."""

    def __init__(self, client: GatewayClient, spec: ModelSpec, columns: list[str] | None):
        self.__client = client
        self.__spec = spec
        self.__columns = list(columns) if columns else None
        self.model_name = spec.name
        self.batch_limit = spec.effective_batch_limit

    def __repr__(self) -> str:
        return f"PredictorHandle(model={self.model_name!r})"

    def predict_batch(self, samples: list[Any]) -> list[Prediction | PredictionError]:
        """Predict for all samples, chunked by the spec's batch limit.

        Order is preserved; a chunk that fails after retries contributes one
        :class:`PredictionError` per sample instead of raising.
        """
        if not samples:
            return []
        out: list[Prediction | PredictionError] = []
        limit = self.__spec.effective_batch_limit
        for start in range(0, len(samples), limit):
            chunk = samples[start : start + limit]
            try:
                out.extend(self.__client.predict_chunk(self.__spec, chunk, self.__columns))
            except (GatewayError, ValidationError) as exc:
                out.extend(PredictionError(str(exc)) for _ in chunk)
        return out

    def forecast(self, window_sample: dict[str, Any], horizon: int) -> list[float] | PredictionError:
        """Forecast ``horizon`` values for one series window."""
        try:
            return self.__client.forecast_window(self.__spec, window_sample, horizon)
        except (GatewayError, ValidationError) as exc:
            return PredictionError(str(exc))
