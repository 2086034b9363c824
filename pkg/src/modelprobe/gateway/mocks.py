"""Deterministic mock models and a tiny HTTP server exposing them.

These are the test oracles for the whole platform: each mock's pass/fail
behaviour under the shipped properties is known by construction.

Wire format (matches the default request template):
  request   {"instances": [<sample>, ...]}   or {"instance": <sample>}
  response  {"predictions": [{"label": ..., "confidence": ...}, ...]}
  forecast  {"predictions": [{"forecast": [f1, ..., fh]}, ...]}
            where each instance is {"history": [[t, v], ...], "horizon_len": h}
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable

from ..errors import ValidationError

CLASSIFIER_KINDS = ("constant", "planted-bias", "threshold", "keyword-text")
FORECASTER_KINDS = (
    "forecast-last-value",
    "forecast-mean",
    "forecast-normalizing",
    "forecast-order-sensitive",
)
MOCK_KINDS = CLASSIFIER_KINDS + FORECASTER_KINDS


@dataclass
class MockModel:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in MOCK_KINDS:
            raise ValidationError(f"unknown mock model kind {self.kind!r}")

    @property
    def is_forecaster(self) -> bool:
        return self.kind in FORECASTER_KINDS

    def predict(self, sample: Any) -> dict[str, Any]:
        p = self.params
        if self.kind == "constant":
            return {"label": p.get("label", "no"), "confidence": 1.0}
        if self.kind == "planted-bias":
            favored = sample.get(p["protected_attr"]) == p["favored_value"]
            above = float(sample.get(p.get("numeric_col", "score"), 0.0)) > float(
                p.get("threshold", 0.5)
            )
            label = p.get("favorable_label", "favorable") if (favored or above) else p.get(
                "unfavorable_label", "unfavorable"
            )
            return {"label": label, "confidence": 1.0}
        if self.kind == "threshold":
            above = float(sample.get(p.get("column", "x"), 0.0)) > float(p.get("cutoff", 0.5))
            label = p.get("above_label", "yes") if above else p.get("below_label", "no")
            return {"label": label, "confidence": 1.0}
        if self.kind == "keyword-text":
            text = sample if isinstance(sample, str) else str(sample)
            words = [w.lower() for w in p.get("keywords", ["good"])]
            hit = any(w in text.lower() for w in words)
            label = p.get("match_label", "positive") if hit else p.get("other_label", "negative")
            return {"label": label, "confidence": 1.0}
        raise ValidationError(f"{self.kind} is a forecaster; use forecast()")

    def forecast(self, sample: dict[str, Any]) -> list[float]:
        history = sample["history"]
        horizon = int(sample.get("horizon_len", 1))
        values = [float(pair[1]) for pair in history]
        if self.kind == "forecast-last-value":
            ordered = sorted(history, key=lambda pair: pair[0])
            return [float(ordered[-1][1])] * horizon
        if self.kind == "forecast-mean":
            return [sum(values) / len(values)] * horizon
        if self.kind == "forecast-normalizing":
            # Cheats: rescales with the incoming window's own min/max, so any
            # constant shift of the input shifts the forecast right along.
            lo, hi = min(values), max(values)
            if hi == lo:
                return [lo] * horizon
            ordered = sorted(history, key=lambda pair: pair[0])
            z_last = (float(ordered[-1][1]) - lo) / (hi - lo)
            return [z_last * (hi - lo) + lo] * horizon
        if self.kind == "forecast-order-sensitive":
            # Ignores timestamps entirely: trusts the payload ordering.
            return [values[-1]] * horizon
        raise ValidationError(f"{self.kind} is a classifier; use predict()")


def make_mock(kind: str, **params: Any) -> MockModel:
    return MockModel(kind=kind, params=params)


def mock_predict(kind: str, sample: Any, **params: Any) -> dict[str, Any]:
    """One-shot prediction helper (classifier kinds only)."""
    return make_mock(kind, **params).predict(sample)


class MockModelServer:
    """Threaded HTTP server around one mock model.

    ``fault_hook`` (request_index -> status | None) lets tests inject upstream
    failures; request_index counts POSTs from 0.
    """

    def __init__(
        self,
        model: MockModel,
        host: str = "127.0.0.1",
        port: int = 0,
        fault_hook: Callable[[int], int | None] | None = None,
    ):
        self.model = model
        self.request_count = 0
        self._count_lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args: Any) -> None:
                pass

            def do_POST(self) -> None:
                with server._count_lock:
                    index = server.request_count
                    server.request_count += 1
                if fault_hook is not None:
                    status = fault_hook(index)
                    if status is not None:
                        self.send_response(status)
                        self.end_headers()
                        self.wfile.write(b'{"error": "injected"}')
                        return
                length = int(self.headers.get("Content-Length", 0))
                try:
                    body = json.loads(self.rfile.read(length))
                    samples = body["instances"] if "instances" in body else [body["instance"]]
                    predictions = []
                    for sample in samples:
                        if server.model.is_forecaster:
                            predictions.append({"forecast": server.model.forecast(sample)})
                        else:
                            predictions.append(server.model.predict(sample))
                    payload = json.dumps({"predictions": predictions}).encode()
                    self.send_response(200)
                except Exception as exc:  # malformed request -> 400
                    payload = json.dumps({"error": str(exc)}).encode()
                    self.send_response(400)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            do_GET = do_POST

        self._httpd = ThreadingHTTPServer((host, port), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}/predict"

    def start(self) -> "MockModelServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self) -> "MockModelServer":
        return self.start()

    def __exit__(self, *exc: Any) -> None:
        self.stop()
