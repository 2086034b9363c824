"""Metamorphic testers for black-box forecasting models.

Three input transformations with a known expected effect on forecast error:
a tiny constant shift (mean first-order difference / 100) should leave the
relative RMSE gain below alpha; shuffling record order should not matter;
shifting the series far outside the training range (10x the training spread)
should blow the error up, so a gain below beta exposes a model that secretly
rescales with the test window.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

import numpy as np

from ..entities import VERDICT_ERROR, VERDICT_FAIL, VERDICT_PASS
from ..errors import ValidationError
from ..gateway.spec import PredictionError
from .base import CaseOutcome, ROLE_ORIGINAL, ROLE_TRANSFORMED

KIND_SMALL_LINEAR = "small_linear"
KIND_UNORDERED = "unordered"
KIND_LARGE_LINEAR = "large_linear"

RMSE_FLOOR = 1e-12


@dataclass
class SeriesWindow:
    history: list[tuple[float, float]]  # (timestamp, value), timestamps ascending
    horizon: list[tuple[float, float]]

    def __post_init__(self) -> None:
        if not self.history or not self.horizon:
            raise ValidationError("window needs non-empty history and horizon")
        for seq in (self.history, self.horizon):
            stamps = [t for t, _ in seq]
            if any(b <= a for a, b in zip(stamps, stamps[1:])):
                raise ValidationError("timestamps must be strictly increasing")

    @property
    def history_values(self) -> list[float]:
        return [v for _, v in self.history]

    @property
    def horizon_values(self) -> list[float]:
        return [v for _, v in self.horizon]

    def as_sample(self) -> dict[str, Any]:
        return {"history": [[t, v] for t, v in self.history],
                "horizon_len": len(self.horizon)}


@dataclass
class _ShuffledWindow(SeriesWindow):
    """History presented out of order; timestamps stay glued to their values."""

    def __post_init__(self) -> None:  # ordering check intentionally skipped
        if not self.history or not self.horizon:
            raise ValidationError("window needs non-empty history and horizon")


@dataclass
class MetamorphicSpec:
    kind: str
    alpha: float = 0.10
    beta: float = 0.10
    training_min: float | None = None
    training_max: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (KIND_SMALL_LINEAR, KIND_UNORDERED, KIND_LARGE_LINEAR):
            raise ValidationError(f"unknown metamorphic kind {self.kind!r}")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValidationError("alpha and beta must be positive")
        if self.kind == KIND_LARGE_LINEAR:
            if self.training_min is None or self.training_max is None:
                raise ValidationError("large_linear requires the training value range")
            if self.training_min > self.training_max:
                raise ValidationError("training_min must be <= training_max")


@dataclass
class RmseGain:
    rmse_original: float
    rmse_transformed: float
    delta_r: float


def _shift(window: SeriesWindow, constant: float) -> SeriesWindow:
    return SeriesWindow(
        history=[(t, v + constant) for t, v in window.history],
        horizon=[(t, v + constant) for t, v in window.horizon],
    )


def transform_series(window: SeriesWindow, spec: MetamorphicSpec) -> SeriesWindow:
    """Build the transformed twin of a window for the given property kind.

    Linear-change kinds shift horizon actuals together with the history so a
    shift-equivariant model keeps identical errors on both sides.
    """
    if spec.kind == KIND_SMALL_LINEAR:
        values = window.history_values
        if len(values) < 2:
            raise ValidationError("small_linear needs history length >= 2")
        diffs = [b - a for a, b in zip(values, values[1:])]
        constant = (sum(diffs) / len(diffs)) / 100.0
        return _shift(window, constant)
    if spec.kind == KIND_LARGE_LINEAR:
        constant = 10.0 * (spec.training_max - spec.training_min)
        return _shift(window, constant)
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(len(window.history))
    return _ShuffledWindow(
        history=[window.history[i] for i in order],
        horizon=list(window.horizon),
    )


def rmse(forecast: list[float], actuals: list[float]) -> float:
    if len(forecast) != len(actuals):
        raise ValidationError("forecast length must equal horizon length")
    return math.sqrt(sum((f - a) ** 2 for f, a in zip(forecast, actuals)) / len(actuals))


def rmse_gain(
    forecast_original: list[float],
    forecast_transformed: list[float],
    window_original: SeriesWindow,
    window_transformed: SeriesWindow,
) -> RmseGain:
    """Relative gain: (rmse_t - rmse_o) / max(rmse_o, floor), each RMSE judged
    against its own window's horizon actuals."""
    ro = rmse(forecast_original, window_original.horizon_values)
    rt = rmse(forecast_transformed, window_transformed.horizon_values)
    return RmseGain(ro, rt, (rt - ro) / max(ro, RMSE_FLOOR))


def judge(delta_r: float, spec: MetamorphicSpec) -> str:
    if spec.kind == KIND_LARGE_LINEAR:
        return VERDICT_FAIL if delta_r < spec.beta else VERDICT_PASS
    return VERDICT_FAIL if delta_r > spec.alpha else VERDICT_PASS


def evaluate_window(
    window: SeriesWindow, predictor, spec: MetamorphicSpec
) -> tuple[float | None, CaseOutcome]:
    """Transform, forecast both twins, judge. Returns (delta_r, case)."""
    transformed = transform_series(window, spec)
    f_orig = predictor.forecast(window.as_sample(), len(window.horizon))
    f_trans = predictor.forecast(transformed.as_sample(), len(transformed.horizon))
    sample_pair = [window.as_sample(), transformed.as_sample()]
    reference: dict[str, Any] = {
        "kind": spec.kind,
        "horizon_original": [[t, v] for t, v in window.horizon],
        "horizon_transformed": [[t, v] for t, v in transformed.horizon],
    }
    if isinstance(f_orig, PredictionError) or isinstance(f_trans, PredictionError):
        message = f_orig.message if isinstance(f_orig, PredictionError) else f_trans.message
        return None, CaseOutcome(
            samples=sample_pair,
            role_tags=[ROLE_ORIGINAL, ROLE_TRANSFORMED],
            predictions=[{"label": None, "confidence": None, "error": message}] * 2,
            verdict=VERDICT_ERROR,
            reference=reference,
            detail=message,
        )
    gain = rmse_gain(f_orig, f_trans, window, transformed)
    verdict = judge(gain.delta_r, spec)
    reference.update(
        rmse_original=gain.rmse_original,
        rmse_transformed=gain.rmse_transformed,
        delta_r=gain.delta_r,
    )
    case = CaseOutcome(
        samples=sample_pair,
        role_tags=[ROLE_ORIGINAL, ROLE_TRANSFORMED],
        predictions=[
            {"label": None, "confidence": None, "error": None, "forecast": list(f_orig)},
            {"label": None, "confidence": None, "error": None, "forecast": list(f_trans)},
        ],
        verdict=verdict,
        reference=reference,
        detail="" if verdict == VERDICT_PASS else f"delta_r={gain.delta_r:.6g}",
    )
    return gain.delta_r, case


def run_metamorphic(
    windows: list[SeriesWindow], predictor, spec: MetamorphicSpec
) -> tuple[float | None, str, list[CaseOutcome]]:
    """Per-window cases plus mean delta-R and the run-level verdict."""
    if not windows:
        raise ValidationError("at least one window required")
    cases: list[CaseOutcome] = []
    deltas: list[float] = []
    for window in windows:
        delta, case = evaluate_window(window, predictor, spec)
        cases.append(case)
        if delta is not None:
            deltas.append(delta)
    if not deltas:
        return None, VERDICT_ERROR, cases
    mean_delta = sum(deltas) / len(deltas)
    return mean_delta, judge(mean_delta, spec), cases


def make_windows(
    series: list[tuple[float, float]],
    history_len: int = 48,
    horizon_len: int = 12,
    stride: int | None = None,
) -> list[SeriesWindow]:
    """Sliding windows over a series; default stride equals the horizon."""
    stride = horizon_len if stride is None else stride
    if history_len < 2 or horizon_len < 1 or stride < 1:
        raise ValidationError("window parameters out of range")
    total = history_len + horizon_len
    out = []
    for start in range(0, len(series) - total + 1, stride):
        out.append(SeriesWindow(
            history=series[start : start + history_len],
            horizon=series[start + history_len : start + total],
        ))
    if not out:
        raise ValidationError(
            f"series too short: {len(series)} points for history {history_len} + horizon {horizon_len}"
        )
    return out


def parse_timestamp(text: str) -> float:
    """Epoch seconds from ISO-8601 or a plain epoch number."""
    try:
        return float(text)
    except ValueError:
        pass
    try:
        stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise ValidationError(f"unparseable timestamp {text!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp()


def load_series(text: str) -> list[tuple[float, float]]:
    """CSV with 'timestamp' and 'value' columns."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "timestamp" not in reader.fieldnames or "value" not in reader.fieldnames:
        raise ValidationError("time-series CSV needs 'timestamp' and 'value' columns")
    series = []
    for record in reader:
        series.append((parse_timestamp(record["timestamp"]), float(record["value"])))
    if not series:
        raise ValidationError("empty time series")
    stamps = [t for t, _ in series]
    if any(b <= a for a, b in zip(stamps, stamps[1:])):
        raise ValidationError("timestamps must be strictly increasing")
    return series
