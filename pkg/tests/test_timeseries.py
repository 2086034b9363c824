import numpy as np
import pytest

from modelprobe.errors import ValidationError
from modelprobe.gateway.mocks import make_mock
from modelprobe.gateway.spec import PredictionError
from modelprobe.testers.timeseries import (
    KIND_LARGE_LINEAR,
    KIND_SMALL_LINEAR,
    KIND_UNORDERED,
    MetamorphicSpec,
    SeriesWindow,
    load_series,
    make_windows,
    parse_timestamp,
    rmse_gain,
    run_metamorphic,
    transform_series,
)


class LocalForecaster:
    """Wraps a mock forecaster behind the handle contract, no HTTP."""

    def __init__(self, kind, **params):
        self.model = make_mock(kind, **params)

    def forecast(self, window_sample, horizon):
        return self.model.forecast(window_sample)


def window(values, horizon_values, start=0.0, step=60.0):
    history = [(start + i * step, float(v)) for i, v in enumerate(values)]
    t0 = start + len(values) * step
    horizon = [(t0 + i * step, float(v)) for i, v in enumerate(horizon_values)]
    return SeriesWindow(history=history, horizon=horizon)


def ramp_windows(n=4, history_len=12, horizon_len=4):
    rng = np.random.default_rng(6)
    series = [(i * 60.0, float(i + rng.normal(0, 0.3))) for i in range(80)]
    return make_windows(series, history_len=history_len, horizon_len=horizon_len)[:n]


# ----------------------------------------------------------------- transforms

def test_small_linear_constant_from_mean_first_order_difference():
    w = window([1.0, 2.0, 4.0], [5.0])
    out = transform_series(w, MetamorphicSpec(kind=KIND_SMALL_LINEAR))
    # diffs [1, 2] -> mean 1.5 -> constant 0.015 added everywhere
    assert [v for _, v in out.history] == pytest.approx([1.015, 2.015, 4.015], abs=1e-12)
    assert [v for _, v in out.horizon] == pytest.approx([5.015], abs=1e-12)


def test_small_linear_is_exact_constant_shift():
    w = window([3.0, 7.0, 2.0, 9.0], [4.0, 1.0])
    out = transform_series(w, MetamorphicSpec(kind=KIND_SMALL_LINEAR))
    shifts = {round(b - a, 15) for (_, a), (_, b) in zip(w.history + w.horizon,
                                                         out.history + out.horizon)}
    assert len(shifts) == 1


def test_small_linear_needs_two_points():
    w = window([1.0], [2.0])
    with pytest.raises(ValidationError, match="length >= 2"):
        transform_series(w, MetamorphicSpec(kind=KIND_SMALL_LINEAR))


def test_large_linear_adds_ten_times_training_range():
    w = window([1.0, 2.0], [3.0])
    spec = MetamorphicSpec(kind=KIND_LARGE_LINEAR, training_min=0.0, training_max=10.0)
    out = transform_series(w, spec)
    assert [v for _, v in out.history] == [101.0, 102.0]
    assert [v for _, v in out.horizon] == [103.0]


def test_large_linear_requires_training_range():
    with pytest.raises(ValidationError, match="training"):
        MetamorphicSpec(kind=KIND_LARGE_LINEAR)


def find_identity_seed(n):
    for seed in range(1000):
        if np.array_equal(np.random.default_rng(seed).permutation(n), np.arange(n)):
            return seed
    raise AssertionError("no identity-permutation seed found")


def test_unordered_identity_permutation_is_noop():
    w = window([5.0, 6.0, 7.0], [8.0])
    seed = find_identity_seed(3)
    out = transform_series(w, MetamorphicSpec(kind=KIND_UNORDERED, seed=seed))
    assert out.history == w.history
    assert out.horizon == w.horizon


def test_unordered_keeps_timestamp_value_pairs_glued():
    w = window([5.0, 6.0, 7.0, 8.0], [9.0])
    out = transform_series(w, MetamorphicSpec(kind=KIND_UNORDERED, seed=1))
    assert sorted(out.history) == sorted(w.history)
    assert out.horizon == w.horizon


# -------------------------------------------------------------------- delta R

def test_delta_r_zero_for_identical():
    w = window([1.0, 2.0], [3.0])
    gain = rmse_gain([3.0], [3.0], w, w)
    assert gain.delta_r == 0.0


def test_delta_r_relative_gain():
    w_o = window([1.0, 2.0], [3.0])
    w_t = window([1.0, 2.0], [3.0])
    gain = rmse_gain([4.0], [4.2], w_o, w_t)  # rmse 1.0 vs 1.2
    assert gain.delta_r == pytest.approx(0.2, abs=1e-9)


def test_delta_r_floor_guard_when_perfect():
    w = window([1.0, 2.0], [3.0])
    gain = rmse_gain([3.0], [3.5], w, w)  # rmse_o = 0 exactly
    assert gain.rmse_original == 0.0
    assert gain.delta_r == pytest.approx(0.5 / 1e-12)


def test_forecast_length_mismatch():
    w = window([1.0, 2.0], [3.0, 4.0])
    with pytest.raises(ValidationError, match="length"):
        rmse_gain([1.0], [1.0, 2.0], w, w)


# ------------------------------------------------------------ mock matrix

def test_shift_equivariant_passes_small_linear():
    spec = MetamorphicSpec(kind=KIND_SMALL_LINEAR, alpha=0.10)
    mean_delta, verdict, cases = run_metamorphic(
        ramp_windows(), LocalForecaster("forecast-last-value"), spec
    )
    assert abs(mean_delta) <= 1e-9
    assert verdict == "pass"
    assert all(c.verdict == "pass" for c in cases)


def test_normalizing_mock_fails_large_linear():
    spec = MetamorphicSpec(kind=KIND_LARGE_LINEAR, beta=0.10,
                           training_min=0.0, training_max=80.0)
    mean_delta, verdict, cases = run_metamorphic(
        ramp_windows(), LocalForecaster("forecast-normalizing"), spec
    )
    assert mean_delta < 0.10  # the cheat keeps the error flat
    assert verdict == "fail"


def test_order_sensitive_fails_unordered_mean_passes():
    seed = 3  # any non-identity permutation for length-12 histories
    spec = MetamorphicSpec(kind=KIND_UNORDERED, alpha=0.10, seed=seed)
    windows = ramp_windows()
    perm = np.random.default_rng(seed).permutation(len(windows[0].history))
    assert not np.array_equal(perm, np.arange(len(perm)))

    delta_bad, verdict_bad, _ = run_metamorphic(
        windows, LocalForecaster("forecast-order-sensitive"), spec
    )
    assert verdict_bad == "fail"
    assert delta_bad > 0.10

    delta_ok, verdict_ok, _ = run_metamorphic(
        windows, LocalForecaster("forecast-mean"), spec
    )
    assert abs(delta_ok) <= 1e-9
    assert verdict_ok == "pass"


def test_judging_pipeline_deterministic():
    spec = MetamorphicSpec(kind=KIND_UNORDERED, alpha=0.10, seed=8)
    windows = ramp_windows()
    forecaster = LocalForecaster("forecast-order-sensitive")
    first = run_metamorphic(windows, forecaster, spec)
    second = run_metamorphic(windows, forecaster, spec)
    assert first[0] == second[0]
    assert [c.verdict for c in first[2]] == [c.verdict for c in second[2]]


def test_predictor_error_marks_case():
    class Exploding:
        def forecast(self, sample, horizon):
            return PredictionError("down")

    spec = MetamorphicSpec(kind=KIND_SMALL_LINEAR)
    mean_delta, verdict, cases = run_metamorphic(ramp_windows(1), Exploding(), spec)
    assert mean_delta is None
    assert verdict == "error"
    assert cases[0].verdict == "error"


# ------------------------------------------------------------------ windowing

def test_make_windows_stride_default_horizon():
    series = [(float(i), float(i)) for i in range(30)]
    windows = make_windows(series, history_len=10, horizon_len=5)
    assert len(windows) == 4  # starts at 0,5,10,15
    assert windows[0].history[0] == (0.0, 0.0)
    assert windows[0].horizon[0] == (10.0, 10.0)


def test_make_windows_too_short():
    with pytest.raises(ValidationError, match="too short"):
        make_windows([(0.0, 1.0)], history_len=10, horizon_len=5)


def test_parse_timestamp_formats():
    assert parse_timestamp("1700000000") == 1700000000.0
    assert parse_timestamp("2023-11-14T22:13:20Z") == 1700000000.0
    assert parse_timestamp("2023-11-14T22:13:20+00:00") == 1700000000.0
    with pytest.raises(ValidationError):
        parse_timestamp("next tuesday")


def test_load_series_csv():
    text = "timestamp,value\n2023-11-14T22:13:20Z,1.5\n2023-11-14T22:14:20Z,2.5\n"
    series = load_series(text)
    assert series == [(1700000000.0, 1.5), (1700000060.0, 2.5)]


def test_load_series_requires_monotone_timestamps():
    text = "timestamp,value\n100,1\n50,2\n"
    with pytest.raises(ValidationError, match="increasing"):
        load_series(text)
