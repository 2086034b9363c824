"""Tabular property testers: correctness, group and individual discrimination,
perturbation robustness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..entities import VERDICT_ERROR, VERDICT_FAIL, VERDICT_PASS
from ..errors import ValidationError
from ..gateway.spec import Prediction, PredictionError
from ..synth.schema import CATEGORICAL, NUMERIC, TableSchema
from .base import CaseOutcome, ROLE_ORIGINAL, flip_rate, pair_outcome, prediction_dict
from .expr import parse_predicate


@dataclass
class FairnessConfig:
    protected_attributes: list[str]
    favorable_label: str
    minority_group: str = ""  # predicate expression, e.g. "marital == 'single'"
    di_low: float = 0.8
    di_high: float = 1.25

    def __post_init__(self) -> None:
        if not self.protected_attributes:
            raise ValidationError("at least one protected attribute required")
        if not self.di_low < self.di_high:
            raise ValidationError("DI range must have low < high")
        # group testing needs the predicate; individual testing does not
        self.minority_predicate = parse_predicate(self.minority_group) if self.minority_group else None


@dataclass
class RobustnessConfig:
    epsilon: float = 0.05  # fraction of each numeric column's range
    neighbors_per_sample: int = 4

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon <= 0.5:
            raise ValidationError("epsilon must be in (0, 0.5]")
        if self.neighbors_per_sample < 1:
            raise ValidationError("neighbors_per_sample must be >= 1")


@dataclass
class GroupMetrics:
    disparate_impact: float
    demographic_parity: float
    rate_minority: float
    rate_majority: float
    minority_count: int
    majority_count: int
    verdict: str
    detail: str = ""


def correctness_outcomes(
    rows: list[dict[str, Any]], gold_labels: list[str], predictions
) -> list[CaseOutcome]:
    cases: list[CaseOutcome] = []
    for row, gold, pred in zip(rows, gold_labels, predictions):
        if isinstance(pred, PredictionError):
            cases.append(
                CaseOutcome([row], [ROLE_ORIGINAL], [prediction_dict(pred)], VERDICT_ERROR,
                            reference={"gold_label": gold}, detail=pred.message)
            )
            continue
        verdict = VERDICT_PASS if pred.label == gold else VERDICT_FAIL
        detail = "" if verdict == VERDICT_PASS else f"expected {gold!r}, got {pred.label!r}"
        cases.append(
            CaseOutcome([row], [ROLE_ORIGINAL], [prediction_dict(pred)], verdict,
                        reference={"gold_label": gold}, detail=detail)
        )
    return cases


def confusion_metrics(confusion: list[tuple[str, str]]) -> dict[str, float]:
    """Accuracy plus macro-averaged precision/recall/F over (gold, predicted)
    pairs; a class with no predictions scores precision 0."""
    if not confusion:
        raise ValidationError("all predictions errored; no correctness metrics")
    labels = sorted({g for g, _ in confusion} | {p for _, p in confusion})
    per_class_p, per_class_r, per_class_f = [], [], []
    for label in labels:
        tp = sum(1 for g, p in confusion if g == label and p == label)
        fp = sum(1 for g, p in confusion if g != label and p == label)
        fn = sum(1 for g, p in confusion if g == label and p != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class_p.append(precision)
        per_class_r.append(recall)
        per_class_f.append(f1)
    return {
        "accuracy": sum(1 for g, p in confusion if g == p) / len(confusion),
        "precision": sum(per_class_p) / len(labels),
        "recall": sum(per_class_r) / len(labels),
        "f_score": sum(per_class_f) / len(labels),
    }


def correctness_metrics_from_cases(cases: list[CaseOutcome]) -> dict[str, float]:
    confusion = [
        (c.reference["gold_label"], c.predictions[0]["label"])
        for c in cases
        if c.verdict != VERDICT_ERROR
    ]
    return confusion_metrics(confusion)


def test_correctness(
    rows: list[dict[str, Any]], gold_labels: list[str], predictor
) -> tuple[dict[str, float], list[CaseOutcome]]:
    """Per-row cases (fail on label mismatch with gold) plus the four
    correctness metrics; API errors leave the confusion counts."""
    if len(rows) != len(gold_labels):
        raise ValidationError("rows and gold labels must align")
    if not rows:
        raise ValidationError("nothing to test")
    cases = correctness_outcomes(rows, gold_labels, predictor.predict_batch(rows))
    return correctness_metrics_from_cases(cases), cases


def test_group_discrimination(
    rows: list[dict[str, Any]], predictor, config: FairnessConfig
) -> tuple[GroupMetrics, list[CaseOutcome]]:
    """Disparate impact and demographic parity of predicted favorable rates,
    minority (predicate true) versus majority. One set-valued test case."""
    if not rows:
        raise ValidationError("nothing to test")
    if config.minority_predicate is None:
        raise ValidationError("group discrimination needs a minority group expression")
    outcomes = predictor.predict_batch(rows)
    tags = []
    favorable = {"minority": 0, "majority": 0}
    counted = {"minority": 0, "majority": 0}
    predictions = []
    for row, pred in zip(rows, outcomes):
        group = "minority" if config.minority_predicate(row) else "majority"
        tags.append(group)
        predictions.append(prediction_dict(pred))
        if isinstance(pred, PredictionError):
            continue
        counted[group] += 1
        if pred.label == config.favorable_label:
            favorable[group] += 1

    if counted["minority"] == 0 or counted["majority"] == 0:
        empty = "minority" if counted["minority"] == 0 else "majority"
        metrics = GroupMetrics(math.nan, math.nan, math.nan, math.nan,
                               counted["minority"], counted["majority"],
                               VERDICT_ERROR, detail=f"undefined DI: empty {empty} group")
    else:
        rate_min = favorable["minority"] / counted["minority"]
        rate_maj = favorable["majority"] / counted["majority"]
        parity = rate_min - rate_maj
        if rate_maj > 0:
            di = rate_min / rate_maj
            verdict = VERDICT_PASS if config.di_low <= di <= config.di_high else VERDICT_FAIL
            detail = "" if verdict == VERDICT_PASS else (
                f"disparate impact {di:.6g} outside [{config.di_low}, {config.di_high}]"
            )
        elif rate_min > 0:
            di, verdict = math.inf, VERDICT_FAIL
            detail = "disparate impact infinite: majority favorable rate is 0"
        else:
            di, verdict = math.nan, VERDICT_ERROR
            detail = "undefined DI: no favorable predictions in either group"
        metrics = GroupMetrics(di, parity, rate_min, rate_maj,
                               counted["minority"], counted["majority"], verdict, detail)

    case = CaseOutcome(
        samples=list(rows),
        role_tags=tags,
        predictions=predictions,
        verdict=metrics.verdict,
        reference={"favorable_label": config.favorable_label,
                   "minority_group": config.minority_group},
        detail=metrics.detail,
    )
    return metrics, [case]


def individual_discrimination_pairs(
    rows: list[dict[str, Any]], schema: TableSchema, protected_attributes: list[str]
) -> list[tuple[dict[str, Any], dict[str, Any], dict[str, Any]]]:
    """Enumerate (original, transformed, reference) for every alternate value
    of every protected attribute, one attribute changed at a time."""
    for attr in protected_attributes:
        if schema.column(attr).kind != CATEGORICAL:
            raise ValidationError(f"protected attribute {attr!r} must be categorical")
    pairs = []
    for i, row in enumerate(rows):
        for attr in protected_attributes:
            current = str(row[attr])
            for alternate in schema.column(attr).categories:
                if alternate == current:
                    continue
                transformed = dict(row)
                transformed[attr] = alternate
                pairs.append(
                    (row, transformed,
                     {"row_index": i, "protected_attribute": attr,
                      "original_value": current, "transformed_value": alternate})
                )
    return pairs


def test_individual_discrimination(
    rows: list[dict[str, Any]], predictor, config: FairnessConfig, schema: TableSchema
) -> tuple[float | None, list[CaseOutcome]]:
    """Flip rate over pairs differing in exactly one protected attribute."""
    pairs = individual_discrimination_pairs(rows, schema, config.protected_attributes)
    if not pairs:
        raise ValidationError("nothing to test: protected attributes have no alternate values")
    originals = [p[0] for p in pairs]
    transforms = [p[1] for p in pairs]
    p_orig = predictor.predict_batch(originals)
    p_trans = predictor.predict_batch(transforms)
    cases = [
        pair_outcome(o, t, po, pt, ref)
        for (o, t, ref), po, pt in zip(pairs, p_orig, p_trans)
    ]
    return flip_rate(cases), cases


def perturb_rows(
    rows: list[dict[str, Any]], schema: TableSchema, config: RobustnessConfig, seed: int
) -> list[tuple[dict[str, Any], dict[str, Any], dict[str, Any]]]:
    """Neighbors: every numeric column nudged by uniform noise within
    +-epsilon*range, clamped to the column domain; categoricals untouched."""
    numeric = [c for c in schema.columns if c.kind == NUMERIC]
    rng = np.random.default_rng(seed)
    out = []
    for i, row in enumerate(rows):
        for k in range(config.neighbors_per_sample):
            neighbor = dict(row)
            for col in numeric:
                span = col.maximum - col.minimum
                delta = float(rng.uniform(-config.epsilon * span, config.epsilon * span))
                neighbor[col.name] = float(
                    min(max(float(row[col.name]) + delta, col.minimum), col.maximum)
                )
            out.append((row, neighbor, {"row_index": i, "neighbor_index": k}))
    return out


def test_robustness(
    rows: list[dict[str, Any]], predictor, config: RobustnessConfig,
    schema: TableSchema, seed: int = 0,
) -> tuple[float | None, list[CaseOutcome], bool]:
    """Flip rate over (row, neighbor) pairs. Returns (rate, cases, applicable);
    tables without numeric columns are an informational skip."""
    if not any(c.kind == NUMERIC for c in schema.columns):
        return None, [], False
    pairs = perturb_rows(rows, schema, config, seed)
    originals = [p[0] for p in pairs]
    neighbors = [p[1] for p in pairs]
    p_orig = predictor.predict_batch(originals)
    p_near = predictor.predict_batch(neighbors)
    cases = [
        pair_outcome(o, t, po, pt, ref)
        for (o, t, ref), po, pt in zip(pairs, p_orig, p_near)
    ]
    return flip_rate(cases), cases, True
