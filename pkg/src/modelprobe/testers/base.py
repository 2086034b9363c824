"""Shared shapes for property testers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..entities import VERDICT_ERROR, VERDICT_FAIL, VERDICT_PASS
from ..gateway.spec import Prediction, PredictionError

ROLE_ORIGINAL = "original"
ROLE_TRANSFORMED = "transformed"


@dataclass
class CaseOutcome:
    """One evaluated test case, before persistence."""

    samples: list[Any]
    role_tags: list[str]
    predictions: list[dict[str, Any]]
    verdict: str
    reference: dict[str, Any] = field(default_factory=dict)
    detail: str = ""


def prediction_dict(p: Prediction | PredictionError) -> dict[str, Any]:
    return p.to_dict()


def pair_outcome(
    original: Any,
    transformed: Any,
    p_original: Prediction | PredictionError,
    p_transformed: Prediction | PredictionError,
    reference: dict[str, Any],
) -> CaseOutcome:
    """Pairwise metamorphic case: fails when the two labels disagree."""
    if isinstance(p_original, PredictionError) or isinstance(p_transformed, PredictionError):
        verdict = VERDICT_ERROR
        detail = "model API error on one of the pair"
    elif p_original.label != p_transformed.label:
        verdict = VERDICT_FAIL
        detail = f"label changed: {p_original.label!r} -> {p_transformed.label!r}"
    else:
        verdict = VERDICT_PASS
        detail = ""
    return CaseOutcome(
        samples=[original, transformed],
        role_tags=[ROLE_ORIGINAL, ROLE_TRANSFORMED],
        predictions=[prediction_dict(p_original), prediction_dict(p_transformed)],
        verdict=verdict,
        reference=reference,
        detail=detail,
    )


def flip_rate(cases: list[CaseOutcome]) -> float | None:
    """Failing pairs over evaluated pairs; errors leave the denominator."""
    evaluated = [c for c in cases if c.verdict != VERDICT_ERROR]
    if not evaluated:
        return None
    failing = sum(1 for c in evaluated if c.verdict == VERDICT_FAIL)
    return failing / len(evaluated)
