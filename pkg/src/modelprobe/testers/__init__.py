from .base import CaseOutcome, flip_rate, pair_outcome, ROLE_ORIGINAL, ROLE_TRANSFORMED
from .expr import parse_predicate
from . import tabular, text, timeseries

__all__ = [
    "CaseOutcome",
    "flip_rate",
    "pair_outcome",
    "ROLE_ORIGINAL",
    "ROLE_TRANSFORMED",
    "parse_predicate",
    "tabular",
    "text",
    "timeseries",
]
