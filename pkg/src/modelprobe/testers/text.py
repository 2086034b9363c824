"""Text sensitivity testers: typo and boundary-noise transforms, flip rate.

Both transforms are seeded and logged so any transformed sentence can be
replayed or undone exactly. Additional transform kinds can be plugged in via
:func:`register_transform` (contract: (text, level, seed) -> (text, ops)).
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from ..errors import ValidationError
from .base import CaseOutcome, flip_rate, pair_outcome

_QWERTY_ROWS = ("1234567890", "qwertyuiop", "asdfghjkl", "zxcvbnm")


def _build_adjacency() -> dict[str, str]:
    table: dict[str, str] = {}
    for r, row in enumerate(_QWERTY_ROWS):
        for i, ch in enumerate(row):
            near = []
            if i > 0:
                near.append(row[i - 1])
            if i + 1 < len(row):
                near.append(row[i + 1])
            for rr in (r - 1, r + 1):
                if 0 <= rr < len(_QWERTY_ROWS) and i < len(_QWERTY_ROWS[rr]):
                    near.append(_QWERTY_ROWS[rr][i])
            table[ch] = "".join(near)
    return table


KEYBOARD_ADJACENT = _build_adjacency()

_ALNUM = string.ascii_lowercase + string.digits
_TOKEN_RE = re.compile(r"\S+")

OP_SWAP = "swap"
OP_DELETE = "delete"
OP_INSERT = "insert"
OP_SUBSTITUTE = "substitute"


@dataclass
class EditOp:
    position: int  # index in the coordinates of the original text
    kind: str
    before: str = ""
    after: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"position": self.position, "kind": self.kind,
                "before": self.before, "after": self.after}


@dataclass
class TextTransformSpec:
    kind: str  # typo | noise (or a registered plug-in)
    level: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValidationError("level must be >= 1")


def _eligible_positions(text: str) -> list[tuple[int, int]]:
    """(index, token_end) for characters inside tokens of length >= 3."""
    out = []
    for m in _TOKEN_RE.finditer(text):
        if m.end() - m.start() >= 3:
            out.extend((i, m.end()) for i in range(m.start(), m.end()))
    return out


def _adjacent_char(ch: str, rng: np.random.Generator) -> str:
    near = KEYBOARD_ADJACENT.get(ch.lower())
    if near:
        return near[int(rng.integers(0, len(near)))]
    return string.ascii_lowercase[int(rng.integers(0, 26))]


def apply_typo(text: str, level: int, seed: int) -> tuple[str, list[EditOp]]:
    """Apply ``level`` keyboard-realistic edits at distinct positions inside
    tokens of length >= 3; returns fewer ops when the text is too short."""
    if not text:
        raise ValidationError("empty text")
    rng = np.random.default_rng(seed)
    eligible = _eligible_positions(text)
    count = min(level, len(eligible))
    if count == 0:
        return text, []
    picked_idx = rng.choice(len(eligible), size=count, replace=False)
    picked = sorted((eligible[i] for i in picked_idx), reverse=True)
    ops: list[EditOp] = []
    out = text
    for position, token_end in picked:
        kinds = [OP_DELETE, OP_INSERT, OP_SUBSTITUTE]
        # swap needs a same-token right neighbour that earlier (higher-position)
        # ops have not deleted or replaced with whitespace
        if position + 1 < token_end and position + 1 < len(out) and not out[position + 1].isspace():
            kinds.append(OP_SWAP)
        kind = kinds[int(rng.integers(0, len(kinds)))]
        if kind == OP_SWAP:
            op = EditOp(position, OP_SWAP,
                        before=out[position : position + 2],
                        after=out[position + 1] + out[position])
        elif kind == OP_DELETE:
            op = EditOp(position, OP_DELETE, before=out[position])
        elif kind == OP_INSERT:
            op = EditOp(position, OP_INSERT, after=_adjacent_char(out[position], rng))
        else:
            op = EditOp(position, OP_SUBSTITUTE, before=out[position],
                        after=_adjacent_char(out[position], rng))
        out = _apply_op(out, op)
        ops.append(op)
    return out, ops


def _apply_op(text: str, op: EditOp) -> str:
    p = op.position
    if op.kind == OP_SWAP:
        return text[:p] + op.after + text[p + 2 :]
    if op.kind == OP_DELETE:
        return text[:p] + text[p + 1 :]
    if op.kind == OP_INSERT:
        return text[:p] + op.after + text[p:]
    return text[:p] + op.after + text[p + 1 :]


def _undo_op(text: str, op: EditOp) -> str:
    p = op.position
    if op.kind == OP_SWAP:
        return text[:p] + op.before + text[p + 2 :]
    if op.kind == OP_DELETE:
        return text[:p] + op.before + text[p:]
    if op.kind == OP_INSERT:
        return text[:p] + text[p + 1 :]
    return text[:p] + op.before + text[p + 1 :]


def replay_ops(text: str, ops: list[EditOp]) -> str:
    out = text
    for op in ops:
        out = _apply_op(out, op)
    return out


def undo_ops(transformed: str, ops: list[EditOp]) -> str:
    out = transformed
    for op in reversed(ops):
        out = _undo_op(out, op)
    return out


def apply_noise(text: str, level: int, seed: int) -> tuple[str, list[EditOp]]:
    """Insert ``level`` random alphanumeric characters at word boundaries
    (adjacent to spaces) or at the string ends; word interiors untouched."""
    if not text:
        raise ValidationError("empty text")
    rng = np.random.default_rng(seed)
    out = text
    ops: list[EditOp] = []
    for _ in range(level):
        points = {0, len(out)}
        for i, ch in enumerate(out):
            if ch == " ":
                points.update((i, i + 1))
        candidates = sorted(points)
        position = candidates[int(rng.integers(0, len(candidates)))]
        char = _ALNUM[int(rng.integers(0, len(_ALNUM)))]
        op = EditOp(position, OP_INSERT, after=char)
        out = _apply_op(out, op)
        ops.append(op)
    return out, ops


Transform = Callable[[str, int, int], tuple[str, list[EditOp]]]
_TRANSFORMS: dict[str, Transform] = {"typo": apply_typo, "noise": apply_noise}


def register_transform(kind: str, fn: Transform) -> None:
    """Plug-in point for further meaning-preserving text transforms."""
    if kind in _TRANSFORMS:
        raise ValidationError(f"transform {kind!r} already registered")
    _TRANSFORMS[kind] = fn


def get_transform(kind: str) -> Transform:
    try:
        return _TRANSFORMS[kind]
    except KeyError:
        raise ValidationError(f"unknown text transform {kind!r}") from None


def derive_seed(seed: int, index: int) -> int:
    return (seed ^ (index * 0x9E3779B9)) & 0xFFFFFFFF


def build_text_pairs(
    corpus: list[str], spec: TextTransformSpec, limit: int
) -> list[tuple[str, str, dict[str, Any]]]:
    """Sample sentences without replacement (seeded) and transform each."""
    if not corpus:
        raise ValidationError("empty corpus")
    transform = get_transform(spec.kind)
    rng = np.random.default_rng(spec.seed)
    take = min(limit, len(corpus))
    indices = sorted(int(i) for i in rng.choice(len(corpus), size=take, replace=False))
    pairs = []
    for idx in indices:
        text = corpus[idx]
        new_text, ops = transform(text, spec.level, derive_seed(spec.seed, idx))
        pairs.append((text, new_text, {
            "line_index": idx,
            "requested_ops": spec.level,
            "applied_ops": len(ops),
            "operations": [op.to_dict() for op in ops],
        }))
    return pairs


def run_text_sensitivity(
    corpus: list[str], predictor, spec: TextTransformSpec, limit: int
) -> tuple[float | None, list[CaseOutcome]]:
    """Sample sentences, transform, compare labels before and after."""
    pairs = build_text_pairs(corpus, spec, limit)
    p_orig = predictor.predict_batch([p[0] for p in pairs])
    p_trans = predictor.predict_batch([p[1] for p in pairs])
    cases = [
        pair_outcome(o, t, po, pt, ref)
        for (o, t, ref), po, pt in zip(pairs, p_orig, p_trans)
    ]
    return flip_rate(cases), cases
