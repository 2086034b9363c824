"""Minimal JSONPath evaluator.

Supported subset (documented contract, anything else is a parse error):
  $              root
  .name  .*      dot child / dot wildcard
  ['name']       bracket child (single or double quotes)
  [0] [-1]       numeric index into arrays
  [*]            wildcard over array elements or object values
  ..name ..[*]   recursive descent, then the given selector

Results come back in document order (arrays by index, objects by key
insertion order, depth-first for recursive descent).
"""

from __future__ import annotations

import re
from typing import Any

_TOKEN_RE = re.compile(
    r"""
    \.\.            # recursive descent
  | \.\*            # dot wildcard
  | \.[A-Za-z_][A-Za-z0-9_\-]*   # dot child
  | \[\*\]          # bracket wildcard
  | \[-?\d+\]       # numeric index
  | \['(?:[^'\\]|\\.)*'\]        # single-quoted child
  | \["(?:[^"\\]|\\.)*"\]        # double-quoted child
    """,
    re.VERBOSE,
)

# after '..' a bare selector is legal: $..label, $..*
_BARE_RE = re.compile(r"\*|[A-Za-z_][A-Za-z0-9_\-]*")


def parse(path: str) -> list[tuple[str, Any]]:
    """Tokenize a path into (kind, arg) steps. Raises ValueError when malformed."""
    if not path or not path.startswith("$"):
        raise ValueError(f"JSONPath must start with '$': {path!r}")
    steps: list[tuple[str, Any]] = []
    pos = 1
    recursive_pending = False
    while pos < len(path):
        if recursive_pending:
            bare = _BARE_RE.match(path, pos)
            if bare is not None:
                name = bare.group(0)
                steps.append(("recurse", ("wild", None) if name == "*" else ("child", name)))
                recursive_pending = False
                pos = bare.end()
                continue
        m = _TOKEN_RE.match(path, pos)
        if m is None:
            raise ValueError(f"unsupported JSONPath syntax at offset {pos}: {path!r}")
        tok = m.group(0)
        pos = m.end()
        if tok == "..":
            if recursive_pending:
                raise ValueError(f"'....' is not valid: {path!r}")
            recursive_pending = True
            continue
        if tok == ".*" or tok == "[*]":
            step = ("wild", None)
        elif tok.startswith("."):
            step = ("child", tok[1:])
        elif tok.startswith("['") or tok.startswith('["'):
            raw = tok[2:-2]
            step = ("child", re.sub(r"\\(.)", r"\1", raw))
        else:  # [int]
            step = ("index", int(tok[1:-1]))
        if recursive_pending:
            steps.append(("recurse", step))
            recursive_pending = False
        else:
            steps.append(step)
    if recursive_pending:
        # bare trailing '..name' already consumed; a dangling '..' is malformed
        raise ValueError(f"dangling '..' in {path!r}")
    return steps


def _descendants(node: Any):
    """Node followed by all descendants, depth-first in document order."""
    yield node
    if isinstance(node, dict):
        for value in node.values():
            yield from _descendants(value)
    elif isinstance(node, list):
        for value in node:
            yield from _descendants(value)


def _apply(step: tuple[str, Any], nodes: list[Any]) -> list[Any]:
    kind, arg = step
    out: list[Any] = []
    if kind == "recurse":
        inner = arg
        for node in nodes:
            out.extend(_apply(inner, list(_descendants(node))))
        return out
    for node in nodes:
        if kind == "child":
            if isinstance(node, dict) and arg in node:
                out.append(node[arg])
        elif kind == "index":
            if isinstance(node, list) and -len(node) <= arg < len(node):
                out.append(node[arg])
        elif kind == "wild":
            if isinstance(node, list):
                out.extend(node)
            elif isinstance(node, dict):
                out.extend(node.values())
    return out


def evaluate(path: str, document: Any) -> list[Any]:
    """Evaluate the path against a parsed JSON document, in document order."""
    nodes = [document]
    for step in parse(path):
        nodes = _apply(step, nodes)
    return nodes
