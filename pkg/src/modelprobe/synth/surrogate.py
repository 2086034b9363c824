"""Surrogate decision tree over a black-box classifier, decision paths, and
path-guided test generation.

The tree is CART with Gini impurity: numeric columns split on midpoint
thresholds, categorical columns on one-category-versus-rest membership. The
root-to-leaf predicate conjunctions define the regions in which test rows are
generated in equal shares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ValidationError
from . import _kernels
from .distribution import ColumnDistribution, JointDistributionModel, sample_codes, sample_joint
from .schema import CATEGORICAL, NUMERIC, TableSchema

REL_LE = "<="
REL_GT = ">"
REL_IN = "in"
REL_NOT_IN = "not_in"


@dataclass
class TreeNode:
    label: str | None = None  # leaves
    support: int = 0
    column: str | None = None  # internal nodes
    threshold: float | None = None
    category: str | None = None
    left: "TreeNode | None" = None  # satisfies column<=threshold / column==category
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.column is None

    def to_dict(self) -> dict[str, Any]:
        if self.is_leaf:
            return {"label": self.label, "support": self.support}
        return {
            "column": self.column,
            "threshold": self.threshold,
            "category": self.category,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TreeNode":
        if "column" not in d:
            return cls(label=d["label"], support=int(d.get("support", 0)))
        return cls(
            column=d["column"],
            threshold=d.get("threshold"),
            category=d.get("category"),
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


@dataclass
class Predicate:
    column: str
    relation: str  # <= | > | in | not_in
    value: Any  # threshold or list of categories

    def holds(self, row: dict[str, Any]) -> bool:
        v = row[self.column]
        if self.relation == REL_LE:
            return float(v) <= self.value
        if self.relation == REL_GT:
            return float(v) > self.value
        if self.relation == REL_IN:
            return str(v) in self.value
        return str(v) not in self.value

    def to_dict(self) -> dict[str, Any]:
        return {"column": self.column, "relation": self.relation, "value": self.value}


@dataclass
class DecisionPath:
    index: int
    predicates: list[Predicate]
    leaf_label: str
    support: int = 0

    def satisfied_by(self, row: dict[str, Any]) -> bool:
        return all(p.holds(row) for p in self.predicates)

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "predicates": [p.to_dict() for p in self.predicates],
            "leaf_label": self.leaf_label,
            "support": self.support,
        }


@dataclass
class SurrogateTree:
    root: TreeNode
    schema: TableSchema
    fidelity: float
    label_set: list[str] = field(default_factory=list)

    def route(self, row: dict[str, Any]) -> int:
        """Leaf index (left-to-right order) the row falls into."""
        index = 0
        node = self.root
        while not node.is_leaf:
            if node.threshold is not None:
                go_left = float(row[node.column]) <= node.threshold
            else:
                go_left = str(row[node.column]) == node.category
            if go_left:
                node = node.left
            else:
                index += _leaf_count(node.left)
                node = node.right
        return index

    def predict(self, row: dict[str, Any]) -> str:
        node = self.root
        while not node.is_leaf:
            if node.threshold is not None:
                node = node.left if float(row[node.column]) <= node.threshold else node.right
            else:
                node = node.left if str(row[node.column]) == node.category else node.right
        return node.label

    @property
    def leaf_count(self) -> int:
        return _leaf_count(self.root)

    def to_dict(self) -> dict[str, Any]:
        return {
            "root": self.root.to_dict(),
            "schema": self.schema.to_dict(),
            "fidelity": self.fidelity,
            "label_set": list(self.label_set),
        }


def _leaf_count(node: TreeNode) -> int:
    if node.is_leaf:
        return 1
    return _leaf_count(node.left) + _leaf_count(node.right)


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    f = counts / n
    return float(1.0 - np.sum(f * f))


def _majority(labels: list[str], label_set: list[str]) -> str:
    counts = {l: 0 for l in label_set}
    for l in labels:
        counts[l] += 1
    return max(label_set, key=lambda l: (counts[l], l))


def _best_split(
    rows: list[dict[str, Any]],
    codes: np.ndarray,
    schema: TableSchema,
    n_classes: int,
    min_leaf: int,
):
    """Best (gini, column, threshold, category) over all candidate splits."""
    best = (math.inf, None, None, None)
    parent_gini = _gini(np.bincount(codes, minlength=n_classes).astype(float))
    for column in schema.columns:
        if column.kind == NUMERIC:
            values = np.array([float(r[column.name]) for r in rows])
            order = np.argsort(values, kind="stable")
            gini, idx = _kernels.best_threshold_split(
                values[order], codes[order], n_classes, min_leaf
            )
            if idx >= 0 and gini < best[0] - 1e-12:
                sorted_values = values[order]
                threshold = float((sorted_values[idx] + sorted_values[idx + 1]) / 2.0)
                best = (float(gini), column.name, threshold, None)
        else:
            raw = [str(r[column.name]) for r in rows]
            for category in sorted(set(raw)):
                mask = np.array([v == category for v in raw])
                n_left = int(mask.sum())
                if n_left < min_leaf or len(rows) - n_left < min_leaf:
                    continue
                left = np.bincount(codes[mask], minlength=n_classes).astype(float)
                right = np.bincount(codes[~mask], minlength=n_classes).astype(float)
                weighted = (n_left * _gini(left) + (len(rows) - n_left) * _gini(right)) / len(rows)
                if weighted < best[0] - 1e-12:
                    best = (weighted, column.name, None, category)
    if best[1] is None or best[0] >= parent_gini - 1e-12:
        return None
    return best[1:]


def fit_surrogate(
    schema: TableSchema,
    rows: list[dict[str, Any]],
    predictor,
    max_depth: int = 6,
    min_leaf: int = 20,
    seed: int = 0,
) -> SurrogateTree:
    """Imitate the black-box: label rows through the predictor, grow a CART
    tree on 80% of them, score fidelity on the held-out 20%.

    Aborts when the predictor errors on more than 10% of the rows.
    """
    if len(rows) < 2:
        raise ValidationError("need at least 2 rows to fit a surrogate")
    outcomes = predictor.predict_batch(rows)
    labeled = [(row, p.label) for row, p in zip(rows, outcomes) if getattr(p, "label", None) is not None]
    errors = len(rows) - len(labeled)
    if errors > 0.1 * len(rows):
        raise ValidationError(
            f"predictor errored on {errors}/{len(rows)} rows while fitting the surrogate"
        )
    label_set = sorted({label for _, label in labeled})
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labeled))
    split_at = max(1, int(round(0.8 * len(labeled))))
    if split_at >= len(labeled):
        split_at = len(labeled) - 1 if len(labeled) > 1 else len(labeled)
    train = [labeled[i] for i in order[:split_at]]
    held = [labeled[i] for i in order[split_at:]]

    label_index = {l: i for i, l in enumerate(label_set)}

    def grow(subset: list[tuple[dict[str, Any], str]], depth: int) -> TreeNode:
        labels = [l for _, l in subset]
        codes = np.array([label_index[l] for l in labels], dtype=np.int64)
        if depth >= max_depth or len(set(labels)) == 1 or len(subset) < 2 * min_leaf:
            return TreeNode(label=_majority(labels, label_set), support=len(subset))
        found = _best_split([r for r, _ in subset], codes, schema, len(label_set), min_leaf)
        if found is None:
            return TreeNode(label=_majority(labels, label_set), support=len(subset))
        column, threshold, category = found
        if threshold is not None:
            mask = [float(r[column]) <= threshold for r, _ in subset]
        else:
            mask = [str(r[column]) == category for r, _ in subset]
        left = [pair for pair, m in zip(subset, mask) if m]
        right = [pair for pair, m in zip(subset, mask) if not m]
        return TreeNode(
            column=column,
            threshold=threshold,
            category=category,
            left=grow(left, depth + 1),
            right=grow(right, depth + 1),
        )

    root = grow(train, 0)
    tree = SurrogateTree(root=root, schema=schema, fidelity=1.0, label_set=label_set)
    if held:
        agree = sum(1 for row, label in held if tree.predict(row) == label)
        tree.fidelity = agree / len(held)
    return tree


def extract_paths(tree: SurrogateTree) -> list[DecisionPath]:
    """One path per leaf, in left-to-right leaf order; the paths partition the
    schema domain (mutually exclusive, jointly exhaustive)."""
    paths: list[DecisionPath] = []

    def walk(node: TreeNode, trail: list[Predicate]) -> None:
        if node.is_leaf:
            paths.append(
                DecisionPath(
                    index=len(paths),
                    predicates=list(trail),
                    leaf_label=node.label,
                    support=node.support,
                )
            )
            return
        if node.threshold is not None:
            walk(node.left, trail + [Predicate(node.column, REL_LE, node.threshold)])
            walk(node.right, trail + [Predicate(node.column, REL_GT, node.threshold)])
        else:
            walk(node.left, trail + [Predicate(node.column, REL_IN, [node.category])])
            walk(node.right, trail + [Predicate(node.column, REL_NOT_IN, [node.category])])

    walk(tree.root, [])
    return paths


@dataclass
class _Constraint:
    """Feasible region for one column along a path."""

    lo: float = -math.inf
    hi: float = math.inf
    lo_open: bool = False
    allowed: set[str] | None = None  # categorical


def _path_constraints(path: DecisionPath, schema: TableSchema) -> dict[str, _Constraint]:
    out: dict[str, _Constraint] = {}
    for pred in path.predicates:
        c = out.setdefault(pred.column, _Constraint())
        column = schema.column(pred.column)
        if column.kind == CATEGORICAL and c.allowed is None:
            c.allowed = set(column.categories)
        if pred.relation == REL_LE:
            c.hi = min(c.hi, pred.value)
        elif pred.relation == REL_GT:
            if pred.value >= c.lo:
                c.lo, c.lo_open = pred.value, True
        elif pred.relation == REL_IN:
            c.allowed &= set(pred.value)
        else:
            c.allowed -= set(pred.value)
    return out


def _code_mask(dist: ColumnDistribution, c: _Constraint, detached: bool) -> np.ndarray | None:
    """Allowed-code mask for a constrained column; None when unsatisfiable.

    Detached columns are sampled straight from their (possibly overridden)
    marginal, so satisfiability also requires positive marginal mass there;
    tree columns keep positive mass everywhere through smoothing.
    """
    if dist.kind == CATEGORICAL:
        mask = np.array([cat in c.allowed for cat in dist.categories])
        if detached:
            mask &= dist.probs > 0.0
        return mask if mask.any() else None
    if dist.point_mass:
        v = float(dist.edges[0])
        inside = (v > c.lo if c.lo_open else v >= c.lo) and v <= c.hi
        return np.array([True]) if inside else None
    mask = np.zeros(dist.cardinality, dtype=bool)
    for i in range(dist.cardinality):
        a, b = float(dist.edges[i]), float(dist.edges[i + 1])
        if min(b, c.hi) > max(a, c.lo):
            mask[i] = True
    if detached:
        mask &= dist.probs > 0.0
    return mask if mask.any() else None


@dataclass
class PathAllocation:
    path_index: int
    quota: int
    emitted: int
    from_fallback: int
    satisfiable: bool
    warning: str = ""


@dataclass
class GenerationReport:
    allocations: list[PathAllocation]
    total_requested: int
    total_emitted: int

    @property
    def warnings(self) -> list[str]:
        return [a.warning for a in self.allocations if a.warning]


def _decode_constrained(
    model: JointDistributionModel,
    codes: dict[str, np.ndarray],
    constraints: dict[str, _Constraint],
    rng: np.random.Generator,
) -> list[dict[str, Any]]:
    n = len(next(iter(codes.values())))
    decoded: dict[str, list[Any]] = {}
    for name in model.schema.names:
        dist = model.marginals[name]
        c = constraints.get(name)
        if c is None or dist.kind == CATEGORICAL:
            decoded[name] = dist.decode(codes[name], rng)
            continue
        if dist.point_mass:
            decoded[name] = [float(dist.edges[0])] * n
            continue
        lo_edges = dist.edges[codes[name]]
        hi_edges = dist.edges[codes[name] + 1]
        lo = np.maximum(lo_edges, c.lo)
        hi = np.minimum(hi_edges, c.hi)
        values = lo + rng.random(n) * (hi - lo)
        if c.lo_open:  # u == 0 would land exactly on an excluded bound
            at_bound = values <= c.lo
            values[at_bound] = np.nextafter(c.lo, math.inf)
        decoded[name] = list(np.minimum(values, c.hi))
    return [{name: decoded[name][i] for name in model.schema.names} for i in range(n)]


def generate_for_paths(
    paths: list[DecisionPath],
    model: JointDistributionModel,
    budget: int,
    seed: int = 0,
    attempt_factor: int = 1000,
) -> tuple[list[dict[str, Any]], GenerationReport]:
    """Generate rows split equally across satisfiable decision paths.

    Per path: floor(budget/len(paths)) rows, remainder spread in leaf order;
    rejection-sample from the joint model up to ``attempt_factor * quota``
    draws, then fall back to constrained sampling (masked categories, clipped
    bins). Paths unsatisfiable under the model get zero rows and a warning.
    """
    if not paths:
        raise ValidationError("no decision paths supplied")
    base, remainder = divmod(budget, len(paths))
    quotas = [base + (1 if i < remainder else 0) for i in range(len(paths))]
    satisfiable = []
    masks_per_path: list[dict[str, np.ndarray] | None] = []
    for path in paths:
        constraints = _path_constraints(path, model.schema)
        masks: dict[str, np.ndarray] = {}
        ok = True
        for name, constraint in constraints.items():
            mask = _code_mask(model.marginals[name], constraint, name in model.detached)
            if mask is None:
                ok = False
                break
            masks[name] = mask
        satisfiable.append(ok)
        masks_per_path.append(masks if ok else None)
    n_satisfiable = sum(satisfiable)
    if n_satisfiable == 0:
        raise ValidationError("all decision paths are unsatisfiable under the model")
    if budget < n_satisfiable:
        raise ValidationError(f"budget {budget} below satisfiable path count {n_satisfiable}")

    rows: list[dict[str, Any]] = []
    allocations: list[PathAllocation] = []
    for path, quota, ok, masks in zip(paths, quotas, satisfiable, masks_per_path):
        if not ok:
            allocations.append(
                PathAllocation(path.index, quota, 0, 0, False,
                               warning=f"path {path.index} unsatisfiable under current constraints")
            )
            continue
        rng = np.random.default_rng((seed ^ (path.index * 0x9E3779B9)) & 0xFFFFFFFF)
        got: list[dict[str, Any]] = []
        attempts = 0
        cap = attempt_factor * max(quota, 1)
        while len(got) < quota and attempts < cap:
            batch = min(max(4 * (quota - len(got)), 64), cap - attempts)
            candidates = sample_joint(model, batch, seed=int(rng.integers(0, 2**31)))
            attempts += batch
            for row in candidates:
                if path.satisfied_by(row):
                    got.append(row)
                    if len(got) >= quota:
                        break
        fallback = 0
        if len(got) < quota:
            need = quota - len(got)
            constraints = _path_constraints(path, model.schema)
            codes = sample_codes(model, need, rng, restrictions=masks)
            got.extend(_decode_constrained(model, codes, constraints, rng))
            fallback = need
        rows.extend(got[:quota])
        allocations.append(PathAllocation(path.index, quota, len(got[:quota]), fallback, True))
    report = GenerationReport(
        allocations=allocations, total_requested=budget, total_emitted=len(rows)
    )
    return rows, report


def path_coverage(rows: list[dict[str, Any]], tree: SurrogateTree) -> float:
    """Fraction of the tree's leaf regions hit by at least one row."""
    total = tree.leaf_count
    if total == 0 or not rows:
        return 0.0
    hit = {tree.route(row) for row in rows}
    return len(hit) / total
