"""Joint distribution model over a table: per-column marginals, a
maximum-mutual-information dependency tree, and ancestral sampling.

Method, fixed for reproducibility: equal-frequency discretization (K bins),
pairwise MI in nats with additive smoothing (alpha=1), Kruskal maximum
spanning tree, Laplace-smoothed conditionals, uniform-within-bin numeric
reconstruction. User constraints override targeted columns, which are then
detached from the tree and sampled independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ValidationError
from . import _kernels
from .schema import CATEGORICAL, NUMERIC, Column, TableSchema

ALPHA = 1.0  # additive smoothing for MI and conditionals


@dataclass
class ColumnDistribution:
    """Marginal of one column over a finite code space.

    Categorical: codes index ``categories``. Numeric: codes index
    equal-frequency bins delimited by ``edges`` (len = bins + 1, strictly
    increasing); a single-valued column degenerates to a point mass with
    ``edges == [v]``.
    """

    name: str
    kind: str
    probs: np.ndarray
    categories: list[str] = field(default_factory=list)
    edges: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def cardinality(self) -> int:
        return len(self.probs)

    @property
    def point_mass(self) -> bool:
        return self.kind == NUMERIC and len(self.edges) == 1

    def code_of(self, value: Any) -> int:
        if self.kind == CATEGORICAL:
            try:
                return self.categories.index(str(value))
            except ValueError:
                raise ValidationError(f"unknown category {value!r} for column {self.name}") from None
        if self.point_mass:
            return 0
        code = int(np.searchsorted(self.edges, float(value), side="right")) - 1
        return min(max(code, 0), self.cardinality - 1)

    def decode(self, codes: np.ndarray, rng: np.random.Generator) -> list[Any]:
        if self.kind == CATEGORICAL:
            return [self.categories[c] for c in codes]
        if self.point_mass:
            return [float(self.edges[0])] * len(codes)
        lo = self.edges[codes]
        hi = self.edges[codes + 1]
        return list(lo + rng.random(len(codes)) * (hi - lo))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "probs": self.probs.tolist(),
            "categories": list(self.categories),
            "edges": self.edges.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ColumnDistribution":
        return cls(
            name=d["name"],
            kind=d["kind"],
            probs=np.asarray(d["probs"], dtype=np.float64),
            categories=list(d.get("categories", [])),
            edges=np.asarray(d.get("edges", []), dtype=np.float64),
        )


@dataclass
class JointDistributionModel:
    schema: TableSchema
    marginals: dict[str, ColumnDistribution]
    edges: list[tuple[str, str]]  # (parent, child), oriented away from root
    cpts: dict[str, np.ndarray]  # child -> (parent_card, child_card)
    root: str
    mi_weights: dict[tuple[str, str], float]  # sorted pair -> MI (nats)
    detached: set[str] = field(default_factory=set)

    def parent_of(self, column: str) -> str | None:
        for parent, child in self.edges:
            if child == column:
                return parent
        return None

    def sampling_order(self) -> list[tuple[str, str | None]]:
        """(column, parent) pairs in a rootward-first topological order.

        Detached columns draw from their (overridden) marginal; a child of a
        detached column loses its conditioning edge and draws from its own
        training marginal, its descendants stay conditioned as fitted.
        """
        parent = {child: par for par, child in self.edges}
        order: list[tuple[str, str | None]] = []
        done: set[str] = set()

        def visit(name: str) -> None:
            if name in done:
                return
            done.add(name)
            par = parent.get(name)
            if name in self.detached or par is None or par in self.detached:
                order.append((name, None))
            else:
                visit(par)
                order.append((name, par))

        for column in self.schema.names:
            visit(column)
        return order

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": self.schema.to_dict(),
            "marginals": {k: v.to_dict() for k, v in self.marginals.items()},
            "edges": [list(e) for e in self.edges],
            "cpts": {k: v.tolist() for k, v in self.cpts.items()},
            "root": self.root,
            "mi_weights": [[a, b, w] for (a, b), w in sorted(self.mi_weights.items())],
            "detached": sorted(self.detached),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "JointDistributionModel":
        return cls(
            schema=TableSchema.from_dict(d["schema"]),
            marginals={k: ColumnDistribution.from_dict(v) for k, v in d["marginals"].items()},
            edges=[tuple(e) for e in d["edges"]],
            cpts={k: np.asarray(v, dtype=np.float64) for k, v in d["cpts"].items()},
            root=d["root"],
            mi_weights={(a, b): w for a, b, w in d.get("mi_weights", [])},
            detached=set(d.get("detached", [])),
        )


def _equal_frequency_edges(values: np.ndarray, bins: int) -> np.ndarray:
    """Quantile edges, deduplicated to stay strictly increasing."""
    if np.min(values) == np.max(values):
        return np.array([float(values[0])])
    qs = np.linspace(0.0, 1.0, bins + 1)
    edges = np.unique(np.quantile(values, qs))
    if len(edges) < 2:
        return np.array([float(edges[0])])
    return edges


def _fit_marginal(column: Column, values: list[Any], bins: int) -> tuple[ColumnDistribution, np.ndarray]:
    """Returns the marginal plus the per-row code vector."""
    if column.kind == CATEGORICAL:
        categories = sorted(set(column.categories) | {str(v) for v in values})
        index = {c: i for i, c in enumerate(categories)}
        codes = np.array([index[str(v)] for v in values], dtype=np.int64)
        counts = np.bincount(codes, minlength=len(categories)).astype(np.float64)
        dist = ColumnDistribution(
            name=column.name, kind=CATEGORICAL, probs=counts / len(values), categories=categories
        )
        return dist, codes
    arr = np.asarray([float(v) for v in values], dtype=np.float64)
    edges = _equal_frequency_edges(arr, bins)
    if len(edges) == 1:  # point mass
        dist = ColumnDistribution(column.name, NUMERIC, probs=np.array([1.0]), edges=edges)
        return dist, np.zeros(len(arr), dtype=np.int64)
    codes = np.clip(np.searchsorted(edges, arr, side="right") - 1, 0, len(edges) - 2).astype(np.int64)
    counts = np.bincount(codes, minlength=len(edges) - 1).astype(np.float64)
    dist = ColumnDistribution(column.name, NUMERIC, probs=counts / len(arr), edges=edges)
    return dist, codes


def _maximum_spanning_tree(names: list[str], weights: dict[tuple[str, str], float]) -> list[tuple[str, str]]:
    """Kruskal; ties broken by column names for determinism."""
    parent = {n: n for n in names}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for (a, b), _w in sorted(weights.items(), key=lambda item: (-item[1], item[0])):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            chosen.append((a, b))
    return chosen


def fit_distribution_model(
    schema: TableSchema, rows: list[dict[str, Any]], bins: int = 10, seed: int = 0
) -> JointDistributionModel:
    """Fit marginals, the MI-maximal dependency tree, and conditionals.

    Single-valued columns are kept as point masses and attached as leaves of
    the tree rather than competing for edges.
    """
    if len(rows) < 2:
        raise ValidationError("need at least 2 rows to fit a distribution model")
    if not schema.columns:
        raise ValidationError("need at least 1 column")
    marginals: dict[str, ColumnDistribution] = {}
    codes: dict[str, np.ndarray] = {}
    for column in schema.columns:
        values = [row[column.name] for row in rows]
        marginals[column.name], codes[column.name] = _fit_marginal(column, values, bins)

    varying = [n for n in schema.names if marginals[n].cardinality >= 2]
    constant = [n for n in schema.names if marginals[n].cardinality < 2]

    mi_weights: dict[tuple[str, str], float] = {}
    for i, a in enumerate(varying):
        for b in varying[i + 1 :]:
            key = (a, b) if a < b else (b, a)
            mi_weights[key] = float(
                _kernels.pair_mutual_information(
                    codes[a], codes[b], marginals[a].cardinality, marginals[b].cardinality, ALPHA
                )
            )

    undirected = _maximum_spanning_tree(varying, mi_weights) if len(varying) > 1 else []

    # Root: highest total MI to tree neighbours, ties to the smaller name.
    if varying:
        totals = {n: 0.0 for n in varying}
        for a, b in undirected:
            key = (a, b) if a < b else (b, a)
            totals[a] += mi_weights[key]
            totals[b] += mi_weights[key]
        root = min(totals, key=lambda n: (-totals[n], n))
    else:
        root = schema.names[0]

    # Orient edges away from the root.
    adjacency: dict[str, list[str]] = {n: [] for n in varying}
    for a, b in undirected:
        adjacency[a].append(b)
        adjacency[b].append(a)
    edges: list[tuple[str, str]] = []
    seen = {root}
    frontier = [root] if varying else []
    while frontier:
        node = frontier.pop(0)
        for neighbour in sorted(adjacency.get(node, [])):
            if neighbour not in seen:
                seen.add(neighbour)
                edges.append((node, neighbour))
                frontier.append(neighbour)

    for name in constant:  # zero-variance columns hang off the root as leaves
        if name != root:
            edges.append((root, name))
            key = (root, name) if root < name else (name, root)
            mi_weights[key] = 0.0

    cpts: dict[str, np.ndarray] = {}
    for par, child in edges:
        cp, cc = marginals[par].cardinality, marginals[child].cardinality
        counts = np.zeros((cp, cc), dtype=np.float64)
        np.add.at(counts, (codes[par], codes[child]), 1.0)
        counts += ALPHA
        cpts[child] = counts / counts.sum(axis=1, keepdims=True)

    return JointDistributionModel(
        schema=schema,
        marginals=marginals,
        edges=edges,
        cpts=cpts,
        root=root,
        mi_weights=mi_weights,
        detached=set(),
    )


def _clip_bins(dist: ColumnDistribution, lo: float, hi: float) -> ColumnDistribution:
    """Truncate numeric bins to [lo, hi], weighting by overlap, renormalized."""
    if dist.point_mass:
        v = float(dist.edges[0])
        if lo <= v <= hi:
            return dist
        raise ValidationError(f"range [{lo}, {hi}] excludes the single value {v} of {dist.name}")
    new_edges: list[float] = []
    new_probs: list[float] = []
    for i in range(dist.cardinality):
        a, b = float(dist.edges[i]), float(dist.edges[i + 1])
        aa, bb = max(a, lo), min(b, hi)
        if bb <= aa:
            continue
        weight = float(dist.probs[i]) * (bb - aa) / (b - a)
        if weight <= 1e-12:  # degenerate sliver from float fuzz on bin edges
            continue
        if not new_edges:
            new_edges.append(aa)
        new_edges.append(bb)
        new_probs.append(weight)
    total = sum(new_probs)
    if not new_probs or total <= 0.0:
        raise ValidationError(f"range [{lo}, {hi}] is disjoint from the domain of {dist.name}")
    probs = np.asarray(new_probs, dtype=np.float64) / total
    return ColumnDistribution(dist.name, NUMERIC, probs=probs, edges=np.asarray(new_edges))


def apply_udc(model: JointDistributionModel, udc: dict[str, Any]) -> JointDistributionModel:
    """Apply user-defined constraints and detach the targeted columns.

    UDC document shape:
      {"attr": {"distribution": {"F": 0.9, "M": 0.1}}}  categorical override
      {"attr": {"range": [60, 80]}}                      numeric restriction
    """
    if not udc:
        return model
    marginals = dict(model.marginals)
    detached = set(model.detached)
    for name, constraint in udc.items():
        if name not in model.marginals:
            raise ValidationError(f"UDC references unknown attribute {name!r}")
        dist = model.marginals[name]
        if "distribution" in constraint:
            if dist.kind != CATEGORICAL:
                raise ValidationError(f"distribution override on non-categorical column {name}")
            replacement = constraint["distribution"]
            unknown = set(replacement) - set(dist.categories)
            if unknown:
                raise ValidationError(f"UDC categories not in domain of {name}: {sorted(unknown)}")
            total = float(sum(replacement.values()))
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(f"UDC probabilities for {name} sum to {total}, expected 1")
            probs = np.array([float(replacement.get(c, 0.0)) for c in dist.categories])
            marginals[name] = ColumnDistribution(name, CATEGORICAL, probs=probs, categories=dist.categories)
        elif "range" in constraint:
            if dist.kind != NUMERIC:
                raise ValidationError(f"range restriction on non-numeric column {name}")
            lo, hi = (float(x) for x in constraint["range"])
            if lo > hi:
                raise ValidationError(f"UDC range for {name} has lo > hi")
            marginals[name] = _clip_bins(dist, lo, hi)
        else:
            raise ValidationError(f"UDC for {name} needs 'distribution' or 'range'")
        detached.add(name)
    return JointDistributionModel(
        schema=model.schema,
        marginals=marginals,
        edges=model.edges,
        cpts=model.cpts,
        root=model.root,
        mi_weights=model.mi_weights,
        detached=detached,
    )


def _cdf(probs: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return cdf


def sample_codes(
    model: JointDistributionModel,
    n: int,
    rng: np.random.Generator,
    restrictions: dict[str, np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    """Ancestral sampling in code space.

    ``restrictions`` maps a column to a boolean mask of allowed codes; masked
    marginals and conditional rows are renormalized (constrained fallback for
    path-guided generation).
    """
    restrictions = restrictions or {}

    def restrict(probs: np.ndarray, name: str) -> np.ndarray:
        mask = restrictions.get(name)
        if mask is None:
            return probs
        masked = probs * mask
        total = masked.sum()
        if total <= 0.0:
            masked = mask.astype(np.float64)
            total = masked.sum()
            if total <= 0.0:
                raise ValidationError(f"no allowed codes for column {name}")
        return masked / total

    out: dict[str, np.ndarray] = {}
    zeros = np.zeros(n, dtype=np.int64)
    for name, parent in model.sampling_order():
        uniforms = rng.random(n)
        if parent is None:
            cdf = _cdf(restrict(model.marginals[name].probs, name))
            out[name] = _kernels.conditional_draw(cdf[None, :], zeros, uniforms)
        else:
            cpt = model.cpts[name]
            if name in restrictions:
                cpt = np.stack([restrict(cpt[r], name) for r in range(cpt.shape[0])])
            cdf_rows = np.cumsum(cpt, axis=1)
            cdf_rows[:, -1] = 1.0
            out[name] = _kernels.conditional_draw(cdf_rows, out[parent], uniforms)
    return out


def sample_joint(model: JointDistributionModel, n: int, seed: int = 0) -> list[dict[str, Any]]:
    """Draw n rows; deterministic for a fixed seed."""
    if n <= 0:
        return []
    rng = np.random.default_rng(seed)
    codes = sample_codes(model, n, rng)
    decoded = {name: model.marginals[name].decode(codes[name], rng) for name in model.schema.names}
    return [{name: decoded[name][i] for name in model.schema.names} for i in range(n)]
