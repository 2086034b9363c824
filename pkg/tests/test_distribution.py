import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modelprobe.errors import ValidationError
from modelprobe.synth import _kernels
from modelprobe.synth.distribution import (
    ColumnDistribution,
    JointDistributionModel,
    apply_udc,
    fit_distribution_model,
    sample_joint,
)
from modelprobe.synth.schema import Column, TableSchema, infer_schema


def oracle_mi(codes_a, codes_b, card_a, card_b, alpha=1.0):
    """Plain-Python MI with additive smoothing; independent of the kernels."""
    n = len(codes_a)
    counts = {}
    for a, b in zip(codes_a, codes_b):
        counts[(a, b)] = counts.get((a, b), 0) + 1
    denom = n + alpha * card_a * card_b
    joint = {
        (a, b): (counts.get((a, b), 0) + alpha) / denom
        for a in range(card_a)
        for b in range(card_b)
    }
    pa = {a: sum(joint[(a, b)] for b in range(card_b)) for a in range(card_a)}
    pb = {b: sum(joint[(a, b)] for a in range(card_a)) for b in range(card_b)}
    return sum(p * math.log(p / (pa[a] * pb[b])) for (a, b), p in joint.items())


def correlated_table(n=100):
    rows = [{"a": "x", "b": "x"} if i % 2 == 0 else {"a": "y", "b": "y"} for i in range(n)]
    schema = TableSchema(columns=[
        Column("a", "categorical", categories=["x", "y"]),
        Column("b", "categorical", categories=["x", "y"]),
    ])
    return schema, rows


# ------------------------------------------------------------------- fitting

def test_correlated_pair_has_edge_with_oracle_mi():
    schema, rows = correlated_table(100)
    model = fit_distribution_model(schema, rows)
    assert model.edges == [("a", "b")] or model.edges == [("b", "a")]
    codes = [0 if r["a"] == "x" else 1 for r in rows]
    expected = oracle_mi(codes, codes, 2, 2, alpha=1.0)
    assert model.mi_weights[("a", "b")] == pytest.approx(expected, abs=1e-12)
    # alpha=1 smoothing shrinks the 100-row perfectly correlated MI below ln 2
    assert expected == pytest.approx(0.5981170633042989, abs=1e-12)
    assert expected < math.log(2)


def test_single_column_tree_has_no_edges():
    schema = TableSchema(columns=[Column("only", "categorical", categories=["u", "v"])])
    rows = [{"only": "u"}, {"only": "v"}, {"only": "u"}]
    model = fit_distribution_model(schema, rows)
    assert model.edges == []
    assert model.root == "only"


def test_equal_frequency_quartiles():
    rows = [{"v": float(i)} for i in range(1, 101)]
    schema = infer_schema(["v"], [[str(r["v"])] for r in rows])
    model = fit_distribution_model(schema, rows, bins=4)
    probs = model.marginals["v"].probs
    assert len(probs) == 4
    assert np.all(np.abs(probs - 0.25) <= 0.01)


def test_point_mass_column_not_an_error():
    schema = infer_schema(["c", "k"], [["5", "a"], ["5", "b"], ["5", "a"]])
    rows = [{"c": 5.0, "k": "a"}, {"c": 5.0, "k": "b"}, {"c": 5.0, "k": "a"}]
    model = fit_distribution_model(schema, rows)
    assert model.marginals["c"].point_mass
    assert model.marginals["c"].probs.tolist() == [1.0]
    # zero-variance columns attach as leaves
    assert ("k", "c") in model.edges


def test_fit_requires_rows():
    schema, rows = correlated_table(100)
    with pytest.raises(ValidationError):
        fit_distribution_model(schema, rows[:1])


def test_cpt_rows_sum_to_one():
    schema, rows = correlated_table(100)
    model = fit_distribution_model(schema, rows)
    for child, cpt in model.cpts.items():
        assert np.allclose(cpt.sum(axis=1), 1.0, atol=1e-9)


# ------------------------------------------------------------------ chow-liu

def three_column_fixture(seed, dependence="chain"):
    rng = np.random.default_rng(seed)
    n = 400
    a = rng.integers(0, 2, n)
    if dependence == "chain":
        b = np.where(rng.random(n) < 0.9, a, 1 - a)
        c = np.where(rng.random(n) < 0.85, b, 1 - b)
    elif dependence == "fork":
        b = np.where(rng.random(n) < 0.9, a, 1 - a)
        c = np.where(rng.random(n) < 0.9, a, 1 - a)
    else:  # independent-ish
        b = rng.integers(0, 2, n)
        c = rng.integers(0, 2, n)
    mapping = np.array(["u", "w"])
    rows = [{"a": mapping[x], "b": mapping[y], "c": mapping[z]} for x, y, z in zip(a, b, c)]
    schema = TableSchema(columns=[
        Column(name, "categorical", categories=["u", "w"]) for name in ("a", "b", "c")
    ])
    return schema, rows


@pytest.mark.parametrize("seed,dependence", [(1, "chain"), (2, "fork"), (3, "noise"), (7, "chain")])
def test_chow_liu_maximizes_total_mi_exhaustively(seed, dependence):
    schema, rows = three_column_fixture(seed, dependence)
    model = fit_distribution_model(schema, rows)
    chosen = {tuple(sorted(e)) for e in model.edges}
    candidates = [
        {("a", "b"), ("b", "c")},
        {("a", "b"), ("a", "c")},
        {("a", "c"), ("b", "c")},
    ]
    total = {frozenset(t): sum(model.mi_weights[e] for e in t) for t in candidates}
    best = max(total.values())
    assert total[frozenset(chosen)] == pytest.approx(best, abs=1e-12)


def test_root_is_highest_total_mi_node():
    schema, rows = three_column_fixture(2, "fork")
    model = fit_distribution_model(schema, rows)
    totals = {n: 0.0 for n in schema.names}
    for a, b in model.edges:
        key = tuple(sorted((a, b)))
        totals[a] += model.mi_weights[key]
        totals[b] += model.mi_weights[key]
    expected_root = min(totals, key=lambda n: (-totals[n], n))
    assert model.root == expected_root


# ----------------------------------------------------------------------- UDC

def ten_decade_bins_model():
    """Hand-built model with exact decade bins [0,10,...,100], mass 0.1 each."""
    dist = ColumnDistribution("age", "numeric", probs=np.full(10, 0.1),
                              edges=np.arange(0.0, 101.0, 10.0))
    schema = TableSchema(columns=[Column("age", "numeric", minimum=0.0, maximum=100.0)])
    return JointDistributionModel(schema=schema, marginals={"age": dist}, edges=[],
                                  cpts={}, root="age", mi_weights={})


def test_udc_categorical_replacement_exact():
    schema, rows = correlated_table(100)
    model = fit_distribution_model(schema, rows)
    updated = apply_udc(model, {"a": {"distribution": {"x": 0.9, "y": 0.1}}})
    assert updated.marginals["a"].probs.tolist() == [0.9, 0.1]
    # untouched marginals bitwise unchanged
    assert updated.marginals["b"].probs.tolist() == model.marginals["b"].probs.tolist()
    assert "a" in updated.detached


def test_udc_empty_is_identity():
    schema, rows = correlated_table(100)
    model = fit_distribution_model(schema, rows)
    assert apply_udc(model, {}) is model


def test_udc_numeric_truncation_renormalizes():
    model = ten_decade_bins_model()
    updated = apply_udc(model, {"age": {"range": [60, 80]}})
    dist = updated.marginals["age"]
    # decade-wide bins: [60,70) and [70,80) kept, equal mass -> 0.5/0.5 exactly
    assert dist.edges.tolist() == [60.0, 70.0, 80.0]
    assert dist.probs.tolist() == [0.5, 0.5]
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_udc_disjoint_range_rejected():
    model = ten_decade_bins_model()
    with pytest.raises(ValidationError, match="disjoint"):
        apply_udc(model, {"age": {"range": [500, 600]}})


def test_udc_probabilities_must_sum_to_one():
    schema, rows = correlated_table(100)
    model = fit_distribution_model(schema, rows)
    with pytest.raises(ValidationError, match="sum"):
        apply_udc(model, {"a": {"distribution": {"x": 0.5, "y": 0.3}}})


def test_udc_unknown_attribute():
    schema, rows = correlated_table(100)
    model = fit_distribution_model(schema, rows)
    with pytest.raises(ValidationError, match="unknown attribute"):
        apply_udc(model, {"zzz": {"range": [0, 1]}})


# ------------------------------------------------------------------- sampling

def test_sampling_deterministic_for_seed():
    schema, rows = correlated_table(100)
    model = fit_distribution_model(schema, rows)
    assert sample_joint(model, 50, seed=42) == sample_joint(model, 50, seed=42)


def test_sampling_zero_rows():
    schema, rows = correlated_table(100)
    model = fit_distribution_model(schema, rows)
    assert sample_joint(model, 0, seed=1) == []


def test_sampled_marginals_close_to_model():
    rng = np.random.default_rng(11)
    n = 1000
    group = np.where(rng.random(n) < 0.7, "a", "b")
    score = rng.normal(50, 10, n)
    rows = [{"group": g, "score": float(s)} for g, s in zip(group, score)]
    schema = TableSchema(columns=[
        Column("group", "categorical", categories=["a", "b"]),
        Column("score", "numeric", minimum=float(score.min()), maximum=float(score.max())),
    ])
    model = fit_distribution_model(schema, rows)
    samples = sample_joint(model, 10_000, seed=5)
    observed = sum(1 for r in samples if r["group"] == "a") / len(samples)
    assert abs(observed - model.marginals["group"].probs[0]) <= 0.05
    # numeric: compare per-bin occupancy
    dist = model.marginals["score"]
    counts = np.zeros(dist.cardinality)
    for r in samples:
        counts[dist.code_of(r["score"])] += 1
    l1 = np.abs(counts / len(samples) - dist.probs).sum()
    assert l1 <= 0.05


def test_correlated_pair_agreement_with_smoothed_cpt():
    schema, rows = correlated_table(100)
    model = fit_distribution_model(schema, rows)
    # smoothed conditional keeps 51/52 on the diagonal
    expected_agreement = 51.0 / 52.0
    samples = sample_joint(model, 10_000, seed=3)
    agreement = sum(1 for r in samples if r["a"] == r["b"]) / len(samples)
    assert agreement >= 0.97
    assert agreement == pytest.approx(expected_agreement, abs=0.01)


def test_udc_overridden_column_sampled_from_udc():
    schema, rows = correlated_table(100)
    model = apply_udc(fit_distribution_model(schema, rows),
                      {"a": {"distribution": {"x": 0.9, "y": 0.1}}})
    samples = sample_joint(model, 10_000, seed=9)
    share_x = sum(1 for r in samples if r["a"] == "x") / len(samples)
    assert abs(share_x - 0.9) <= 0.05
    # "b" keeps the training marginal (roughly balanced), no longer glued to "a"
    share_bx = sum(1 for r in samples if r["b"] == "x") / len(samples)
    assert abs(share_bx - 0.5) <= 0.05


# ------------------------------------------------------------------- backends

def test_kernel_backends_agree():
    rng = np.random.default_rng(0)
    codes_a = rng.integers(0, 3, 500).astype(np.int64)
    codes_b = rng.integers(0, 4, 500).astype(np.int64)
    mi_np = _kernels.np_pair_mutual_information(codes_a, codes_b, 3, 4, 1.0)
    assert mi_np == pytest.approx(oracle_mi(codes_a.tolist(), codes_b.tolist(), 3, 4), abs=1e-12)
    values = np.sort(rng.random(400))
    labels = rng.integers(0, 2, 400).astype(np.int64)
    g_np, i_np = _kernels.np_best_threshold_split(values, labels, 2, 20)
    cdf_rows = np.cumsum(rng.dirichlet(np.ones(4), size=3), axis=1)
    cdf_rows[:, -1] = 1.0
    parents = rng.integers(0, 3, 1000).astype(np.int64)
    uniforms = rng.random(1000)
    draw_np = _kernels.np_conditional_draw(cdf_rows, parents, uniforms)
    if _kernels.BACKEND == "numba":
        mi_nb = _kernels.nb_pair_mutual_information(codes_a, codes_b, 3, 4, 1.0)
        assert mi_nb == pytest.approx(mi_np, rel=1e-12)
        g_nb, i_nb = _kernels.nb_best_threshold_split(values, labels, 2, 20)
        assert i_nb == i_np
        assert g_nb == pytest.approx(g_np, rel=1e-12)
        draw_nb = _kernels.nb_conditional_draw(cdf_rows, parents, uniforms)
        assert np.array_equal(draw_nb, draw_np)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(["r", "s", "t"]), min_size=2, max_size=60))
def test_fitted_marginals_sum_to_one(values):
    rows = [{"k": v} for v in values]
    schema = TableSchema(columns=[Column("k", "categorical", categories=sorted(set(values)))])
    model = fit_distribution_model(schema, rows)
    assert model.marginals["k"].probs.sum() == pytest.approx(1.0, abs=1e-9)
