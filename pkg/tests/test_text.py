import pytest
from hypothesis import given, settings, strategies as st

from modelprobe.errors import ValidationError
from modelprobe.testers.text import (
    KEYBOARD_ADJACENT,
    TextTransformSpec,
    apply_noise,
    apply_typo,
    build_text_pairs,
    register_transform,
    replay_ops,
    run_text_sensitivity,
    undo_ops,
)
from tests.conftest import levenshtein
from tests.test_surrogate import LocalPredictor


# ----------------------------------------------------------------------- typo

def test_typo_deterministic():
    a = apply_typo("the quick brown fox", 3, seed=11)
    b = apply_typo("the quick brown fox", 3, seed=11)
    assert a[0] == b[0]
    assert [op.to_dict() for op in a[1]] == [op.to_dict() for op in b[1]]


def test_typo_ops_replay_and_undo():
    text = "hello wonderful world"
    for seed in range(20):
        transformed, ops = apply_typo(text, 3, seed=seed)
        assert replay_ops(text, ops) == transformed
        assert undo_ops(transformed, ops) == text


def test_typo_single_op_edit_distance():
    text = "hello world"
    for seed in range(30):
        transformed, ops = apply_typo(text, 1, seed=seed)
        assert len(ops) == 1
        distance = levenshtein(text, transformed)
        if ops[0].kind == "swap":
            assert distance in (0, 2)  # 0 when the swapped chars were equal
        else:
            assert distance <= 1


def test_typo_short_text_shortfall():
    transformed, ops = apply_typo("ab", 3, seed=0)
    assert transformed == "ab"
    assert ops == []


def test_typo_only_touches_long_tokens():
    text = "a bb ccc dddd"
    eligible = set(range(len("a bb "), len(text)))  # chars of 'ccc' and 'dddd'
    for seed in range(25):
        _, ops = apply_typo(text, 2, seed=seed)
        for op in ops:
            assert op.position in eligible


def test_typo_level_counts_respected():
    text = "substantially longer sentence with several words"
    for level in (1, 2, 5):
        _, ops = apply_typo(text, level, seed=3)
        assert len(ops) == level


def test_keyboard_adjacency_is_row_and_column():
    assert "w" in KEYBOARD_ADJACENT["q"]
    assert "a" in KEYBOARD_ADJACENT["q"]
    assert "g" in KEYBOARD_ADJACENT["f"]
    assert set("rfv") & set(KEYBOARD_ADJACENT["f"])


# ---------------------------------------------------------------------- noise

def test_noise_grows_by_level_and_keeps_words():
    text = "good day"
    transformed, ops = apply_noise(text, 2, seed=5)
    assert len(transformed) == len(text) + 2
    for word in text.split():
        assert word in transformed  # contiguous substring survives


def test_noise_single_word_inserts_at_ends():
    text = "word"
    for seed in range(20):
        transformed, ops = apply_noise(text, 1, seed=seed)
        assert ops[0].position in (0, len(text))
        assert "word" in transformed


def test_noise_deterministic():
    assert apply_noise("alpha beta", 4, seed=9) == apply_noise("alpha beta", 4, seed=9)


@settings(max_examples=40, deadline=None)
@given(
    st.text(alphabet=st.characters(min_codepoint=97, max_codepoint=122), min_size=1, max_size=12),
    st.text(alphabet=st.characters(min_codepoint=97, max_codepoint=122), min_size=1, max_size=12),
    st.integers(min_value=1, max_value=6),
    st.integers(min_value=0, max_value=999),
)
def test_noise_containment_property(w1, w2, level, seed):
    text = f"{w1} {w2}"
    transformed, _ = apply_noise(text, level, seed=seed)
    assert w1 in transformed
    assert w2 in transformed
    assert len(transformed) == len(text) + level


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=999), st.integers(min_value=1, max_value=5))
def test_typo_locality_property(seed, level):
    text = "metamorphic testing keeps labels stable"
    transformed, ops = apply_typo(text, level, seed=seed)
    assert len(ops) <= level
    assert levenshtein(text, transformed) <= 2 * level


# ------------------------------------------------------------------ flip rate

KEYWORD_RULE = LocalPredictor(lambda text: "positive" if "good" in text.lower() else "negative")

CORPUS = [
    "good morning to you",
    "this was a good decision",
    "nothing works here",
    "what a good day",
    "terrible weather outside",
    "good good good",
    "plain sentence without the magic word",
]


def test_noise_never_flips_keyword_mock():
    spec = TextTransformSpec(kind="noise", level=3, seed=21)
    rate, cases = run_text_sensitivity(CORPUS, KEYWORD_RULE, spec, limit=len(CORPUS))
    assert rate == 0.0
    assert len(cases) == len(CORPUS)


def test_typo_flip_rate_equals_replay_oracle():
    spec = TextTransformSpec(kind="typo", level=4, seed=13)
    rate, cases = run_text_sensitivity(CORPUS, KEYWORD_RULE, spec, limit=len(CORPUS))
    rule = lambda text: "positive" if "good" in text.lower() else "negative"
    flips = 0
    for case in cases:
        original, transformed = case.samples
        if rule(original) != rule(transformed):
            flips += 1
    assert rate == flips / len(cases)


def test_constant_model_zero_flip_rate():
    spec = TextTransformSpec(kind="typo", level=2, seed=1)
    rate, _ = run_text_sensitivity(CORPUS, LocalPredictor(lambda t: "same"), spec, limit=4)
    assert rate == 0.0


def test_limit_caps_sampled_sentences():
    spec = TextTransformSpec(kind="noise", level=1, seed=2)
    pairs = build_text_pairs(CORPUS, spec, limit=3)
    assert len(pairs) == 3
    indices = [p[2]["line_index"] for p in pairs]
    assert len(set(indices)) == 3  # without replacement


def test_empty_corpus_rejected():
    with pytest.raises(ValidationError, match="empty corpus"):
        build_text_pairs([], TextTransformSpec(kind="noise"), limit=5)


def test_level_zero_rejected():
    with pytest.raises(ValidationError):
        TextTransformSpec(kind="typo", level=0)


def test_transform_plugin_registry():
    def reverse_transform(text, level, seed):
        return text[::-1], []

    register_transform("reverse", reverse_transform)
    spec = TextTransformSpec(kind="reverse", level=1, seed=0)
    pairs = build_text_pairs(["abc def"], spec, limit=1)
    assert pairs[0][1] == "fed cba"
    with pytest.raises(ValidationError, match="already registered"):
        register_transform("reverse", reverse_transform)
