"""Hot numeric kernels with two interchangeable backends.

The numba ``@njit`` versions are the default; set ``MODELPROBE_KERNELS=numpy``
to force the pure-numpy fallbacks (or ``numba`` to fail loudly when numba is
missing). Both backends are kept behaviourally identical: the samplers consume
pre-drawn uniforms and compare with the same predicate, so sampled codes match
exactly across backends; float aggregates agree to rounding.

``benchmarks/bench_kernels.py`` times the two side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

_FLAG = os.environ.get("MODELPROBE_KERNELS", "auto").lower()
if _FLAG not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"MODELPROBE_KERNELS must be auto|numba|numpy, got {_FLAG!r}")


# ---------------------------------------------------------------- numpy path

def np_pair_mutual_information(codes_a, codes_b, card_a, card_b, alpha=1.0):
    """MI in nats between two code columns, additive smoothing alpha per cell."""
    n = codes_a.shape[0]
    counts = np.bincount(codes_a * card_b + codes_b, minlength=card_a * card_b)
    joint = (counts.astype(np.float64) + alpha) / (n + alpha * card_a * card_b)
    joint = joint.reshape(card_a, card_b)
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    ratio = joint / (pa[:, None] * pb[None, :])
    return float(np.sum(joint * np.log(ratio)))


def np_best_threshold_split(sorted_values, sorted_codes, n_classes, min_leaf):
    """Best binary split of a pre-sorted numeric column by weighted Gini.

    Returns (weighted_gini, split_index) where left = [0..split_index]; the
    threshold is the midpoint between positions split_index and split_index+1.
    split_index == -1 means no legal split.
    """
    n = sorted_values.shape[0]
    if n < 2 * min_leaf:
        return math.inf, -1
    onehot = np.zeros((n, n_classes), dtype=np.float64)
    onehot[np.arange(n), sorted_codes] = 1.0
    left = np.cumsum(onehot, axis=0)  # class counts in [0..i]
    total = left[-1]
    left_n = np.arange(1, n + 1, dtype=np.float64)
    right = total[None, :] - left
    right_n = n - left_n
    cut = slice(min_leaf - 1, n - min_leaf)  # legal split positions
    gl = 1.0 - np.sum((left[cut] / left_n[cut, None]) ** 2, axis=1)
    gr = 1.0 - np.sum((right[cut] / right_n[cut, None]) ** 2, axis=1)
    weighted = (left_n[cut] * gl + right_n[cut] * gr) / n
    ties = sorted_values[min_leaf - 1 : n - min_leaf] == sorted_values[min_leaf : n - min_leaf + 1]
    weighted[ties] = math.inf
    best = int(np.argmin(weighted))
    if not np.isfinite(weighted[best]):
        return math.inf, -1
    return float(weighted[best]), best + min_leaf - 1


def np_conditional_draw(cdf_rows, parent_codes, uniforms):
    """Per-row category draw: code = #{cdf entries <= u} over the parent's row."""
    rows = cdf_rows[parent_codes]
    codes = (rows <= uniforms[:, None]).sum(axis=1).astype(np.int64)
    return np.minimum(codes, cdf_rows.shape[1] - 1)  # guard cumsum rounding below 1.0


# ---------------------------------------------------------------- numba path

_HAVE_NUMBA = False
if _FLAG in ("auto", "numba"):
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        if _FLAG == "numba":
            raise

if _HAVE_NUMBA:

    @njit(cache=True)
    def nb_pair_mutual_information(codes_a, codes_b, card_a, card_b, alpha=1.0):
        n = codes_a.shape[0]
        counts = np.zeros(card_a * card_b, dtype=np.float64)
        for i in range(n):
            counts[codes_a[i] * card_b + codes_b[i]] += 1.0
        denom = n + alpha * card_a * card_b
        pa = np.zeros(card_a, dtype=np.float64)
        pb = np.zeros(card_b, dtype=np.float64)
        for a in range(card_a):
            for b in range(card_b):
                p = (counts[a * card_b + b] + alpha) / denom
                pa[a] += p
                pb[b] += p
        mi = 0.0
        for a in range(card_a):
            for b in range(card_b):
                p = (counts[a * card_b + b] + alpha) / denom
                mi += p * math.log(p / (pa[a] * pb[b]))
        return mi

    @njit(cache=True)
    def nb_best_threshold_split(sorted_values, sorted_codes, n_classes, min_leaf):
        n = sorted_values.shape[0]
        if n < 2 * min_leaf:
            return math.inf, -1
        left = np.zeros(n_classes, dtype=np.float64)
        total = np.zeros(n_classes, dtype=np.float64)
        for i in range(n):
            total[sorted_codes[i]] += 1.0
        best_gini = math.inf
        best_idx = -1
        for i in range(n - 1):
            left[sorted_codes[i]] += 1.0
            left_n = i + 1.0
            right_n = n - left_n
            if left_n < min_leaf or right_n < min_leaf:
                continue
            if sorted_values[i] == sorted_values[i + 1]:
                continue
            sl = 0.0
            sr = 0.0
            for c in range(n_classes):
                fl = left[c] / left_n
                fr = (total[c] - left[c]) / right_n
                sl += fl * fl
                sr += fr * fr
            weighted = (left_n * (1.0 - sl) + right_n * (1.0 - sr)) / n
            if weighted < best_gini:
                best_gini = weighted
                best_idx = i
        return best_gini, best_idx

    @njit(cache=True)
    def nb_conditional_draw(cdf_rows, parent_codes, uniforms):
        n = parent_codes.shape[0]
        card = cdf_rows.shape[1]
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            row = parent_codes[i]
            u = uniforms[i]
            code = 0
            while code < card and cdf_rows[row, code] <= u:
                code += 1
            if code == card:
                code = card - 1
            out[i] = code
        return out


BACKEND = "numba" if (_HAVE_NUMBA and _FLAG != "numpy") else "numpy"

if BACKEND == "numba":
    pair_mutual_information = nb_pair_mutual_information
    best_threshold_split = nb_best_threshold_split
    conditional_draw = nb_conditional_draw
else:
    pair_mutual_information = np_pair_mutual_information
    best_threshold_split = np_best_threshold_split
    conditional_draw = np_conditional_draw
