"""Slow, independent reference implementations used only by tests.

Everything here is written the dumb way on purpose: linear scans,
textbook formulas, numpy solves.  If the fast implementations and
these ever disagree, trust neither and investigate.
"""

from __future__ import annotations

import math

import numpy as np

from smikit.corpus import NormalizationPolicy, normalize_text

ASCII_ALNUM = set("0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")


def naive_contains(text: str, pattern: str, word_boundaries: bool) -> bool:
    """Presence check by repeated str.find with manual boundary tests."""
    start = 0
    while True:
        i = text.find(pattern, start)
        if i < 0:
            return False
        if not word_boundaries:
            return True
        j = i + len(pattern) - 1
        left_ok = i == 0 or text[i - 1] not in ASCII_ALNUM
        right_ok = j == len(text) - 1 or text[j + 1] not in ASCII_ALNUM
        if left_ok and right_ok:
            return True
        start = i + 1


def naive_counts(raw_docs, triples, policy: NormalizationPolicy):
    """Per-triple (n_s, n_o, n_so) by direct scanning of every document."""
    norm_docs = [normalize_text(d, policy) for d in raw_docs]
    result = {}
    for t in triples:
        s = normalize_text(t.subject, policy)
        o = normalize_text(t.object, policy)
        n_s = n_o = n_so = 0
        for d in norm_docs:
            s_in = naive_contains(d, s, policy.word_boundaries)
            o_in = naive_contains(d, o, policy.word_boundaries)
            n_s += s_in
            n_o += o_in
            n_so += s_in and o_in
        result[t.triple_id] = (n_s, n_o, n_so)
    return result


def ols_normal_equations(points):
    """Least squares through numpy's solver; returns slope, intercept, r2, mse."""
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    design = np.vstack([xs, np.ones_like(xs)]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, ys, rcond=None)
    pred = slope * xs + intercept
    ss_res = float(((ys - pred) ** 2).sum())
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
    return float(slope), float(intercept), r2, ss_res / len(xs)


def naive_mse(slope, intercept, points):
    total = 0.0
    for x, y in points:
        total += (y - (slope * x + intercept)) ** 2
    return total / len(points)


def brute_bin_index(x: float, width: float) -> int:
    """Find k with k*width <= x < (k+1)*width by scanning candidates."""
    k0 = int(math.floor(x / width))
    for k in (k0 - 2, k0 - 1, k0, k0 + 1, k0 + 2):
        if k * width <= x < (k + 1) * width:
            return k
    raise AssertionError(f"no candidate bin for x={x}, width={width}")


def hand_mi(p_s: float, p_o: float, p_so: float, base: float) -> float:
    """The worked-example formula, kept deliberately verbatim."""
    if p_so == 0.0:
        return 0.0
    return p_so * math.log(p_so / (p_s * p_o), base)


def hand_smi(m: float, phi: float) -> float:
    """Size discount via the exp/log identity rather than ** ."""
    if m == 0.0:
        return 0.0
    if m == 1.0:
        return 1.0
    exponent = 1.0 + 1.0 / (math.log(phi) / math.log(2.0))
    return math.exp(exponent * math.log(m))
