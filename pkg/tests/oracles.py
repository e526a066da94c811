"""Independent reference implementations used as test oracles.

Everything in this module is written straight from the textbook
definitions (exhaustive enumeration, quadratic DP, direct formula
evaluation) without importing anything from the package under test, so
agreement between the two is meaningful evidence of correctness rather
than a tautology.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np


def brute_force_crf(unary, transitions, start, end):
    """(logZ, best path, best score, marginals) by scoring all k^n paths."""
    unary = [list(map(float, row)) for row in unary]
    n = len(unary)
    k = len(unary[0])
    scores: dict[tuple[int, ...], float] = {}
    for path in itertools.product(range(k), repeat=n):
        s = float(start[path[0]]) + float(end[path[-1]])
        for t in range(n):
            s += unary[t][path[t]]
        for t in range(1, n):
            s += float(transitions[path[t - 1]][path[t]])
        scores[path] = s
    shift = max(scores.values())
    z = math.fsum(math.exp(s - shift) for s in scores.values())
    log_z = shift + math.log(z)
    best = max(scores, key=scores.__getitem__)
    marginals = [[0.0] * k for _ in range(n)]
    for path, s in scores.items():
        w = math.exp(s - log_z)
        for t, label in enumerate(path):
            marginals[t][label] += w
    return log_z, list(best), scores[best], marginals


def _count_ngrams(tokens, n):
    grams = Counter()
    for i in range(len(tokens) - n + 1):
        grams[tuple(tokens[i : i + n])] += 1
    return grams


def reference_bleu(hypotheses, references):
    """Corpus BLEU-4, clipped counts, add-one smoothing for orders 2-4."""
    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    log_precision = 0.0
    for n in range(1, 5):
        matched = 0
        total = 0
        for hyp, ref in zip(hypotheses, references):
            hyp_grams = _count_ngrams(hyp, n)
            ref_grams = _count_ngrams(ref, n)
            total += sum(hyp_grams.values())
            matched += sum(min(c, ref_grams[g]) for g, c in hyp_grams.items())
        if n == 1:
            if matched == 0 or total == 0:
                return 0.0
            log_precision += math.log(matched / total)
        else:
            log_precision += math.log((matched + 1) / (total + 1))
    if hyp_len == 0:
        return 0.0
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(log_precision / 4.0)


def reference_rouge_n(hypothesis, reference, n):
    hyp_grams = _count_ngrams(hypothesis, n)
    ref_grams = _count_ngrams(reference, n)
    overlap = sum(min(c, ref_grams[g]) for g, c in hyp_grams.items())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(hyp_grams.values())
    recall = overlap / sum(ref_grams.values())
    return 2.0 * precision * recall / (precision + recall)


def reference_rouge_l(hypothesis, reference):
    """LCS F1 via the full quadratic DP table."""
    a, b = list(hypothesis), list(reference)
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    lcs = table[len(a)][len(b)]
    if lcs == 0 or not a or not b:
        return 0.0
    precision = lcs / len(a)
    recall = lcs / len(b)
    return 2.0 * precision * recall / (precision + recall)


def reference_gru_step(weights, h_prev, x):
    """Documented gate equations evaluated directly on raw arrays."""
    sig = lambda v: 1.0 / (1.0 + np.exp(-v))
    z = sig(weights["w_z"] @ x + weights["u_z"] @ h_prev + weights["b_z"])
    r = sig(weights["w_r"] @ x + weights["u_r"] @ h_prev + weights["b_r"])
    cand = np.tanh(weights["w_h"] @ x + weights["u_h"] @ (r * h_prev) + weights["b_h"])
    return (1.0 - z) * h_prev + z * cand


def reference_softmax(values):
    shift = max(values)
    exps = [math.exp(v - shift) for v in values]
    z = math.fsum(exps)
    return [e / z for e in exps]


def reference_logsumexp(values):
    shift = max(values)
    return shift + math.log(math.fsum(math.exp(v - shift) for v in values))


# 20 hypothesis/reference pairs exercising clipping, brevity, repeats,
# reordering, and length extremes; shared by the metric oracle tests.
METRIC_PAIRS: list[tuple[list[str], list[str]]] = [
    (["the", "cat", "sat", "on", "the", "mat"], ["the", "cat", "sat", "on", "the", "mat"]),
    (["a", "quick", "brown", "fox"], ["the", "quick", "brown", "fox"]),
    (["he", "ran", "for", "cover", "fast"], ["he", "ran", "for", "cover"]),
    (["she", "spilled", "the", "beans"], ["she", "spilled", "all", "the", "beans", "yesterday"]),
    (["one"], ["one"]),
    (["one"], ["two"]),
    (["x", "y", "z"], ["p", "q", "r"]),
    (["the", "the", "the", "the"], ["the", "cat"]),
    (["to", "be", "or", "not", "to", "be"], ["to", "be", "or", "not", "to", "be", "that", "is"]),
    (["b", "a"], ["a", "b"]),
    (["the", "storm", "broke", "over", "the", "hills", "at", "dawn"],
     ["the", "storm", "broke", "at", "dawn", "over", "the", "hills"]),
    (["i", "think", "it", "makes", "sense", "now", "."], ["it", "makes", "sense", "."]),
    (["under", "the", "weather"], ["feeling", "under", "the", "weather", "today"]),
    (["keep", "calm", "and", "carry", "on"], ["keep", "calm", "and", "carry", "on", "!"]),
    (["a", "b", "c", "d", "e", "f", "g", "h"], ["a", "c", "b", "d", "f", "e", "h", "g"]),
    (["repeat", "repeat", "repeat"], ["repeat"]),
    (["long"] * 25, ["long"] * 20),
    (["short"], ["quite", "a", "lot", "longer", "than", "the", "hypothesis"]),
    (["mixed", "bag", "of", "words", "with", "some", "overlap"],
     ["bag", "of", "tricks", "with", "much", "overlap"]),
    (["eos", "."], ["eos", ".", "and", "more"]),
]
