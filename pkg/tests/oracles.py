"""Independent brute-force oracles used only by the test suite.

Nothing here reuses the library's evaluators: expectations are taken by
explicit enumeration of ability sequences, the optimum by recursion over
full histories (no budget-state reduction), and policy selection
probabilities are recomputed from their defining formulas.
"""

from __future__ import annotations

import sys
from functools import lru_cache
from itertools import product

import numpy as np

BOUNDARY_TOL = 1e-12  # same closed-left tie slack the library documents


def all_sequences(m: int, n: int) -> np.ndarray:
    """All m^n ability-rank sequences as a (m^n, n) array of 1-based ranks."""
    grids = np.meshgrid(*([np.arange(1, m + 1)] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int16)


def sequence_probs(d, seqs: np.ndarray) -> np.ndarray:
    return np.prod(np.asarray(d.pmf)[seqs - 1], axis=1)


def greedy_payoffs(d, seqs: np.ndarray, k: int) -> np.ndarray:
    """Posterior-sort payoff per sequence, top rank first."""
    payoff = np.zeros(seqs.shape[0])
    remaining = np.full(seqs.shape[0], float(k))
    for j in range(1, d.m + 1):
        z = (seqs == j).sum(axis=1)
        take = np.minimum(z, remaining)
        payoff += d.support[j - 1] * take
        remaining -= take
    return payoff


def enum_offline_value(d, n: int, k: int) -> float:
    """E[offline value] by full m^n sequence enumeration."""
    seqs = all_sequences(d.m, n)
    return float(sequence_probs(d, seqs) @ greedy_payoffs(d, seqs, k))


def enum_optimal_value(d, n: int, k: int) -> float:
    """Optimal online value by recursion over full histories.

    The continuation value is computed per ability prefix, so decisions may
    depend on the whole history; this checks the budget-state reduction
    rather than assuming it.
    """
    a = tuple(float(x) for x in d.support)
    f = tuple(float(x) for x in d.pmf)
    m = d.m
    sys.setrecursionlimit(100_000)

    @lru_cache(maxsize=None)
    def best(prefix: tuple, kappa: int) -> float:
        if len(prefix) == n:
            return 0.0
        total = 0.0
        for j in range(m):
            skip = best(prefix + (j,), kappa)
            if kappa > 0:
                take = a[j] + best(prefix + (j,), kappa - 1)
                total += f[j] * max(take, skip)
            else:
                total += f[j] * skip
        return total

    value = best((), k)
    best.cache_clear()
    return value


def br_prob_table(d, n: int, k: int):
    """Per-period (m, k+1) selection probabilities of the budget-ratio rule,
    rebuilt from the midpoint-threshold definition."""
    sv = np.concatenate(([0.0], np.cumsum(np.asarray(d.pmf))))
    m = d.m
    thresholds = [0.0] + [0.5 * (sv[j - 1] + sv[j]) for j in range(2, m + 1)]

    def table(t_next: int) -> np.ndarray:
        p = np.zeros((m, k + 1))
        denom = n - t_next + 1
        for kappa in range(1, k + 1):
            r = kappa / denom
            bucket = 1
            for j in range(2, m + 1):
                if r >= thresholds[j - 1] - BOUNDARY_TOL:
                    bucket = j
            p[:bucket, kappa] = 1.0
        return p

    return table


def ai_prob_table(d, n: int, k: int):
    """Adaptive-index probabilities (r - F̄(a_j))/f_j clamped to [0, 1]."""
    sv = np.concatenate(([0.0], np.cumsum(np.asarray(d.pmf))))
    m = d.m

    def table(t_next: int) -> np.ndarray:
        p = np.zeros((m, k + 1))
        denom = n - t_next + 1
        for kappa in range(1, k + 1):
            r = kappa / denom
            if r >= 1.0:
                p[:, kappa] = 1.0
                continue
            for j in range(1, m + 1):
                p[j - 1, kappa] = min(max((r - sv[j - 1]) / d.pmf[j - 1], 0.0), 1.0)
        return p

    return table


def index_prob_table(d, n: int, k: int):
    """Non-adaptive index probabilities at ratio k/n, constant over time."""
    sv = np.concatenate(([0.0], np.cumsum(np.asarray(d.pmf))))
    m = d.m
    ratio = k / n
    pivot = 1
    for j in range(1, m + 1):
        if sv[j - 1] <= ratio + BOUNDARY_TOL:
            pivot = j
    frac = min(max((ratio - sv[pivot - 1]) / d.pmf[pivot - 1], 0.0), 1.0)
    if frac < BOUNDARY_TOL:
        frac = 0.0
    elif 1.0 - frac < BOUNDARY_TOL:
        frac = 1.0
    col = np.zeros(m)
    col[: pivot - 1] = 1.0
    col[pivot - 1] = frac

    def table(t_next: int) -> np.ndarray:
        p = np.zeros((m, k + 1))
        p[:, 1:] = col[:, None]
        return p

    return table


def enum_policy_value(d, n: int, k: int, prob_table) -> float:
    """Exact policy value by enumerating every ability sequence and folding
    the decision randomness backward along each fixed sequence."""
    seqs = all_sequences(d.m, n)
    value_to_go = np.zeros((seqs.shape[0], k + 1))
    for t_next in range(n, 0, -1):
        p_t = prob_table(t_next)
        j0 = seqs[:, t_next - 1] - 1
        p = p_t[j0, :]
        shifted = np.zeros_like(value_to_go)
        shifted[:, 1:] = value_to_go[:, :-1]
        gains = np.asarray(d.support)[j0][:, None]
        value_to_go = p * (gains + shifted) + (1.0 - p) * value_to_go
    return float(sequence_probs(d, seqs) @ value_to_go[:, k])


def max_integer_selection(support, z, k: int) -> float:
    """Brute-force maximum of sum(a_j s_j) over feasible integer selections."""
    best = 0.0
    for s in product(*(range(int(zj) + 1) for zj in z)):
        if sum(s) <= k:
            best = max(best, float(np.dot(support, s)))
    return best
