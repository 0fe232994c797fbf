"""Selection policies over a shared decision contract.

Every policy is a pure function of its static precomputation and a
:class:`PolicyContext`; randomization enters only through the context's
uniform draw.  Each policy also exposes vectorized hooks used by the exact
evaluator (``rates``) and the batch simulator (``decide_batch``), so common
random numbers and closed-form u-integration need no per-policy casework.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import dp as dp_mod
from .distribution import (
    RATIO_TIE_TOL,
    AbilityDistribution,
    ThresholdSet,
    thresholds,
)
from .errors import DimensionMismatch, InfeasiblePair, ModelError, TableMismatch


@dataclass(frozen=True)
class PolicyContext:
    """State visible to a policy at one decision epoch.

    ``t_next`` is the 1-based decision time, ``residual_budget`` the budget
    left before this decision, ``ability_index`` the 1-based rank of the
    observed value, and ``u`` a uniform draw in [0, 1) for randomized rules.
    """

    t_next: int
    n: int
    residual_budget: int
    ability_index: int
    u: float = 0.0


@dataclass(frozen=True)
class Decision:
    select: bool


@dataclass(frozen=True, eq=False)
class NonAdaptiveMatrix:
    """Selection probabilities p[j-1, t-1] for ability j at time t."""

    p: np.ndarray

    @classmethod
    def of(cls, p) -> "NonAdaptiveMatrix":
        arr = np.asarray(p, dtype=float)
        if arr.ndim != 2:
            raise DimensionMismatch("probability matrix must be 2-D (abilities x periods)")
        if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
            raise ModelError("matrix entries must be probabilities in [0, 1]")
        arr.flags.writeable = False
        return cls(p=arr)


def br_decide(d: AbilityDistribution, thr: ThresholdSet, ctx: PolicyContext) -> Decision:
    """Budget-Ratio rule: find j with T_j <= K/(n-t) < T_{j+1}, select the
    observed value iff budget remains and its rank is at most j."""
    if ctx.residual_budget <= 0:
        return Decision(select=False)
    ratio = ctx.residual_budget / (ctx.n - (ctx.t_next - 1))
    return Decision(select=ctx.ability_index <= thr.bucket(ratio))


def dp_decide(table: dp_mod.DPTable, ctx: PolicyContext) -> Decision:
    """Optimal rule: select iff the observed ability reaches h_l(kappa)."""
    if ctx.n != table.n or ctx.residual_budget > table.k:
        raise TableMismatch(
            f"table solved for (n={table.n}, k={table.k}) cannot decide at "
            f"(n={ctx.n}, budget={ctx.residual_budget})"
        )
    if ctx.residual_budget <= 0:
        return Decision(select=False)
    ell = ctx.n - ctx.t_next + 1
    return Decision(select=ctx.ability_index <= dp_mod.accept_cut(table, ell, ctx.residual_budget))


def ai_decide(d: AbilityDistribution, ctx: PolicyContext) -> Decision:
    """Adaptive-index rule: follow the re-solved deterministic relaxation.

    With r = K/(n-t), an ability-j arrival is taken with probability
    clamp((r - F̄(a_j)) / f_j, 0, 1); once r >= 1 everything is taken.
    """
    if ctx.residual_budget <= 0:
        return Decision(select=False)
    ratio = ctx.residual_budget / (ctx.n - (ctx.t_next - 1))
    if ratio >= 1.0:
        return Decision(select=True)
    j = ctx.ability_index
    p = (ratio - d.survival_values[j - 1]) / d.pmf[j - 1]
    return Decision(select=ctx.u < min(max(p, 0.0), 1.0))


def nonadaptive_decide(mat: NonAdaptiveMatrix, ctx: PolicyContext) -> Decision:
    m, n = mat.p.shape
    if not (1 <= ctx.ability_index <= m and 1 <= ctx.t_next <= n):
        raise DimensionMismatch(
            f"context (t={ctx.t_next}, j={ctx.ability_index}) outside {m}x{n} matrix"
        )
    if ctx.residual_budget <= 0:
        return Decision(select=False)
    return Decision(select=ctx.u < mat.p[ctx.ability_index - 1, ctx.t_next - 1])


def index_matrix(d: AbilityDistribution, n: int, k: int) -> NonAdaptiveMatrix:
    """Time-constant matrix from the deterministic relaxation at ratio k/n.

    Ranks above the pivot are always taken, the pivot rank with the
    fractional probability (k/n - F̄)/f, lower ranks never.  Fractions within
    the ratio tie tolerance of 0 or 1 snap to the exact endpoint.
    """
    if n < 1 or not 0 <= k <= n:
        raise InfeasiblePair(f"(n={n}, k={k}) is not a feasible pair")
    ratio = k / n
    sv = d.survival_values
    pivot = int(np.searchsorted(sv[: d.m], ratio + RATIO_TIE_TOL, side="right"))
    frac = (ratio - sv[pivot - 1]) / d.pmf[pivot - 1]
    frac = min(max(frac, 0.0), 1.0)
    if frac < RATIO_TIE_TOL:
        frac = 0.0
    elif 1.0 - frac < RATIO_TIE_TOL:
        frac = 1.0
    col = np.zeros(d.m)
    col[: pivot - 1] = 1.0
    col[pivot - 1] = frac
    return NonAdaptiveMatrix.of(np.tile(col[:, None], (1, n)))


def take_top_matrix(d: AbilityDistribution, n: int) -> NonAdaptiveMatrix:
    """Take every top-ability arrival, nothing else."""
    if n < 1:
        raise InfeasiblePair(f"horizon must be >= 1, got {n}")
    p = np.zeros((d.m, n))
    p[0, :] = 1.0
    return NonAdaptiveMatrix.of(p)


def ai_ratio_increment_mean(d: AbilityDistribution, n: int, t: int, budget: int) -> float:
    """Closed-form one-step conditional mean of the ratio increment under
    the adaptive-index rule, summed over the m possible arrivals.

    Zero whenever budget/(n-t) <= 1 and at least two periods remain.
    """
    remaining = n - t
    if remaining < 2:
        raise InfeasiblePair("the increment needs at least two remaining periods")
    ratio = budget / remaining
    if budget <= 0:
        probs = np.zeros(d.m)
    elif ratio >= 1.0:
        probs = np.ones(d.m)
    else:
        probs = np.clip((ratio - d.survival_values[: d.m]) / d.pmf, 0.0, 1.0)
    select_mean = float(d.pmf @ probs)
    return (budget - select_mean) / (remaining - 1) - ratio


class BudgetRatioPolicy:
    """Multi-threshold policy on the budget ratio; deterministic."""

    name = "br"
    cache_key = "br"

    def __init__(self, d: AbilityDistribution):
        self.dist = d
        self.thresholds = thresholds(d)
        self._gain = np.concatenate(([0.0], np.cumsum(d.support * d.pmf)))

    def decide(self, ctx: PolicyContext) -> Decision:
        return br_decide(self.dist, self.thresholds, ctx)

    def decide_batch(self, t_next, n, budgets, abilities, u):
        ratio = budgets / (n - t_next + 1)
        bucket = self.thresholds.bucket(ratio)
        return (budgets > 0) & (abilities <= bucket)

    def rates(self, t_next, n, budgets):
        ratio = budgets / (n - t_next + 1)
        bucket = self.thresholds.bucket(ratio)
        live = budgets > 0
        sel = np.where(live, self.dist.survival_values[bucket], 0.0)
        gain = np.where(live, self._gain[bucket], 0.0)
        return sel, gain


class DpPolicy:
    """Optimal policy read off a solved acceptance-cut table."""

    name = "dp"
    cache_key = "dp"

    def __init__(self, d: AbilityDistribution, table: dp_mod.DPTable | None = None,
                 n: int | None = None, k: int | None = None):
        if table is None:
            if n is None or k is None:
                raise ValueError("DpPolicy needs a table or an (n, k) pair to solve")
            table = dp_mod.solve(d, n, k, mode="auto")
        if table.cuts is None:
            raise TableMismatch("policy use needs a table solved with mode='policy' or 'full'")
        if table.dist_hash != d.content_hash():
            raise TableMismatch("table was solved for a different distribution")
        self.dist = d
        self.table = table
        self._gain = np.concatenate(([0.0], np.cumsum(d.support * d.pmf)))

    def decide(self, ctx: PolicyContext) -> Decision:
        return dp_decide(self.table, ctx)

    def _cut_row(self, t_next, n, budgets):
        if n != self.table.n:
            raise TableMismatch(f"table solved for n={self.table.n}, episode has n={n}")
        ell = n - t_next + 1
        return self.table.cuts[ell, budgets]

    def decide_batch(self, t_next, n, budgets, abilities, u):
        cut = self._cut_row(t_next, n, budgets)
        return (budgets > 0) & (abilities <= cut)

    def rates(self, t_next, n, budgets):
        cut = self._cut_row(t_next, n, budgets)
        return self.dist.survival_values[cut], self._gain[cut]


class AdaptiveIndexPolicy:
    """Re-solves the deterministic relaxation each period; randomized."""

    name = "ai"
    cache_key = "ai"

    def __init__(self, d: AbilityDistribution):
        self.dist = d
        self._gain = np.concatenate(([0.0], np.cumsum(d.support * d.pmf)))

    def decide(self, ctx: PolicyContext) -> Decision:
        return ai_decide(self.dist, ctx)

    def decide_batch(self, t_next, n, budgets, abilities, u):
        d = self.dist
        ratio = budgets / (n - t_next + 1)
        p = (ratio - d.survival_values[abilities - 1]) / d.pmf[abilities - 1]
        np.clip(p, 0.0, 1.0, out=p)
        p[ratio >= 1.0] = 1.0
        return (budgets > 0) & (u < p)

    def rates(self, t_next, n, budgets):
        ratio = budgets / (n - t_next + 1)
        sel = np.minimum(ratio, 1.0)
        gain = np.interp(ratio, self.dist.survival_values, self._gain)
        return sel, gain


class NonAdaptivePolicy:
    """Fixed probability matrix applied until the budget runs out."""

    def __init__(self, d: AbilityDistribution, matrix: NonAdaptiveMatrix, name: str):
        if matrix.p.shape[0] != d.m:
            raise DimensionMismatch(
                f"matrix has {matrix.p.shape[0]} ability rows, distribution has {d.m}"
            )
        self.dist = d
        self.matrix = matrix
        self.name = name
        self._sel_by_t = d.pmf @ matrix.p
        self._gain_by_t = (d.pmf * d.support) @ matrix.p
        if name in ("index", "take-top"):
            self.cache_key = name
        else:
            self.cache_key = "matrix:" + hashlib.sha256(matrix.p.tobytes()).hexdigest()[:16]

    def _check_horizon(self, t_next, n):
        if n != self.matrix.p.shape[1] or not 1 <= t_next <= n:
            raise DimensionMismatch(
                f"matrix covers {self.matrix.p.shape[1]} periods, asked for t={t_next} of n={n}"
            )

    def decide(self, ctx: PolicyContext) -> Decision:
        return nonadaptive_decide(self.matrix, ctx)

    def decide_batch(self, t_next, n, budgets, abilities, u):
        self._check_horizon(t_next, n)
        p = self.matrix.p[abilities - 1, t_next - 1]
        return (budgets > 0) & (u < p)

    def rates(self, t_next, n, budgets):
        self._check_horizon(t_next, n)
        live = budgets > 0
        sel = np.where(live, self._sel_by_t[t_next - 1], 0.0)
        gain = np.where(live, self._gain_by_t[t_next - 1], 0.0)
        return sel, gain


POLICY_NAMES = ("br", "dp", "ai", "index", "take-top")


def make_policy(name: str, d: AbilityDistribution, n: int, k: int):
    """Build a policy from its CLI/config name.

    Accepts ``br | dp | ai | index | take-top | matrix:<csv-file>`` where the
    matrix file holds m rows of n comma-separated probabilities.
    """
    if name == "br":
        return BudgetRatioPolicy(d)
    if name == "dp":
        return DpPolicy(d, n=n, k=k)
    if name == "ai":
        return AdaptiveIndexPolicy(d)
    if name == "index":
        return NonAdaptivePolicy(d, index_matrix(d, n, k), "index")
    if name == "take-top":
        return NonAdaptivePolicy(d, take_top_matrix(d, n), "take-top")
    if name.startswith("matrix:"):
        path = name.split(":", 1)[1]
        p = np.loadtxt(path, delimiter=",", ndmin=2)
        if p.shape != (d.m, n):
            raise DimensionMismatch(
                f"matrix file is {p.shape[0]}x{p.shape[1]}, need {d.m}x{n}"
            )
        return NonAdaptivePolicy(d, NonAdaptiveMatrix.of(p), "matrix")
    raise ModelError(f"unknown policy {name!r}")
