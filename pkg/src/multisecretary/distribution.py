"""Finite-support ability distributions and the static quantities derived from them.

Abilities are stored in descending order (a_1 is the largest) and every module
in the package addresses them by the 1-based rank ``j``.  The survival value
``F̄(a_j)`` is the probability that a fresh draw is strictly larger than
``a_j``, so ``F̄(a_1) = 0`` and ``F̄(a_{m+1}) = 1``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BadPmf,
    IndexOutOfRange,
    InfeasiblePair,
    NonDecreasingSupport,
    NonPositiveValue,
)

PMF_SUM_TOL = 1e-12

# Slack used whenever a budget ratio is classified against a threshold or a
# survival value.  A ratio k/n that equals a threshold in exact arithmetic can
# round to one ulp below it in floats (e.g. 300/1000 versus 0.2 + 0.1); the
# closed-left interval convention must still place it in the upper bucket.
RATIO_TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AbilityDistribution:
    """Validated finite-support distribution.

    Attributes:
        support: ability values, strictly decreasing, all positive.
        pmf: matching masses, renormalized to sum to one.
        survival_values: ``survival_values[i] = F̄(a_{i+1})`` for i in 0..m,
            i.e. the cumulative mass strictly above each support point, with
            the final cell pinned to exactly 1.0.
    """

    support: np.ndarray
    pmf: np.ndarray
    survival_values: np.ndarray

    @property
    def m(self) -> int:
        return self.support.size

    def survival(self, j: int) -> float:
        """F̄(a_j) for a 1-based index j in [1, m+1]."""
        if not 1 <= j <= self.m + 1:
            raise IndexOutOfRange(f"survival index {j} outside [1, {self.m + 1}]")
        return float(self.survival_values[j - 1])

    def mean(self) -> float:
        return float(self.support @ self.pmf)

    def ability(self, j: int) -> float:
        if not 1 <= j <= self.m:
            raise IndexOutOfRange(f"ability index {j} outside [1, {self.m}]")
        return float(self.support[j - 1])

    def sample(self, u: float) -> int:
        """Inverse-CDF draw: the 1-based index j whose cumulative cell holds u.

        Cells follow support order: [0, f_1), [f_1, f_1 + f_2), ...
        """
        return int(np.searchsorted(self.survival_values[1:], u, side="right")) + 1

    def sample_many(self, u: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`sample`; returns int16 indices, 1-based."""
        idx = np.searchsorted(self.survival_values[1:], u, side="right") + 1
        return idx.astype(np.int16)

    def content_hash(self) -> str:
        digest = hashlib.sha256(self.support.tobytes() + self.pmf.tobytes())
        return digest.hexdigest()

    def __repr__(self) -> str:  # compact, for logs and error messages
        sup = ", ".join(f"{a:g}" for a in self.support)
        return f"AbilityDistribution([{sup}], m={self.m})"


@dataclass(frozen=True, eq=False)
class ThresholdSet:
    """Budget-ratio thresholds T_1 = 0 < T_2 < ... < T_m < T_{m+1} = +inf.

    ``values[j - 1]`` holds T_j.  Interior thresholds are the midpoints of
    consecutive survival values, so T_j sits exactly half the mass f_j above
    F̄(a_j) and the same amount below F̄(a_{j+1}).
    """

    values: np.ndarray

    @property
    def m(self) -> int:
        return self.values.size - 1

    def t(self, j: int) -> float:
        """T_j for a 1-based index j in [1, m+1]."""
        if not 1 <= j <= self.m + 1:
            raise IndexOutOfRange(f"threshold index {j} outside [1, {self.m + 1}]")
        return float(self.values[j - 1])

    def bucket(self, ratio):
        """The unique j with T_j <= ratio < T_{j+1} (closed-left intervals).

        Accepts a scalar or an array; ratios within ``RATIO_TIE_TOL`` of a
        threshold count as having reached it.
        """
        interior = self.values[1:-1]
        idx = np.searchsorted(interior, np.asarray(ratio) + RATIO_TIE_TOL, side="right") + 1
        if np.isscalar(ratio):
            return int(idx)
        return idx


def new_distribution(support: Sequence[float], pmf: Sequence[float]) -> AbilityDistribution:
    """Validate and build an :class:`AbilityDistribution`.

    Raises:
        NonDecreasingSupport: support not strictly decreasing.
        NonPositiveValue: smallest support value is not > 0.
        BadPmf: masses negative or zero, lengths mismatched, or the total
            differs from 1 by more than ``PMF_SUM_TOL``.
    """
    a = np.asarray(support, dtype=float)
    f = np.asarray(pmf, dtype=float)
    if a.ndim != 1 or f.ndim != 1 or a.size != f.size or a.size < 1:
        raise BadPmf("support and pmf must be 1-D sequences of equal positive length")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(f)):
        raise BadPmf("support and pmf must be finite")
    if np.any(np.diff(a) >= 0):
        raise NonDecreasingSupport("support must be strictly decreasing")
    if a[-1] <= 0:
        raise NonPositiveValue("all support values must be strictly positive")
    if np.any(f <= 0):
        raise BadPmf("all masses must be strictly positive")
    total = float(f.sum())
    if abs(total - 1.0) > PMF_SUM_TOL:
        raise BadPmf(f"pmf sums to {total!r}, not 1 within {PMF_SUM_TOL}")
    f = f / total  # exact renormalization keeps downstream sums consistent
    sv = np.empty(a.size + 1)
    sv[0] = 0.0
    np.cumsum(f, out=sv[1:])
    sv[-1] = 1.0  # pin so sampling covers u in [0, 1) and F̄(a_{m+1}) = 1
    for arr in (a, f, sv):
        arr.flags.writeable = False
    return AbilityDistribution(support=a, pmf=f, survival_values=sv)


def survival(d: AbilityDistribution, j: int) -> float:
    return d.survival(j)


def thresholds(d: AbilityDistribution) -> ThresholdSet:
    """Midpoint thresholds T_j = (F̄(a_j) + F̄(a_{j+1})) / 2 for j in 2..m."""
    m = d.m
    values = np.empty(m + 1)
    values[0] = 0.0
    values[m] = np.inf
    if m > 1:
        sv = d.survival_values
        values[1:m] = 0.5 * (sv[1:m] + sv[2 : m + 1])
    values.flags.writeable = False
    return ThresholdSet(values=values)


def half_min_mass(d: AbilityDistribution) -> float:
    """Half the smallest mass; the stability margin the regret bounds use."""
    return 0.5 * float(d.pmf.min())


def action_index_j0(d: AbilityDistribution, n: int, k: int) -> int:
    """The ability level where the offline solution's marginal activity sits.

    Piecewise in k/n: below f_1 + f_2/2 it is 1, above 1 - f_m/2 it is m, and
    in between it is the j whose threshold interval [T_j, T_{j+1}) contains
    k/n.  The interval form is used directly since the two coincide.
    """
    if n < 1:
        raise InfeasiblePair(f"horizon must be >= 1, got {n}")
    if not 0 <= k <= n:
        raise InfeasiblePair(f"budget {k} outside [0, {n}]")
    return thresholds(d).bucket(k / n)


def mean(d: AbilityDistribution) -> float:
    return d.mean()


def sample(d: AbilityDistribution, u: float) -> int:
    return d.sample(u)


def dist_from_dict(obj: dict) -> AbilityDistribution:
    """Build a distribution from the ``{"support": [...], "pmf": [...]}`` schema."""
    if not isinstance(obj, dict) or "support" not in obj or "pmf" not in obj:
        raise BadPmf("distribution config must be an object with 'support' and 'pmf'")
    return new_distribution(obj["support"], obj["pmf"])


def dist_from_json(text: str) -> AbilityDistribution:
    return dist_from_dict(json.loads(text))


def load_distribution(path) -> AbilityDistribution:
    with open(path, "r", encoding="utf-8") as fh:
        return dist_from_json(fh.read())
