"""Exception types raised by the library."""


class ModelError(ValueError):
    """Base class for domain validation failures."""


class NonDecreasingSupport(ModelError):
    """Support values are not strictly decreasing."""


class NonPositiveValue(ModelError):
    """Support contains a value that is not strictly positive."""


class BadPmf(ModelError):
    """Probability masses are malformed (negative, zero, or not summing to one)."""


class IndexOutOfRange(ModelError):
    """A 1-based ability or table index lies outside its valid range."""


class InfeasiblePair(ModelError):
    """A (horizon, budget) pair violates 0 <= k <= n."""


class CountMismatch(ModelError):
    """Realization counts do not line up with the distribution support."""


class InstanceTooLarge(ModelError):
    """A brute-force check was requested for an instance beyond its size guard."""


class TableMismatch(ModelError):
    """A value table does not cover the requested state or query."""


class NonMarkovPolicy(ModelError):
    """The policy does not expose the state-Markov selection-rate hook."""


class DimensionMismatch(ModelError):
    """A probability matrix does not match the distribution or horizon."""


class BadDelta(ModelError):
    """Orbit half-width must satisfy 0 < delta < half the minimal mass."""


class BadEpsilon(ModelError):
    """Perturbation parameter is outside the range that keeps the pmf valid."""
