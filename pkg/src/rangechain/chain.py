"""Exact combinatorics of the range-size chain.

Composing a fresh uniform random function onto a map with an m-element
range replaces the range by the set of values of m independent uniform
draws from [n].  The range size therefore evolves as a lower-triangular
Markov chain on {1, ..., n} with

    P(m -> r) = S(m, r) * n*(n-1)*...*(n-r+1) / n**m,

where S(m, r) counts partitions of an m-set into r nonempty blocks, and
with stay probability

    P(m -> m) = lambda_m = prod_{j=1}^{m-1} (1 - j/n).

Everything in this module is exact rational arithmetic; no floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ResourceCeilingError

#: Largest n accepted by build_chain unless the caller raises the limit.
#: Stirling numbers and n**m grow super-exponentially; past this point the
#: Monte Carlo samplers are the right tool.
DEFAULT_EXACT_CEILING = 400

# Triangle rows of Stirling numbers of the second kind; row m holds
# S(m, 0..m).  Grown on demand, shared by all callers.
_stirling_rows: list[list[int]] = [[1]]


def stirling2(m: int, r: int) -> int:
    """Stirling number of the second kind S(m, r).

    Number of partitions of an m-set into r nonempty blocks, from the
    recurrence S(m, r) = r*S(m-1, r) + S(m-1, r-1).  Returns 0 wherever
    the count is 0 (for example r > m).
    """
    if m < 0 or r < 0:
        raise ValueError("stirling2 expects nonnegative arguments")
    if r > m:
        return 0
    while len(_stirling_rows) <= m:
        k = len(_stirling_rows)
        prev = _stirling_rows[-1]
        row = [0] * (k + 1)
        for j in range(1, k):
            row[j] = j * prev[j] + prev[j - 1]
        row[k] = 1
        _stirling_rows.append(row)
    return _stirling_rows[m][r]


def lambda_stay(n: int, m: int) -> Fraction:
    """Probability that an m-element range keeps size m for one step.

    lambda_m = prod_{j=1}^{m-1} (1 - j/n) = (n-1)!/(n-m)! / n**(m-1),
    the chance that m independent uniform draws from [n] are distinct
    given the first is free.  Exact rational.
    """
    if not 1 <= m <= n:
        raise ValueError(f"require 1 <= m <= n, got m={m}, n={n}")
    return Fraction(math.perm(n - 1, m - 1), n ** (m - 1))


def transition_prob(n: int, m: int, r: int) -> Fraction:
    """Probability that m independent uniform draws from [n] hit exactly r
    distinct values: S(m, r) * perm(n, r) / n**m."""
    if not 1 <= r <= m <= n:
        raise ValueError(f"require 1 <= r <= m <= n, got r={r}, m={m}, n={n}")
    return Fraction(stirling2(m, r) * math.perm(n, r), n**m)


@dataclass(frozen=True)
class RangeChain:
    """The range-size chain for ground-set size n.

    ``rows[m]`` is the probability row of state m over targets r = 1..m
    (tuple index r-1).  Rows are lower-triangular by construction, each
    sums to exactly 1, state 1 is absorbing, and the diagonal entry of
    row m equals lambda_stay(n, m).
    """

    n: int
    rows: dict[int, tuple[Fraction, ...]]

    def prob(self, m: int, r: int) -> Fraction:
        """P(m -> r); zero for r > m."""
        if not 1 <= m <= self.n:
            raise ValueError(f"state {m} outside 1..{self.n}")
        if not 1 <= r <= self.n:
            raise ValueError(f"state {r} outside 1..{self.n}")
        if r > m:
            return Fraction(0)
        return self.rows[m][r - 1]

    def initial_row(self) -> tuple[Fraction, ...]:
        """Law of the range size after one composition from the full set."""
        return self.rows[self.n]

    def validate(self) -> None:
        """Check all structural invariants; raises AssertionError on defect."""
        assert set(self.rows) == set(range(1, self.n + 1))
        assert self.rows[1] == (Fraction(1),)
        for m in range(1, self.n + 1):
            row = self.rows[m]
            assert len(row) == m
            assert sum(row) == 1
            assert all(p >= 0 for p in row)
            assert row[m - 1] == lambda_stay(self.n, m)


def build_chain(n: int, max_n: int = DEFAULT_EXACT_CEILING) -> RangeChain:
    """Materialize every transition row of the range-size chain for [n].

    Refuses n above ``max_n``: all rows together hold n(n+1)/2 exact
    rationals whose terms involve n**m and S(m, r).
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > max_n:
        raise ResourceCeilingError(
            f"exact chain for n={n} exceeds the ceiling {max_n}; "
            "use the Monte Carlo samplers instead"
        )
    stirling2(n, 0)  # grow the shared triangle once
    perms = [1] * (n + 1)
    for r in range(1, n + 1):
        perms[r] = perms[r - 1] * (n - r + 1)
    rows: dict[int, tuple[Fraction, ...]] = {}
    for m in range(1, n + 1):
        den = n**m
        rows[m] = tuple(
            Fraction(_stirling_rows[m][r] * perms[r], den) for r in range(1, m + 1)
        )
    return RangeChain(n=n, rows=rows)
