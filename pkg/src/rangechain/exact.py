"""Exact finite-n distributions derived from the range-size chain.

The coalescence time T is the first composition step at which the range
collapses to a single point; its law is a first-passage computation on
the chain.  The sojourn count tau_m of range size m is, conditionally on
being positive, geometric with ratio lambda_m; the low-state part
T1 = sum_{m=2}^{xi} tau_m of the split T = T1 + T2 has an explicit
product characteristic function

    E exp(i t T1 | all of 2..xi visited)
        = exp(i t (xi-1)) * prod_{k=2}^{xi} (1 - lambda_k)/(1 - lambda_k e^{it}).

Computations run in exact rationals where affordable and in float64 with
a numerically stable forward recurrence beyond that; every truncated law
carries its dropped tail mass explicitly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .chain import RangeChain, lambda_stay
from .errors import ResourceCeilingError

Mass = Union[Fraction, float]

#: tail tolerance defaults per arithmetic mode
EXACT_TAIL_TOL = 1e-12
FLOAT_TAIL_TOL = 1e-9

#: auto mode switches to float arithmetic above these sizes
_EXACT_PMF_MAX_N = 16
_EXACT_CONV_MAX_POINTS = 3000


@dataclass(frozen=True)
class DiscretePMF:
    """A pmf on consecutive integers ``offset, offset+1, ...``.

    ``masses[i]`` is the probability of ``offset + i``; ``tail_mass`` is
    the probability of the un-enumerated remainder of an infinite
    support, so enumerated mass plus tail is exactly 1 in exact mode and
    1 within float rounding otherwise.
    """

    offset: int
    masses: tuple
    tail_mass: Mass
    exact: bool

    def __len__(self) -> int:
        return len(self.masses)

    @property
    def support_max(self) -> int:
        return self.offset + len(self.masses) - 1

    def p(self, k: int) -> Mass:
        """Probability of the point k (0 outside the enumerated support)."""
        i = k - self.offset
        if 0 <= i < len(self.masses):
            return self.masses[i]
        return Fraction(0) if self.exact else 0.0

    def mean(self) -> Mass:
        """Mean over the enumerated support; the tail is not extrapolated."""
        return sum(
            (self.offset + i) * p for i, p in enumerate(self.masses)
        )

    def cumulative(self) -> tuple:
        """Running totals P(X <= k) for k over the enumerated support."""
        out = []
        acc = Fraction(0) if self.exact else 0.0
        for p in self.masses:
            acc += p
            out.append(acc)
        return tuple(out)

    def to_floats(self) -> "DiscretePMF":
        if not self.exact:
            return self
        return DiscretePMF(
            offset=self.offset,
            masses=tuple(float(p) for p in self.masses),
            tail_mass=float(self.tail_mass),
            exact=False,
        )

    def validate(self) -> None:
        assert all(p >= 0 for p in self.masses)
        if self.exact:
            assert sum(self.masses, Fraction(0)) + self.tail_mass == 1
        else:
            total = math.fsum(self.masses) + self.tail_mass
            assert abs(total - 1.0) < 1e-12


@dataclass(frozen=True)
class SplitSpec:
    """Threshold xi splitting T into T1 (states 2..xi) and T2 (states > xi)."""

    xi: int
    source: str = "override"  # "default" | "override"

    def __post_init__(self):
        if self.xi < 2:
            raise ValueError(f"xi must be at least 2, got {self.xi}")
        if self.source not in ("default", "override"):
            raise ValueError(f"unknown SplitSpec source {self.source!r}")

    @classmethod
    def default_for(cls, n: int) -> "SplitSpec":
        """floor(ln ln n), clamped to at least 2; natural logarithm."""
        if n <= 2:
            return cls(xi=2, source="default")
        xi = max(2, math.floor(math.log(math.log(n))))
        return cls(xi=xi, source="default")


def _check_split(split: SplitSpec, n: int) -> None:
    if split.xi > n:
        raise ValueError(f"xi={split.xi} exceeds n={n}")


def _check_tail_tol(tail_tol: float) -> None:
    if not 0.0 < tail_tol < 1.0:
        raise ValueError(f"tail_tol must lie in (0, 1), got {tail_tol}")


def _resolve_mode(mode: str, want_exact: bool) -> bool:
    if mode not in ("auto", "exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "auto":
        return want_exact
    return mode == "exact"


def time_to_constant_pmf(
    chain: RangeChain,
    tail_tol: float | None = None,
    mode: str = "auto",
) -> DiscretePMF:
    """Law of the coalescence time T, by first-passage into state 1.

    Starts from the law of the range size after one composition (row of
    state n, so T = 1 exactly when that range is already a singleton),
    pushes the surviving mass on states >= 2 through the chain, and
    records the mass absorbed into state 1 at each step.  Stops once the
    surviving mass drops below ``tail_tol`` and reports it as tail mass.
    """
    exact = _resolve_mode(mode, chain.n <= _EXACT_PMF_MAX_N)
    if tail_tol is None:
        tail_tol = EXACT_TAIL_TOL if exact else FLOAT_TAIL_TOL
    _check_tail_tol(tail_tol)
    if exact:
        return _pmf_exact_push(chain, tail_tol)
    return _pmf_float_push(chain, tail_tol)


def _pmf_exact_push(chain: RangeChain, tail_tol: float) -> DiscretePMF:
    n = chain.n
    tol = Fraction(tail_tol)
    init = chain.initial_row()
    masses = [init[0]]
    active = {m: init[m - 1] for m in range(2, n + 1) if init[m - 1] != 0}
    remaining = sum(active.values(), Fraction(0))
    while remaining >= tol and active:
        absorbed = Fraction(0)
        nxt: dict[int, Fraction] = {}
        for m, w in active.items():
            row = chain.rows[m]
            absorbed += w * row[0]
            for r in range(2, m + 1):
                p = row[r - 1]
                if p:
                    nxt[r] = nxt.get(r, Fraction(0)) + w * p
        masses.append(absorbed)
        active = nxt
        remaining = sum(active.values(), Fraction(0))
    return DiscretePMF(offset=1, masses=tuple(masses), tail_mass=remaining, exact=True)


def _pmf_float_push(chain: RangeChain, tail_tol: float) -> DiscretePMF:
    n = chain.n
    P = np.zeros((n + 1, n + 1))
    for m in range(1, n + 1):
        P[m, 1 : m + 1] = [float(p) for p in chain.rows[m]]
    init = P[n, :].copy()
    masses = [float(init[1])]
    active = init[2:].copy()
    sub = P[2:, 2:]
    absorb = P[2:, 1]
    remaining = float(active.sum())
    # survival decays like lambda_2**t = ((n-1)/n)**t; generous cap
    max_steps = int(n * (math.log(1.0 / tail_tol) + math.log(n + 1) + 10)) + 1000
    steps = 0
    # stop with a margin so the complement-based tail stays below tail_tol
    while remaining >= 0.9 * tail_tol:
        masses.append(float(active @ absorb))
        active = active @ sub
        remaining = float(active.sum())
        steps += 1
        if steps > max_steps:
            raise RuntimeError("first-passage push failed to converge")
    tail = 1.0 - math.fsum(masses)
    return DiscretePMF(offset=1, masses=tuple(masses), tail_mass=tail, exact=False)


def tau_conditional_pmf(n: int, m: int, k: int) -> Fraction:
    """P(tau_m = k | tau_m > 0) = lambda_m**(k-1) * (1 - lambda_m)."""
    if not 2 <= m <= n:
        raise ValueError(f"require 2 <= m <= n, got m={m}, n={n}")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    lam = lambda_stay(n, m)
    return lam ** (k - 1) * (1 - lam)


def _convolve_geometric(masses: list, lam, one, budget) -> list:
    """Convolve a pmf with a geometric law on {1, 2, ...} of ratio ``lam``.

    The recurrence out[z] = lam*out[z-1] + (1-lam)*in[z-1] yields
    untruncated convolution values; only the stop index is adaptive.
    Once the input is exhausted the remaining output tail is exactly
    out[z] * lam / (1 - lam), so extension stops as soon as that drops
    below ``budget``.
    """
    comp = one - lam
    out = []
    prev = one * 0
    j = 0
    while True:
        inval = masses[j] if j < len(masses) else one * 0
        cur = lam * prev + comp * inval
        out.append(cur)
        prev = cur
        j += 1
        if j >= len(masses) and cur * lam <= comp * budget:
            return out


def conditional_t1_pmf(
    n: int,
    split: SplitSpec,
    tail_tol: float | None = None,
    mode: str = "auto",
) -> DiscretePMF:
    """Law of T1 = sum_{m=2}^{xi} tau_m given every state 2..xi is visited.

    The summands are independent geometrics on {1, 2, ...} with ratios
    lambda_m, so the law is their convolution; minimum support point is
    xi - 1.  Enumerated masses are exact convolution values (in the
    arithmetic of the chosen mode); truncation shows up only as tail mass.
    """
    _check_split(split, n)
    xi = split.xi
    lams = [lambda_stay(n, m) for m in range(2, xi + 1)]
    probe_tol = tail_tol if tail_tol is not None else EXACT_TAIL_TOL
    est_points = 0.0
    for lam in lams:
        lf = float(lam)
        if not 0.0 < lf < 1.0:
            est_points = math.inf
            break
        est_points += max(
            1.0, math.log((xi - 1) / min(probe_tol, 0.1)) / -math.log(lf)
        )
    if est_points > 5e7:
        raise ResourceCeilingError(
            f"T1 convolution for n={n}, xi={xi} needs ~{est_points:.2g} "
            "support points; out of reach for any arithmetic mode"
        )
    exact = _resolve_mode(mode, est_points <= _EXACT_CONV_MAX_POINTS)
    if tail_tol is None:
        tail_tol = EXACT_TAIL_TOL if exact else FLOAT_TAIL_TOL
    _check_tail_tol(tail_tol)
    if exact:
        one: Mass = Fraction(1)
        budget = Fraction(0.9 * tail_tol) / (xi - 1)
        work = [Fraction(1)]
        lam_vals: list = lams
    else:
        one = 1.0
        budget = 0.9 * tail_tol / (xi - 1)
        work = [1.0]
        lam_vals = [float(lam) for lam in lams]
    for lam in lam_vals:
        work = _convolve_geometric(work, lam, one, budget)
    if exact:
        tail = 1 - sum(work, Fraction(0))
    else:
        tail = max(1.0 - math.fsum(work), 0.0)
    return DiscretePMF(offset=xi - 1, masses=tuple(work), tail_mass=tail, exact=exact)


def conditional_t1_charfn(n: int, split: SplitSpec, t: float) -> complex:
    """E exp(itT1 | all of 2..xi visited), as the explicit finite product."""
    _check_split(split, n)
    xi = split.xi
    phase = cmath.exp(1j * t * (xi - 1))
    prod = complex(1.0)
    eit = cmath.exp(1j * t)
    for m in range(2, xi + 1):
        lam = float(lambda_stay(n, m))
        prod *= (1.0 - lam) / (1.0 - lam * eit)
    return phase * prod


def visit_probability(chain: RangeChain, m: int) -> Fraction:
    """P(tau_m > 0): the chance the range-size path ever sits at m.

    Downward first-passage recursion: v(m) = 1, and for s > m
    v(s) = sum_{r=m}^{s-1} P(s->r) v(r) / (1 - P(s->s)), then averaged
    over the law of the range size after one composition (which counts
    as a visit itself).
    """
    n = chain.n
    if not 2 <= m <= n:
        raise ValueError(f"require 2 <= m <= n, got m={m}, n={n}")
    v = {m: Fraction(1)}
    for s in range(m + 1, n + 1):
        row = chain.rows[s]
        acc = Fraction(0)
        for r in range(m, s):
            acc += row[r - 1] * v[r]
        v[s] = acc / (1 - row[s - 1])
    init = chain.initial_row()
    return sum((init[s - 1] * v[s] for s in range(m, n + 1)), Fraction(0))


def visit_probabilities(chain: RangeChain) -> dict[int, Fraction]:
    """P(tau_m > 0) for every m in 2..n in one forward pass.

    The jump chain (the range-size chain watched at state changes) is
    strictly decreasing, so each state is entered at most once and
    w(s) = P(initial = s) + sum_{u>s} w(u) * P(u->s)/(1 - P(u->u)).
    Same values as ``visit_probability``, computed in O(n^2) total.
    """
    n = chain.n
    init = chain.initial_row()
    w = {s: init[s - 1] for s in range(2, n + 1)}
    for u in range(n, 2, -1):
        row = chain.rows[u]
        if w[u] == 0:
            continue
        leave = 1 - row[u - 1]
        scale = w[u] / leave
        for s in range(2, u):
            p = row[s - 1]
            if p:
                w[s] += scale * p
    return w


def expected_visited_count(chain: RangeChain) -> Fraction:
    """E(N), the expected number of distinct range sizes >= 2 attained.

    Equals sum_m P(tau_m > 0); evaluated through the forward pass of
    ``visit_probabilities`` (the per-state backward recursion gives the
    same exact rationals, as the tests assert).
    """
    if chain.n == 1:
        return Fraction(0)
    w = visit_probabilities(chain)
    return sum(w.values(), Fraction(0))
