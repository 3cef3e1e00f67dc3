"""The limiting law of T/n: density, CDF, and characteristic function.

The scaled coalescence time converges to the absorption time of
Kingman's coalescent: a sum of independent exponentials with rates
C(k,2) = k(k-1)/2 for k >= 2.  Its density and CDF are alternating
series

    f(x) = sum_{k>=2} (-1)^k (2k-1) C(k,2) exp(-C(k,2) x),
    F(x) = 1 - sum_{k>=2} (-1)^k (2k-1) exp(-C(k,2) x),

and its characteristic function is both the infinite product
prod_{m>=2} C(m,2)/(C(m,2) - it) and the closed form
-2*pi*i*t / cos((pi/2) sqrt(1 + 8it)).

Series evaluations come with a rigorous truncation bound: the term
ratios are provably decreasing in k, so once the observed ratio drops
below 1 the tail is alternating with decreasing terms and the first
omitted term bounds the remainder.  A small rounding allowance
proportional to the summed absolute values keeps the bound honest where
early terms grow before they decay.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

_EPS = 2.0**-52
_MAX_TERMS = 200_000


@dataclass(frozen=True)
class LimitLawConfig:
    """tol: truncation target for series; x_min: smallest x the density
    contract covers; product_K: factors kept in the product form."""

    tol: float = 1e-12
    x_min: float = 1e-3
    product_K: int = 10**5

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.x_min <= 0:
            raise ValueError("x_min must be positive")
        if self.product_K < 2:
            raise ValueError("product_K must be at least 2")


DEFAULT_CONFIG = LimitLawConfig()


@dataclass(frozen=True)
class SeriesEval:
    value: float
    terms_used: int
    error_bound: float


def _alternating_sum(x: float, weight, tol: float) -> tuple:
    """Sum sum_{k>=2} (-1)^k weight(k) exp(-C(k,2) x) adaptively.

    ``weight(k)`` must be positive with weight(k+1)/weight(k) decreasing
    in k (true for both (2k-1) and (2k-1)C(k,2)); then the full term
    ratio weight(k+1)/weight(k) * exp(-k x) is decreasing, so ratio < 1
    certifies a decreasing alternating tail and the first omitted term
    bounds the truncation error.
    """
    total = 0.0
    abs_acc = 0.0
    k = 2
    while k < _MAX_TERMS:
        a_k = weight(k) * math.exp(-0.5 * k * (k - 1) * x)
        ratio = (weight(k + 1) / weight(k)) * math.exp(-k * x)
        if ratio < 1.0 and a_k < tol:
            slop = 4.0 * _EPS * abs_acc
            return total, k - 2, a_k + slop
        total += a_k if k % 2 == 0 else -a_k
        abs_acc += a_k
        k += 1
    raise RuntimeError(f"series did not reach tol={tol} within {_MAX_TERMS} terms")


def density(x: float, cfg: LimitLawConfig = DEFAULT_CONFIG) -> SeriesEval:
    """Density f(x) of the limit law, for x >= cfg.x_min.

    Below x_min the pre-decreasing prefix of the series grows too long
    for this evaluator's error bookkeeping, so the call is refused
    rather than returning a value without a rigorous bound.
    """
    if x < cfg.x_min:
        raise ValueError(
            f"density is only evaluated for x >= x_min={cfg.x_min}; got {x}"
        )
    value, terms, bound = _alternating_sum(
        x, lambda k: (2 * k - 1) * 0.5 * k * (k - 1), cfg.tol
    )
    if value < 0.0 and -value <= bound:
        value = 0.0  # cancellation noise around a vanishing density
    return SeriesEval(value=value, terms_used=terms, error_bound=bound)


def cdf(x: float, cfg: LimitLawConfig = DEFAULT_CONFIG) -> SeriesEval:
    """CDF F(x) of the limit law, for x >= 0; F(0) = 0."""
    if x < 0:
        raise ValueError(f"cdf requires x >= 0, got {x}")
    if x == 0:
        return SeriesEval(value=0.0, terms_used=0, error_bound=0.0)
    s, terms, bound = _alternating_sum(x, lambda k: 2 * k - 1, cfg.tol)
    value = 1.0 - s
    if value < 0.0 and -value <= bound:
        value = 0.0
    elif value > 1.0 and value - 1.0 <= bound:
        value = 1.0
    return SeriesEval(value=value, terms_used=terms, error_bound=bound)


def charfn_product(t: float, K: int) -> complex:
    """Truncated product prod_{m=2}^{K} C(m,2) / (C(m,2) - it).

    Truncation error is about 2|t|/K in modulus.
    """
    if K < 2:
        raise ValueError(f"K must be at least 2, got {K}")
    if t == 0.0:
        return complex(1.0)  # every factor is exactly 1
    m = np.arange(2, K + 1, dtype=np.float64)
    c = 0.5 * m * (m - 1)
    return complex(np.prod(c / (c - 1j * t)))


def charfn_closed(t: float, cfg: LimitLawConfig = DEFAULT_CONFIG) -> complex:
    """Closed form -2*pi*i*t / cos((pi/2) sqrt(1+8it)), principal branch.

    Near t = 0 numerator and cosine both vanish (the singularity is
    removable with limit 1), so small |t| is routed to the product form.
    """
    if abs(t) < 1e-3:
        return charfn_product(t, cfg.product_K)
    w = 0.5 * cmath.pi * cmath.sqrt(1 + 8j * t)
    if abs(w.imag) > 700.0:
        # |cos w| ~ e^{|Im w|}/2 would overflow; the value is below 1e-300
        return 0j
    return (-2j * math.pi * t) / cmath.cos(w)


def limit_moments(cfg: LimitLawConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """(mean, variance) of the limit law, summed numerically.

    mean = sum 2/(k(k-1)); the partial sum telescopes so the remainder
    past K is exactly 2/K and is added back analytically.  variance =
    sum 4/(k^2 (k-1)^2), with remainder below 4/(3 (K-1)^3).  Both sums
    are checked against their closed values 2 and 4*(pi^2/3 - 3) before
    returning.
    """
    tol = cfg.tol
    # variance remainder past K is under 4/(3 K^3); keep it below tol/4
    K = max(1000, int((16.0 / (3.0 * tol)) ** (1.0 / 3.0)) + 2)
    mean_terms = [2.0 / (k * (k - 1)) for k in range(2, K + 1)]
    mean = math.fsum(mean_terms) + 2.0 / K
    var_terms = [4.0 / (k * k * (k - 1) * (k - 1)) for k in range(2, K + 1)]
    variance = math.fsum(var_terms)
    mean_closed = 2.0
    var_closed = 4.0 * (math.pi**2 / 3.0 - 3.0)
    if abs(mean - mean_closed) > tol or abs(variance - var_closed) > tol:
        raise RuntimeError(
            "numeric moment sums disagree with their closed values: "
            f"mean={mean!r}, variance={variance!r}"
        )
    return mean, variance


def _cdf_array(x: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Vectorized F over an array with x >= 0; plain series, no bounds.

    Internal helper for bulk evaluation (bisection sampling, KS scans);
    the scalar ``cdf`` is the contractual interface.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("cdf requires x >= 0")
    pos = np.where(x > 0, x, np.inf)
    finite = pos[np.isfinite(pos)]
    xmin = float(np.min(finite)) if finite.size else 1.0
    acc = np.zeros_like(x)
    k = 2
    while k < _MAX_TERMS:
        c = 0.5 * k * (k - 1)
        term = (2 * k - 1) * np.exp(-c * pos)
        acc += term if k % 2 == 0 else -term
        if (2 * k + 1) * math.exp(-0.5 * k * (k + 1) * xmin) < tol and (
            (2 * k + 1) / (2 * k - 1)
        ) * math.exp(-k * xmin) < 1.0:
            break
        k += 1
    else:
        raise RuntimeError("vectorized cdf did not converge; x too small")
    out = 1.0 - acc
    return np.where(x > 0, out, 0.0)
