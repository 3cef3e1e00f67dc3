"""Goodness of fit between simulated T/n samples and the limit law.

The yardstick is the Kolmogorov-Smirnov statistic against the limit CDF
with a Dvoretzky-Kiefer-Wolfowitz band.  Convergence of T/n comes with
no usable rate, so the pass threshold adds a finite-n allowance on top
of the DKW epsilon; the default 0.04 was calibrated against the exact
chain law at n = 400, whose true KS distance to the limit is well below
it (the calibration is pinned by a test).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .limitlaw import DEFAULT_CONFIG, LimitLawConfig, _cdf_array, cdf
from .montecarlo import SimSummary

#: extra KS slack for being at finite n (on top of the DKW epsilon)
DEFAULT_FINITE_N_ALLOWANCE = 0.04
#: |mean T/n - 2| tolerance
DEFAULT_MEAN_TOLERANCE = 0.15
#: acceptance window for mean N / sqrt(2 pi n)
EN_RATIO_WINDOW = (0.85, 1.15)


def ks_statistic(sorted_samples, cdf_fn) -> float:
    """sup-norm distance between the empirical CDF of ``sorted_samples``
    (ascending) and the reference ``cdf_fn``."""
    xs = np.asarray(sorted_samples, dtype=np.float64)
    if xs.size == 0:
        raise ValueError("ks_statistic needs at least one sample")
    if np.any(np.diff(xs) < 0):
        raise ValueError("samples must be sorted ascending")
    n = xs.size
    best = 0.0
    for i in range(n):
        f = cdf_fn(float(xs[i]))
        hi = abs((i + 1) / n - f)
        lo = abs(i / n - f)
        if hi > best:
            best = hi
        if lo > best:
            best = lo
    return best


def dkw_epsilon(num_samples: int, alpha: float) -> float:
    """DKW band half-width sqrt(ln(2/alpha) / (2 N)) at confidence 1-alpha.

    For tiny N the value exceeds 1 and the band is vacuous; the raw
    value is returned and callers should treat >= 1 as uninformative.
    """
    if num_samples < 1:
        raise ValueError(f"num_samples must be positive, got {num_samples}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * num_samples))


@dataclass(frozen=True)
class Verdict:
    name: str
    value: float
    passed: bool
    thresholds: dict

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "passed": self.passed,
            "thresholds": dict(self.thresholds),
        }


@dataclass(frozen=True)
class FitReport:
    n: int
    samples: int
    seed: int
    alpha: float
    ks_statistic: float
    dkw_epsilon: float
    mean_error: float
    en_ratio: float
    verdicts: tuple

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def passed(self, checks=("ks", "mean", "en")) -> bool:
        wanted = set(checks)
        return all(v.passed for v in self.verdicts if v.name in wanted)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "samples": self.samples,
            "seed": self.seed,
            "alpha": self.alpha,
            "ks_statistic": self.ks_statistic,
            "dkw_epsilon": self.dkw_epsilon,
            "mean_error": self.mean_error,
            "en_ratio": self.en_ratio,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }


def _sketch_ks(sketch: dict, samples: int, law: LimitLawConfig) -> float:
    """KS against the limit CDF evaluated at sketch bin edges.

    Counts below an edge are exact, so this differs from the full-sample
    statistic by at most the sketch's documented epsilon.
    """
    bpu = sketch["bins_per_unit"]
    items = sorted(sketch["counts"].items())
    edges = []
    ecdf_below = []
    ecdf_through = []
    acc = 0
    for b, c in items:
        edges.append(b / bpu)
        ecdf_below.append(acc / samples)
        acc += c
        edges.append((b + 1) / bpu)
        ecdf_through.append(acc / samples)
    ref_left = _cdf_array(np.asarray(edges[0::2]))
    ref_right = _cdf_array(np.asarray(edges[1::2]))
    d = 0.0
    for i in range(len(items)):
        d = max(d, abs(ecdf_below[i] - ref_left[i]), abs(ecdf_through[i] - ref_right[i]))
    return d


def fit_report(
    summary: SimSummary,
    law: LimitLawConfig = DEFAULT_CONFIG,
    alpha: float = 0.01,
    allowance: float = DEFAULT_FINITE_N_ALLOWANCE,
) -> FitReport:
    """Compare a simulation summary against the limit law.

    Checks: KS(T/n, F) <= dkw_epsilon + allowance (sketch mode adds the
    sketch epsilon), |mean T/n - 2| <= 0.15, and mean N / sqrt(2 pi n)
    within [0.85, 1.15].
    """
    eps = dkw_epsilon(summary.samples, alpha)
    ks_threshold = eps + allowance
    if summary.t_over_n is not None:
        ks = ks_statistic(summary.t_over_n, lambda x: cdf(x, law).value)
    elif summary.sketch is not None:
        ks = _sketch_ks(summary.sketch, summary.samples, law)
        ks_threshold += summary.sketch["epsilon"]
    else:
        raise ValueError("summary carries neither samples nor a sketch")
    mean_error = abs(summary.t_over_n_mean - 2.0)
    en_ratio = summary.n_visited_mean / math.sqrt(2.0 * math.pi * summary.n)
    lo, hi = EN_RATIO_WINDOW
    verdicts = (
        Verdict(
            name="ks",
            value=ks,
            passed=ks <= ks_threshold,
            thresholds={"max": ks_threshold, "dkw_epsilon": eps, "allowance": allowance},
        ),
        Verdict(
            name="mean",
            value=summary.t_over_n_mean,
            passed=mean_error <= DEFAULT_MEAN_TOLERANCE,
            thresholds={"target": 2.0, "tolerance": DEFAULT_MEAN_TOLERANCE},
        ),
        Verdict(
            name="en",
            value=en_ratio,
            passed=lo <= en_ratio <= hi,
            thresholds={"min": lo, "max": hi},
        ),
    )
    return FitReport(
        n=summary.n,
        samples=summary.samples,
        seed=summary.seed,
        alpha=alpha,
        ks_statistic=ks,
        dkw_epsilon=eps,
        mean_error=mean_error,
        en_ratio=en_ratio,
        verdicts=verdicts,
    )


def inverse_cdf(u, law: LimitLawConfig = DEFAULT_CONFIG, tol: float = 1e-10) -> np.ndarray:
    """Quantiles of the limit law by vectorized bisection on the CDF.

    Self-test utility: independent of the Monte Carlo path, it turns
    uniforms into exact-law samples for validating the KS machinery.
    F(0.02) < 1e-80, so the bracket [0.02, 60] covers any u in (0, 1)
    representable as a float.
    """
    u = np.asarray(u, dtype=np.float64)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u must lie strictly inside (0, 1)")
    lo = np.full_like(u, 0.02)
    hi = np.full_like(u, 60.0)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        below = _cdf_array(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)
