"""Trajectory samplers and the deterministic parallel experiment driver.

Two distribution-identical samplers:

* ``direct`` draws an explicit uniform function table each step, composes
  by table lookup, and watches the image set shrink (cost ~ n per step);
* ``chain`` simulates only the range size: from size m, the next size is
  the number of distinct values among m uniform draws from [n]
  (cost ~ m per step, about 2n*H_n draws over a whole trajectory).

Trajectory i draws from a SplitMix64 stream keyed by (seed, i), where i
is the global trajectory index.  Workers receive contiguous index
slices and write into disjoint slices of preallocated arrays, and all
aggregation happens afterwards on the full arrays, so an experiment's
output is bit-identical for any worker count.

The hot loops are numba kernels (pure-Python fallbacks reproduce the
same streams exactly, just slowly).  Each kernel call owns its scratch
buffers; the distinct-count step marks a reusable epoch-stamped array
instead of clearing it, so a step costs O(m) with no allocation churn.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ResourceCeilingError
from .exact import SplitSpec
from .rng import MASK64, RandomStream

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

#: function tables need n machine words per step
DIRECT_SAMPLER_CEILING = 100_000
#: the chain sampler only needs the epoch scratch of size n
CHAIN_SAMPLER_CEILING = 100_000_000
#: above this many samples SimSummary stores a histogram sketch of T/n
SKETCH_THRESHOLD = 10**6

#: sketch resolution; the empirical CDF is exact at bin edges and the
#: limit density is below 0.54, so CDF queries are off by < 0.54/bin
SKETCH_BINS_PER_UNIT = 4096
SKETCH_MAX_UNITS = 64
SKETCH_EPSILON = 0.54 / SKETCH_BINS_PER_UNIT


@dataclass(frozen=True)
class TrajectorySample:
    """One simulated run.

    ``t`` is the first composition step with a singleton range.  The
    sojourn count of state m counts steps whose range size is exactly m,
    so sum(sojourns) = t - 1 (if the very first composition is already
    constant, t = 1 and no state >= 2 is ever occupied).  ``t1``/``t2``
    split the sojourns at the threshold xi; ``a_occurred`` records
    whether every state in 2..xi was visited.
    """

    t: int
    sojourns: dict
    visited: frozenset
    n_visited: int
    t1: int
    t2: int
    a_occurred: bool


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    samples: int
    seed: int
    sampler: str = "chain"
    split: Optional[SplitSpec] = None
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.samples < 1:
            raise ValueError(f"samples must be positive, got {self.samples}")
        if self.workers < 1:
            raise ValueError(f"workers must be positive, got {self.workers}")
        if self.sampler not in ("chain", "direct"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.sampler == "direct" and self.n > DIRECT_SAMPLER_CEILING:
            raise ResourceCeilingError(
                f"direct sampler holds function tables of size n={self.n}; "
                f"ceiling is {DIRECT_SAMPLER_CEILING}, use sampler='chain'"
            )
        if self.n > CHAIN_SAMPLER_CEILING:
            raise ResourceCeilingError(
                f"n={self.n} exceeds the chain-sampler ceiling "
                f"{CHAIN_SAMPLER_CEILING}"
            )
        if self.split is None:
            object.__setattr__(self, "split", SplitSpec.default_for(self.n))
        if self.n >= 2 and self.split.xi > self.n:
            raise ValueError(f"xi={self.split.xi} exceeds n={self.n}")


@dataclass(frozen=True)
class SimSummary:
    """Deterministic aggregate of an experiment.

    ``t_over_n`` holds the sorted T/n values, or None when the run was
    large enough that only the histogram ``sketch`` is kept (counts per
    bin of width 1/SKETCH_BINS_PER_UNIT; the empirical CDF is exact at
    bin edges, off by at most SKETCH_EPSILON in between).
    """

    n: int
    samples: int
    seed: int
    sampler: str
    xi: int
    t_over_n: Optional[tuple]
    sketch: Optional[dict]
    t_over_n_mean: float
    t_over_n_var: float
    t2_over_n_mean: float
    a_frequency: float
    n_visited_mean: float
    n_visited_var: float
    visit_frequency: dict

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "samples": self.samples,
            "seed": self.seed,
            "sampler": self.sampler,
            "xi": self.xi,
            "t_over_n_mean": self.t_over_n_mean,
            "t_over_n_var": self.t_over_n_var,
            "t2_over_n_mean": self.t2_over_n_mean,
            "a_frequency": self.a_frequency,
            "n_visited_mean": self.n_visited_mean,
            "n_visited_var": self.n_visited_var,
            "visit_frequency": {str(m): f for m, f in self.visit_frequency.items()},
        }
        if self.t_over_n is not None:
            out["t_over_n"] = list(self.t_over_n)
        if self.sketch is not None:
            out["sketch"] = {
                "bins_per_unit": self.sketch["bins_per_unit"],
                "epsilon": self.sketch["epsilon"],
                "counts": {str(k): v for k, v in self.sketch["counts"].items()},
            }
        return out


def distinct_count_sample(n: int, m: int, rng: RandomStream) -> int:
    """Number of distinct values among m independent uniform draws from [n].

    Distributed exactly as the transition row of chain state m.
    """
    if not 1 <= m <= n:
        raise ValueError(f"require 1 <= m <= n, got m={m}, n={n}")
    seen = set()
    for _ in range(m):
        seen.add(rng.next_below(n))
    return len(seen)


def _finish_sample(n: int, split: SplitSpec, t: int, sojourns: dict) -> TrajectorySample:
    xi = split.xi
    visited = frozenset(sojourns)
    t1 = sum(c for m, c in sojourns.items() if m <= xi)
    t2 = (t - 1) - t1
    a = sum(1 for m in visited if m <= xi) == xi - 1
    return TrajectorySample(
        t=t,
        sojourns=sojourns,
        visited=visited,
        n_visited=len(visited),
        t1=t1,
        t2=t2,
        a_occurred=a,
    )


def sample_chain(n: int, split: Optional[SplitSpec], rng: RandomStream) -> TrajectorySample:
    """Simulate one trajectory through the range-size chain only."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    split = split or SplitSpec.default_for(n)
    sojourns: dict = {}
    m = distinct_count_sample(n, n, rng)
    t = 1
    while m >= 2:
        sojourns[m] = sojourns.get(m, 0) + 1
        m = distinct_count_sample(n, m, rng)
        t += 1
    return _finish_sample(n, split, t, sojourns)


def sample_direct(n: int, split: Optional[SplitSpec], rng: RandomStream) -> TrajectorySample:
    """Simulate one trajectory with explicit function tables.

    Each step draws a full uniform table of size n and composes it onto
    the running image; the image set is tracked explicitly.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > DIRECT_SAMPLER_CEILING:
        raise ResourceCeilingError(
            f"direct sampler ceiling is {DIRECT_SAMPLER_CEILING}, got n={n}"
        )
    split = split or SplitSpec.default_for(n)
    table = [rng.next_below(n) for _ in range(n)]
    image = list(dict.fromkeys(table))
    t = 1
    sojourns: dict = {}
    while len(image) >= 2:
        m = len(image)
        sojourns[m] = sojourns.get(m, 0) + 1
        table = [rng.next_below(n) for _ in range(n)]
        image = list(dict.fromkeys(table[x] for x in image))
        t += 1
    return _finish_sample(n, split, t, sojourns)


# ---------------------------------------------------------------------------
# jitted batch kernels
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    _U0 = np.uint64(0)
    _U1 = np.uint64(1)
    _UGAMMA = np.uint64(0x9E3779B97F4A7C15)
    _USTRIDE = np.uint64(0xD1342543DE82EF95)
    _UC1 = np.uint64(0xBF58476D1CE4E5B9)
    _UC2 = np.uint64(0x94D049BB133111EB)
    _UMAX = np.uint64(0xFFFFFFFFFFFFFFFF)

    @njit(cache=True, nogil=True)
    def _mix64(z):
        z = (z ^ (z >> np.uint64(30))) * _UC1
        z = (z ^ (z >> np.uint64(27))) * _UC2
        return z ^ (z >> np.uint64(31))

    @njit(cache=True, nogil=True)
    def _stream_state(seed, index):
        acc = _mix64(seed + _UGAMMA)
        return _mix64(acc ^ (index * _USTRIDE))

    @njit(cache=True, nogil=True)
    def _next_u64(state):
        state = state + _UGAMMA
        return _mix64(state), state

    @njit(cache=True, nogil=True)
    def _next_below(state, bound):
        rem = (_UMAX % bound + _U1) % bound
        limit = _UMAX - rem
        while True:
            x, state = _next_u64(state)
            if x <= limit:
                return x % bound, state

    @njit(cache=True, nogil=True)
    def _distinct_step(state, nb, m, scratch, epoch):
        d = 0
        for _ in range(m):
            v, state = _next_below(state, nb)
            if scratch[v] != epoch:
                scratch[v] = epoch
                d += 1
        return d, state

    @njit(cache=True, nogil=True)
    def _chain_batch(n, xi, seed, start, stop, t_out, t1_out, t2_out,
                     nvis_out, a_out, mask_out):
        scratch = np.zeros(n, np.int64)
        nb = np.uint64(n)
        epoch = 0
        for i in range(start, stop):
            state = _stream_state(seed, np.uint64(i))
            epoch += 1
            m, state = _distinct_step(state, nb, n, scratch, epoch)
            t = 1
            t1 = 0
            t2 = 0
            nvis = 0
            nvis_lo = 0
            mask = _U0
            prev = 0
            while m >= 2:
                if m != prev:  # the jump chain never revisits a state
                    nvis += 1
                    if m <= xi:
                        nvis_lo += 1
                    if m <= 64:
                        mask |= _U1 << np.uint64(m - 2)
                    prev = m
                if m <= xi:
                    t1 += 1
                else:
                    t2 += 1
                epoch += 1
                m, state = _distinct_step(state, nb, m, scratch, epoch)
                t += 1
            t_out[i] = t
            t1_out[i] = t1
            t2_out[i] = t2
            nvis_out[i] = nvis
            a_out[i] = 1 if nvis_lo == xi - 1 else 0
            mask_out[i] = mask

    @njit(cache=True, nogil=True)
    def _direct_batch(n, xi, seed, start, stop, t_out, t1_out, t2_out,
                      nvis_out, a_out, mask_out):
        scratch = np.zeros(n, np.int64)
        ftab = np.zeros(n, np.int64)
        cur = np.zeros(n, np.int64)
        nxt = np.zeros(n, np.int64)
        nb = np.uint64(n)
        epoch = 0
        for i in range(start, stop):
            state = _stream_state(seed, np.uint64(i))
            epoch += 1
            m = 0
            for x in range(n):
                v, state = _next_below(state, nb)
                ftab[x] = v
                if scratch[v] != epoch:
                    scratch[v] = epoch
                    cur[m] = v
                    m += 1
            t = 1
            t1 = 0
            t2 = 0
            nvis = 0
            nvis_lo = 0
            mask = _U0
            prev = 0
            while m >= 2:
                if m != prev:
                    nvis += 1
                    if m <= xi:
                        nvis_lo += 1
                    if m <= 64:
                        mask |= _U1 << np.uint64(m - 2)
                    prev = m
                if m <= xi:
                    t1 += 1
                else:
                    t2 += 1
                for x in range(n):
                    v, state = _next_below(state, nb)
                    ftab[x] = v
                epoch += 1
                mm = 0
                for j in range(m):
                    y = ftab[cur[j]]
                    if scratch[y] != epoch:
                        scratch[y] = epoch
                        nxt[mm] = y
                        mm += 1
                for j in range(mm):
                    cur[j] = nxt[j]
                m = mm
                t += 1
            t_out[i] = t
            t1_out[i] = t1
            t2_out[i] = t2
            nvis_out[i] = nvis
            a_out[i] = 1 if nvis_lo == xi - 1 else 0
            mask_out[i] = mask

    @njit(cache=True, nogil=True)
    def _distinct_counts(n, m, count, seed, out):
        scratch = np.zeros(n, np.int64)
        nb = np.uint64(n)
        epoch = 0
        for i in range(count):
            state = _stream_state(seed, np.uint64(i))
            epoch += 1
            d, state = _distinct_step(state, nb, m, scratch, epoch)
            out[i] = d


def distinct_count_batch(n: int, m: int, count: int, seed: int) -> np.ndarray:
    """``count`` independent distinct-value counts, one per stream index."""
    if not 1 <= m <= n:
        raise ValueError(f"require 1 <= m <= n, got m={m}, n={n}")
    out = np.zeros(count, np.int64)
    if HAVE_NUMBA:
        _distinct_counts(n, m, count, np.uint64(seed & MASK64), out)
    else:
        for i in range(count):
            out[i] = distinct_count_sample(n, m, RandomStream(seed, i))
    return out


def _worker_slices(samples: int, workers: int) -> list[tuple[int, int]]:
    parts = min(workers, samples)
    step = samples // parts
    extra = samples % parts
    bounds = []
    lo = 0
    for w in range(parts):
        hi = lo + step + (1 if w < extra else 0)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def _mask_from_visited(visited) -> int:
    mask = 0
    for m in visited:
        if m <= 64:
            mask |= 1 << (m - 2)
    return mask


def run_experiment(cfg: ExperimentConfig, sketch_threshold: int = SKETCH_THRESHOLD) -> SimSummary:
    """Run cfg.samples trajectories and aggregate deterministically.

    Identical configs give bit-identical summaries for any worker count:
    trajectory i depends only on (cfg.seed, i), workers fill disjoint
    array slices, and the reduction runs single-threaded afterwards.
    Any worker failure aborts the whole experiment.
    """
    samples = cfg.samples
    xi = cfg.split.xi
    t_arr = np.zeros(samples, np.int64)
    t1_arr = np.zeros(samples, np.int64)
    t2_arr = np.zeros(samples, np.int64)
    nvis_arr = np.zeros(samples, np.int32)
    a_arr = np.zeros(samples, np.uint8)
    mask_arr = np.zeros(samples, np.uint64)

    if HAVE_NUMBA:
        kernel = _chain_batch if cfg.sampler == "chain" else _direct_batch
        seed = np.uint64(cfg.seed & MASK64)
        args = (t_arr, t1_arr, t2_arr, nvis_arr, a_arr, mask_arr)
        slices = _worker_slices(samples, cfg.workers)
        if len(slices) == 1:
            kernel(cfg.n, xi, seed, 0, samples, *args)
        else:
            with ThreadPoolExecutor(max_workers=len(slices)) as pool:
                futures = [
                    pool.submit(kernel, cfg.n, xi, seed, lo, hi, *args)
                    for lo, hi in slices
                ]
                for fut in futures:
                    fut.result()  # re-raise worker failures, no partial output
    else:
        sampler = sample_chain if cfg.sampler == "chain" else sample_direct
        for i in range(samples):
            s = sampler(cfg.n, cfg.split, RandomStream(cfg.seed, i))
            t_arr[i] = s.t
            t1_arr[i] = s.t1
            t2_arr[i] = s.t2
            nvis_arr[i] = s.n_visited
            a_arr[i] = 1 if s.a_occurred else 0
            mask_arr[i] = _mask_from_visited(s.visited)

    return _summarize(cfg, t_arr, t2_arr, nvis_arr, a_arr, mask_arr, sketch_threshold)


def _summarize(cfg, t_arr, t2_arr, nvis_arr, a_arr, mask_arr, sketch_threshold):
    n = cfg.n
    samples = cfg.samples
    sorted_t = np.sort(t_arr)
    t_over_n = None
    sketch = None
    if samples <= sketch_threshold:
        t_over_n = tuple((sorted_t / n).tolist())
    else:
        idx = np.minimum(
            (sorted_t * SKETCH_BINS_PER_UNIT) // n,
            SKETCH_BINS_PER_UNIT * SKETCH_MAX_UNITS - 1,
        )
        bins, counts = np.unique(idx, return_counts=True)
        sketch = {
            "bins_per_unit": SKETCH_BINS_PER_UNIT,
            "epsilon": SKETCH_EPSILON,
            "counts": {int(b): int(c) for b, c in zip(bins, counts)},
        }
    mean_t = int(t_arr.sum()) / (samples * n)
    var_t = float(np.var(t_arr / n, ddof=1)) if samples > 1 else 0.0
    visit_frequency = {}
    for m in range(2, min(64, n) + 1):
        bit = np.uint64(1 << (m - 2))
        visit_frequency[m] = int(np.count_nonzero(mask_arr & bit)) / samples
    return SimSummary(
        n=n,
        samples=samples,
        seed=cfg.seed,
        sampler=cfg.sampler,
        xi=cfg.split.xi,
        t_over_n=t_over_n,
        sketch=sketch,
        t_over_n_mean=mean_t,
        t_over_n_var=var_t,
        t2_over_n_mean=int(t2_arr.sum()) / (samples * n),
        a_frequency=int(a_arr.sum()) / samples,
        n_visited_mean=float(np.mean(nvis_arr)),
        n_visited_var=float(np.var(nvis_arr, ddof=1)) if samples > 1 else 0.0,
        visit_frequency=visit_frequency,
    )
