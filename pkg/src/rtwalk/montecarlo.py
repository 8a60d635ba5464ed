"""Trajectory simulation of the lazy restricted transposition walk.

Trajectories run in fixed-size blocks.  Block ``k`` draws from the stream
``SeedSequence(seed, spawn_key=(k,))`` and is always simulated at full width,
so trajectory ``r`` depends only on ``(seed, r)`` and not on ``reps`` or the
number of workers.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .restricted import (
    RestrictedPermutation,
    RestrictionVector,
    TwoStepParams,
    as_generator,
    degree,
    is_allowed_transposition,
    swap,
)

STEP_RULES = ("direct", "rejection")
BLOCK_SIZE = 1024
Z99 = 2.5758293035489004

TWO_STEP_STATS = ("small_fixed_points", "in_A", "first_row_one", "T_survival", "coupons",
                  "distinct_coupons")
GENERAL_STATS = ("first_row_one", "T_survival")


@dataclass(frozen=True)
class SimulationConfig:
    restriction: RestrictionVector
    t: int
    reps: int
    seed: int
    step_rule: str = "direct"
    params: Optional[TwoStepParams] = None
    record: Optional[Tuple[int, ...]] = None
    block_size: int = BLOCK_SIZE
    stats: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if not self.restriction.is_nonempty:
            raise ValueError(self.restriction.emptiness_reason())
        if self.record is not None:
            rec = tuple(sorted(set(int(x) for x in self.record)))
            if rec and (rec[0] < 0 or rec[-1] > self.t):
                raise ValueError("recorded times must lie in [0, t]")
            object.__setattr__(self, "record", rec)
        if self.stats is not None:
            allowed = TWO_STEP_STATS if self.params is not None else GENERAL_STATS
            unknown = [s for s in self.stats if s not in allowed]
            if unknown:
                raise ValueError(f"unknown or unavailable statistics {unknown}")
            object.__setattr__(self, "stats", tuple(self.stats))

    @classmethod
    def make(cls, target: Union[RestrictionVector, TwoStepParams], t: int, reps: int, seed: int,
             step_rule: str = "direct", record: Optional[Sequence[int]] = None,
             stats: Optional[Sequence[str]] = None, block_size: int = BLOCK_SIZE
             ) -> "SimulationConfig":
        params = target if isinstance(target, TwoStepParams) else None
        b = target.vector() if params is not None else target
        return cls(b, t, reps, seed, step_rule, params,
                   tuple(record) if record is not None else None, block_size,
                   tuple(stats) if stats is not None else None)

    @property
    def times(self) -> Tuple[int, ...]:
        return self.record if self.record is not None else tuple(range(self.t + 1))

    @property
    def statistics(self) -> Tuple[str, ...]:
        if self.stats is not None:
            return self.stats
        return TWO_STEP_STATS if self.params is not None else GENERAL_STATS

    def to_json(self) -> dict:
        return {
            "b": self.restriction.to_json(),
            "params": self.params.to_json() if self.params else None,
            "t": self.t,
            "reps": self.reps,
            "seed": self.seed,
            "step_rule": self.step_rule,
            "record": list(self.record) if self.record is not None else None,
            "block_size": self.block_size,
            "stats": list(self.statistics),
        }


@dataclass
class StatisticSeries:
    times: np.ndarray
    mean: Dict[str, np.ndarray]
    variance: Dict[str, np.ndarray]
    count: Dict[str, np.ndarray]
    ci99: Dict[str, np.ndarray]
    first_column_times: np.ndarray = field(repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "statistic", "mean", "ci99"])
        for name in self.mean:
            for k, t in enumerate(self.times):
                w.writerow([int(t), name, repr(float(self.mean[name][k])),
                            repr(float(self.ci99[name][k]))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "times": [int(t) for t in self.times],
            "statistics": {
                name: {
                    "mean": [float(x) for x in self.mean[name]],
                    "variance": [float(x) for x in self.variance[name]],
                    "count": [int(x) for x in self.count[name]],
                    "ci99": [float(x) for x in self.ci99[name]],
                }
                for name in self.mean
            },
        }


# ---- single steps ----

def step_with_pair(p: RestrictedPermutation, rng, rule: str = "direct"
                   ) -> Tuple[RestrictedPermutation, Tuple[int, int]]:
    """One lazy step and the 1-based row pair that produced it (``i == j`` is a hold)."""
    rng = as_generator(rng)
    n = p.n
    if rule == "rejection":
        while True:
            i, j = (int(x) + 1 for x in rng.integers(n, size=2))
            if i == j or is_allowed_transposition(p, i, j):
                break
    elif rule == "direct":
        pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)
                 if is_allowed_transposition(p, i, j)]
        u = int(rng.integers(n + 2 * len(pairs)))
        if u < n:
            i = j = u + 1
        else:
            i, j = pairs[(u - n) // 2]
    else:
        raise ValueError(f"rule must be one of {STEP_RULES}")
    if i == j:
        return p, (i, j)
    return RestrictedPermutation._trusted(swap(p.sigma, i, j), p.restriction), (i, j)


def step(p: RestrictedPermutation, rng, rule: str = "direct") -> RestrictedPermutation:
    return step_with_pair(p, rng, rule)[0]


# ---- vectorised engine ----

def _pairs_rejection(S: np.ndarray, low: np.ndarray, rng: np.random.Generator
                     ) -> Tuple[np.ndarray, np.ndarray]:
    width, n = S.shape
    flat = S.ravel()
    base = np.arange(width, dtype=np.int64) * n
    i = np.empty(width, dtype=np.int64)
    j = np.empty(width, dtype=np.int64)
    pending = np.arange(width)
    while pending.size:
        x = rng.integers(n * n, size=pending.size, dtype=np.int64)
        ii, jj = np.divmod(x, n)
        at = base[pending]
        ok = (ii == jj) | ((flat[at + jj] >= low[ii]) & (flat[at + ii] >= low[jj]))
        done = pending[ok]
        i[done] = ii[ok]
        j[done] = jj[ok]
        pending = pending[~ok]
    return i, j


def _pairs_direct(S: np.ndarray, low: np.ndarray, den: int, rng: np.random.Generator
                  ) -> Tuple[np.ndarray, np.ndarray]:
    width, n = S.shape
    flat = S.ravel()
    base = np.arange(width, dtype=np.int64) * n
    u = rng.integers(den, size=width, dtype=np.int64)
    hold = u < n
    i = np.where(hold, u, 0)
    j = i.copy()
    pending = np.nonzero(~hold)[0]
    while pending.size:
        # ordered pair of distinct rows, encoded as one draw
        x = rng.integers(n * (n - 1), size=pending.size, dtype=np.int64)
        ii, jj = np.divmod(x, n - 1)
        jj += jj >= ii
        at = base[pending]
        ok = (flat[at + jj] >= low[ii]) & (flat[at + ii] >= low[jj])
        done = pending[ok]
        i[done] = ii[ok]
        j[done] = jj[ok]
        pending = pending[~ok]
    return i, j


@dataclass
class _BlockResult:
    sums: Dict[str, np.ndarray]
    sumsq: Dict[str, np.ndarray]
    first_column_times: np.ndarray
    final_states: Optional[np.ndarray]


def _run_block(cfg: SimulationConfig, block: int, width: int, keep_states: bool) -> _BlockResult:
    seq = np.random.SeedSequence(cfg.seed, spawn_key=(block,))
    rng = np.random.Generator(np.random.PCG64(seq))
    b = cfg.restriction
    n = b.n
    den = n + 2 * degree(b)
    low = np.asarray(b.b, dtype=np.int64) - 1
    size = cfg.block_size
    S = np.tile(np.arange(n, dtype=np.int64), (size, 1))
    flat = S.ravel()
    rows = np.arange(size)
    base = rows * n
    pos_one = np.zeros(size, dtype=np.int64)
    hit = np.full(size, -1, dtype=np.int64)
    params = cfg.params
    g = params.g if params else 0
    f = params.f if params else 0
    small = np.arange(g)
    coupons = np.zeros(size, dtype=np.int64)
    touched = np.zeros((size, g), dtype=bool)

    times = cfg.times
    slot = {t: k for k, t in enumerate(times)}
    names = cfg.statistics
    track_coupons = "coupons" in names or "distinct_coupons" in names
    sums = {name: np.zeros(len(times), dtype=np.int64) for name in names}
    sumsq = {name: np.zeros(len(times), dtype=np.int64) for name in names}

    def record(t: int) -> None:
        k = slot.get(t)
        if k is None:
            return
        vals = {
            "first_row_one": (S[:width, 0] == 0).astype(np.int64),
            "T_survival": (hit[:width] < 0).astype(np.int64),
        }
        if params is not None:
            fixed = (S[:width, :g] == small).sum(axis=1)
            vals["small_fixed_points"] = fixed
            vals["in_A"] = (fixed > 0).astype(np.int64)
            vals["coupons"] = coupons[:width]
            vals["distinct_coupons"] = touched[:width].sum(axis=1)
        for name in names:
            v = vals[name]
            sums[name][k] += int(v.sum())
            sumsq[name][k] += int((v * v).sum())

    record(0)
    for t in range(1, cfg.t + 1):
        if cfg.step_rule == "rejection":
            i, j = _pairs_rejection(S, low, rng)
        else:
            i, j = _pairs_direct(S, low, den, rng)
        uses_one = (i == pos_one) | (j == pos_one)
        hit[(hit < 0) & uses_one] = t
        pos_one = np.where(i == pos_one, j, np.where(j == pos_one, i, pos_one))
        if track_coupons:
            ci = (i < g) & (j < f)
            cj = (j < g) & (i < f)
            coupons += ci
            coupons += cj
            touched[rows[ci], i[ci]] = True
            touched[rows[cj], j[cj]] = True
        at_i = base + i
        at_j = base + j
        vi = flat[at_i]
        flat[at_i] = flat[at_j]
        flat[at_j] = vi
        record(t)
    final = (S[:width] + 1).copy() if keep_states else None
    return _BlockResult(sums, sumsq, hit[:width].copy(), final)


def _blocks(cfg: SimulationConfig) -> List[Tuple[int, int]]:
    out = []
    for k in range(0, -(-cfg.reps // cfg.block_size)):
        out.append((k, min(cfg.block_size, cfg.reps - k * cfg.block_size)))
    return out


def _run_block_star(args) -> _BlockResult:
    return _run_block(*args)


def _run_all(cfg: SimulationConfig, workers: Optional[int], keep_states: bool) -> List[_BlockResult]:
    jobs = [(cfg, k, width, keep_states) for k, width in _blocks(cfg)]
    if workers is None:
        workers = 1
    if workers <= 1 or len(jobs) == 1:
        return [_run_block(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_run_block_star, jobs))


def run_statistics(cfg: SimulationConfig, workers: Optional[int] = 1) -> StatisticSeries:
    """Means, variances and 99% half-widths of each statistic at the recorded times.

    Statistics: ``small_fixed_points`` (rows ``i <= g`` with ``sigma(i) = i``),
    ``in_A`` (at least one such row), ``first_row_one`` (``sigma(1) = 1``),
    ``T_survival`` (the value 1 has not yet been moved, a hold on its row
    counting as a move), ``coupons`` (running tally of small rows paired with
    a row ``<= f``) and ``distinct_coupons`` (how many small rows have been
    collected at least once).  Without two-step parameters only the first-row
    statistics are kept.
    """
    results = _run_all(cfg, workers, keep_states=False)
    names = cfg.statistics
    times = np.asarray(cfg.times, dtype=np.int64)
    reps = cfg.reps
    mean, var, count, ci = {}, {}, {}, {}
    for name in names:
        s = sum(r.sums[name] for r in results)
        sq = sum(r.sumsq[name] for r in results)
        m = s / reps
        v = (sq - s * m) / (reps - 1) if reps > 1 else np.zeros_like(m)
        v = np.maximum(v, 0.0)
        mean[name] = m
        var[name] = v
        count[name] = np.full(times.size, reps, dtype=np.int64)
        ci[name] = Z99 * np.sqrt(v / reps)
    hits = np.concatenate([r.first_column_times for r in results])
    return StatisticSeries(times, mean, var, count, ci, hits)


def simulate_final_states(cfg: SimulationConfig, workers: Optional[int] = 1) -> np.ndarray:
    """``(reps, n)`` array of 1-based states at time ``cfg.t``."""
    results = _run_all(cfg, workers, keep_states=True)
    return np.concatenate([r.final_states for r in results], axis=0)


def coupon_collector_prediction(params: TwoStepParams, t: float) -> Tuple[float, float]:
    """Mean coupon tally after ``t`` steps and an upper bound on its variance."""
    if params.g > params.f:
        raise ValueError("needs g <= f")
    den = params.denominator
    fg = params.f * params.g
    return t * 2 * fg / den, t * 4 * fg / den


def coupon_time(params: TwoStepParams, c: float) -> float:
    """Time at which the predicted tally equals ``g log g - (c + log r) g`` with ``r = g/f``.

    Its ``c`` offset is twice the one in the lower cutoff time.
    """
    f, g = params.f, params.g
    den = params.denominator
    return den * (math.log(g) - (c + math.log(g / f))) / (2 * f)


def default_workers() -> int:
    return os.cpu_count() or 1
