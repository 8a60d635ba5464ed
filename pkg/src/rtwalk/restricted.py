"""Permutations under one-sided interval restrictions.

A restriction vector ``b`` allows row ``i`` to hold any value in ``[b_i, n]``.
The set of compliant permutations is written ``S(b)`` below.  Rows and values
are 1-based throughout the public API.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CapExceededError, EmptyWalkError

DEFAULT_ENUMERATION_CAP = 10**7

SeedLike = Union[None, int, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class RestrictionVector:
    """Sorted lower bounds ``b_1 <= ... <= b_n``.

    Unsorted input is sorted on construction; row order does not change the
    walk up to relabelling.  With ``strict=False`` a vector whose permutation
    set is empty is still representable, so callers can report why.

    >>> RestrictionVector((3, 1, 1, 3, 1)).b
    (1, 1, 1, 3, 3)
    """

    b: Tuple[int, ...]
    strict: InitVar[bool] = True

    def __post_init__(self, strict: bool) -> None:
        b = tuple(sorted(int(x) for x in self.b))
        n = len(b)
        if n == 0:
            raise ValueError("restriction vector must be nonempty")
        for x in b:
            if not 1 <= x <= n:
                raise ValueError(f"entries must lie in [1, {n}], got {x}")
        object.__setattr__(self, "b", b)
        if strict and not self.is_nonempty:
            raise EmptyWalkError(self.emptiness_reason())

    @property
    def n(self) -> int:
        return len(self.b)

    @property
    def is_nonempty(self) -> bool:
        return all(x <= i for i, x in enumerate(self.b, start=1))

    def emptiness_reason(self) -> Optional[str]:
        for i, x in enumerate(self.b, start=1):
            if x > i:
                return (f"row {i} needs a value >= {x}, but only {i - 1} rows "
                        f"before it leave room; no permutation satisfies b={list(self.b)}")
        return None

    def to_json(self) -> List[int]:
        return list(self.b)

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.b)) + ")"


@dataclass(frozen=True)
class TwoStepParams:
    """``f`` rows unrestricted, the remaining ``n - f`` rows need values > ``g``."""

    n: int
    f: int
    g: int

    def __post_init__(self) -> None:
        if not 1 <= self.n:
            raise ValueError("n must be positive")
        if not 1 <= self.f <= self.n:
            raise ValueError(f"need 1 <= f <= n, got f={self.f}, n={self.n}")
        if not 1 <= self.g:
            raise ValueError("g must be positive")
        if self.g > self.f:
            raise EmptyWalkError(f"g={self.g} > f={self.f}: rows f+1..n cannot all be filled")

    @property
    def delta(self) -> int:
        n, f, g = self.n, self.f, self.g
        return (n * n - n) // 2 - n * g + f * g

    @property
    def denominator(self) -> int:
        """``n + 2*delta``, the number of equally likely ordered pair draws that end a step."""
        n, f, g = self.n, self.f, self.g
        return n * n - 2 * n * g + 2 * f * g

    def vector(self) -> RestrictionVector:
        return two_step_vector(self)

    def to_json(self) -> dict:
        return {"n": self.n, "f": self.f, "g": self.g}


@dataclass(frozen=True)
class RestrictedPermutation:
    """One-line notation ``sigma`` (1-based values) plus the restriction it obeys."""

    sigma: Tuple[int, ...]
    restriction: RestrictionVector = field(compare=False)

    def __post_init__(self) -> None:
        sigma = tuple(int(x) for x in self.sigma)
        n = self.restriction.n
        if sorted(sigma) != list(range(1, n + 1)):
            raise ValueError(f"{sigma} is not a permutation of 1..{n}")
        for i, (v, lo) in enumerate(zip(sigma, self.restriction.b), start=1):
            if v < lo:
                raise ValueError(f"sigma({i})={v} < b_{i}={lo}")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def _trusted(cls, sigma: Tuple[int, ...], restriction: RestrictionVector) -> "RestrictedPermutation":
        obj = object.__new__(cls)
        object.__setattr__(obj, "sigma", sigma)
        object.__setattr__(obj, "restriction", restriction)
        return obj

    @classmethod
    def identity(cls, restriction: RestrictionVector) -> "RestrictedPermutation":
        return cls(tuple(range(1, restriction.n + 1)), restriction)

    @property
    def n(self) -> int:
        return len(self.sigma)

    def one_line(self) -> str:
        sep = "" if self.n < 10 else ","
        return sep.join(map(str, self.sigma))


def two_step_vector(params: TwoStepParams) -> RestrictionVector:
    """``(1,...,1, g+1,...,g+1)`` with ``f`` leading ones.

    >>> two_step_vector(TwoStepParams(5, 3, 2)).b
    (1, 1, 1, 3, 3)
    """
    n, f, g = params.n, params.f, params.g
    return RestrictionVector((1,) * f + (g + 1,) * (n - f))


def is_two_step(b: RestrictionVector) -> bool:
    values = sorted(set(b.b))
    if values[0] != 1:
        return False
    if len(values) == 1:
        return True
    if len(values) > 2:
        return False
    f = b.b.count(1)
    return values[1] - 1 <= f


def degree(b: RestrictionVector) -> int:
    """Number of allowed transpositions at every state, ``sum(i - b_i)``."""
    if not b.is_nonempty:
        raise EmptyWalkError(b.emptiness_reason())
    return sum(i - x for i, x in enumerate(b.b, start=1))


def count_permutations(b: Union[RestrictionVector, Sequence[int]]) -> int:
    """``|S(b)|`` via the column-by-column product; 0 when empty.

    >>> count_permutations(RestrictionVector((1, 1, 1, 2, 3)))
    54
    """
    bb = b.b if isinstance(b, RestrictionVector) else tuple(sorted(b))
    n = len(bb)
    total = 1
    for c in range(1, n + 1):
        factor = sum(1 for x in bb if x <= c) - (c - 1)
        if factor <= 0:
            return 0
        total *= factor
    return total


def iter_sigmas(b: RestrictionVector) -> Iterator[Tuple[int, ...]]:
    """Raw one-line tuples of ``S(b)`` in lexicographic order."""
    n = b.n
    lows = b.b
    used = [False] * (n + 2)
    current = [0] * n

    def rec(row: int) -> Iterator[Tuple[int, ...]]:
        if row == n:
            yield tuple(current)
            return
        for v in range(lows[row], n + 1):
            if not used[v]:
                used[v] = True
                current[row] = v
                yield from rec(row + 1)
                used[v] = False

    yield from rec(0)


def enumerate_permutations(b: RestrictionVector,
                           cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[RestrictedPermutation]:
    """Every element of ``S(b)`` once, lexicographic in ``sigma``."""
    size = count_permutations(b)
    if size > cap:
        raise CapExceededError(f"|S(b)| = {size} exceeds enumeration cap {cap}")
    for sigma in iter_sigmas(b):
        yield RestrictedPermutation._trusted(sigma, b)


def sample_uniform(b: RestrictionVector, seed: SeedLike = None) -> RestrictedPermutation:
    """Exactly uniform draw: fill columns 1..n, each from the free rows allowed to take it."""
    if not b.is_nonempty:
        raise EmptyWalkError(b.emptiness_reason())
    rng = as_generator(seed)
    n = b.n
    sigma = [0] * n
    free = [True] * n
    for c in range(1, n + 1):
        rows = [i for i in range(n) if free[i] and b.b[i] <= c]
        r = rows[int(rng.integers(len(rows)))]
        sigma[r] = c
        free[r] = False
    return RestrictedPermutation._trusted(tuple(sigma), b)


def equivalence_classes(b: RestrictionVector) -> Tuple[List[int], List[int]]:
    """Sizes of the left classes (rows sharing a ``b`` value) and right classes
    (values between consecutive distinct ``b`` entries).

    >>> equivalence_classes(RestrictionVector((1, 1, 1, 2, 4)))
    ([3, 1, 1], [1, 2, 2])
    """
    distinct = sorted(set(b.b))
    left = [b.b.count(v) for v in distinct]
    edges = distinct + [b.n + 1]
    right = [edges[k + 1] - edges[k] for k in range(len(distinct))]
    return left, right


def is_allowed_transposition(p: RestrictedPermutation, i: int, j: int) -> bool:
    """Whether swapping the values in rows ``i`` and ``j`` stays inside ``S(b)``."""
    n = p.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"row indices must lie in [1, {n}]")
    if i == j:
        return False
    lows = p.restriction.b
    return p.sigma[j - 1] >= lows[i - 1] and p.sigma[i - 1] >= lows[j - 1]


def swap(sigma: Tuple[int, ...], i: int, j: int) -> Tuple[int, ...]:
    s = list(sigma)
    s[i - 1], s[j - 1] = s[j - 1], s[i - 1]
    return tuple(s)


def neighbors(p: RestrictedPermutation) -> List[RestrictedPermutation]:
    out = []
    for i in range(1, p.n + 1):
        for j in range(i + 1, p.n + 1):
            if is_allowed_transposition(p, i, j):
                out.append(RestrictedPermutation._trusted(swap(p.sigma, i, j), p.restriction))
    return out


def sorted_vectors(n: int, nonempty_only: bool = True) -> Iterator[RestrictionVector]:
    """All weakly increasing ``b`` of length ``n`` with entries in ``[1, n]``."""

    def rec(i: int, prev: int) -> Iterator[Tuple[int, ...]]:
        if i == n:
            yield ()
            return
        top = i + 1 if nonempty_only else n
        for v in range(prev, top + 1):
            for rest in rec(i + 1, v):
                yield (v,) + rest

    for b in rec(0, 1):
        yield RestrictionVector(b, strict=nonempty_only)


def two_step_instances(n_max: int, n_min: int = 1) -> Iterator[TwoStepParams]:
    for n in range(n_min, n_max + 1):
        for f in range(1, n + 1):
            for g in range(1, f + 1):
                yield TwoStepParams(n, f, g)


def two_step_count(params: TwoStepParams) -> int:
    """Closed form ``f! (n-g)! / (f-g)!``."""
    n, f, g = params.n, params.f, params.g
    return math.factorial(f) * math.factorial(n - g) // math.factorial(f - g)
