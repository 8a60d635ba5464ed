"""Integer partitions, contents and standard Young tableau counts."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Tuple

from .errors import CapExceededError

DEFAULT_PARTITION_CAP = 200

Square = Tuple[int, int]


class Partition(tuple):
    """Weakly decreasing tuple of positive parts, largest first.

    >>> Partition([4, 2, 1]).transpose()
    Partition(3, 2, 1, 1)
    """

    def __new__(cls, parts: Iterable[int] = ()) -> "Partition":
        parts = tuple(int(p) for p in parts)
        while parts and parts[-1] == 0:
            parts = parts[:-1]
        if any(p <= 0 for p in parts):
            raise ValueError(f"parts must be positive: {parts}")
        if any(parts[k] < parts[k + 1] for k in range(len(parts) - 1)):
            raise ValueError(f"parts must be weakly decreasing: {parts}")
        return super().__new__(cls, parts)

    @property
    def size(self) -> int:
        return sum(self)

    @property
    def first(self) -> int:
        """Largest part, 0 for the empty partition."""
        return self[0] if self else 0

    @property
    def remainder_size(self) -> int:
        """Boxes left after deleting the first row."""
        return self.size - self.first

    def part(self, row: int) -> int:
        """0-based row length, 0 beyond the last row."""
        return self[row] if row < len(self) else 0

    def contains(self, other: "Partition") -> bool:
        return len(other) <= len(self) and all(o <= s for o, s in zip(other, self))

    def squares(self) -> Iterator[Square]:
        """1-based ``(row, column)`` pairs."""
        for r, length in enumerate(self, start=1):
            for c in range(1, length + 1):
                yield (r, c)

    def transpose(self) -> "Partition":
        return transpose(self)

    def content_sum(self) -> int:
        return content_sum(self)

    def __repr__(self) -> str:
        return "Partition(" + ", ".join(map(str, self)) + ")"

    def to_json(self) -> List[int]:
        return list(self)


EMPTY = Partition()


@dataclass(frozen=True)
class SkewShape:
    outer: Partition
    inner: Partition = EMPTY

    def __post_init__(self) -> None:
        object.__setattr__(self, "outer", Partition(self.outer))
        object.__setattr__(self, "inner", Partition(self.inner))
        if not self.outer.contains(self.inner):
            raise ValueError(f"{tuple(self.inner)} is not contained in {tuple(self.outer)}")

    @property
    def size(self) -> int:
        return self.outer.size - self.inner.size

    def squares(self) -> Iterator[Square]:
        for r, length in enumerate(self.outer, start=1):
            for c in range(self.inner.part(r - 1) + 1, length + 1):
                yield (r, c)

    def to_json(self) -> dict:
        return {"outer": list(self.outer), "inner": list(self.inner)}


def content_sum(lam: Iterable[int]) -> int:
    """Sum of ``column - row`` over all boxes.

    >>> content_sum((4, 2, 1))
    3
    """
    total = 0
    for r, length in enumerate(lam):
        # contents in row r (0-based) run from -r to length-1-r
        total += length * (length - 1) // 2 - r * length
    return total


def transpose(lam: Iterable[int]) -> Partition:
    parts = tuple(lam)
    if not parts:
        return EMPTY
    return Partition(sum(1 for p in parts if p > c) for c in range(parts[0]))


@lru_cache(maxsize=None)
def _syt(outer: Tuple[int, ...], inner: Tuple[int, ...]) -> int:
    # Remove the largest entry, which sits in a corner of outer not in inner.
    if sum(outer) == sum(inner):
        return 1
    total = 0
    rows = len(outer)
    for r in range(rows):
        inner_r = inner[r] if r < len(inner) else 0
        is_corner = r + 1 == rows or outer[r + 1] < outer[r]
        if is_corner and outer[r] > inner_r:
            shrunk = list(outer)
            shrunk[r] -= 1
            if shrunk[r] == 0:
                shrunk.pop()
            total += _syt(tuple(shrunk), inner)
    return total


def syt_count_skew(shape: SkewShape) -> int:
    """Number of standard Young tableaux of ``outer / inner``."""
    return _syt(tuple(shape.outer), tuple(shape.inner))


def syt_count(outer: Iterable[int], inner: Iterable[int] = ()) -> int:
    return syt_count_skew(SkewShape(Partition(outer), Partition(inner)))


def _partitions(size: int, largest: int) -> Iterator[Tuple[int, ...]]:
    if size == 0:
        yield ()
        return
    for first in range(min(size, largest), 0, -1):
        for rest in _partitions(size - first, first):
            yield (first,) + rest


def enumerate_partitions(size: int, cap: int = DEFAULT_PARTITION_CAP) -> Iterator[Partition]:
    """Partitions of ``size`` in reverse-lexicographic order.

    >>> [tuple(p) for p in enumerate_partitions(3)]
    [(3,), (2, 1), (1, 1, 1)]
    """
    if size < 0:
        raise ValueError("size must be nonnegative")
    if size > cap:
        raise CapExceededError(f"partition size {size} exceeds cap {cap}")
    for parts in _partitions(size, size):
        yield Partition(parts)


def _bounded(size: int, lower: Tuple[int, ...], upper: Tuple[int, ...],
             row: int, prev: int) -> Iterator[Tuple[int, ...]]:
    # Parts p_row with lower[row] <= p_row <= min(prev, upper[row]), reverse-lex.
    lo = lower[row] if row < len(lower) else 0
    if size == 0:
        if all(x == 0 for x in lower[row:]):
            yield ()
        return
    hi = min(prev, upper[row] if row < len(upper) else 0, size)
    for p in range(hi, max(lo, 1) - 1, -1):
        for rest in _bounded(size - p, lower, upper, row + 1, p):
            yield (p,) + rest


def enumerate_subpartitions(lam: Partition, size: int) -> Iterator[Partition]:
    """All ``mu`` contained in ``lam`` with ``|mu| = size``."""
    lam = Partition(lam)
    if not 0 <= size <= lam.size:
        raise ValueError(f"size must lie in [0, {lam.size}]")
    for parts in _bounded(size, (), tuple(lam), 0, lam.first):
        yield Partition(parts)


def enumerate_superpartitions(mu: Partition, size: int) -> Iterator[Partition]:
    """All ``lam`` containing ``mu`` with ``|lam| = size``."""
    mu = Partition(mu)
    if size < mu.size:
        raise ValueError(f"size must be at least {mu.size}")
    upper = (size,) * size
    for parts in _bounded(size, tuple(mu), upper, 0, size):
        yield Partition(parts)


def max_content_skew(l: int, m: int, i: int, j: int) -> int:
    """Upper bound on ``C(lam) - C(mu)`` over ``lam`` of size ``l`` containing
    ``mu`` of size ``m``, with ``i`` and ``j`` boxes below the first rows."""
    if not (l >= m >= 0 and i >= 0 and j >= 0):
        raise ValueError("need l >= m >= 0 and i, j >= 0")
    return (l * l - l) // 2 - (m * m - m) // 2 - i * (l - i + 1) + j * (m - j + 1)


def max_content(l: int, i: int) -> int:
    """Largest ``C(lam)`` for ``lam`` of size ``l`` with ``i`` boxes below row one (sharp for ``i <= l/2``)."""
    if not (0 <= i < l or (i, l) == (0, 0)):
        raise ValueError("need 0 <= i < l")
    return (l * l - l) // 2 - i * (l - i + 1)


def max_content_large(l: int, i: int) -> Fraction:
    """Weaker bound used when ``i > l/2``; not an integer in general."""
    if not (0 <= i < l or (i, l) == (0, 0)):
        raise ValueError("need 0 <= i < l")
    return Fraction(l * l - l - i * l, 2)


def content_map(shape: SkewShape) -> Dict[Square, int]:
    return {(r, c): c - r for r, c in shape.squares()}
