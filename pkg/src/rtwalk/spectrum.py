"""Eigenvalues and eigenspace dimensions of the restricted transposition walk.

Eigenspaces are indexed by chains ``(lam_1, mu_1, lam_2, ..., mu_{s-1}, lam_s)``
where ``lam_i`` grows ``mu_{i-1}`` by the i-th left class size and ``mu_i``
shrinks ``lam_i`` by the i-th right class size (``mu_0 = mu_s`` empty).
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CapExceededError, EmptyWalkError, InconsistencyError, NotTwoStepError
from .restricted import RestrictionVector, TwoStepParams, degree, equivalence_classes
from .tableaux import (
    EMPTY,
    Partition,
    content_sum,
    enumerate_subpartitions,
    enumerate_superpartitions,
    syt_count,
)

DEFAULT_CHAIN_CAP = 10**6

KBIG_VALUE = Fraction(9, 10)


@dataclass(frozen=True)
class BPartition:
    chain: Tuple[Partition, ...]
    left: Tuple[int, ...]
    right: Tuple[int, ...]
    restriction: Optional[RestrictionVector] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        chain = tuple(Partition(p) for p in self.chain)
        object.__setattr__(self, "chain", chain)
        s = len(self.left)
        if len(self.right) != s or len(chain) != 2 * s - 1:
            raise ValueError("chain length must be 2s-1 for s left and s right classes")
        lams, mus = self.lambdas, self.mus
        for i in range(s):
            if not (lams[i].contains(mus[i]) and lams[i].contains(mus[i + 1])):
                raise ValueError(f"containment fails at step {i + 1}")
            if lams[i].size - mus[i].size != self.left[i]:
                raise ValueError(f"step {i + 1} must add {self.left[i]} boxes")
            if lams[i].size - mus[i + 1].size != self.right[i]:
                raise ValueError(f"step {i + 1} must remove {self.right[i]} boxes")

    @property
    def s(self) -> int:
        return len(self.left)

    @property
    def lambdas(self) -> Tuple[Partition, ...]:
        return self.chain[0::2]

    @property
    def mus(self) -> Tuple[Partition, ...]:
        """``mu_0, ..., mu_s`` including the two empty ends."""
        return (EMPTY,) + self.chain[1::2] + (EMPTY,)

    def to_json(self) -> List[List[int]]:
        return [list(p) for p in self.chain]


@dataclass(frozen=True)
class SpectralLine:
    eig_u: int
    eig_p: Fraction
    dim: int
    chain: Optional[BPartition] = field(default=None, compare=False)


@dataclass
class Spectrum:
    lines: List[SpectralLine]
    total_dim: int
    delta: int
    n: int
    restriction: Optional[RestrictionVector] = None

    @property
    def denominator(self) -> int:
        return self.n + 2 * self.delta

    def grouped(self) -> Dict[int, int]:
        """Eigenvalue of the adjacency operator -> total multiplicity."""
        acc: Counter = Counter()
        for line in self.lines:
            acc[line.eig_u] += line.dim
        return dict(sorted(acc.items(), reverse=True))

    def second_eig_u(self) -> Optional[int]:
        below = [e for e in self.grouped() if e < self.delta]
        return max(below) if below else None

    def summary(self) -> dict:
        grouped = self.grouped()
        second = self.second_eig_u()
        return {
            "size": self.total_dim,
            "delta": self.delta,
            "n": self.n,
            "lines": len(self.lines),
            "distinct_eigenvalues": len(grouped),
            "max_eig_u": max(grouped),
            "max_dim": grouped[max(grouped)],
            "second_eig_u": second,
            "second_dim": grouped[second] if second is not None else None,
        }


@dataclass(frozen=True)
class RemainderTriple:
    i: int
    j: int
    k: int

    def __post_init__(self) -> None:
        if min(self.i, self.j, self.k) < 0:
            raise ValueError("remainder sizes are nonnegative")
        if self.j > self.i or self.j > self.k:
            raise ValueError(f"need i >= j <= k, got {(self.i, self.j, self.k)}")

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.i, self.j, self.k)


def chains_for_classes(left: Sequence[int], right: Sequence[int],
                       cap: int = DEFAULT_CHAIN_CAP,
                       restriction: Optional[RestrictionVector] = None,
                       first: Optional[Partition] = None) -> Iterator[BPartition]:
    """All chains for the given class sizes, ordered by ``lam_1``, then ``mu_1``, and so on.

    ``first`` restricts ``lam_1`` so callers can split the work across workers.
    """
    left, right = tuple(left), tuple(right)
    s = len(left)
    produced = 0

    def rec(step: int, mu: Partition, acc: Tuple[Partition, ...]) -> Iterator[BPartition]:
        nonlocal produced
        size = mu.size + left[step]
        keep = size - right[step]
        if keep < 0 or (step == s - 1 and keep != 0):
            return
        for lam in enumerate_superpartitions(mu, size):
            if step == 0 and first is not None and lam != first:
                continue
            if step == s - 1:
                produced += 1
                if produced > cap:
                    raise CapExceededError(f"more than {cap} chains")
                yield BPartition(acc + (lam,), left, right, restriction)
                continue
            for nxt in enumerate_subpartitions(lam, keep):
                yield from rec(step + 1, nxt, acc + (lam, nxt))

    yield from rec(0, EMPTY, ())


def enumerate_b_partitions(b: RestrictionVector, cap: int = DEFAULT_CHAIN_CAP) -> Iterator[BPartition]:
    if not b.is_nonempty:
        raise EmptyWalkError(b.emptiness_reason())
    left, right = equivalence_classes(b)
    yield from chains_for_classes(left, right, cap, b)


def two_step_chains(params: TwoStepParams, cap: int = DEFAULT_CHAIN_CAP) -> Iterator[BPartition]:
    """Three-term chains ``(lam_1, mu_1, lam_2)`` with sizes ``f, f-g, n-g``.

    When ``f < n`` these are exactly the chains of the two-step vector.  When
    ``f = n`` the vector has a single class and these chains refine its
    spectrum: ``lam_2 = mu_1`` and the eigenvalue and multiplicity totals agree.
    """
    n, f, g = params.n, params.f, params.g
    yield from chains_for_classes((f, n - f), (g, n - g), cap, params.vector())


def indicator_tableau(alpha: BPartition) -> Dict[Tuple[int, int], int]:
    """Square -> number of the skew shapes ``lam_i / mu_{i-1}`` containing it."""
    counts: Dict[Tuple[int, int], int] = {}
    lams, mus = alpha.lambdas, alpha.mus
    for sq in set().union(*(set(lam.squares()) for lam in lams)):
        counts[sq] = 0
    for lam, mu in zip(lams, mus):
        for r, length in enumerate(lam, start=1):
            for c in range(mu.part(r - 1) + 1, length + 1):
                counts[(r, c)] += 1
    return counts


def eigenvalue_from_tableau(alpha: BPartition) -> int:
    return sum(t * (c - r) for (r, c), t in indicator_tableau(alpha).items())


def eigenvalue_from_contents(alpha: BPartition) -> int:
    return sum(content_sum(lam) for lam in alpha.lambdas) - sum(content_sum(mu) for mu in alpha.mus)


def eigenvalue_u(alpha: BPartition) -> int:
    """Adjacency eigenvalue, computed two ways and cross-checked."""
    a = eigenvalue_from_tableau(alpha)
    b = eigenvalue_from_contents(alpha)
    if a != b:
        raise InconsistencyError(f"eigenvalue forms disagree on {alpha.to_json()}: {a} vs {b}")
    return a


def dimension(alpha: BPartition) -> int:
    """Product of skew tableau counts of ``lam_i/mu_{i-1}`` and ``lam_i/mu_i``."""
    lams, mus = alpha.lambdas, alpha.mus
    d = 1
    for i, lam in enumerate(lams):
        d *= syt_count(lam, mus[i]) * syt_count(lam, mus[i + 1])
    return d


def full_spectrum(b: RestrictionVector, cap: int = DEFAULT_CHAIN_CAP) -> Spectrum:
    delta = degree(b)
    n = b.n
    den = n + 2 * delta
    lines = []
    for alpha in enumerate_b_partitions(b, cap):
        e = eigenvalue_u(alpha)
        lines.append(SpectralLine(e, Fraction(n + 2 * e, den), dimension(alpha), alpha))
    total = sum(line.dim for line in lines)
    return Spectrum(lines, total, delta, n, b)


def transpose_chain(alpha: BPartition) -> BPartition:
    return BPartition(tuple(p.transpose() for p in alpha.chain), alpha.left, alpha.right,
                      alpha.restriction)


def remainder_triple(alpha: BPartition) -> RemainderTriple:
    """Boxes below the first row of ``lam_1``, ``mu_1`` and ``lam_2``."""
    if len(alpha.chain) != 3:
        raise NotTwoStepError(f"expected a three-term chain, got {len(alpha.chain)} terms")
    lam1, mu1, lam2 = alpha.chain
    return RemainderTriple(lam1.remainder_size, mu1.remainder_size, lam2.remainder_size)


# ---- eigenvalue and multiplicity bounds over (i, j, k) cells ----

def _check_cell(triple: RemainderTriple, params: TwoStepParams) -> None:
    i, j, k = triple.as_tuple()
    n, f, g = params.n, params.f, params.g
    if i > f or j > f - g or k > n - g:
        raise ValueError(f"cell {(i, j, k)} out of range for {params}")


def s1_numerator(i: int, f: int) -> int:
    return 2 * i * (f - i + 1) if 2 * i < f else i * f


def s2_numerator(j: int, f: int, g: int) -> int:
    return 2 * j * (f - g - j + 1)


def s3_numerator(k: int, n: int, g: int) -> int:
    # the quadratic form stops decreasing past half the row, so switch branches there
    l = n - g
    return 2 * k * (l - k + 1) if 2 * k < l else k * l


def is_kbig(triple: RemainderTriple, params: TwoStepParams) -> bool:
    return 5 * triple.k >= params.n - params.g


def content_bound(triple: RemainderTriple, params: TwoStepParams) -> Fraction:
    """``1 - s1(i) + s2(j) - s3(k)``, valid on every cell."""
    _check_cell(triple, params)
    i, j, k = triple.as_tuple()
    n, f, g = params.n, params.f, params.g
    den = params.denominator
    return Fraction(den - s1_numerator(i, f) + s2_numerator(j, f, g) - s3_numerator(k, n, g), den)


def eig_bound(triple: RemainderTriple, params: TwoStepParams) -> Fraction:
    """Cell bound on the lazy-chain eigenvalue: 9/10 on cells with ``5k >= n-g``,
    the content bound elsewhere."""
    _check_cell(triple, params)
    if is_kbig(triple, params):
        return KBIG_VALUE
    return content_bound(triple, params)


def kbig_ceiling(params: TwoStepParams) -> Fraction:
    """Largest content bound over all cells with ``5k >= n-g`` (conservative:
    cells with zero multiplicity are included)."""
    n, f, g = params.n, params.f, params.g
    den = params.denominator
    ks = [k for k in range(n - g + 1) if 5 * k >= n - g]
    if not ks:
        return Fraction(0)
    jmax = f - g
    # best -s1(i) over i >= j, for each j
    neg_s1 = [-s1_numerator(i, f) for i in range(f + 1)]
    suffix = neg_s1[:]
    for i in range(f - 1, -1, -1):
        suffix[i] = max(suffix[i], suffix[i + 1])
    h = [s2_numerator(j, f, g) + suffix[j] for j in range(jmax + 1)]
    prefix = h[:]
    for j in range(1, len(prefix)):
        prefix[j] = max(prefix[j], prefix[j - 1])
    best = max(den - s3_numerator(k, n, g) + prefix[min(k, jmax)] for k in ks)
    return Fraction(best, den)


def kbig_certified(params: TwoStepParams) -> Tuple[bool, Fraction]:
    """Whether the constant 9/10 is a proven cell bound at this size."""
    ceiling = kbig_ceiling(params)
    return ceiling <= KBIG_VALUE, ceiling


def dim_sum_bound(triple: RemainderTriple, params: TwoStepParams) -> int:
    """``C(f,i) C(g,i-j) C(n-f,k-j) C(n-g,k) * i! k! / j!``."""
    i, j, k = triple.as_tuple()
    n, f, g = params.n, params.f, params.g

    def binom(a: int, b: int) -> int:
        return comb(a, b) if 0 <= b <= a else 0

    a = binom(f, i) * binom(g, i - j) * binom(n - f, k - j) * binom(n - g, k)
    return a * factorial(i) * factorial(k) // factorial(j)


def cells(params: TwoStepParams) -> Iterator[RemainderTriple]:
    """Every ``(i, j, k)`` with ``i >= j <= k`` in range, including ``(0,0,0)``."""
    n, f, g = params.n, params.f, params.g
    for j in range(f - g + 1):
        for i in range(j, f + 1):
            for k in range(j, n - g + 1):
                yield RemainderTriple(i, j, k)


def cell_arrays(params: TwoStepParams) -> Dict[str, np.ndarray]:
    """Vectorised cell grid with log multiplicity bounds and content-bound numerators.

    Cells with a zero binomial factor are dropped.
    """
    from scipy.special import gammaln

    n, f, g = params.n, params.f, params.g
    den = params.denominator
    out_i, out_j, out_k = [], [], []
    for j in range(f - g + 1):
        i = np.arange(j, min(f, j + g) + 1)
        k = np.arange(j, min(n - g, j + n - f) + 1)
        ii, kk = np.meshgrid(i, k, indexing="ij")
        out_i.append(ii.ravel())
        out_k.append(kk.ravel())
        out_j.append(np.full(ii.size, j))
    i = np.concatenate(out_i).astype(np.int64)
    j = np.concatenate(out_j).astype(np.int64)
    k = np.concatenate(out_k).astype(np.int64)

    def lbinom(a, b):
        return gammaln(a + 1.0) - gammaln(b + 1.0) - gammaln(a - b + 1.0)

    log_dim = (lbinom(f, i) + lbinom(g, i - j) + lbinom(n - f, k - j) + lbinom(n - g, k)
               + gammaln(i + 1.0) + gammaln(k + 1.0) - gammaln(j + 1.0))
    s1 = np.where(2 * i < f, 2 * i * (f - i + 1), i * f)
    s2 = 2 * j * (f - g - j + 1)
    s3 = np.where(2 * k < n - g, 2 * k * (n - g - k + 1), k * (n - g))
    content_num = den - s1 + s2 - s3
    kbig = 5 * k >= n - g
    return {"i": i, "j": j, "k": k, "log_dim": log_dim, "content_num": content_num,
            "kbig": kbig, "den": np.int64(den)}


def lead_chains(params: TwoStepParams) -> Dict[str, Tuple[Tuple[int, ...], ...]]:
    """Chains with remainder triples (0,0,0), (1,0,0) and (0,0,1)."""
    n, f, g = params.n, params.f, params.g
    mu = (f - g,) if f > g else ()
    return {
        "alpha0": ((f,), mu, (n - g,)),
        "alpha1": ((f - 1, 1), mu, (n - g,)),
        "alpha2": ((f,), mu, (n - g - 1, 1)),
    }


# ---- export ----

def spectrum_rows(spec: Spectrum) -> List[Tuple[int, int, int, int]]:
    den = spec.denominator
    return [(line.eig_u, spec.n + 2 * line.eig_u, den, line.dim) for line in spec.lines]


def spectrum_to_csv(spec: Spectrum) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eig_u", "eig_p_num", "eig_p_den", "dim"])
    w.writerows(spectrum_rows(spec))
    return buf.getvalue()


def spectrum_to_json(spec: Spectrum) -> dict:
    return {
        "restriction": spec.restriction.to_json() if spec.restriction else None,
        "summary": spec.summary(),
        "lines": [
            {
                "eig_u": line.eig_u,
                "eig_p": f"{spec.n + 2 * line.eig_u}/{spec.denominator}",
                "dim": line.dim,
                "chain": line.chain.to_json() if line.chain else None,
            }
            for line in spec.lines
        ],
    }
