"""Exact transition matrices, distances to stationarity and bound evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
from scipy import sparse

from .errors import CapExceededError, EmptyWalkError, NotTwoStepError
from .restricted import (
    RestrictedPermutation,
    RestrictionVector,
    TwoStepParams,
    count_permutations,
    degree,
    is_two_step,
    iter_sigmas,
)
from .spectrum import (
    RemainderTriple,
    Spectrum,
    cell_arrays,
    cells,
    dim_sum_bound,
    eig_bound,
    full_spectrum,
)

DEFAULT_STATE_CAP = 5 * 10**4
PRECISION_BITS = 113
# cells more than this many nats below the largest term are dropped after screening
SCREEN_MARGIN = 90.0

KINDS = ("lazy", "uniform")
MEANINGS = ("tv-exact", "chi-exact", "chi-spectral", "chi-upper-bound", "chi-lower-term",
            "tv-lower-bound")

Real = Union[Fraction, mpmath.mpf, float]


@dataclass
class TransitionMatrix:
    """``P = (diag*I + off*U) / denominator`` over the enumerated states.

    Lazy kind: ``diag = n``, ``off = 2``, ``denominator = n + 2*delta``.
    Uniform kind: ``diag = 0``, ``off = 1``, ``denominator = delta``
    (a single isolated state holds with probability 1).
    """

    restriction: RestrictionVector
    kind: str
    states: List[Tuple[int, ...]]
    index: Dict[Tuple[int, ...], int]
    nbrs: np.ndarray
    diag: int
    off: int
    denominator: int

    @property
    def size(self) -> int:
        return len(self.states)

    def entry(self, x: int, y: int) -> Fraction:
        num = self.diag if x == y else 0
        if x != y and y in self.nbrs[x]:
            num = self.off
        return Fraction(num, self.denominator)

    def to_fractions(self) -> List[List[Fraction]]:
        rows = []
        for x in range(self.size):
            row = [Fraction(0)] * self.size
            row[x] = Fraction(self.diag, self.denominator)
            for y in self.nbrs[x]:
                row[int(y)] = Fraction(self.off, self.denominator)
            rows.append(row)
        return rows

    def integer_matrix(self) -> sparse.csr_matrix:
        """``denominator * P`` as a sparse integer matrix."""
        adj = adjacency_matrix(self)
        return (self.diag * sparse.identity(self.size, dtype=np.int64, format="csr")
                + self.off * adj).tocsr()

    def state_index(self, start: Union[RestrictedPermutation, Sequence[int]]) -> int:
        sigma = start.sigma if isinstance(start, RestrictedPermutation) else tuple(start)
        try:
            return self.index[tuple(sigma)]
        except KeyError:
            raise ValueError(f"{sigma} is not a state of this chain") from None


def build_transition_matrix(b: RestrictionVector, kind: str = "lazy",
                            cap: int = DEFAULT_STATE_CAP) -> TransitionMatrix:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if not b.is_nonempty:
        raise EmptyWalkError(b.emptiness_reason())
    size = count_permutations(b)
    if size > cap:
        raise CapExceededError(f"{size} states exceed the matrix cap {cap}")
    n = b.n
    delta = degree(b)
    states = list(iter_sigmas(b))
    index = {s: k for k, s in enumerate(states)}
    lows = b.b
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    nbrs = np.zeros((size, delta), dtype=np.int64)
    for x, s in enumerate(states):
        col = 0
        for i, j in pairs:
            if s[j] >= lows[i] and s[i] >= lows[j]:
                t = list(s)
                t[i], t[j] = t[j], t[i]
                nbrs[x, col] = index[tuple(t)]
                col += 1
    if kind == "lazy":
        diag, off, den = n, 2, n + 2 * delta
    elif delta == 0:
        diag, off, den = 1, 1, 1
    else:
        diag, off, den = 0, 1, delta
    return TransitionMatrix(b, kind, states, index, nbrs, diag, off, den)


def adjacency_matrix(P: TransitionMatrix) -> sparse.csr_matrix:
    size, delta = P.nbrs.shape
    rows = np.repeat(np.arange(size), delta)
    data = np.ones(size * delta, dtype=np.int64)
    return sparse.csr_matrix((data, (rows, P.nbrs.ravel())), shape=(size, size))


def trace_moments(b: RestrictionVector, k_max: int, cap: int = DEFAULT_STATE_CAP) -> Dict[int, int]:
    """``tr(U^k)`` for ``k = 1..k_max`` from exact integer powers of the adjacency matrix."""
    P = build_transition_matrix(b, "lazy", cap)
    U = adjacency_matrix(P)
    power = sparse.identity(P.size, dtype=np.int64, format="csr")
    out = {}
    for k in range(1, k_max + 1):
        power = (power @ U).tocsr()
        out[k] = int(power.diagonal().sum())
    return out


def _fits_int64(P: TransitionMatrix, t: int) -> bool:
    return t * math.log2(max(P.denominator, 2)) < 62


def _advance(P: TransitionMatrix, v: np.ndarray) -> np.ndarray:
    # v has the state axis first; works for vectors and column blocks
    if P.nbrs.shape[1] == 0:
        return P.diag * v
    return P.diag * v + P.off * v[P.nbrs].sum(axis=1)


def distribution_numerators(P: TransitionMatrix, start: int, t: int) -> Tuple[np.ndarray, int]:
    """Integer numerators of row ``start`` of ``P^t`` and their common denominator."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    dtype = np.int64 if _fits_int64(P, t) else object
    v = np.zeros(P.size, dtype=dtype)
    v[start] = 1
    for _ in range(t):
        v = _advance(P, v)
    return v, P.denominator ** t


def exact_distribution(P: TransitionMatrix, start: Union[RestrictedPermutation, Sequence[int]],
                       t: int) -> List[Fraction]:
    """Row of ``P^t`` at ``start`` as exact rationals, in state order."""
    v, den = distribution_numerators(P, P.state_index(start), t)
    return [Fraction(int(x), den) for x in v]


def uniform_distribution(size: int) -> List[Fraction]:
    return [Fraction(1, size)] * size


def tv_distance(mu: Sequence[Real], pi: Sequence[Real]) -> Real:
    """Half the L1 distance; exact when both inputs are rationals."""
    if len(mu) != len(pi):
        raise ValueError("distributions must share a support")
    return sum(abs(a - b) for a, b in zip(mu, pi)) / 2


def chi_squared_sq(mu: Sequence[Real], pi: Sequence[Real]) -> Real:
    """``sum (mu/pi - 1)^2 pi``; exact for rational input."""
    if len(mu) != len(pi):
        raise ValueError("distributions must share a support")
    if any(p <= 0 for p in pi):
        raise ValueError("stationary mass must be strictly positive")
    return sum((a - b) * (a - b) / b for a, b in zip(mu, pi))


def _sqrt(x: Real) -> mpmath.mpf:
    with mpmath.workprec(PRECISION_BITS):
        if isinstance(x, Fraction):
            return mpmath.sqrt(mpmath.mpf(x.numerator) / x.denominator)
        return mpmath.sqrt(mpmath.mpf(x))


def _real(x: Real) -> mpmath.mpf:
    with mpmath.workprec(PRECISION_BITS):
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        return mpmath.mpf(x)


def chi_squared(mu: Sequence[Real], pi: Sequence[Real]) -> mpmath.mpf:
    return _sqrt(chi_squared_sq(mu, pi))


def chi_squared_sq_uniform(P: TransitionMatrix, start: int, t: int) -> Fraction:
    """Exact squared chi-squared distance of ``P^t(start, .)`` from uniform."""
    v, den = distribution_numerators(P, start, t)
    total = sum(int(x) * int(x) for x in v)
    return Fraction(P.size * total, den * den) - 1


def tv_uniform(P: TransitionMatrix, start: int, t: int) -> Fraction:
    v, den = distribution_numerators(P, start, t)
    size = P.size
    # |x/den - 1/size| summed, over the common denominator den*size
    return Fraction(sum(abs(int(x) * size - den) for x in v), 2 * den * size)


def _require_two_step(spec: Spectrum) -> None:
    if spec.restriction is None or not is_two_step(spec.restriction):
        raise NotTwoStepError("spectral chi-squared needs a two-step restriction vector")


def chi_squared_sq_from_spectrum(spec: Spectrum, t: int) -> Fraction:
    """``sum dim * eigP^(2t)`` over eigenvalues other than 1, exactly."""
    _require_two_step(spec)
    den = spec.denominator
    total = 0
    for e, d in spec.grouped().items():
        if e != spec.delta:
            total += d * (spec.n + 2 * e) ** (2 * t)
    return Fraction(total, den ** (2 * t))


def chi_squared_from_spectrum(spec: Spectrum, t: int) -> mpmath.mpf:
    _require_two_step(spec)
    den = spec.denominator
    with mpmath.workprec(PRECISION_BITS):
        terms = [d * (mpmath.mpf(spec.n + 2 * e) / den) ** (2 * t)
                 for e, d in spec.grouped().items() if e != spec.delta]
        return mpmath.sqrt(mpmath.fsum(terms))


# ---- cell-sum upper bound ----

def cell_term(triple: RemainderTriple, params: TwoStepParams, t: int) -> Fraction:
    s = eig_bound(triple, params)
    return s ** (2 * t) * dim_sum_bound(triple, params)


def chi_upper_bound_sq_exact(params: TwoStepParams, t: int,
                             ksmall_only: bool = False) -> Fraction:
    """Twice the cell sum, exact; meant for small instances."""
    total = Fraction(0)
    for cell in cells(params):
        if cell.as_tuple() == (0, 0, 0):
            continue
        if ksmall_only and 5 * cell.k >= params.n - params.g:
            continue
        total += cell_term(cell, params, t)
    return 2 * total


@lru_cache(maxsize=8)
def _screen(params: TwoStepParams) -> Dict[str, np.ndarray]:
    arr = cell_arrays(params)
    nonzero = ~((arr["i"] == 0) & (arr["j"] == 0) & (arr["k"] == 0))
    arr = {key: (val[nonzero] if isinstance(val, np.ndarray) and val.shape else val)
           for key, val in arr.items()}
    den = float(arr["den"])
    num = arr["content_num"].astype(np.float64)
    with np.errstate(divide="ignore"):
        log_s = np.where(arr["kbig"], math.log(0.9), np.log1p((np.abs(num) - den) / den))
    arr["log_s"] = log_s
    return arr


def chi_upper_bound_sq(params: TwoStepParams, t: int) -> mpmath.mpf:
    """Twice the cell sum of ``s^(2t) * dim bound``.

    Cells are screened in double precision and those within ``SCREEN_MARGIN``
    nats of the largest term are re-evaluated at ``PRECISION_BITS`` bits.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    arr = _screen(params)
    log_terms = 2 * t * arr["log_s"] + arr["log_dim"]
    if log_terms.size == 0:
        return mpmath.mpf(0)
    top = np.max(log_terms)
    keep = np.nonzero(log_terms >= top - SCREEN_MARGIN)[0]
    den = int(arr["den"])
    terms = []
    with mpmath.workprec(PRECISION_BITS):
        nine_tenths = mpmath.mpf(9) / 10
        for idx in keep:
            cell = RemainderTriple(int(arr["i"][idx]), int(arr["j"][idx]), int(arr["k"][idx]))
            if arr["kbig"][idx]:
                s = nine_tenths
            else:
                s = mpmath.mpf(int(arr["content_num"][idx])) / den
            terms.append(s ** (2 * t) * dim_sum_bound(cell, params))
        return 2 * mpmath.fsum(terms)


def chi_upper_bound(params: TwoStepParams, t: int) -> mpmath.mpf:
    return _sqrt(chi_upper_bound_sq(params, t))


def chi_lower_term(params: TwoStepParams, t: int, exact: bool = False) -> Real:
    """``(f-1) g (1 - 2f/(n+2 delta))^(2t)``, one eigenspace of the chi-squared sum."""
    f, g = params.f, params.g
    if f < 2:
        raise ValueError("needs f >= 2")
    den = params.denominator
    if exact:
        return (f - 1) * g * Fraction(den - 2 * f, den) ** (2 * t)
    with mpmath.workprec(PRECISION_BITS):
        return (f - 1) * g * (mpmath.mpf(den - 2 * f) / den) ** (2 * t)


# ---- closed-form times and bounds ----

@dataclass(frozen=True)
class CutoffTimes:
    n: int
    f: int
    g: int
    c: float
    t_chi_upper: float
    t_chi_lower: float
    t_tv_lower: float
    t_fast_mix: float

    @property
    def window(self) -> float:
        return (self.n * self.n - 2 * self.n * self.g + 2 * self.f * self.g) / (4 * self.f)

    def to_json(self) -> dict:
        return {"n": self.n, "f": self.f, "g": self.g, "c": self.c,
                "t_chi_upper": self.t_chi_upper, "t_chi_lower": self.t_chi_lower,
                "t_tv_lower": self.t_tv_lower, "t_fast_mix": self.t_fast_mix,
                "window": self.window}


def cutoff_times(params: TwoStepParams, c: float) -> CutoffTimes:
    n, f, g = params.n, params.f, params.g
    if f < 2:
        raise ValueError("needs f >= 2")
    den = params.denominator
    centre = den * (math.log(f) + math.log(g)) / (4 * f)
    shift = c * den / (4 * f)
    return CutoffTimes(n, f, g, float(c), centre + shift, centre - shift, centre - shift,
                        3 * den / (2 * f - 1))


def steps(t: float) -> int:
    """Round a real time up to a whole number of steps."""
    return max(0, math.ceil(t - 1e-12))


def tv_lower_bound_value(r: float, c: float) -> float:
    """``1/e - exp(-r e^c)``."""
    if r <= 0:
        raise ValueError("r must be positive")
    return math.exp(-1) - math.exp(-r * math.exp(c))


def stationary_small_fixed_point_prob(params: TwoStepParams) -> Tuple[Fraction, float]:
    """Stationary probability that some row ``i <= g`` is fixed, and ``1 - exp(-g/f)``."""
    f, g = params.f, params.g
    total = Fraction(0)
    for k in range(1, g + 1):
        # k chosen small rows fixed: C(g,k) * (f-k)!/f! of the state space
        total += (-1) ** (k + 1) * Fraction(math.comb(g, k) * math.factorial(f - k),
                                            math.factorial(f))
    return total, 1 - math.exp(-g / f)


def fast_mix_no_cutoff_lower(params: TwoStepParams, k: int, exact: bool = False) -> Real:
    """``(1 - (2f-1)/(n+2 delta))^k - 1/f`` for ``g = 1``."""
    if params.g != 1:
        raise ValueError("defined for g = 1 only")
    f = params.f
    den = params.denominator
    if exact:
        return Fraction(den - 2 * f + 1, den) ** k - Fraction(1, f)
    with mpmath.workprec(PRECISION_BITS):
        return (mpmath.mpf(den - 2 * f + 1) / den) ** k - mpmath.mpf(1) / f


# ---- vertex transitivity ----

@dataclass
class ProbeResult:
    transitive_consistent: bool
    t_max: int
    witness: Optional[Tuple[Tuple[int, ...], Tuple[int, ...], int, Fraction, Fraction]] = None

    @property
    def verdict(self) -> str:
        return "TRANSITIVE-CONSISTENT" if self.transitive_consistent else "WITNESS"

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "t_max": self.t_max}
        if self.witness:
            s, tau, t, ps, pt = self.witness
            out["witness"] = {"sigma": list(s), "tau": list(tau), "t": t,
                              "p_sigma": f"{ps.numerator}/{ps.denominator}",
                              "p_tau": f"{pt.numerator}/{pt.denominator}"}
        return out


def return_probabilities(P: TransitionMatrix, t_max: int, block: int = 256) -> List[np.ndarray]:
    """Numerators of ``P^t(x, x)`` for every state, ``t = 0..t_max`` (denominator ``P.denominator^t``)."""
    dtype = np.int64 if _fits_int64(P, t_max) else object
    out = [np.ones(P.size, dtype=dtype)] + [np.zeros(P.size, dtype=dtype) for _ in range(t_max)]
    for lo in range(0, P.size, block):
        cols = np.arange(lo, min(lo + block, P.size))
        v = np.zeros((P.size, cols.size), dtype=dtype)
        v[cols, np.arange(cols.size)] = 1
        for t in range(1, t_max + 1):
            v = _advance(P, v)
            out[t][cols] = v[cols, np.arange(cols.size)]
    return out


def vertex_transitivity_probe(b: RestrictionVector, t_max: int, kind: str = "lazy",
                              cap: int = DEFAULT_STATE_CAP,
                              compare: Optional[Sequence[int]] = None) -> ProbeResult:
    """Looks for two states with different return probabilities at some ``t <= t_max``.

    A consistent verdict is only a necessary condition for transitivity.  The
    witness pairs the identity with ``compare`` when that state differs at the
    first discrepant time, otherwise with the first differing state in
    lexicographic order.
    """
    P = build_transition_matrix(b, kind, cap)
    preferred = P.state_index(compare) if compare is not None else None
    diag = return_probabilities(P, t_max)
    for t in range(1, t_max + 1):
        d = diag[t]
        ref = d[0]
        diff = np.nonzero(d != ref)[0]
        if diff.size:
            other = preferred if preferred is not None and d[preferred] != ref else int(diff[0])
            den = P.denominator ** t
            return ProbeResult(False, t_max, (P.states[0], P.states[other], t,
                                              Fraction(int(ref), den), Fraction(int(d[other]), den)))
    return ProbeResult(True, t_max)


# ---- curves ----

@dataclass
class DistanceCurve:
    meaning: str
    points: List[Tuple[int, Real]]
    label: dict = field(default_factory=dict)

    def to_rows(self) -> List[Tuple[int, str, str]]:
        return [(t, format_real(v), self.meaning) for t, v in self.points]


def format_real(v: Real, digits: int = 25) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, mpmath.mpf):
        return mpmath.nstr(v, digits)
    return repr(float(v))


@dataclass(frozen=True)
class CurveRequest:
    meaning: str
    t_grid: Tuple[int, ...]
    restriction: Optional[RestrictionVector] = None
    params: Optional[TwoStepParams] = None
    kind: str = "lazy"
    start: Optional[Tuple[int, ...]] = None
    exact: bool = False
    cap: int = DEFAULT_STATE_CAP

    def label(self) -> dict:
        out = {"meaning": self.meaning, "kind": self.kind, "grid": list(self.t_grid)}
        if self.params is not None:
            out["params"] = self.params.to_json()
        if self.restriction is not None:
            out["restriction"] = self.restriction.to_json()
        return out


@dataclass
class CurveResult:
    request: CurveRequest
    curve: Optional[DistanceCurve] = None
    error: Optional[str] = None


def _vector_of(req: CurveRequest) -> RestrictionVector:
    if req.restriction is not None:
        return req.restriction
    if req.params is not None:
        return req.params.vector()
    raise ValueError("curve needs a restriction vector or two-step parameters")


def _params_of(req: CurveRequest) -> TwoStepParams:
    if req.params is None:
        raise NotTwoStepError(f"{req.meaning} needs two-step parameters")
    return req.params


def evaluate_curve(req: CurveRequest) -> DistanceCurve:
    if req.meaning not in MEANINGS:
        raise ValueError(f"unknown curve meaning {req.meaning!r}")
    grid = list(req.t_grid)
    points: List[Tuple[int, Real]] = []
    if not grid:
        return DistanceCurve(req.meaning, points, req.label())
    m = req.meaning
    if m in ("tv-exact", "chi-exact"):
        P = build_transition_matrix(_vector_of(req), req.kind, req.cap)
        start = P.state_index(req.start) if req.start is not None else 0
        for t in grid:
            if m == "tv-exact":
                v: Real = tv_uniform(P, start, t)
                points.append((t, v if req.exact else _real(v)))
            else:
                sq = chi_squared_sq_uniform(P, start, t)
                points.append((t, sq if req.exact else _sqrt(sq)))
    elif m == "chi-spectral":
        spec = full_spectrum(_vector_of(req), cap=req.cap)
        for t in grid:
            if req.exact:
                points.append((t, chi_squared_sq_from_spectrum(spec, t)))
            else:
                points.append((t, chi_squared_from_spectrum(spec, t)))
    elif m == "chi-upper-bound":
        p = _params_of(req)
        for t in grid:
            points.append((t, chi_upper_bound(p, t)))
    elif m == "chi-lower-term":
        p = _params_of(req)
        for t in grid:
            points.append((t, _sqrt(chi_lower_term(p, t, exact=True)) if req.exact
                           else mpmath.sqrt(chi_lower_term(p, t))))
    else:
        p = _params_of(req)
        for t in grid:
            points.append((t, tv_lower_curve_value(p, t)))
    return DistanceCurve(req.meaning, points, req.label())


def tv_lower_curve_value(params: TwoStepParams, t: int) -> Real:
    """For ``g = 1`` the finite-n no-cutoff bound; otherwise the limiting value
    ``1/e - exp(-r e^c)`` at the ``c`` for which ``t`` is the lower time."""
    if params.g == 1:
        return fast_mix_no_cutoff_lower(params, t)
    f, g = params.f, params.g
    den = params.denominator
    centre = den * (math.log(f) + math.log(g)) / (4 * f)
    c = (centre - t) * 4 * f / den
    return tv_lower_bound_value(g / f, c)


def sweep(requests: Sequence[CurveRequest]) -> List[CurveResult]:
    """Evaluates each request in order; a failing request records its error and the rest still run."""
    results = []
    for req in requests:
        try:
            results.append(CurveResult(req, evaluate_curve(req)))
        except (ValueError, RuntimeError) as exc:
            results.append(CurveResult(req, error=f"{type(exc).__name__}: {exc}"))
    return results
