"""Self-check suites run by ``rtwalk verify``.

Each check returns a :class:`CheckResult`; a suite never stops at the first
failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Tuple

import numpy as np

from .mixing import (
    build_transition_matrix,
    chi_lower_term,
    chi_squared_sq_from_spectrum,
    chi_squared_sq_uniform,
    chi_upper_bound,
    cutoff_times,
    exact_distribution,
    fast_mix_no_cutoff_lower,
    steps,
    trace_moments,
    tv_uniform,
)
from .montecarlo import SimulationConfig, run_statistics
from .restricted import (
    RestrictionVector,
    TwoStepParams,
    count_permutations,
    degree,
    enumerate_permutations,
    neighbors,
    sorted_vectors,
    two_step_instances,
)
from .spectrum import (
    RemainderTriple,
    dim_sum_bound,
    dimension,
    eig_bound,
    eigenvalue_u,
    enumerate_b_partitions,
    full_spectrum,
    is_kbig,
    remainder_triple,
    transpose_chain,
    two_step_chains,
)
from .tableaux import (
    content_sum,
    enumerate_partitions,
    enumerate_subpartitions,
    max_content,
    max_content_skew,
    syt_count,
    transpose,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "seconds": round(self.seconds, 3)}


def _timed(name: str, fn: Callable[[], Tuple[bool, str]]) -> CheckResult:
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failed check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, ok, detail, time.perf_counter() - start)


def _all_vectors(n_max: int) -> List[RestrictionVector]:
    return [b for n in range(1, n_max + 1) for b in sorted_vectors(n)]


def check_return_probability_example() -> Tuple[bool, str]:
    b = RestrictionVector((1, 1, 1, 2, 3))
    P = build_transition_matrix(b, "uniform")
    a = exact_distribution(P, (1, 2, 3, 4, 5), 6)[P.state_index((1, 2, 3, 4, 5))]
    c = exact_distribution(P, (4, 5, 1, 2, 3), 6)[P.state_index((4, 5, 1, 2, 3))]
    ok = a == Fraction(5207, 117649) and c == Fraction(5287, 117649)
    return ok, f"identity {a}, 45123 {c}"


def check_completeness(n_general: int, n_two_step: int) -> Tuple[bool, str]:
    bad = []
    total = 0
    targets = _all_vectors(n_general) + [p.vector() for p in two_step_instances(n_two_step)
                                         if p.n > n_general]
    for b in targets:
        total += 1
        dims = sum(dimension(a) for a in enumerate_b_partitions(b))
        if dims != count_permutations(b):
            bad.append(b.to_json())
    return not bad, f"{total} vectors, mismatches {bad[:5]}"


def check_count_vs_enumeration(n_max: int) -> Tuple[bool, str]:
    bad = [b.to_json() for b in _all_vectors(n_max)
           if count_permutations(b) != sum(1 for _ in enumerate_permutations(b))]
    return not bad, f"mismatches {bad[:5]}"


def check_regularity(n_max: int) -> Tuple[bool, str]:
    bad = []
    for b in _all_vectors(n_max):
        d = degree(b)
        if any(len(neighbors(p)) != d for p in enumerate_permutations(b)):
            bad.append(b.to_json())
    return not bad, f"irregular {bad[:5]}"


def check_trace_moments(n_max: int) -> Tuple[bool, str]:
    bad = []
    for b in _all_vectors(n_max):
        spec = full_spectrum(b)
        grouped = spec.grouped()
        traces = trace_moments(b, 4)
        for k in range(1, 5):
            if traces[k] != sum(d * e ** k for e, d in grouped.items()):
                bad.append((b.to_json(), k))
    return not bad, f"mismatches {bad[:5]}"


def check_pairing_and_transpose(n_max: int) -> Tuple[bool, str]:
    bad = []
    for b in _all_vectors(n_max):
        grouped = full_spectrum(b).grouped()
        if any(grouped.get(-e) != d for e, d in grouped.items()):
            bad.append(b.to_json())
        for a in enumerate_b_partitions(b):
            at = transpose_chain(a)
            if eigenvalue_u(at) != -eigenvalue_u(a) or dimension(at) != dimension(a):
                bad.append(a.to_json())
    return not bad, f"failures {bad[:5]}"


def lead_term_failures(n_max: int, generic_only: bool) -> List[Tuple[int, int, int, str]]:
    """Two-step instances with ``f >= 2`` and ``n - g >= 2`` where the top of the
    spectrum differs from the predicted lead terms."""
    out = []
    for p in two_step_instances(n_max):
        n, f, g = p.n, p.f, p.g
        if f < 2 or n - g < 2:
            continue
        if generic_only and not (g < f < n):
            continue
        spec = full_spectrum(p.vector())
        grouped = spec.grouped()
        delta = spec.delta
        if max(grouped) != delta or grouped[delta] != 1:
            out.append((n, f, g, "top"))
        if spec.second_eig_u() != max(delta - f, delta - (n - g)):
            out.append((n, f, g, "second eigenvalue"))
        lines = {tuple(tuple(x) for x in line.chain.chain): line.dim for line in spec.lines}
        mu = (f - g,) if f > g else ()
        a1 = ((f - 1, 1), mu, (n - g,))
        a2 = ((f,), mu, (n - g - 1, 1))
        if lines.get(a1) != (f - 1) * g:
            out.append((n, f, g, "alpha1 dimension"))
        if lines.get(a2) != (n - g - 1) * (n - f):
            out.append((n, f, g, "alpha2 dimension"))
    return out


def check_lead_terms(n_max: int, generic_only: bool) -> Tuple[bool, str]:
    bad = lead_term_failures(n_max, generic_only)
    return not bad, f"{len(bad)} failures {bad[:6]}"


def check_chi_equivalence(n_max: int, t_max: int) -> Tuple[bool, str]:
    bad = []
    for p in two_step_instances(n_max):
        b = p.vector()
        spec = full_spectrum(b)
        P = build_transition_matrix(b, "lazy")
        starts = sorted({0, P.size - 1})
        for t in range(t_max + 1):
            sq = chi_squared_sq_from_spectrum(spec, t)
            if any(chi_squared_sq_uniform(P, s, t) != sq for s in starts):
                bad.append((p.n, p.f, p.g, t))
    return not bad, f"mismatches {bad[:5]}"


def check_tv_monotone(n_max: int, t_max: int) -> Tuple[bool, str]:
    bad = []
    for b in _all_vectors(n_max):
        P = build_transition_matrix(b, "lazy")
        vals = [tv_uniform(P, 0, t) for t in range(t_max + 1)]
        if any(vals[t + 1] > vals[t] for t in range(t_max)):
            bad.append(b.to_json())
    return not bad, f"increasing curves {bad[:5]}"


def check_identities(l_max: int = 10) -> Tuple[bool, str]:
    bad = []
    for l in range(l_max + 1):
        parts = list(enumerate_partitions(l))
        if sum(syt_count(lam) ** 2 for lam in parts) != math.factorial(l):
            bad.append(("square sum", l))
        for lam in parts:
            for m in range(l + 1):
                rhs = sum(syt_count(lam, mu) * syt_count(mu) for mu in enumerate_subpartitions(lam, m))
                if rhs != syt_count(lam):
                    bad.append(("branching", tuple(lam), m))
    return not bad, f"failures {bad[:5]}"


def check_content_bounds(l_max: int = 12) -> Tuple[bool, str]:
    bad = []
    for l in range(l_max + 1):
        parts = list(enumerate_partitions(l))
        if any(content_sum(transpose(lam)) != -content_sum(lam) for lam in parts):
            bad.append(("transpose", l))
        best: Dict[int, int] = {}
        for lam in parts:
            i = lam.remainder_size
            best[i] = max(best.get(i, -10**9), content_sum(lam))
        for i, v in best.items():
            if 2 * i <= l and (l, i) != (0, 0) and v != max_content(l, i):
                bad.append(("row bound", l, i))
        for m in range(l + 1):
            for lam in parts:
                for mu in enumerate_subpartitions(lam, m):
                    if content_sum(lam) - content_sum(mu) > max_content_skew(
                            l, m, lam.remainder_size, mu.remainder_size):
                        bad.append(("skew bound", tuple(lam), tuple(mu)))
    return not bad, f"failures {bad[:5]}"


def check_bound_domination(n_max: int, t_max: int) -> Tuple[bool, str]:
    bad = []
    for p in two_step_instances(n_max):
        by_cell: Dict[Tuple[int, int, int], List[Tuple[Fraction, int]]] = {}
        for a in two_step_chains(p):
            cell = remainder_triple(a).as_tuple()
            eig = Fraction(p.n + 2 * eigenvalue_u(a), p.denominator)
            by_cell.setdefault(cell, []).append((eig, dimension(a)))
        for cell, lines in by_cell.items():
            triple = RemainderTriple(*cell)
            if sum(d for _, d in lines) > dim_sum_bound(triple, p):
                bad.append((p.to_json(), cell, "multiplicity"))
            if cell == (0, 0, 0) or is_kbig(triple, p):
                continue
            s = eig_bound(triple, p)
            if any(e > s for e, _ in lines):
                bad.append((p.to_json(), cell, "eigenvalue"))
            for t in range(t_max + 1):
                true = sum(d * e ** (2 * t) for e, d in lines if e >= 0)
                if s ** (2 * t) * dim_sum_bound(triple, p) < true:
                    bad.append((p.to_json(), cell, t))
    return not bad, f"failures {bad[:5]}"


def lower_term_failures(n_max: int, t_max: int, generic_only: bool) -> List[Tuple[int, int, int, int]]:
    """``(n, f, g, t)`` where the single-eigenspace term exceeds the squared chi-squared distance."""
    out = []
    for p in two_step_instances(n_max):
        if p.f < 2 or (generic_only and p.g == p.f):
            continue
        spec = full_spectrum(p.vector())
        for t in range(t_max + 1):
            if chi_lower_term(p, t, exact=True) > chi_squared_sq_from_spectrum(spec, t):
                out.append((p.n, p.f, p.g, t))
    return out


def check_lower_term(n_max: int, t_max: int, generic_only: bool) -> Tuple[bool, str]:
    bad = lower_term_failures(n_max, t_max, generic_only)
    return not bad, f"{len(bad)} failures {bad[:5]}"


def check_desk_cutoff() -> Tuple[bool, str]:
    p = TwoStepParams(2000, 40, 20)
    lower = chi_lower_term(p, steps(cutoff_times(p, 4).t_chi_lower))
    upper = chi_upper_bound(p, steps(cutoff_times(p, 12).t_chi_upper))
    ok = lower.sqrt() > math.exp(2) / 2 and upper < 4 * math.exp(-6)
    return ok, f"sqrt lower term {float(lower.sqrt()):.6g}, upper bound {float(upper):.6g}"


def check_fast_mix_curve() -> Tuple[bool, str]:
    p = TwoStepParams(300, 10, 1)
    k = steps(2 * cutoff_times(p, 0).t_fast_mix)
    v = float(fast_mix_no_cutoff_lower(p, k))
    ok = abs(v - (math.exp(-6) - 0.1)) < 1e-3
    small = TwoStepParams(5, 2, 1)
    P = build_transition_matrix(small.vector())
    for t in range(11):
        if fast_mix_no_cutoff_lower(small, t, exact=True) > tv_uniform(P, 0, t):
            ok = False
    return ok, f"bound at k={k}: {v:.6g}"


def check_simulation_A(reps: int = 100000) -> Tuple[bool, str]:
    p = TwoStepParams(5, 3, 2)
    s = run_statistics(SimulationConfig.make(p, 200, reps, 20240, record=[200], stats=["in_A"],
                                             block_size=4096))
    m, ci = float(s.mean["in_A"][0]), float(s.ci99["in_A"][0])
    return abs(m - 0.5) <= ci, f"{m:.5f} +/- {ci:.5f}"


def check_simulation_one_step(reps: int = 100000) -> Tuple[bool, str]:
    from .montecarlo import simulate_final_states

    b = RestrictionVector((1, 1, 1, 3, 3))
    P = build_transition_matrix(b)
    exact = exact_distribution(P, (1, 2, 3, 4, 5), 1)
    ok = True
    worst = 0.0
    for rule in ("direct", "rejection"):
        states = simulate_final_states(SimulationConfig.make(b, 1, reps, 7, rule, block_size=4096))
        idx = np.array([P.index[tuple(int(x) for x in s)] for s in states])
        freq = np.bincount(idx, minlength=P.size)
        for x, p in enumerate(exact):
            pf = float(p)
            sd = math.sqrt(reps * pf * (1 - pf)) or 1.0
            z = abs(freq[x] - reps * pf) / sd
            worst = max(worst, z)
            if z > 4:
                ok = False
    return ok, f"largest deviation {worst:.2f} sd"


def quick_checks() -> List[Tuple[str, Callable[[], Tuple[bool, str]]]]:
    return [
        ("return-probability-example", check_return_probability_example),
        ("completeness n<=6", lambda: check_completeness(6, 6)),
    ]


def full_checks() -> List[Tuple[str, Callable[[], Tuple[bool, str]]]]:
    return [
        ("return-probability-example", check_return_probability_example),
        ("completeness", lambda: check_completeness(6, 8)),
        ("count-vs-enumeration n<=7", lambda: check_count_vs_enumeration(7)),
        ("regularity n<=6", lambda: check_regularity(6)),
        ("trace-moments n<=6", lambda: check_trace_moments(6)),
        ("pairing-and-transpose n<=7", lambda: check_pairing_and_transpose(7)),
        ("lead-terms n<=8 (stated domain)", lambda: check_lead_terms(8, generic_only=False)),
        ("lead-terms n<=8 (g<f<n)", lambda: check_lead_terms(8, generic_only=True)),
        ("chi-equivalence n<=6 t<=10", lambda: check_chi_equivalence(6, 10)),
        ("tv-monotone n<=5 t<=10", lambda: check_tv_monotone(5, 10)),
        ("tableau-identities l<=10", lambda: check_identities(10)),
        ("content-bounds l<=12", lambda: check_content_bounds(12)),
        ("bound-domination n<=7 t<=10", lambda: check_bound_domination(7, 10)),
        ("lower-term n<=7 t<=10 (stated domain)", lambda: check_lower_term(7, 10, generic_only=False)),
        ("lower-term n<=7 t<=10 (g<f)", lambda: check_lower_term(7, 10, generic_only=True)),
        ("desk-scale-cutoff", check_desk_cutoff),
        ("fast-mix-curve", check_fast_mix_curve),
        ("simulation-one-step", check_simulation_one_step),
        ("simulation-A", check_simulation_A),
    ]


def run_suite(level: str) -> List[CheckResult]:
    if level == "quick":
        suite = quick_checks()
    elif level == "full":
        suite = full_checks()
    else:
        raise ValueError(f"unknown level {level!r}; use quick or full")
    return [_timed(name, fn) for name, fn in suite]
