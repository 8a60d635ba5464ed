import csv
import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import adjacency_int, brute_sigmas
from rtwalk import NotTwoStepError, RestrictionVector, TwoStepParams, count_permutations
from rtwalk.errors import CapExceededError, EmptyWalkError, InconsistencyError
from rtwalk.restricted import sorted_vectors, two_step_instances
from rtwalk.spectrum import (
    BPartition,
    RemainderTriple,
    content_bound,
    dim_sum_bound,
    dimension,
    eig_bound,
    eigenvalue_from_contents,
    eigenvalue_from_tableau,
    eigenvalue_u,
    enumerate_b_partitions,
    full_spectrum,
    indicator_tableau,
    is_kbig,
    kbig_certified,
    lead_chains,
    remainder_triple,
    spectrum_to_csv,
    spectrum_to_json,
    transpose_chain,
    two_step_chains,
)
from rtwalk.tableaux import Partition

B5 = RestrictionVector((1, 1, 1, 3, 3))
P532 = TwoStepParams(5, 3, 2)


def chain(*parts, left=(3, 2), right=(2, 3)):
    return BPartition(tuple(Partition(p) for p in parts), left, right)


# ---- chain structure ----

def test_chain_validation():
    with pytest.raises(ValueError):
        chain((3,), (2,), (2, 1))  # removes only one box at step 1
    with pytest.raises(ValueError):
        chain((3,), (1, 1), (2, 1, 1), left=(3, 2), right=(1, 4))  # (1,1) not inside (3)
    a = chain((3,), (1,), (2, 1))
    assert a.lambdas == (Partition((3,)), Partition((2, 1)))
    assert len(a.mus) == 3 and a.mus[0] == a.mus[-1] == Partition(())


def test_b_partition_examples():
    chains = list(enumerate_b_partitions(B5))
    assert chain((3,), (1,), (2, 1)) in chains
    assert [a.to_json() for a in enumerate_b_partitions(RestrictionVector((1,)))] == [[[1]]]
    assert sum(dimension(a) for a in chains) == 36
    assert len(set(chains)) == len(chains)


def test_enumeration_is_deterministic():
    first = [a.to_json() for a in enumerate_b_partitions(RestrictionVector((1, 1, 2, 3, 3)))]
    second = [a.to_json() for a in enumerate_b_partitions(RestrictionVector((1, 1, 2, 3, 3)))]
    assert first == second


def test_enumeration_errors():
    with pytest.raises(EmptyWalkError):
        list(enumerate_b_partitions(RestrictionVector((2, 2), strict=False)))
    with pytest.raises(CapExceededError):
        list(enumerate_b_partitions(RestrictionVector((1,) * 6), cap=3))


# ---- eigenvalues ----

def test_indicator_tableau_examples():
    a = chain((3,), (1,), (2, 1))
    T = indicator_tableau(a)
    assert T[(1, 1)] == 1
    assert T[(1, 2)] == 2  # inside lam_1 and inside lam_2/mu_1
    assert set(T) == {(1, 1), (1, 2), (1, 3), (2, 1)}
    single = BPartition((Partition((4,)),), (4,), (4,))
    assert set(indicator_tableau(single).values()) == {1}


def test_eigenvalue_examples():
    assert eigenvalue_u(chain((3,), (1,), (2, 1))) == 3
    for p in two_step_instances(8):
        n, f, g = p.n, p.f, p.g
        if f == n:
            continue
        lead = lead_chains(p)
        L, R = (f, n - f), (g, n - g)
        a0 = BPartition(lead["alpha0"], L, R)
        assert eigenvalue_u(a0) == p.delta
        assert dimension(a0) == 1
        if f >= 2:
            a1 = BPartition(lead["alpha1"], L, R)
            assert eigenvalue_u(a1) == p.delta - f
        if n - g >= 2:
            a2 = BPartition(lead["alpha2"], L, R)
            assert eigenvalue_u(a2) == p.delta - (n - g)


def test_lead_dimensions_generic_domain():
    for p in two_step_instances(8):
        n, f, g = p.n, p.f, p.g
        if not (g < f < n):
            continue
        L, R = (f, n - f), (g, n - g)
        lead = lead_chains(p)
        if f >= 2:
            assert dimension(BPartition(lead["alpha1"], L, R)) == (f - 1) * g
        if n - g >= 2:
            assert dimension(BPartition(lead["alpha2"], L, R)) == (n - g - 1) * (n - f)


def test_two_eigenvalue_forms_agree_everywhere():
    for n in range(1, 7):
        for b in sorted_vectors(n):
            for a in enumerate_b_partitions(b):
                assert eigenvalue_from_tableau(a) == eigenvalue_from_contents(a)


def test_inconsistency_is_reported(monkeypatch):
    import rtwalk.spectrum as sp

    monkeypatch.setattr(sp, "eigenvalue_from_tableau", lambda a: 99)
    with pytest.raises(InconsistencyError):
        sp.eigenvalue_u(chain((3,), (1,), (2, 1)))


# ---- full spectrum ----

def test_s3_against_dense_diagonalisation():
    A = np.array(adjacency_int((1, 1, 1)), dtype=float)
    dense = sorted(np.round(np.linalg.eigvalsh(A)).astype(int).tolist())
    spec = full_spectrum(RestrictionVector((1, 1, 1)))
    assert spec.grouped() == {3: 1, 0: 4, -3: 1}
    listed = sorted(e for line in spec.lines for e in [line.eig_u] * line.dim)
    assert listed == dense


@pytest.mark.parametrize("b", [(1, 1, 1, 2), (1, 1, 2, 2), (1, 1, 1, 3, 3), (1, 1, 2, 3, 3)])
def test_spectrum_against_dense_diagonalisation(b):
    A = np.array(adjacency_int(b), dtype=float)
    dense = sorted(np.round(np.linalg.eigvalsh(A)).astype(int).tolist())
    spec = full_spectrum(RestrictionVector(b))
    assert sorted(e for line in spec.lines for e in [line.eig_u] * line.dim) == dense


def test_spectrum_summary_and_invariants():
    spec = full_spectrum(B5)
    assert spec.total_dim == 36 and spec.delta == 6
    assert max(spec.grouped()) == 6 and spec.grouped()[6] == 1
    for line in spec.lines:
        assert abs(line.eig_u) <= spec.delta
        assert -1 <= line.eig_p <= 1 and line.dim >= 1
        assert line.eig_p == Fraction(5 + 2 * line.eig_u, 17)


@pytest.mark.parametrize("n", range(1, 7))
def test_completeness_all_sorted(n):
    for b in sorted_vectors(n):
        spec = full_spectrum(b)
        assert spec.total_dim == count_permutations(b) == len(brute_sigmas(b.b))
        assert [e for e in spec.grouped() if e == spec.delta] == [spec.delta]
        assert spec.grouped()[spec.delta] == 1


def test_trace_moments_against_numpy_powers():
    for n in range(1, 6):
        for b in sorted_vectors(n):
            A = np.array(adjacency_int(b.b), dtype=np.int64)
            spec = full_spectrum(b)
            M = np.eye(len(A), dtype=np.int64)
            for k in range(1, 5):
                M = M @ A
                assert int(np.trace(M)) == sum(l.dim * l.eig_u ** k for l in spec.lines)


# ---- pairing and triples ----

def test_transpose_chain_examples():
    a0 = BPartition(lead_chains(P532)["alpha0"], (3, 2), (2, 3))
    t0 = transpose_chain(a0)
    assert eigenvalue_u(t0) == -P532.delta
    assert transpose_chain(t0) == a0
    for a in two_step_chains(P532):
        t = transpose_chain(a)
        assert eigenvalue_u(t) == -eigenvalue_u(a)
        assert dimension(t) == dimension(a)


def test_spectrum_symmetric_under_negation():
    for n in range(1, 7):
        for b in sorted_vectors(n):
            g = full_spectrum(b).grouped()
            assert all(g.get(-e) == d for e, d in g.items())


def test_remainder_triples():
    lead = lead_chains(P532)
    L, R = (3, 2), (2, 3)
    assert remainder_triple(BPartition(lead["alpha0"], L, R)).as_tuple() == (0, 0, 0)
    assert remainder_triple(BPartition(lead["alpha1"], L, R)).as_tuple() == (1, 0, 0)
    assert remainder_triple(BPartition(lead["alpha2"], L, R)).as_tuple() == (0, 0, 1)
    with pytest.raises(NotTwoStepError):
        remainder_triple(BPartition((Partition((3,)),), (3,), (3,)))
    with pytest.raises(ValueError):
        RemainderTriple(0, 1, 1)


# ---- bounds ----

def test_eig_bound_examples():
    p = TwoStepParams(40, 12, 5)
    D = p.denominator
    assert eig_bound(RemainderTriple(0, 0, 0), p) == 1
    assert eig_bound(RemainderTriple(1, 0, 0), p) == 1 - Fraction(2 * p.f, D)
    for k in range(7, 36):
        assert eig_bound(RemainderTriple(0, 0, k), p) == Fraction(9, 10)
    with pytest.raises(ValueError):
        eig_bound(RemainderTriple(13, 0, 0), p)


def test_dim_sum_bound_examples():
    p = TwoStepParams(9, 5, 3)
    assert dim_sum_bound(RemainderTriple(1, 0, 0), p) == p.f * p.g
    assert dim_sum_bound(RemainderTriple(0, 0, 0), p) == 1


def _cells_of(p):
    by_cell = {}
    for a in two_step_chains(p):
        by_cell.setdefault(remainder_triple(a).as_tuple(), []).append(
            (Fraction(p.n + 2 * eigenvalue_u(a), p.denominator), dimension(a)))
    return by_cell


def test_multiplicity_bound_dominates_exhaustive():
    for p in two_step_instances(7):
        for cell, lines in _cells_of(p).items():
            assert sum(d for _, d in lines) <= dim_sum_bound(RemainderTriple(*cell), p)


def test_content_bound_dominates_every_cell():
    for p in two_step_instances(8):
        for cell, lines in _cells_of(p).items():
            s = content_bound(RemainderTriple(*cell), p)
            assert all(e <= s for e, _ in lines), (p, cell)


def test_eig_bound_dominates_on_small_k_cells():
    for p in two_step_instances(7):
        for cell, lines in _cells_of(p).items():
            t = RemainderTriple(*cell)
            if not is_kbig(t, p):
                assert all(e <= eig_bound(t, p) for e, _ in lines)


def test_large_k_constant_certified_at_desk_scale():
    ok, ceiling = kbig_certified(TwoStepParams(2000, 40, 20))
    assert ok and ceiling < Fraction(7, 10)
    # at tiny sizes the constant is not a proven bound and the flag says so
    ok_small, ceiling_small = kbig_certified(TwoStepParams(5, 5, 4))
    assert not ok_small and ceiling_small == Fraction(24, 25)


def test_equal_remainders_reduce_to_factorial():
    # with i = j the dimension sum over lam_2 collapses to the square-sum identity
    p = TwoStepParams(9, 5, 3)
    for j in range(3):
        t = RemainderTriple(j, j, j)
        binoms = math.comb(p.f, j) * math.comb(p.n - p.g, j)
        assert dim_sum_bound(t, p) == binoms * math.factorial(j)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 60).flatmap(lambda n: st.tuples(st.just(n), st.integers(2, n))).flatmap(
    lambda nf: st.tuples(st.just(nf[0]), st.just(nf[1]), st.integers(1, nf[1]))))
def test_bound_values_lie_in_unit_interval(nfg):
    p = TwoStepParams(*nfg)
    for cell in [(0, 0, 0), (1, 0, 0), (0, 0, 1), (1, 1, 1)]:
        t = RemainderTriple(*cell)
        try:
            v = content_bound(t, p)
        except ValueError:
            continue
        assert v <= 1


# ---- export ----

def test_exports():
    spec = full_spectrum(B5)
    rows = list(csv.reader(io.StringIO(spectrum_to_csv(spec))))
    assert rows[0] == ["eig_u", "eig_p_num", "eig_p_den", "dim"]
    assert sum(int(r[3]) for r in rows[1:]) == 36
    assert all(int(r[2]) == 17 for r in rows[1:])
    js = spectrum_to_json(spec)
    assert js["summary"]["size"] == 36 and js["summary"]["delta"] == 6
    assert js["lines"][0]["eig_p"].endswith("/17")
