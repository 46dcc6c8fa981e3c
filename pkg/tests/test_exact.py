import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from rainbow.core import InputError, KGraph, PartiteHypergraph
from rainbow.exact import (Indeterminate, RainbowMatching, check_dense, closure_graph,
                           fractional_optimum, has_rainbow_matching, matching_number, max_matching,
                           pad_matching, reduction_equivalence_check, reduction_sides, restrict_matching)
from rainbow.generators import (KFamily, build_F, complete_kgraph, make_extremal_family,
                                make_F_t, make_H_t, make_Hk, random_family, threshold)


def complete_partite(q, n, k):
    return PartiteHypergraph(q, n, k, [(c, *b) for c in range(q) for b in itertools.combinations(range(n), k)])


@st.composite
def partite(draw, max_q=4, max_n=7, max_edges=25):
    q = draw(st.integers(1, max_q))
    n = draw(st.integers(2, max_n))
    k = draw(st.integers(1, min(3, n)))
    all_e = [(c, *b) for c in range(q) for b in itertools.combinations(range(n), k)]
    chosen = draw(st.lists(st.sampled_from(all_e), max_size=max_edges, unique=True))
    return PartiteHypergraph(q, n, k, chosen)


@st.composite
def kgraphs(draw):
    n = draw(st.integers(2, 8))
    k = draw(st.integers(1, min(3, n)))
    all_e = list(itertools.combinations(range(n), k))
    return KGraph(n, k, draw(st.lists(st.sampled_from(all_e), max_size=20, unique=True)))


# --- maximum matching -------------------------------------------------------

def test_max_matching_examples():
    assert max_matching(complete_kgraph(5, 2)).size == 2
    # every edge meets {0, 1}; enumeration confirms 2
    assert matching_number(make_Hk(2, 6, 2)) == 2
    assert matching_number(make_H_t(2, 6, 2)) == 3


@given(st.one_of(kgraphs(), partite()))
def test_max_matching_agrees_with_oracle(H):
    res = max_matching(H)
    assert res.status == "optimal"
    assert res.size == oracles.nu(H.rows.tolist())
    M = res.matching
    covered = set(M.vertex_ids())
    # no single edge can be added
    assert all(covered.intersection(r) for r in H.rows.tolist())


@given(partite(max_edges=40))
def test_parallel_mode_same_size(H):
    assert max_matching(H, parallel=True, workers=3).size == max_matching(H).size


def test_max_matching_deterministic():
    H = make_H_t(2, 8, 3)
    a, b = max_matching(H), max_matching(H)
    assert a.matching == b.matching and a.nodes == b.nodes


def test_budget_is_reported():
    H = complete_partite(4, 12, 2)
    res = max_matching(H, node_cap=5, target=10)
    assert res.exhausted and res.status == "budget"
    with pytest.raises(Indeterminate):
        matching_number(H, node_cap=5)


# --- rainbow matchings ------------------------------------------------------

def test_rainbow_examples():
    assert has_rainbow_matching(make_extremal_family(5, 2, 2)) is None
    one = KFamily.from_edge_lists(5, 2, [[(1, 4)]])
    assert has_rainbow_matching(one).edges == ((1, 4),)
    ext = make_extremal_family(6, 2, 2)
    plus = KFamily.from_edge_lists(6, 2, [ext.families[0].edges + [(2, 3)], ext.families[1].edges])
    R = has_rainbow_matching(plus)
    assert R is not None and R.is_valid_for(plus)


@st.composite
def families(draw, max_n=7, k=2):
    n = draw(st.integers(k * 2, max_n))
    t = draw(st.integers(1, n // k))
    seed = draw(st.integers(0, 10**6))
    sizes = [draw(st.integers(0, comb(n, k))) for _ in range(t)]
    return random_family(n, k, t, sizes, np.random.default_rng(seed))


@given(families())
def test_rainbow_agrees_with_oracle(fam):
    R = has_rainbow_matching(fam)
    assert (R is not None) == oracles.has_rainbow([F.edges for F in fam.families])
    if R is not None:
        assert R.is_valid_for(fam)


def test_rainbow_validity_checks():
    fam = KFamily.from_edge_lists(4, 2, [[(0, 1)], [(1, 2), (2, 3)]])
    assert RainbowMatching(((0, 1), (2, 3))).is_valid_for(fam)
    assert not RainbowMatching(((0, 1), (1, 2))).is_valid_for(fam)
    assert not RainbowMatching(((0, 1),)).is_valid_for(fam)


# --- reduction --------------------------------------------------------------

def test_reduction_examples():
    assert reduction_sides(make_extremal_family(5, 2, 2)) == (False, False)
    full = KFamily.from_edge_lists(6, 2, [complete_kgraph(6, 2).edges] * 2)
    assert reduction_sides(full) == (True, True)


def test_reduction_random_at_threshold():
    n, k, t = 6, 2, 2
    s = threshold(n, k, t) + 1
    for trial in range(1000):
        fam = random_family(n, k, t, [s, s], np.random.default_rng(trial))
        assert reduction_equivalence_check(fam)


def test_pad_and_restrict_round_trip():
    fam = random_family(9, 2, 3, [20, 20, 20], np.random.default_rng(2))
    R = has_rainbow_matching(fam)
    M = max_matching(build_F(fam), target=3).matching
    big = pad_matching(M, fam)
    assert len(big) == 9 // 2
    back = restrict_matching(big, fam)
    assert RainbowMatching.from_matching(back, 3).is_valid_for(fam)
    assert R is not None
    with pytest.raises(InputError):
        pad_matching(M.__class__(M.edges[:1], 0), fam)


@given(families(max_n=8))
def test_reduction_property(fam):
    assert reduction_equivalence_check(fam)


# --- fractional matchings ---------------------------------------------------

def test_lp_examples():
    q, n, k = 3, 6, 2
    sol = fractional_optimum(complete_partite(q, n, k))
    assert sol.matching_value == sol.cover_value == q
    single = PartiteHypergraph(1, 2, 2, [(0, 0, 1)])
    assert fractional_optimum(single).matching_value == 1


def test_lp_matches_dense_oracle_on_Ft():
    H = make_F_t(2, 5, 2)
    sol = fractional_optimum(H)
    sol.check(H)
    assert sol.matching_value == Fraction(2)
    assert abs(oracles.lp_value(H.rows.tolist(), H.nverts) - float(sol.matching_value)) < 1e-9


@given(st.one_of(partite(), kgraphs()))
def test_strong_duality_exact(H):
    sol = fractional_optimum(H)
    sol.check(H)
    assert sol.matching_value == sol.cover_value
    assert max_matching(H).size <= sol.matching_value
    assert abs(oracles.lp_value(H.rows.tolist(), H.nverts) - float(sol.matching_value)) < 1e-7


@given(partite())
def test_float_mode_is_feasible_and_close(H):
    exact = fractional_optimum(H)
    approx = fractional_optimum(H, mode="float")
    approx.check(H)
    assert approx.matching_value <= exact.matching_value <= approx.cover_value
    assert abs(approx.float_value - float(exact.matching_value)) < 1e-6


def test_lp_size_limit():
    with pytest.raises(InputError):
        fractional_optimum(complete_partite(3, 8, 2), max_edges=10)


# --- closure ----------------------------------------------------------------

def test_closure_examples():
    H = make_F_t(2, 5, 2)
    ones = {c: 1 for c in H.Q}
    CL = closure_graph(H, ones)
    assert len(CL) == 2 * comb(5, 2)
    with pytest.raises(InputError):
        closure_graph(H, {})
    assert len(closure_graph(PartiteHypergraph(2, 4, 2), {})) == 0


def test_closure_keeps_fractional_value_on_Ft():
    H = make_F_t(2, 5, 2)
    sol = fractional_optimum(H)
    CL = closure_graph(H, sol.vertex_weights)
    assert H.edge_set <= CL.edge_set
    assert fractional_optimum(CL).matching_value == sol.matching_value


@given(partite(max_n=6))
def test_closure_contains_host_and_preserves_value(H):
    sol = fractional_optimum(H)
    CL = closure_graph(H, sol.vertex_weights)
    assert H.edge_set <= CL.edge_set
    assert fractional_optimum(CL).matching_value == sol.matching_value


# --- density ----------------------------------------------------------------

def test_dense_complete_host():
    res = check_dense(complete_partite(3, 8, 2), 3, 0.01, 0.1, 0.1)
    assert res.dense and res.exact


def test_dense_hub_violation():
    # every edge uses ground vertices 0 and 1; any A missing them has no edges
    H = PartiteHypergraph(2, 8, 2, [(c, 0, 1) for c in range(2)] + [(0, 0, v) for v in range(2, 8)])
    res = check_dense(H, 2, Fraction(1, 10), 0, Fraction(1, 8))
    assert not res.dense and res.witness_edges == 0
    assert H.ground(0) not in res.witness


def test_dense_extremal_direction():
    fam = make_extremal_family(6, 2, 2)
    H = build_F(fam)
    res = check_dense(H, 2, Fraction(1, 100), 0, 0)
    assert not res.dense
    # the witness avoids the vertex 0 that every edge uses
    assert H.ground(0) not in res.witness and res.witness_edges == 0
    # enumerate the extreme sets by hand: only those avoiding ground 0 are empty
    empties = [S for S in itertools.combinations(range(6), 4)
               if not any(set(e) <= set(S) for F in fam.families for e in F.edges)]
    assert empties == [S for S in itertools.combinations(range(6), 4) if 0 not in S]
