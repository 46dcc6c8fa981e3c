from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from rainbow.core import InputError
from rainbow.exact import has_rainbow_matching
from rainbow.generators import KFamily, make_extremal_family, random_family, threshold
from rainbow.harness import (SolveConfig, exhaustive_size, precondition, solve_rainbow,
                             verify_conjecture)
from rainbow.io import dumps


def near_extremal_n10():
    fam = make_extremal_family(10, 2, 3)
    return KFamily.from_edge_lists(10, 2, [F.edges + [(2, 3)] for F in fam.families])


def test_close_route_n10():
    fam = near_extremal_n10()
    rep = solve_rainbow(fam, SolveConfig(epsilon=0.3))
    assert rep.route == "extremal" and rep.status == "found"
    assert rep.certificate.is_valid_for(fam)
    assert has_rainbow_matching(fam) is not None


def test_pipeline_route_n40():
    for seed in range(10):
        fam = random_family(40, 2, 8, [int(0.8 * comb(40, 2))] * 8, np.random.default_rng(seed))
        rep = solve_rainbow(fam, SolveConfig(seed=seed))
        assert rep.route == "pipeline" and rep.status == "found", seed
        assert rep.certificate.is_valid_for(fam)
        stages = [s["stage"] for s in rep.stages]
        assert stages[:2] == ["precondition", "closeness"] and "pipeline" in stages


def test_precondition_and_override():
    fam = make_extremal_family(8, 2, 3)
    rep = solve_rainbow(fam)
    assert rep.status == "precondition" and rep.certificate is None
    assert rep.stages[0]["violations"] == [1, 2, 3]
    over = solve_rainbow(fam, SolveConfig(override=True))
    assert over.route == "exact-fallback" and over.status == "none"


def test_failed_route_without_fallback_is_indeterminate():
    fam = make_extremal_family(8, 2, 3)
    rep = solve_rainbow(fam, SolveConfig(override=True, fallback=False, route="extremal"))
    assert rep.status == "indeterminate" and rep.stages[-1]["ok"] is False


def test_large_n_uses_exact():
    fam = random_family(13, 2, 1, [5], np.random.default_rng(0))
    rep = solve_rainbow(fam)
    assert rep.route == "exact" and rep.status == "found"
    assert any("exact solver" in note for note in rep.notes)


def test_unknown_route():
    with pytest.raises(InputError):
        solve_rainbow(near_extremal_n10(), SolveConfig(route="fastest"))


def test_report_is_reproducible():
    fam = random_family(12, 2, 3, [50] * 3, np.random.default_rng(4))
    a = solve_rainbow(fam, SolveConfig(seed=3)).to_record()
    b = solve_rainbow(fam, SolveConfig(seed=3)).to_record()
    assert dumps(a) == dumps(b)
    assert "timings" not in a
    assert "timings" in solve_rainbow(fam, SolveConfig(seed=3)).to_record(timings=True)


def test_precondition_helper():
    fam = KFamily.from_edge_lists(5, 2, [[(0, 1)] * 1, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]])
    pre = precondition(fam)
    assert pre["bound"] == threshold(5, 2, 2) == 4
    assert pre["violations"] == [1] and not pre["ok"]


@settings(max_examples=20)
@given(st.integers(0, 10**6), st.sampled_from(["auto", "exact", "pipeline", "extremal"]))
def test_certificates_always_valid(seed, route):
    rng = np.random.default_rng(seed)
    n, t = int(rng.integers(6, 10)), int(rng.integers(1, 3))
    s = threshold(n, 2, t) + 1 + int(rng.integers(0, 4))
    fam = random_family(n, 2, t, [min(s, comb(n, 2))] * t, rng)
    rep = solve_rainbow(fam, SolveConfig(seed=seed, route=route))
    assert rep.status == "found"
    assert rep.certificate.is_valid_for(fam)
    assert oracles.has_rainbow([F.edges for F in fam.families])


# --- campaigns --------------------------------------------------------------

def test_campaign_t1_always_succeeds():
    rep = verify_conjecture(2, 1, range(2, 8), samples=300, seed=1)
    assert [r.failures for r in rep.rows] == [0] * 6
    assert all(r.samples == 300 for r in rep.rows)
    assert all(rep.sharpness.values())


def test_campaign_random_small():
    rep = verify_conjecture(2, 2, [5, 6], samples=2000, seed=2)
    assert not rep.counterexamples
    assert [r.bound for r in rep.rows] == [threshold(5, 2, 2, "max"), threshold(6, 2, 2, "max")]
    assert rep.sharpness == {5: True, 6: True}


def test_batch_decider_agrees_with_oracle():
    from rainbow.harness import _all_ksets, _decide_batch
    rng = np.random.default_rng(0)
    for n in (5, 6, 7):
        ks = _all_ksets(n, 2)
        pos = {tuple(e): i for i, e in enumerate(ks.tolist())}
        ext = make_extremal_family(n, 2, 2)
        idx = np.array([[sorted(pos[e] for e in F.edges) for F in ext.families]])
        assert not _decide_batch(2, n, 2, idx, ks, 10**6)[0]
    for _ in range(1000):
        n, s = int(rng.integers(4, 8)), int(rng.integers(1, 6))
        ks = _all_ksets(n, 2)
        idx = np.sort(np.argsort(rng.random((1, 2, len(ks))), axis=2)[:, :, :s], axis=2)
        want = oracles.has_rainbow([[tuple(ks[j]) for j in idx[0, i]] for i in range(2)])
        assert _decide_batch(2, n, 2, idx, ks, 10**6)[0] == want


def test_counterexamples_reported_verbatim(monkeypatch):
    from rainbow import harness
    real = harness._decide_batch

    def flip_first(t, n, k, idx, ksets, node_cap):
        ok = real(t, n, k, idx, ksets, node_cap)
        ok[0] = False
        return ok

    monkeypatch.setattr(harness, "_decide_batch", flip_first)
    rep = verify_conjecture(2, 2, [5], samples=50, seed=3)
    assert rep.rows[0].failures == len(rep.counterexamples) == 1
    ce = rep.counterexamples[0]
    assert ce["n"] == 5 and len(ce["families"]) == 2
    for F in ce["families"]:
        assert len(F) == threshold(5, 2, 2, "max") + 1
        assert all(1 <= v <= 5 for e in F for v in e)


def test_exhaustive_counts_and_refusal():
    rep = verify_conjecture(2, 2, [4, 5], mode="exhaustive")
    # graph classes with 4 edges on 4 vertices: 2; with 5 edges on 5 vertices: 6
    assert [r.samples for r in rep.rows] == [30, 1512]
    assert all(r.failures == 0 for r in rep.rows)
    assert exhaustive_size(5, 2, 2, 5) == comb(10, 5) ** 2
    with pytest.raises(InputError, match="refused"):
        verify_conjecture(2, 2, [8], mode="exhaustive")
    with pytest.raises(InputError, match="refused"):
        verify_conjecture(2, 2, [6], mode="exhaustive", limit=1000)
    with pytest.raises(InputError):
        verify_conjecture(2, 2, [5], mode="sideways")


def test_campaign_csv():
    rep = verify_conjecture(2, 2, [5], samples=100, seed=0)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,k,t,bound,samples,failures,route-stats"
    assert lines[1].startswith("5,2,2,4,100,0,exact:100;sharp:yes;regime:")
    assert rep.to_record()["sharpness"] == {"5": True}
