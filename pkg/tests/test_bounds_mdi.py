from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decoyforge.bounds_mdi import (
    ELIMINATED,
    amended_pair,
    amended_table,
    e11_upper_3,
    e11_upper_4,
    estimate_mdi,
    f_t11,
    g_prime,
    in_j0,
    mdi_key_rate,
    s11_lower_4,
    s11_lower_pair,
    s11_lower_pairwise,
    t11_upper_4,
)
from decoyforge.channel import TABLE_II, MdiTruth, assemble_observables, mdi_truth
from decoyforge.errors import DegenerateBoundError
from decoyforge.oracle import certify_bounds, exactness_gaps, random_truth
from decoyforge.sources import SourceTriple, g_func, make_poisson, make_vacuum


def stats_for(truth, A, B):
    side = lambda t: {"0": make_vacuum(t.k_max), "x": t.x, "y": t.y, "z": t.z}  # noqa: E731
    return assemble_observables(truth, (side(A), side(B)), "mdi")


def j0_from_definition(top):
    # m, n >= 1, m + n >= 5, excluding the three eliminated pairs with sum >= 5
    return {
        (m, n)
        for m in range(1, top + 1)
        for n in range(1, top + 1)
        if m + n >= 5 and (m, n) not in {(2, 3), (3, 3), (3, 2)}
    }


def test_j0_matches_definition():
    got = {(m, n) for m in range(1, 11) for n in range(1, 11) if in_j0(m, n)}
    assert got == j0_from_definition(10)
    assert not any(in_j0(*p) for p in ELIMINATED | {(1, 1)})
    assert not in_j0(0, 5)


class TestAmended:
    def test_all_vacuum(self, poisson_triple_6):
        truth = MdiTruth({"Z": np.zeros((7, 7))}, {"Z": np.zeros((7, 7))})
        st_ = amended_table(stats_for(truth, poisson_triple_6, poisson_triple_6).S["Z"], poisson_triple_6, poisson_triple_6)
        assert all(v == 0.0 for v in st_.values())

    def test_constant_truth_factorizes(self, poisson_triple_6):
        c = 0.37
        truth = MdiTruth({"Z": np.full((7, 7), c)}, {"Z": np.zeros((7, 7))})
        A = B = poisson_triple_6
        st_ = amended_table(stats_for(truth, A, B).S["Z"], A, B)
        # truncated coefficients: use their actual sums
        for l, r in itertools.product("xyz", repeat=2):
            expected = c * (A[l].coeffs.sum() - A[l][0]) * (B[r].coeffs.sum() - B[r][0])
            assert st_[l, r] == pytest.approx(expected, rel=1e-12)

    def test_matches_double_sum(self, poisson_triple_6):
        truth = random_truth(4, "mdi", 6)
        A = B = poisson_triple_6
        st_ = amended_table(stats_for(truth, A, B).S["X"], A, B)
        s = truth.s["X"]
        for l, r in (("x", "y"), ("z", "z")):
            direct = math.fsum(A[l][j] * B[r][k] * s[j, k] for j in range(1, 7) for k in range(1, 7))
            assert st_[l, r] == pytest.approx(direct, rel=1e-12)

    def test_arithmetic(self):
        assert amended_pair(1.0, 0.5, 0.2, 0.5, 0.2, 0.1) == pytest.approx(1.0 - 0.1 - 0.1 + 0.025)


class TestS11Lower:
    def test_zero_truth(self, poisson_triple_6):
        A = B = poisson_triple_6
        St = {k: 0.0 for k in itertools.product("xyz", repeat=2)}
        assert s11_lower_pair(A.x, A.y, B.x, B.y, 0.0, 0.0, 0.0) == 0.0
        assert s11_lower_4(A, B, St) == 0.0

    def test_exact_when_supported_on_eliminated(self, poisson_triple_6):
        gaps = exactness_gaps(0, "mdi", poisson_triple_6)
        for key in ("s11_lower(x,y)", "s11_lower(x,z)", "s11_lower(y,z)"):
            assert gaps[key] < 1e-9

    def test_truncated_with_s22_zero(self, poisson_triple_6):
        s = np.zeros((7, 7))
        s[:3, :3] = np.random.default_rng(0).uniform(0.1, 1, (3, 3))
        s[2, 2] = 0.0
        A = B = poisson_triple_6
        truth = MdiTruth({"Z": s}, {"Z": np.zeros((7, 7))})
        St = amended_table(stats_for(truth, A, B).S["Z"], A, B)
        for value in s11_lower_pairwise(A, B, St).values():
            assert value <= s[1, 1] + 1e-12

    def test_below_truth_and_ordered(self, poisson_triple_6):
        A = B = poisson_triple_6
        for seed in range(100):
            truth = random_truth(seed, "mdi", 6, sorted=bool(seed % 2))
            St = amended_table(stats_for(truth, A, B).S["Z"], A, B)
            pw = s11_lower_pairwise(A, B, St)
            assert s11_lower_4(A, B, St) == pw["x", "y"] <= truth.s["Z"][1, 1] + 1e-12

    def test_degenerate(self):
        d = make_poisson(0.2, 6)
        T = SourceTriple(d, d, make_poisson(0.5, 6), strict=False)
        with pytest.raises(DegenerateBoundError):
            s11_lower_4(T, T, {k: 0.1 for k in itertools.product("xyz", repeat=2)})


class TestE11Upper3:
    def test_no_errors(self, poisson_triple_6):
        A = poisson_triple_6
        assert e11_upper_3(A.x, A.x, 0.1, 0.0, 0.01, 0.0, 0.01, 0.0, 0.001, 0.0, 0.05) == 0.0

    def test_single_error_term(self, poisson_triple_6):
        A = B = poisson_triple_6
        s = np.full((7, 7), 0.3)
        e = np.zeros((7, 7))
        e[1, 1] = 0.2
        truth = MdiTruth({"X": s}, {"X": e})
        stats = stats_for(truth, A, B)
        S, T = stats.S["X"], stats.T["X"]
        num = amended_pair(T["x", "x"], A.x[0], T["0", "x"], B.x[0], T["x", "0"], T["0", "0"])
        assert num == pytest.approx(A.x[1] * B.x[1] * 0.3 * 0.2, rel=1e-12)
        bound = e11_upper_3(
            A.x, B.x, S["x", "x"], stats.E("X", "x", "x"), S["0", "x"], stats.E("X", "0", "x"),
            S["x", "0"], stats.E("X", "x", "0"), S["0", "0"], stats.E("X", "0", "0"), 0.3,
        )
        assert bound == pytest.approx(0.2, rel=1e-12)

    def test_zero_denominator(self, poisson_triple_6):
        A = poisson_triple_6
        assert e11_upper_3(A.x, A.x, 0.1, 0.1, 0, 0, 0, 0, 0, 0, 0.0) == 1.0


class TestT11Upper:
    def test_exact_off_j0(self, poisson_triple_6):
        assert exactness_gaps(3, "mdi", poisson_triple_6)["t11_upper_4"] < 1e-9

    def test_zero_errors(self, poisson_triple_6):
        A = B = poisson_triple_6
        Tt = {k: 0.0 for k in itertools.product("xyz", repeat=2)}
        assert t11_upper_4(A, B, Tt) == 0.0

    def test_residual_expansion(self, poisson_triple_6):
        A = B = poisson_triple_6
        truth = random_truth(8, "mdi", 6)
        Tt = amended_table(stats_for(truth, A, B).T["X"], A, B)
        t = truth.t("X")
        rebuilt = t11_upper_4(A, B, Tt) + math.fsum(
            f_t11(m, n, A, B) * t[m, n] for m in range(1, 7) for n in range(1, 7) if in_j0(m, n)
        )
        assert rebuilt == pytest.approx(t[1, 1], rel=1e-8)

    def test_upper_bound(self, poisson_triple_6):
        A = B = poisson_triple_6
        for seed in range(100):
            truth = random_truth(seed, "mdi", 6)
            Tt = amended_table(stats_for(truth, A, B).T["X"], A, B)
            assert t11_upper_4(A, B, Tt) >= truth.t("X")[1, 1] - 1e-12


class TestResidualWeights:
    @pytest.mark.parametrize("mn", [(1, 4), (4, 4), (4, 1), (6, 6)])
    def test_non_positive(self, mn, poisson_triple_6):
        assert f_t11(*mn, poisson_triple_6, poisson_triple_6) <= 0

    @pytest.mark.parametrize("mn", [(2, 3), (1, 1), (3, 3), (1, 2)])
    def test_rejects_eliminated(self, mn, poisson_triple_6):
        with pytest.raises(ValueError):
            f_t11(*mn, poisson_triple_6, poisson_triple_6)

    def test_g_prime_branches(self, poisson_triple):
        T = poisson_triple
        assert g_prime(T, 1) == g_func(T, 1, 2, 3)
        assert g_prime(T, 2) == 0.0
        assert g_prime(T, 3) == 0.0
        assert g_prime(T, 4) == g_func(T, 2, 3, 4)
        with pytest.raises(ValueError):
            g_prime(T, 0)


class TestKeyRate:
    def test_random_phase(self):
        assert mdi_key_rate(0.1, 0.1, 0.5, 0.5, 0.0, 0.0, 1.16) == 0.0

    def test_perfect(self):
        assert mdi_key_rate(0.3, 0.2, 0.5, 0.0, 0.01, 0.0, 1.16) == pytest.approx(0.03)

    def test_independent_recomputation(self):
        p = TABLE_II.at_loss(20)
        truth = mdi_truth(p)
        sig = make_poisson(0.3, 6)
        stats = assemble_observables(truth, ({"z": sig}, {"z": sig}), "mdi")
        S, E = stats.S["Z"]["z", "z"], stats.E("Z", "z", "z")

        def h(q):
            return -q * math.log2(q) - (1 - q) * math.log2(1 - q)

        s11, e11 = truth.s["Z"][1, 1], truth.e["X"][1, 1]
        expected = sig[1] ** 2 * s11 * (1 - h(e11)) - S * 1.16 * h(E)
        assert mdi_key_rate(sig[1], sig[1], s11, e11, S, E, 1.16) == pytest.approx(expected, rel=1e-12)


def test_error_bound_tightened_on_channel(poisson_triple_6):
    A = B = poisson_triple_6
    for loss in (0, 10, 20, 30, 40):
        b = estimate_mdi(stats_for(mdi_truth(TABLE_II.at_loss(loss)), A, B), A, B)
        assert b.e11_upper_4 <= b.e11_upper_3
        assert e11_upper_4(b.raw["t11_upper_4"], b.raw["s11_lower_error_basis"]) == b.raw["e11_upper_4"]


def test_zero_yield_bound_gives_unit_error():
    assert e11_upper_4(0.1, 0.0) == 1.0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), sorted_=st.booleans(), family=st.sampled_from(["poisson", "hsps", "thermal"]))
def test_soundness_property(seed, sorted_, family):
    from decoyforge.oracle import standard_triples

    triple = standard_triples(6)[family]
    report = certify_bounds(random_truth(seed, "mdi", 6, sorted=sorted_), triple, "mdi", seed)
    assert report.passed, report.violations
