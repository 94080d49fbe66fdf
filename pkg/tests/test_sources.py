from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decoyforge.errors import InvalidSourceError
from decoyforge.montecarlo import heralding_mc
from decoyforge.oracle import check_monotone_ratio
from decoyforge.sources import (
    PhotonNumberDistribution,
    SourceKind,
    SourceTriple,
    check_pair_condition,
    check_triple_condition,
    g_func,
    g_tensor,
    make_hsps,
    make_poisson,
    make_thermal,
    make_vacuum,
)


class TestPoisson:
    def test_vacuum_coefficient(self):
        d = make_poisson(0.2, 10)
        assert d.coeffs[0] == pytest.approx(math.exp(-0.2), rel=1e-15)
        assert d.coeffs[0] == pytest.approx(0.818731, abs=5e-7)

    def test_ratio_of_first_two(self):
        d = make_poisson(0.2, 10)
        assert d.coeffs[1] / d.coeffs[0] == pytest.approx(0.2, rel=1e-14)

    def test_vacuum_limit(self):
        d = make_poisson(1e-9, 10)
        assert d.coeffs[0] == pytest.approx(1.0, abs=1e-8)
        assert np.all(d.coeffs[1:] < 1e-8)

    def test_matches_direct_formula(self):
        d = make_poisson(0.7, 12)
        direct = [math.exp(-0.7) * 0.7**k / math.factorial(k) for k in range(13)]
        np.testing.assert_allclose(d.coeffs, direct, rtol=1e-13)
        assert d.tail == pytest.approx(1 - sum(direct), abs=1e-15)

    @pytest.mark.parametrize("mu", [0.0, -0.1, float("nan")])
    def test_rejects_non_positive_intensity(self, mu):
        with pytest.raises(InvalidSourceError):
            make_poisson(mu, 10)

    def test_rejects_small_cutoff(self):
        with pytest.raises(InvalidSourceError):
            make_poisson(0.1, 2)

    def test_coefficients_read_only(self):
        d = make_poisson(0.3, 5)
        with pytest.raises(ValueError):
            d.coeffs[0] = 1.0

    def test_index_beyond_cutoff_is_zero(self):
        d = make_poisson(0.3, 5)
        assert d[6] == 0.0
        assert d.k_max == 5


class TestThermal:
    def test_unit_intensity(self):
        d = make_thermal(1.0, 10)
        assert d.coeffs[0] == pytest.approx(0.5)
        assert d.coeffs[1] == pytest.approx(0.25)

    def test_geometric_ratio(self):
        d = make_thermal(0.5, 10)
        np.testing.assert_allclose(d.coeffs[1:] / d.coeffs[:-1], 1 / 3, rtol=1e-13)

    def test_truncated_sum(self):
        d = make_thermal(0.2, 20)
        assert d.coeffs.sum() == pytest.approx(1 - (0.2 / 1.2) ** 21, rel=1e-14)


class TestHsps:
    def test_perfect_heralding_removes_vacuum(self):
        assert make_hsps(0.1, 1.0, 0.0, 10).coeffs[0] == 0.0

    def test_formula(self):
        mu, eta, pdv = 0.1, 0.75, 1e-6
        d = make_hsps(mu, eta, pdv, 10)
        herald = 1 - (1 - pdv) * math.exp(-mu * eta)
        expected = [
            math.exp(-mu) * mu**k / math.factorial(k) * (1 - (1 - pdv) * (1 - eta) ** k) / herald
            for k in range(11)
        ]
        np.testing.assert_allclose(d.coeffs, expected, rtol=1e-9)
        assert d.herald_probability == pytest.approx(herald, rel=1e-14)
        assert d.kind is SourceKind.HSPS

    def test_agrees_with_heralding_simulation(self):
        mu, eta, pdv = 0.1, 0.75, 1e-6
        d = make_hsps(mu, eta, pdv, 10)
        herald, freq = heralding_mc(mu, eta, pdv, 2_000_000, seed=3, k_max=10)
        assert abs(herald.z_score(d.herald_probability)) < 4
        # the one- and two-photon fractions among heralds
        n = herald.hits
        for k in (1, 2):
            sigma = math.sqrt(d.coeffs[k] * (1 - d.coeffs[k]) / n)
            assert abs(freq[k] - d.coeffs[k]) < 4 * sigma

    def test_blind_herald_recovers_parent(self):
        d = make_hsps(0.1, 1e-12, 1e-6, 10)
        np.testing.assert_allclose(d.coeffs, make_poisson(0.1, 10).coeffs, rtol=1e-5)

    @pytest.mark.parametrize("args", [(0.1, 0.0, 1e-6), (0.1, 1.5, 1e-6), (0.1, 0.5, 1.0), (0.0, 0.5, 0.0)])
    def test_rejects_bad_parameters(self, args):
        with pytest.raises(InvalidSourceError):
            make_hsps(*args, 10)


class TestDistribution:
    def test_rejects_negative(self):
        with pytest.raises(InvalidSourceError):
            PhotonNumberDistribution.from_coeffs([0.5, -0.1, 0.2])

    def test_rejects_excess_mass(self):
        with pytest.raises(InvalidSourceError):
            PhotonNumberDistribution.from_coeffs([0.6, 0.6])

    def test_from_coeffs_mean(self):
        d = PhotonNumberDistribution.from_coeffs([0.5, 0.25, 0.25])
        assert d.intensity == pytest.approx(0.75)

    def test_vacuum(self):
        v = make_vacuum(5)
        assert v[0] == 1.0 and v.coeffs[1:].sum() == 0.0


class TestGFunction:
    def test_equal_indices(self, poisson_triple):
        assert g_func(poisson_triple, 2, 2, 2) == 0.0

    def test_identical_sources(self):
        d = make_poisson(0.3, 10)
        t = SourceTriple(d, d, make_poisson(0.6, 10), strict=False)
        assert g_func(t, 1, 2, 5) == 0.0

    def test_positive_at_123(self, poisson_triple):
        assert g_func(poisson_triple, 1, 2, 3) > 0

    def test_antisymmetric_in_x_and_y(self, poisson_triple):
        t = poisson_triple
        swapped = SourceTriple(t.y, t.x, t.z, strict=False)
        for ijk in [(1, 2, 3), (1, 3, 7), (2, 4, 9)]:
            assert g_func(swapped, *ijk) == pytest.approx(-g_func(t, *ijk), rel=1e-12)

    def test_truncation_stable(self):
        small = SourceTriple(*(make_poisson(mu, 8) for mu in (0.1, 0.2, 0.5)))
        large = SourceTriple(*(make_poisson(mu, 20) for mu in (0.1, 0.2, 0.5)))
        a, _ = g_tensor(small, 8)
        b, _ = g_tensor(large, 20)
        np.testing.assert_array_equal(a, b[:8, :8, :8])

    def test_tensor_matches_scalar(self, poisson_triple):
        values, _ = g_tensor(poisson_triple, 6)
        for i, j, k in [(1, 2, 3), (3, 2, 1), (2, 5, 6)]:
            assert values[i - 1, j - 1, k - 1] == pytest.approx(g_func(poisson_triple, i, j, k), rel=1e-12)

    def test_index_zero_rejected(self, poisson_triple):
        with pytest.raises(ValueError):
            g_func(poisson_triple, 0, 1, 2)


class TestConditions:
    def test_poisson_pair(self):
        assert check_pair_condition(make_poisson(0.2, 20), make_poisson(0.5, 20), 20).holds

    def test_thermal_pair(self):
        assert check_pair_condition(make_thermal(0.1, 20), make_thermal(0.4, 20), 20).holds

    def test_inflated_coefficient_detected(self):
        lo = make_poisson(0.2, 20).coeffs.copy()
        lo[3] *= 10
        report = check_pair_condition(PhotonNumberDistribution.from_coeffs(lo / lo.sum()), make_poisson(0.5, 20), 20)
        assert not report.holds
        assert report.first_violation == 3

    def test_right_inequality_failure_reports_two(self):
        report = check_pair_condition(make_poisson(0.5, 20), make_poisson(0.2, 20), 20)
        assert report == (False, 2)

    @pytest.mark.parametrize("make", [make_poisson, make_thermal])
    def test_triples(self, make):
        t = SourceTriple(*(make(mu, 8) for mu in (0.1, 0.2, 0.5)))
        assert check_triple_condition(t, 8).holds

    def test_degenerate_triple_holds(self):
        d = make_poisson(0.2, 8)
        t = SourceTriple(d, d, make_poisson(0.5, 8), strict=False)
        report = check_triple_condition(t, 8)
        assert report.holds and report.witnesses == []

    def test_strict_ordering(self):
        with pytest.raises(InvalidSourceError):
            SourceTriple(make_poisson(0.5, 8), make_poisson(0.2, 8), make_poisson(0.6, 8))


@settings(max_examples=60, deadline=None)
@given(
    family=st.sampled_from(["poisson", "thermal", "hsps"]),
    mus=st.lists(st.floats(0.01, 1.5), min_size=3, max_size=3, unique=True).map(sorted),
)
def test_conditions_hold_for_increasing_intensities(family, mus):
    if min(np.diff(mus)) < 1e-3:
        return
    make = {
        "poisson": lambda mu: make_poisson(mu, 20),
        "thermal": lambda mu: make_thermal(mu, 20),
        "hsps": lambda mu: make_hsps(mu, 0.75, 1e-6, 20),
    }[family]
    t = SourceTriple(*(make(mu) for mu in mus))
    assert check_pair_condition(t.x, t.y).holds
    assert check_pair_condition(t.y, t.z).holds
    assert check_triple_condition(t, 20).holds


@pytest.mark.parametrize("m,n", [(m, n) for m in range(2, 11) for n in range(1, m)])
def test_ratio_of_geometric_sums_is_increasing(m, n):
    assert check_monotone_ratio(m, n, 1000)
