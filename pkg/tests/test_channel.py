from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decoyforge.channel import (
    TABLE_I,
    TABLE_II,
    Bb84Truth,
    ChannelParams,
    MdiTruth,
    assemble_observables,
    bb84_truth,
    binomial_loss,
    mdi_truth,
    n_photon_transmittance,
)
from decoyforge.oracle import random_truth
from decoyforge.sources import PhotonNumberDistribution, make_poisson, make_vacuum


class TestTransmittance:
    def test_vacuum_never_arrives(self):
        assert n_photon_transmittance(0.1, 0) == 0.0

    def test_lossless(self):
        assert n_photon_transmittance(1.0, 3) == 1.0

    def test_two_photons(self):
        assert n_photon_transmittance(0.1, 2) == pytest.approx(0.19, rel=1e-14)

    def test_rejects_bad_xi(self):
        with pytest.raises(ValueError):
            n_photon_transmittance(1.5, 1)


class TestBinomialLoss:
    def test_bernoulli(self):
        np.testing.assert_allclose(binomial_loss(1, 0.3), [0.7, 0.3])

    def test_vacuum(self):
        np.testing.assert_allclose(binomial_loss(0, 0.42), [1.0])

    def test_two_photons_half(self):
        np.testing.assert_allclose(binomial_loss(2, 0.5), [0.25, 0.5, 0.25])


class TestChannelParams:
    @pytest.mark.parametrize(
        "kw", [{"p_d": -0.1}, {"e_d": 1.5}, {"zeta": 0.0}, {"f_ec": 0.9}, {"total_loss_db": -1.0}]
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ChannelParams(**kw)

    def test_tables(self):
        assert TABLE_I.f_ec == 1.0
        assert TABLE_II.f_ec == 1.16
        for table in (TABLE_I, TABLE_II):
            assert (table.p_d, table.e_d, table.e_0, table.eta_v, table.p_dv) == (3e-6, 0.015, 0.5, 0.75, 1e-6)

    def test_side_transmittance_squares_to_total(self):
        p = TABLE_II.at_loss(17.0)
        assert p.eta_side**2 == pytest.approx(p.transmittance, rel=1e-14)


class TestBb84Truth:
    def test_vacuum_row(self):
        truth = bb84_truth(TABLE_I.at_loss(10), 10)
        assert truth.s[0] == pytest.approx(TABLE_I.p_d)
        assert truth.e[0] == pytest.approx(0.5)

    def test_perfect_channel(self):
        truth = bb84_truth(ChannelParams(p_d=1e-15, e_d=0.015), 5)
        assert truth.s[1] == pytest.approx(1.0)
        assert truth.e[1] == pytest.approx(0.015)

    def test_noiseless_channel_has_no_errors(self):
        p = ChannelParams(total_loss_db=5, p_d=0.0, e_d=0.0)
        truth = bb84_truth(p, 10)
        stats = assemble_observables(truth, {"x": make_poisson(0.1, 10), "z": make_poisson(0.5, 10)})
        assert stats.E("x") == 0.0 and stats.E("z") == 0.0

    def test_bounds(self):
        truth = bb84_truth(TABLE_I.at_loss(7), 20)
        assert np.all((0 <= truth.t) & (truth.t <= truth.s) & (truth.s <= 1))

    @settings(max_examples=40, deadline=None)
    @given(loss=st.floats(0, 40), dl=st.floats(0.01, 5))
    def test_monotone_in_transmittance_and_photon_number(self, loss, dl):
        far = bb84_truth(TABLE_I.at_loss(loss + dl), 20).s
        near = bb84_truth(TABLE_I.at_loss(loss), 20).s
        assert np.all(near >= far)
        assert np.all(np.diff(near) >= 0)


class TestMdiTruth:
    def test_dark_success_only(self):
        truth = mdi_truth(TABLE_II.at_loss(20))
        assert truth.s["Z"][0, 0] > 0
        assert truth.e["Z"][0, 0] == pytest.approx(0.5)
        assert truth.e["X"][0, 0] == pytest.approx(0.5)
        quiet = mdi_truth(ChannelParams(total_loss_db=20, p_d=1e-12))
        assert quiet.s["Z"][0, 0] < 1e-20

    def test_shapes_and_bounds(self):
        truth = mdi_truth(TABLE_II.at_loss(10))
        assert truth.cutoff == 6
        for b in "ZX":
            s, t = truth.s[b], truth.t(b)
            assert s.shape == (7, 7)
            assert np.all((0 <= t) & (t <= s + 1e-15) & (s <= 1))

    def test_single_photon_pair_lossless(self):
        # one photon per side: Bell-state success probability 1/2 with perfect detectors
        truth = mdi_truth(ChannelParams(p_d=0.0, e_d=0.0))
        assert truth.s["Z"][1, 1] == pytest.approx(0.5, abs=1e-12)
        assert truth.e["Z"][1, 1] == pytest.approx(0.0, abs=1e-12)
        assert truth.e["X"][1, 1] == pytest.approx(0.0, abs=1e-12)

    def test_single_basis(self):
        truth = mdi_truth(TABLE_II, "X")
        assert truth.bases == ("X",)

    @pytest.mark.parametrize("loss", [0.0, 5.0, 10.0, 30.0])
    def test_single_photon_block_monotone_in_transmittance(self, loss):
        near = mdi_truth(TABLE_II.at_loss(loss)).s["Z"][:2, :2]
        far = mdi_truth(TABLE_II.at_loss(loss + 2)).s["Z"][:2, :2]
        assert np.all(near >= far - 1e-15)

    @pytest.mark.parametrize("loss", [15.0, 25.0, 40.0])
    def test_monotone_in_transmittance_once_photons_are_scarce(self, loss):
        # at low loss several arriving photons spoil the two-click pattern,
        # so multi-photon yields can fall as transmittance rises
        near = mdi_truth(TABLE_II.at_loss(loss)).s["Z"]
        far = mdi_truth(TABLE_II.at_loss(loss + 2)).s["Z"]
        assert np.all(near >= far - 1e-15)


class TestAssemble:
    def test_vacuum_source(self):
        truth = bb84_truth(TABLE_I.at_loss(5), 10)
        stats = assemble_observables(truth, {"0": make_vacuum(10)})
        assert stats.S["0"] == truth.s[0]

    def test_one_hot(self):
        truth = bb84_truth(TABLE_I.at_loss(5), 10)
        stats = assemble_observables(truth, {"o": PhotonNumberDistribution.from_coeffs(np.eye(11)[1])})
        assert stats.S["o"] == truth.s[1]

    def test_matches_independent_sum(self):
        truth = random_truth(11, "bb84", 20)
        d = make_poisson(0.2, 20)
        stats = assemble_observables(truth, {"p": d})
        direct = math.fsum(d.coeffs[k] * truth.s[k] for k in range(21))
        assert stats.S["p"] == pytest.approx(direct, rel=1e-14)
        direct_t = math.fsum(d.coeffs[k] * truth.s[k] * truth.e[k] for k in range(21))
        assert stats.T["p"] == pytest.approx(direct_t, rel=1e-14)

    def test_mdi_matches_double_sum(self):
        truth = random_truth(5, "mdi", 6)
        a = make_poisson(0.1, 6)
        b = make_poisson(0.5, 6)
        stats = assemble_observables(truth, ({"x": a}, {"z": b}), "mdi")
        for basis in "ZX":
            direct = math.fsum(a[j] * b[k] * truth.s[basis][j, k] for j in range(7) for k in range(7))
            assert stats.S[basis]["x", "z"] == pytest.approx(direct, rel=1e-12)

    def test_linear_in_truth(self):
        t1 = random_truth(1, "bb84", 10)
        t2 = random_truth(2, "bb84", 10)
        srcs = {"x": make_poisson(0.3, 10)}
        mix = Bb84Truth(0.3 * t1.s + 0.7 * t2.s, t1.e)
        lhs = assemble_observables(mix, srcs).S["x"]
        rhs = 0.3 * assemble_observables(t1, srcs).S["x"] + 0.7 * assemble_observables(t2, srcs).S["x"]
        assert lhs == pytest.approx(rhs, rel=1e-13)

    def test_cutoff_mismatch(self):
        truth = random_truth(1, "mdi", 6)
        with pytest.raises(ValueError, match="cutoff"):
            assemble_observables(truth, ({"x": make_poisson(0.1, 20)}, {"x": make_poisson(0.1, 6)}))

    def test_protocol_mismatch(self):
        with pytest.raises(ValueError):
            assemble_observables(random_truth(1, "bb84", 10), {}, "mdi")

    def test_undefined_error_rate(self):
        truth = Bb84Truth(np.zeros(4), np.zeros(4))
        stats = assemble_observables(truth, {"x": make_poisson(0.1, 3)})
        assert math.isnan(stats.E("x"))

    def test_rejects_unknown_truth(self):
        with pytest.raises(TypeError):
            assemble_observables(object(), {})

    def test_mdi_truth_validation(self):
        with pytest.raises(ValueError):
            MdiTruth({"Z": np.zeros((3, 3))}, {"X": np.zeros((3, 3))})
