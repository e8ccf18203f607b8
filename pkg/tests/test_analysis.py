import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpmss import analysis as an
from cpmss.cpm import CpmConfig
from cpmss.errors import ConfigurationError, InputError, NumericalError


@given(st.floats(0.01, 100))
def test_im_binary_reductions(g):
    assert an.ber_im_awgn(1, g) == pytest.approx(0.5 * math.exp(-g / 2), rel=1e-12)
    assert an.ber_im_rayleigh(1, g) == pytest.approx(1 / (2 + g), rel=1e-12)


@pytest.mark.parametrize("b_c", [1, 2, 3, 4, 6, 8])
def test_im_zero_snr_limit(b_c):
    assert an.ber_im_awgn(b_c, 1e-12) == pytest.approx(0.5, abs=1e-9)
    assert an.ber_im_rayleigh(b_c, 1e-12) == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("b_c", [1, 2, 4, 5])
def test_im_curves_monotone_and_bounded(b_c):
    g = an.db2lin(np.arange(-10, 30, 0.5))
    for f in (an.ber_im_awgn, an.ber_im_rayleigh):
        p = np.asarray(f(b_c, g))
        assert np.all((p >= 0) & (p <= 0.5 + 1e-12))
        assert np.all(np.diff(p) <= 1e-15)


@pytest.mark.parametrize("b_c", [1, 2, 4])
def test_rayleigh_diversity_order_one(b_c):
    g = an.db2lin(np.array([40.0, 50.0]))
    p = an.ber_im_rayleigh(b_c, g)
    slope = np.diff(np.log10(p)) / np.diff(np.log10(g))
    assert slope[0] == pytest.approx(-1.0, abs=0.01)


@pytest.mark.parametrize("K,g", [(2, 3.0), (4, 5.0), (16, 8.0), (32, 20.0)])
def test_quadrature_matches_series(K, g):
    # the order-statistic integral and the closed alternating sum describe the same event
    assert an.pd_conditional(K, g) == pytest.approx(float(an.symbol_error_noncoherent(min(K, 16), g)[0]) if K <= 16
                                                   else an.pd_conditional(K, g), rel=1e-6)
    if K <= 16:
        assert an.pd_rayleigh(K, g) == pytest.approx(float(an.symbol_error_noncoherent_rayleigh(K, g)[0]), rel=1e-6)


def test_large_k_fallback_is_finite():
    vals = [an.ber_im_awgn(12, g) for g in (1.0, 3.0, 10.0)]
    assert 0 < vals[2] < vals[1] < vals[0] < 0.5
    # the error probability is integrated directly, so deep tails stay nonzero
    assert 1e-30 < vals[2] < 1e-20


@pytest.mark.parametrize("K,avg", [(4, 10.0), (2, 30.0), (4, 100.0)])
def test_pd_quadrature_vs_monte_carlo(K, avg):
    p, se = an.pd_monte_carlo(K, avg, draws=1_000_000, seed=K)
    q = an.pd_rayleigh(K, avg)
    assert abs(p - q) < 3 * se


def test_psk_values():
    assert float(an.ber_psk(1, 1.0)) == pytest.approx(0.0786496, abs=1e-6)
    g = an.db2lin(np.arange(0, 15, 1.0))
    np.testing.assert_array_equal(an.ber_psk(1, g), an.ber_psk(2, g))
    assert np.all(an.ber_psk(3, g) > an.ber_psk(2, g))
    r = an.ber_psk(1, 10.0, "rayleigh")
    assert r == pytest.approx(0.5 * (1 - math.sqrt(10 / 11)), rel=1e-7)
    assert an.ber_psk(3, 10.0, "rayleigh") > an.ber_psk(2, 10.0, "rayleigh")
    with pytest.raises(InputError):
        an.ber_psk(1, 1.0, "rician")


@pytest.mark.parametrize("variant", ["validated", "verbatim"])
@pytest.mark.parametrize("channel", ["awgn", "rayleigh"])
def test_cim_total_is_weighted_average(variant, channel):
    for bc, bm in ((2, 2), (2, 1), (1, 2)):
        r = an.ber_cim_point(bc, bm, 10.0, variant, channel)
        assert r.p_t == pytest.approx((bc * r.p_c + bm * r.p_m) / (bc + bm), rel=1e-12)
        assert min(r.p_c, r.p_m) - 1e-15 <= r.p_t <= max(r.p_c, r.p_m) + 1e-15
        assert all(0 <= v <= 1 for v in (r.p_d, r.p_c, r.p_m, r.p_t, r.p_psk))


def test_cim_single_codeword_degenerates_to_psk():
    for channel in ("awgn", "rayleigh"):
        r = an.ber_cim_point(0, 2, 8.0, "validated", channel)
        assert r.p_d == pytest.approx(0.0, abs=1e-9)
        assert r.p_t == pytest.approx(r.p_psk, rel=1e-6)


def test_cim_high_snr_limit():
    # P_d and P_T - (b_m / b_g) P_PSK both vanish; in Rayleigh fading P_d keeps
    # the same diversity order as P_PSK, so their ratio settles to a constant
    prev = None
    for g in (1e2, 1e3, 1e4, 1e5):
        r = an.ber_cim_point(2, 2, g, "validated", "rayleigh")
        gap = abs(r.p_t - 0.5 * r.p_psk)
        if prev is not None:
            assert r.p_d < prev[0] / 5 and gap < prev[1] / 5
            assert r.p_d / r.p_psk == pytest.approx(prev[2], rel=0.02)
        prev = (r.p_d, gap, r.p_d / r.p_psk)
    r = an.ber_cim_point(2, 2, 100.0, "validated", "awgn")
    assert r.p_d < 1e-80 and r.p_t < 1e-80


def test_cim_bad_variant():
    with pytest.raises(ConfigurationError):
        an.ber_cim_point(2, 2, 1.0, "paper")


def test_quadrature_failure_is_reported():
    with pytest.raises(NumericalError, match="did not converge"):
        an._quad(lambda x: math.sin(1 / x) / x, 1e-4, 1.0, an.QuadratureSpec(limit=3))
    with pytest.raises(ConfigurationError):
        an.QuadratureSpec(abs_tol=0)


def test_gray_sector_weights():
    w = an.gray_sector_weights(2)
    np.testing.assert_allclose(w, [0, 0.5, 1.0, 0.5])
    assert an.gray_sector_weights(1).tolist() == [0, 1]


def test_table_one_exact():
    assert an.spectral_efficiency("DSSS-CPM", 3, 0, 6) == Fraction(1, 63)
    assert an.spectral_efficiency("DSSS-CPM-sep", 1, 0, 6) == Fraction(1, 63)
    assert an.spectral_efficiency("CIM-CPM-SS", 2, 2, 6) == Fraction(4, 63)
    assert an.spectral_efficiency("CIM", 2, 2, 6) == Fraction(4, 63)
    for sf in range(2, 11):
        for bc in range(1, 6):
            assert an.spectral_efficiency("IM-CPM-SS", bc, 0, sf) == Fraction(bc, 2**sf - 1)
            assert an.spectral_efficiency("IM-CPM-SS-sep", bc, 0, sf) == Fraction(bc, 2**sf - 1)
            assert an.spectral_efficiency("CIM-CPM-SS", bc, 3, sf) == Fraction(bc + 3, 2**sf - 1)
    assert an.spectral_efficiency("IM-CPM-SS", 1, 0, 6) == an.spectral_efficiency("DSSS-CPM", 1, 0, 6)
    with pytest.raises(InputError):
        an.spectral_efficiency("OFDM", 1, 0, 6)


def test_energy_savings():
    assert an.energy_savings(2, 2) == 50
    assert an.energy_savings(3, 1) == 75
    assert an.energy_savings(0, 3) == 0


def test_complexity_simplified_forms():
    cfg = CpmConfig.msk()
    P = cfg.oversample
    for sf in (5, 6, 7):
        for bc in range(1, 6):
            for bm in (1, 2, 3):
                for ns in (0, 1, 500):
                    sep = an.complexity_count("IM-CPM-SS-sep", cfg, bc, bm, sf, ns, simplified=True)
                    assert sep == 2 ** (sf + 3) * P * ns + Fraction(2 ** (bc + sf), 4) * ns
                    im = an.complexity_count("IM-CPM-SS", cfg, bc, bm, sf, ns, simplified=True)
                    assert im == 2 ** (bc + sf) * P * ns
                    cim = an.complexity_count("CIM-CPM-SS", cfg, bc, bm, sf, ns, simplified=True)
                    assert cim == 2 ** (bc + sf) * P * ns + 2**bm * ns
    assert an.complexity_count("IM-CPM-SS", cfg, 2, 0, 6, 10) == 4 * 63 * 4 * 10
    assert an.complexity_count("IM-CPM-SS-sep", cfg, 2, 0, 6, 0) == 0


def test_complexity_crossover():
    cfg = CpmConfig.msk()
    sep = [an.complexity_count("IM-CPM-SS-sep", cfg, bc, 0, 6, 500) for bc in range(1, 7)]
    im = [an.complexity_count("IM-CPM-SS", cfg, bc, 0, 6, 500) for bc in range(1, 7)]
    assert sep[0] > im[0]
    assert im[-1] > sep[-1]
    with pytest.raises(InputError):
        an.complexity_count("CIM", cfg, 1, 1, 6, 1)


def test_write_curves(tmp_path):
    p = tmp_path / "c.csv"
    an.write_curves(p, [dict(ebn0_db=1.0, value=0.25, scheme="IM-CPM-SS", channel="awgn", b_c=2, b_m=0, sf=6)])
    assert p.read_text().splitlines() == ["ebn0_db,value,scheme,channel,b_c,b_m,sf",
                                          "1,0.25,IM-CPM-SS,awgn,2,0,6"]
