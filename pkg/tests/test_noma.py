import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpmss.errors import ConfigurationError, InputError
from cpmss.modems import CimConfig, ImConfig, make_modem
from cpmss.noma import NomaScenario, allocate_powers, codeword_offsets, sic_receive, superpose, transmit_all


def test_two_and_three_user_powers():
    np.testing.assert_allclose(allocate_powers(2, 0.25), [0.8, 0.2])
    np.testing.assert_allclose(allocate_powers(3, 0.25), [16 / 21, 4 / 21, 1 / 21])
    np.testing.assert_allclose(allocate_powers(1, 0.6, 2.0), [2.0])


@given(st.integers(1, 6), st.floats(0.01, 0.99), st.floats(0.1, 10))
def test_power_conservation(u, beta, pt):
    p = allocate_powers(u, beta, pt)
    assert abs(p.sum() - pt) < 1e-12
    assert np.all(np.diff(p) <= 0)


@pytest.mark.parametrize("beta", [0.0, 1.0, -0.1])
def test_beta_out_of_range(beta):
    with pytest.raises(ConfigurationError):
        allocate_powers(2, beta)


def test_superpose_single_user():
    s = np.exp(1j * np.arange(10))
    np.testing.assert_allclose(superpose([s], [0.64]), 0.8 * s)
    with pytest.raises(InputError):
        superpose([s, s[:5]], [0.5, 0.5])


def test_offsets():
    assert codeword_offsets(3, 4, 31) == [0, 0, 0]
    assert codeword_offsets(3, 4, 31, "disjoint") == [0, 4, 8]
    with pytest.raises(ConfigurationError):
        codeword_offsets(2, 16, 31, "disjoint")


def _scenario(cb, scheme, b_c, b_m, users=2, sharing="disjoint", sic="remodulate"):
    offs = codeword_offsets(users, 1 << b_c, cb.size, sharing)
    return NomaScenario(tuple(make_modem(scheme, cb, b_c, b_m, o) for o in offs), 0.25, sic=sic)


def test_aggregate_energy_with_disjoint_codewords(cb6):
    sc = _scenario(cb6, "IM-CPM-SS", 2, 0)
    rng = np.random.default_rng(0)
    bits = [rng.integers(0, 2, (200, 2), dtype=np.int8) for _ in range(2)]
    _, x = transmit_all(sc, bits)
    e = np.sum(np.abs(x) ** 2, axis=1)
    # cross term 2 sqrt(P1 P2) Re<z_a, z_b> is bounded by 2 sqrt(P1 P2) * 0.05 Es
    assert np.all(np.abs(e - 252) <= 2 * np.sqrt(0.16) * 0.05 * 252)


@pytest.mark.parametrize("scheme,b_c,b_m", [("IM-CPM-SS", 4, 0), ("CIM-CPM-SS", 1, 1), ("CIM", 1, 1),
                                           ("IM-CPM-SS-sep", 2, 0)])
@pytest.mark.parametrize("users", [2, 3])
def test_noiseless_sic_recovers_everyone(cb6, scheme, b_c, b_m, users):
    sc = _scenario(cb6, scheme, b_c, b_m, users, sharing="shared")
    rng = np.random.default_rng(users)
    bits = [rng.integers(0, 2, (60, b_c + b_m), dtype=np.int8) for _ in range(users)]
    waves, x = transmit_all(sc, bits)
    for u in range(users):
        res, trace = sic_receive(x, u, sc, 1.0, waves)
        np.testing.assert_array_equal(res.bits, bits[u])
        assert len(trace.decoded_bits) == u + 1


def test_perfect_sic_removes_stronger_users(cb6):
    sc = _scenario(cb6, "CIM-CPM-SS", 1, 1, 3, sic="perfect")
    rng = np.random.default_rng(1)
    bits = [rng.integers(0, 2, (40, 2), dtype=np.int8) for _ in range(3)]
    waves, x = transmit_all(sc, bits)
    h = 0.7 * np.exp(0.4j)
    _, trace = sic_receive(h * x, 2, sc, h, waves)
    # after cancelling users 1 and 2 only user 3 remains: |h|^2 P_3
    assert trace.residual_power[-1] == pytest.approx(abs(h) ** 2 * sc.powers[2], rel=1e-12)
    with pytest.raises(InputError):
        sic_receive(x, 1, sc, 1.0, None)


def test_remodulate_equals_perfect_at_high_snr(cb6):
    rng = np.random.default_rng(5)
    bits = [rng.integers(0, 2, (500, 4), dtype=np.int8) for _ in range(2)]
    a = _scenario(cb6, "IM-CPM-SS", 4, 0, sharing="shared")
    b = _scenario(cb6, "IM-CPM-SS", 4, 0, sharing="shared", sic="perfect")
    waves, x = transmit_all(a, bits)
    y = x + 0.05 * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    ra, _ = sic_receive(y, 1, a, 1.0, waves)
    rb, _ = sic_receive(y, 1, b, 1.0, waves)
    np.testing.assert_array_equal(ra.bits, rb.bits)


def test_scenario_validation(cb6):
    with pytest.raises((ConfigurationError, InputError)):
        NomaScenario((ImConfig(cb6, 2), CimConfig(cb6, 1, 1)), 0.25)
    sc = _scenario(cb6, "IM-CPM-SS", 2, 0)
    with pytest.raises(InputError):
        sic_receive(np.zeros(252, dtype=complex), 2, sc, 1.0)
    assert sc.variances == (1.0, 2.0)
