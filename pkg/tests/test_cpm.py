import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfc

from cpmss.channel import frame_papr_db
from cpmss.cpm import (CpmConfig, PulseShape, build_trellis, final_state, frequency_pulse,
                       modulate, phase_smoothing, phase_trajectory, viterbi_mlsd)
from cpmss.errors import ConfigurationError, InputError

CONFIGS = [CpmConfig.msk(), CpmConfig(pulse=PulseShape("RC")), CpmConfig.gaussian(), CpmConfig.spectral_rc()]
symbols = st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=60)


def test_single_symbol_linear_ramp(msk):
    ph = phase_trajectory([1], msk)
    np.testing.assert_allclose(ph, np.pi / 2 * np.arange(1, 5) / 4, atol=1e-12)


def test_antisymmetric_pair_returns_to_zero(msk):
    assert abs(phase_trajectory([1, -1], msk)[-1]) < 1e-12


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.pulse.kind)
def test_phase_pulse_reaches_half(cfg):
    # truncated GAU/SRC pulses are renormalised so q(L) = 1/2
    L = cfg.memory
    assert phase_smoothing(np.array([L]), cfg)[0] == 0.5
    t = np.linspace(0, L, 200_001)
    area = np.trapezoid(frequency_pulse(t, cfg), t)
    q_mid = phase_smoothing(np.array([L / 2]), cfg)[0]
    m = t <= L / 2
    assert abs(q_mid - np.trapezoid(frequency_pulse(t[m], cfg), t[m]) * 0.5 / area) < 1e-4
    if cfg.pulse.kind in ("REC", "RC"):
        assert abs(area - 0.5) < 1e-9


@settings(max_examples=50, deadline=None)
@given(symbols)
def test_final_phase_matches_symbol_sum(a):
    cfg = CpmConfig.msk()
    phase = phase_trajectory(a, cfg)[-1]
    want = math.pi / 2 * sum(a)
    assert abs(np.angle(np.exp(1j * (phase - want)))) < 1e-9
    assert abs(final_state(a, cfg).accumulated - want) < 1e-9


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.pulse.kind)
def test_envelope_and_continuity(cfg):
    a = np.random.default_rng(3).choice([-1, 1], 500)
    s = modulate(a, cfg).samples
    mag = np.abs(s)
    assert mag.max() - mag.min() < 1e-9
    ph = phase_trajectory(a, cfg)
    steps = np.abs(np.diff(np.concatenate([[0.0], ph])))
    bound = math.pi * float(cfg.h) * (cfg.order - 1) * 2 * cfg.memory / cfg.oversample
    assert steps.max() < bound + 1e-9
    if cfg.is_msk:
        assert steps.max() < math.pi * 0.5 * 2 / cfg.oversample + 1e-9


def test_papr_of_cpm_frame_is_zero(msk):
    s = modulate(np.random.default_rng(0).choice([-1, 1], 63), msk).samples
    assert abs(frame_papr_db(s[None, :])[0]) < 1e-9


def test_frame_length_252(cb6):
    assert len(cb6.frame(0)) == 252


def test_empty_symbols(msk):
    assert len(modulate([], msk)) == 0


def test_rejects_symbol_outside_alphabet(msk):
    with pytest.raises(InputError):
        phase_trajectory([1, 3], msk)


@pytest.mark.parametrize("kw", [dict(h_num=2, h_den=4), dict(memory=0), dict(order=3), dict(oversample=0)])
def test_bad_config(kw):
    with pytest.raises(ConfigurationError):
        CpmConfig(**kw)


def test_initial_state_continues_phase(msk):
    a = np.random.default_rng(1).choice([-1, 1], 40)
    whole = phase_trajectory(a, msk)
    st0 = final_state(a[:17], msk)
    tail = phase_trajectory(a[17:], msk, st0)
    np.testing.assert_allclose(tail, whole[17 * 4:], atol=1e-9)


def test_msk_trellis_four_states(msk):
    tr = build_trellis(msk)
    assert msk.n_phase_states == 4
    assert sorted(j for j, _ in tr.steady_states) == [0, 1, 2, 3]
    assert tr.next_state.shape == (4, 2)


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.pulse.kind)
def test_viterbi_noiseless_identity(cfg):
    a = np.random.default_rng(5).choice([-1, 1], 300)
    np.testing.assert_array_equal(viterbi_mlsd(modulate(a, cfg), cfg), a)


def test_viterbi_segments(msk):
    rows = np.random.default_rng(2).choice([-1, 1], (5, 31))
    rx = np.concatenate([modulate(r, msk).samples for r in rows])
    np.testing.assert_array_equal(viterbi_mlsd(rx, msk, segment_chips=31), rows.ravel())


def test_viterbi_rejects_partial_chip(msk):
    with pytest.raises(InputError):
        viterbi_mlsd(np.ones(7, dtype=complex), msk)


def test_viterbi_awgn_chip_error_rate(msk):
    # the CPM view of MSK is differentially encoded: every ML error event
    # flips two chips, so the chip error rate is erfc(sqrt(SNR))
    rng = np.random.default_rng(11)
    n, g = 20_000, 10 ** 0.6
    a = rng.choice([-1, 1], n)
    s = modulate(a, msk).samples
    n0 = msk.oversample / g
    r = s + np.sqrt(n0 / 2) * (rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size))
    rate = np.mean(viterbi_mlsd(r, msk) != a)
    p = erfc(math.sqrt(g))
    assert abs(rate - p) < 3 * math.sqrt(p * (1 - p) / n) + 2 * math.sqrt(p / n)
    assert rate > 0.5 * erfc(math.sqrt(g))
