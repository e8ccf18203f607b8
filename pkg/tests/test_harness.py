import math

import numpy as np
import pytest

from cpmss.channel import complex_gaussian, substream
from cpmss.errors import ConfigurationError
from cpmss.harness import cli
from cpmss.harness.config import ExperimentConfig, dump_config, parse_config_text, parse_grid
from cpmss.harness.engine import (_pa_stage, BerCurve, BerPoint, PaprCell, build_scenario, calibrate_noise, run_ber_sweep,
                                  run_nonlinear_ber, run_papr_cell, simulate_point)
from cpmss.harness.figures import FIGURES, get_replica
from cpmss.harness.report import write_ber_csv

CFG = """
[experiment]
scheme = CIM-CPM-SS
seed = 9
[modem]
b_c = 2
b_m = 2
[channel]
channel = rayleigh
[sweep]
grid = 0:10:5
[stopping]
min_errors = 50
max_bits = 2e5
[curve fast]
max_bits = 1000
[curve other]
scheme = IM-CPM-SS
b_m = 0
"""


def test_parse_config_with_curves():
    a, b = parse_config_text(CFG)
    assert a.label == "fast" and a.max_bits == 1000 and a.scheme == "CIM-CPM-SS"
    assert b.scheme == "IM-CPM-SS" and b.b_m == 0 and b.max_bits == 200_000
    assert a.grid == (0.0, 5.0, 10.0)
    assert a.seed == b.seed == 9


def test_dump_round_trip():
    cfg = ExperimentConfig("CIM", "x", b_c=2, b_m=1, users=3, beta=0.3, ibo_db=6.2, grid=(1.0, 2.5),
                           channel_vars=(1.0, 2.0, 4.0), srrc_rolloff=0.35)
    (back,) = parse_config_text(dump_config(cfg))
    assert back == cfg
    assert back.digest() == cfg.digest()


@pytest.mark.parametrize("text", ["[experiment]\nscheme = OFDM\n", "[modem]\ncolour = red\n",
                                  "[bogus]\nx = 1\n", "[sweep]\ngrid = 3, 1\n", "[modem]\nb_c = two\n",
                                  "no section header"])
def test_config_errors(text):
    with pytest.raises(ConfigurationError):
        parse_config_text(text)


def test_parse_grid():
    assert parse_grid("-30:0:10") == (-30.0, -20.0, -10.0, 0.0)
    assert parse_grid("0.1, 0.2 0.25") == (0.1, 0.2, 0.25)
    with pytest.raises(ConfigurationError):
        parse_grid("0:1")


def test_calibrate_noise():
    assert calibrate_noise(1, 252.0, 0.0) == 252.0
    assert calibrate_noise(4, 252.0, 10.0) == pytest.approx(6.3)
    assert calibrate_noise(4, 252.0, -10.0, "snr") == pytest.approx(10.0)
    with pytest.raises(ConfigurationError):
        calibrate_noise(1, 1.0, 0.0, "esn0")


@pytest.mark.parametrize("scheme,b_c,b_m", [("CIM-CPM-SS", 2, 2), ("CIM", 1, 1), ("IM-CPM-SS", 3, 0)])
def test_calibration_round_trip(scheme, b_c, b_m):
    # energy per bit of the generated frames over the injected noise density
    cfg = ExperimentConfig(scheme, b_c=b_c, b_m=b_m)
    sc = build_scenario(cfg)
    m = sc.modems[0]
    rng = substream(1, 2)
    bits = rng.integers(0, 2, (20_000, m.bits_per_group), dtype=np.int8)
    tx = m.transmit(bits).groups()
    n0 = calibrate_noise(m.bits_per_group, m.codebook.energy, 7.0)
    noise = complex_gaussian(rng, tx.shape, n0)
    eb = np.mean(np.sum(np.abs(tx) ** 2, axis=1)) / m.bits_per_group
    measured = 10 * np.log10(eb / np.var(noise))
    assert measured == pytest.approx(7.0, abs=0.05)


def test_more_bits_per_symbol_raise_ber():
    a = ExperimentConfig("IM-CPM-SS", b_c=1, grid=(6.0,), min_errors=200)
    p1 = simulate_point(a, 0).ber
    # at a fixed SNR per sample more bits per symbol leave less energy per bit
    b = ExperimentConfig("IM-CPM-SS", b_c=4, variable="snr", grid=(-16.0,), min_errors=200)
    c = b.replace(b_c=1)
    assert simulate_point(b, 0).ber > simulate_point(c, 0).ber
    assert 0 < p1 < 0.5


def test_censored_point():
    cfg = ExperimentConfig("IM-CPM-SS", b_c=1, grid=(20.0,), max_bits=2000, batch_groups=500)
    curve = run_ber_sweep(cfg)
    (p,) = curve.points
    assert p.censored and p.errors == 0 and p.bits == 2000
    assert np.isnan(curve.ber()[0])
    text = write_ber_csv(None, [curve])
    assert text.splitlines()[-1].split(",")[5] == "nan"
    assert text.splitlines()[-1].endswith(",1")


def test_stopping_rule_and_ber_identity():
    cfg = ExperimentConfig("IM-CPM-SS", b_c=2, grid=(2.0,), min_errors=150, batch_groups=300)
    (p,) = run_ber_sweep(cfg).points
    assert p.errors >= 150
    assert p.ber == p.errors / p.bits
    assert p.errors == p.index_errors + p.mod_errors


def test_stderr_accounts_for_grouped_errors():
    # 1000 groups of 4 bits, 100 groups with every bit wrong
    clustered = BerPoint(0.0, 400, 4000, 0, 0, 400, 4000, 1, sq_errors=100 * 16, group_bits=4)
    p = 0.1
    assert clustered.stderr == pytest.approx(math.sqrt(p * (1 - p) / 1000))
    single = BerPoint(0.0, 100, 1000, 100, 1000, 0, 0, 1, sq_errors=100, group_bits=1)
    assert single.stderr == pytest.approx(math.sqrt(p * (1 - p) / 1000))
    assert BerPoint(0.0, 100, 1000, 100, 1000, 0, 0, 1).stderr == pytest.approx(single.stderr)


def test_crossing_interpolation():
    pts = [BerPoint(x, e, 10_000, e, 10_000, 0, 0, 1) for x, e in ((0, 1000), (2, 100), (4, 0))]
    c = BerCurve(ExperimentConfig(grid=(0.0, 2.0, 4.0)), pts)
    assert c.crossing(1e-2) == pytest.approx(2.0)
    assert c.crossing(3e-2) == pytest.approx(2 * (1 - math.log10(3)))
    assert math.isnan(c.crossing(1e-5))


def test_pa_disabled_is_identity_path():
    cfg = ExperimentConfig("CIM-CPM-SS", b_c=1, b_m=1, grid=(4.0,), max_bits=4000, batch_groups=1000)
    lin = run_ber_sweep(cfg).points[0]
    again = run_ber_sweep(cfg.replace(ibo_db=None)).points[0]
    assert lin == again
    # one constant-envelope user passes the PA undistorted once the gain is restored
    assert run_nonlinear_ber(cfg.replace(ibo_db=3.0)).points[0] == lin
    two = cfg.replace(users=2, beta=0.25)
    assert run_nonlinear_ber(two.replace(ibo_db=0.0)).points[0] != run_ber_sweep(two).points[0]
    with pytest.raises(ConfigurationError):
        run_nonlinear_ber(cfg)


def test_pa_makeup_modes():
    rng = substream(4)
    x = complex_gaussian(rng, 50_000, 1.0)
    cfg = ExperimentConfig(ibo_db=6.0)
    mean = _pa_stage(x, cfg)
    assert np.mean(np.abs(mean) ** 2) == pytest.approx(np.mean(np.abs(x) ** 2))
    none = _pa_stage(x, cfg.replace(pa_makeup="none"))
    assert 10 * np.log10(np.mean(np.abs(x) ** 2) / np.mean(np.abs(none) ** 2)) > 6.0
    # deep back-off: the fixed gain undoes the scaling and the PA is nearly linear
    deep = _pa_stage(x, cfg.replace(ibo_db=40.0, pa_makeup="fixed"))
    assert np.max(np.abs(deep - x)) < 1e-3 * np.max(np.abs(x))
    with pytest.raises(ConfigurationError):
        cfg.replace(pa_makeup="auto")


def test_single_user_cpm_papr_is_zero():
    res = run_papr_cell(PaprCell("CIM-CPM-SS", 1, 0.5, b_c=2, b_m=2, frames=20_000, chunk=5000))
    assert res.papr0_at_1e4 == 0.0


def test_every_replica_builds():
    for name in FIGURES:
        rep = get_replica(name, seed=3, scale=0.01)
        assert rep.curves or rep.papr_cells or rep.analytic
    with pytest.raises(ConfigurationError):
        get_replica("fig9")
    assert get_replica("3a").fig_id == "fig3a"


def test_cli_codebook_and_errors(tmp_path, capsys):
    assert cli.main(["codebook", "--sf", "6", "--verify", "--export", str(tmp_path / "cb.json")]) == 0
    assert "pass" in capsys.readouterr().out
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nscheme = nope\n")
    assert cli.main(["ber", "--config", str(bad), "-o", str(tmp_path / "x.csv")]) == 2
    assert cli.main(["ber", "--config", str(tmp_path / "missing.ini")]) == 2


def test_cli_ber_and_analytic(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[experiment]\nscheme = IM-CPM-SS\n[modem]\nb_c = 2\n[sweep]\ngrid = 0, 4\n"
                   "[stopping]\nmin_errors = 20\nmax_bits = 20000\n")
    out = tmp_path / "ber.csv"
    assert cli.main(["ber", "--config", str(ini), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# cpmss ber v1" and lines[1].startswith("# config_hash ")
    assert out.with_suffix(".png").exists()
    a = tmp_path / "an.csv"
    assert cli.main(["analytic", "--scheme", "CIM", "--grid", "0:10:5", "-o", str(a), "--no-plot"]) == 0
    assert len(a.read_text().splitlines()) == 2 + 3 * 4


@pytest.mark.slow
def test_replicate_deterministic_across_workers(tmp_path):
    one, two = tmp_path / "w1", tmp_path / "w2"
    for d, w in ((one, "1"), (two, "2")):
        assert cli.main(["replicate", "fig3a", "--scale", "0.002", "--seed", "5", "--workers", w,
                         "-o", str(d), "--no-plot"]) == 0
    for name in ("fig3a.csv", "fig3a_analytic.csv"):
        assert (one / name).read_bytes() == (two / name).read_bytes()
